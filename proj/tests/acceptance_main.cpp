#include <cstdio>

#include "mmra/acceptance.hpp"

int main() {
    const auto results = mmra::run_acceptance();
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] criterion %d: %s (%s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
