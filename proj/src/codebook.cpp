#include "mmra/codebook.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmra {

std::vector<cplx> fourier_code(int l, int n_len) {
    if (n_len < 1) throw std::invalid_argument("fourier_code: n_len must be >= 1");
    if (l < 0 || l >= n_len) throw std::invalid_argument("fourier_code: code index out of range");
    std::vector<cplx> f(n_len);
    for (int n = 0; n < n_len; ++n) {
        const double a = 2.0 * std::numbers::pi * n * l / n_len;
        f[n] = {std::cos(a), std::sin(a)};
    }
    return f;
}

std::vector<std::vector<double>> walsh_hadamard_codebook(int q_len) {
    if (q_len < 1 || (q_len & (q_len - 1)) != 0)
        throw std::invalid_argument("walsh_hadamard_codebook: q_len must be a power of two");
    std::vector<std::vector<double>> h = {{1.0}};
    for (int size = 1; size < q_len; size *= 2) {
        std::vector<std::vector<double>> next(2 * size, std::vector<double>(2 * size));
        for (int i = 0; i < size; ++i) {
            for (int j = 0; j < size; ++j) {
                next[i][j] = h[i][j];
                next[i][j + size] = h[i][j];
                next[i + size][j] = h[i][j];
                next[i + size][j + size] = -h[i][j];
            }
        }
        h = std::move(next);
    }
    return h;
}

std::vector<cplx> effective_code(double eps, int n_len) {
    if (n_len < 2) throw std::invalid_argument("effective_code: n_len must be >= 2");
    std::vector<cplx> c(n_len);
    for (int n = 0; n < n_len; ++n) {
        const double a = 2.0 * std::numbers::pi * n * eps;
        c[n] = {std::cos(a), std::sin(a)};
    }
    return c;
}

double effective_offset(int l, int theta, int n_len, int n_fft) {
    if (l < 0 || l >= n_len) throw std::invalid_argument("effective_offset: code index out of range");
    if (theta < 0) throw std::invalid_argument("effective_offset: theta must be >= 0");
    return static_cast<double>(l) / n_len - static_cast<double>(theta) / n_fft;
}

DemappedOffset demap_offset(double eps, int n_len, int n_fft, double theta_slack,
                            double theta_cap) {
    const double block = static_cast<double>(n_fft) / n_len;
    if (theta_cap < 0.0) theta_cap = block;
    // The 1e-9 guard keeps eps = l/N mapping to (l, 0) under rounding.
    int l_raw = static_cast<int>(std::ceil(static_cast<double>(n_len) * eps - 1e-9));
    double theta = n_fft * (static_cast<double>(l_raw) / n_len - eps);
    // Fold aliases toward the admissible delay window [0, theta_cap]: of the
    // candidates theta + k * block, keep the one closest to the window. A
    // noisy offset estimate near theta = 0 can otherwise land on the
    // neighboring code index with a delay of almost a full block.
    auto window_dist = [&](double th) {
        if (th < 0.0) return -th;
        return th > theta_cap ? th - theta_cap : 0.0;
    };
    while (window_dist(theta - block) < window_dist(theta)) {
        --l_raw;
        theta -= block;
    }
    while (window_dist(theta + block) < window_dist(theta)) {
        ++l_raw;
        theta += block;
    }
    const int l = ((l_raw % n_len) + n_len) % n_len;
    const bool in_model = theta >= -theta_slack && theta <= theta_cap + theta_slack;
    // Small excursions outside the window are estimation noise; report the
    // nearest admissible delay.
    const double reported = std::min(std::max(theta, 0.0), theta_cap);
    return {l, reported, in_model};
}

RaCodebook RaCodebook::make(int q_len, int n_len) {
    if (n_len < 2) throw std::invalid_argument("RaCodebook: n_len must be >= 2");
    RaCodebook cb;
    cb.q_len = q_len;
    cb.n_len = n_len;
    cb.time_codes = walsh_hadamard_codebook(q_len);
    cb.freq_codes.reserve(n_len);
    for (int l = 0; l < n_len; ++l) cb.freq_codes.push_back(fourier_code(l, n_len));
    return cb;
}

}  // namespace mmra
