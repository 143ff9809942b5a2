#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mmra/harness.hpp"

TEST_CASE("empty config text yields the defaults") {
    const auto cfg = mmra::parse_config("");
    CHECK(cfg.cell_side == 500.0);
    CHECK(cfg.population == 2500);
    CHECK(cfg.p_active == 0.01);
    CHECK(cfg.q_len == 2);
    CHECK(cfg.n_len == 8);
    CHECK(cfg.m_ant == 100);
    CHECK(cfg.noise_dbm == -97.8);
    CHECK(cfg.fading == mmra::FadingModel::Uncorrelated);
    CHECK(cfg.trials == 100);
    CHECK_FALSE(cfg.intercell);
}

TEST_CASE("config parsing: comments, overrides and errors") {
    const auto cfg = mmra::parse_config(
        "# comment line\n"
        "m_ant = 64\n"
        "fading = exponential\n"
        "corr_r = 0.8\n"
        "\n"
        "intercell = 1\n");
    CHECK(cfg.m_ant == 64);
    CHECK(cfg.fading == mmra::FadingModel::Exponential);
    CHECK(cfg.corr_r == 0.8);
    CHECK(cfg.intercell);

    CHECK_THROWS(mmra::parse_config("p_active = 1.5\n"));
    CHECK_THROWS(mmra::parse_config("no_such_key = 3\n"));
    CHECK_THROWS(mmra::parse_config("m_ant\n"));
}

TEST_CASE("validation rejects geometries that break the timing demap") {
    // 2 km cells put the worst-case offset beyond n_fft / N.
    CHECK_THROWS(mmra::parse_config("cell_side = 2000\n"));
    const auto ok = mmra::parse_config("cell_side = 800\n");
    CHECK(ok.cell_side == 800.0);
}

TEST_CASE("noise floor conversion") {
    const auto cfg = mmra::parse_config("");
    CHECK(cfg.noise_watts() == doctest::Approx(1.6596e-13).epsilon(1e-4));
}

TEST_CASE("config hash is stable and ignores the worker count") {
    auto a = mmra::parse_config("");
    auto b = mmra::parse_config("workers = 7\n");
    CHECK(a.hash() == b.hash());
    auto c = mmra::parse_config("m_ant = 64\n");
    CHECK(a.hash() != c.hash());
    CHECK(a.hash() == mmra::parse_config("").hash());
}

namespace {

mmra::ResultRow sample_row() {
    mmra::ResultRow row;
    row.preset = "unit";
    row.m_ant = 100;
    row.q_len = 2;
    row.n_len = 8;
    row.p_active = 0.01;
    row.metrics.trials = 3;
    row.metrics.detection_prob = 0.75;
    row.metrics.timing_rmse = 1.25;
    row.collision_prob = 0.4633;
    row.code_load = 1.5625;
    row.step3_ops = 125000;
    row.seed = 42;
    row.config_hash = "deadbeef";
    return row;
}

}  // namespace

TEST_CASE("CSV output: header plus one line per row") {
    std::ostringstream os;
    mmra::emit_csv({sample_row()}, os);
    const std::string text = os.str();
    std::istringstream is(text);
    std::string header, line, extra;
    REQUIRE(std::getline(is, header));
    REQUIRE(std::getline(is, line));
    CHECK_FALSE(std::getline(is, extra));
    CHECK(header.rfind("preset,", 0) == 0);
    CHECK(line.rfind("unit,", 0) == 0);
    CHECK(line.find("125000") != std::string::npos);
    // Same comma count in header and data line.
    const auto commas = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(commas(header) == commas(line));
}

TEST_CASE("JSON lines mirror the CSV fields") {
    const auto row = sample_row();
    std::ostringstream cs, js;
    mmra::emit_csv({row}, cs);
    mmra::emit_jsonl({row}, js);

    std::istringstream ci(cs.str());
    std::string header, line;
    std::getline(ci, header);
    std::getline(ci, line);
    std::vector<std::string> keys, vals;
    {
        std::istringstream hs(header), ls(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) keys.push_back(cell);
        while (std::getline(ls, cell, ',')) vals.push_back(cell);
    }
    REQUIRE(keys.size() == vals.size());

    const auto j = nlohmann::json::parse(js.str());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        REQUIRE(j.contains(keys[i]));
        const auto& v = j.at(keys[i]);
        if (v.is_string()) {
            CHECK(v.get<std::string>() == vals[i]);
        } else if (v.is_number_integer()) {
            CHECK(v.get<long long>() == std::stoll(vals[i]));
        } else {
            CHECK(v.get<double>() == doctest::Approx(std::stod(vals[i])).epsilon(1e-15));
        }
    }
}

TEST_CASE("analytic presets produce the documented row counts") {
    const auto cfg = mmra::parse_config("");
    const auto fig2 = mmra::run_preset("fig2", cfg, false);
    CHECK(fig2.size() == 6);
    for (const auto& r : fig2) {
        CHECK(r.metrics.trials == 0);  // closed-form rows carry no Monte Carlo data
        CHECK(r.collision_prob > 0.0);
        CHECK(r.code_load > 0.0);
    }
    const auto fig8 = mmra::run_preset("fig8", cfg, false);
    CHECK(fig8.size() == 20);
    for (const auto& r : fig8) CHECK(r.step3_ops > 0);
    CHECK_THROWS(mmra::run_preset("fig9", cfg, false));
}

TEST_CASE("small Monte Carlo point runs and is reproducible") {
    auto cfg = mmra::parse_config(
        "population = 300\n"
        "m_ant = 24\n"
        "trials = 12\n"
        "seed = 5\n");
    const auto a = mmra::run_point(cfg);
    CHECK(a.trials == 12);
    CHECK(a.avg_activated > 0.0);
    CHECK(a.detection_prob >= 0.0);
    CHECK(a.detection_prob <= 1.0);

    cfg.workers = 3;
    const auto b = mmra::run_point(cfg);
    CHECK(a.detection_prob == b.detection_prob);
    CHECK(a.timing_rmse == b.timing_rmse);
    CHECK(a.avg_activated == b.avg_activated);
}

TEST_CASE("rerunning a preset is byte-identical") {
    auto cfg = mmra::parse_config(
        "population = 200\n"
        "m_ant = 16\n"
        "trials = 4\n"
        "seed = 9\n");
    const auto once = mmra::run_preset("fig2", cfg, false);
    const auto twice = mmra::run_preset("fig2", cfg, false);
    std::ostringstream s1, s2;
    mmra::emit_csv(once, s1);
    mmra::emit_csv(twice, s2);
    CHECK(s1.str() == s2.str());
}
