#include <cstdint>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmra/acceptance.hpp"
#include "mmra/analytics.hpp"
#include "mmra/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int workers = 0;
};

mmra::SimConfig make_config(const CommonOpts& opts) {
    mmra::SimConfig cfg =
        opts.config_path.empty() ? mmra::SimConfig{} : mmra::load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.trials > 0) cfg.trials = opts.trials;
    if (opts.workers > 0) cfg.workers = opts.workers;
    cfg.validate();
    return cfg;
}

void write_rows(const std::vector<mmra::ResultRow>& rows, const CommonOpts& opts) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!opts.out_path.empty()) {
        file.open(opts.out_path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output file: " + opts.out_path);
        os = &file;
    }
    if (opts.format == "csv") mmra::emit_csv(rows, *os);
    else if (opts.format == "jsonl") mmra::emit_jsonl(rows, *os);
    else throw std::runtime_error("format must be csv or jsonl");
}

void add_common(CLI::App* app, CommonOpts& opts) {
    app->add_option("--config", opts.config_path, "key=value config file (defaults documented in README)");
    app->add_option("--out", opts.out_path, "output file (default: stdout)");
    app->add_option("--format", opts.format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    app->add_option("--seed", opts.seed, "master seed")->each([&opts](const std::string&) {
        opts.seed_set = true;
    });
    app->add_option("--trials", opts.trials, "Monte Carlo trials per sweep point");
    app->add_option("--workers", opts.workers, "worker threads (results are worker-count independent)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Link-level simulator for grant-free random access with large antenna arrays"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    auto* simulate = app.add_subcommand("simulate", "run one sweep point from a config");
    add_common(simulate, sim_opts);

    CommonOpts sweep_opts;
    std::string preset;
    bool full_scale = false, desk_scale = false;
    auto* sweep = app.add_subcommand("sweep", "run a named figure preset");
    add_common(sweep, sweep_opts);
    sweep->add_option("--preset", preset, "fig2|fig4|fig5|fig6|fig7|fig8|table2")
        ->required()
        ->check(CLI::IsMember(mmra::preset_names()));
    sweep->add_flag("--full", full_scale, "paper-scale grids and trial counts");
    sweep->add_flag("--desk", desk_scale, "reduced grids for quick runs (default)");

    int an_population = 2500;
    double an_p_active = 0.01;
    int an_q = 2, an_n = 8, an_k = 0, an_m = 100;
    auto* analytic = app.add_subcommand("analytic", "print the closed-form companions");
    analytic->add_option("--population", an_population, "inactive UEs per cell");
    analytic->add_option("--p-active", an_p_active, "activation probability");
    analytic->add_option("--q-len", an_q, "time codes");
    analytic->add_option("--n-len", an_n, "frequency codes");
    analytic->add_option("--sources", an_k, "source count for complexity (default population*p_active)");
    analytic->add_option("--m-ant", an_m, "antennas for complexity");

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const mmra::SimConfig cfg = make_config(sim_opts);
            const mmra::RunMetrics metrics = mmra::run_point(cfg);
            mmra::ResultRow row;
            row.preset = "simulate";
            row.m_ant = cfg.m_ant;
            row.q_len = cfg.q_len;
            row.n_len = cfg.n_len;
            row.p_active = cfg.p_active;
            row.corr_r = cfg.corr_r;
            row.intercell = cfg.intercell ? 1 : 0;
            row.metrics = metrics;
            row.collision_prob =
                mmra::collision_probability(cfg.population, cfg.p_active, cfg.q_len, cfg.n_len);
            row.code_load =
                mmra::expected_code_load(cfg.population, cfg.p_active, cfg.q_len, cfg.n_len);
            row.baseline_prob = cfg.p_active > 0.0
                                    ? mmra::baseline_detection_probability(
                                          cfg.population, cfg.p_active, cfg.q_len, cfg.n_len)
                                    : 0.0;
            row.seed = cfg.seed;
            row.config_hash = cfg.hash();
            write_rows({row}, sim_opts);
        } else if (sweep->parsed()) {
            if (full_scale && desk_scale)
                throw std::runtime_error("choose one of --desk / --full");
            const mmra::SimConfig cfg = make_config(sweep_opts);
            const auto rows = mmra::run_preset(preset, cfg, full_scale);
            write_rows(rows, sweep_opts);
        } else if (analytic->parsed()) {
            const int k = an_k > 0 ? an_k
                                   : std::max(1, static_cast<int>(an_population * an_p_active));
            const auto ops = mmra::complexity_counts(an_m, an_n, k, an_q);
            std::cout << "collision_probability="
                      << mmra::collision_probability(an_population, an_p_active, an_q, an_n)
                      << "\nexpected_code_load="
                      << mmra::expected_code_load(an_population, an_p_active, an_q, an_n)
                      << "\nbaseline_detection_probability="
                      << mmra::baseline_detection_probability(an_population, an_p_active, an_q,
                                                              an_n)
                      << "\nstep1_ops=" << ops.step1 << "\nstep3_ops=" << ops.step3 << "\n";
        } else if (verify->parsed()) {
            const auto results = mmra::run_acceptance();
            bool all = true;
            for (const auto& r : results) {
                std::cout << "[" << (r.pass ? "PASS" : "FAIL") << "] criterion " << r.id << ": "
                          << r.name << " (" << r.detail << ")\n";
                all = all && r.pass;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
