#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmra/analytics.hpp"
#include "mmra/geometry_channel.hpp"
#include "mmra/protocol.hpp"

namespace mmra {

/// Full simulation configuration. Defaults are the reference system
/// parameters (500 m cells, 20 MHz, 1024-point FFT, 2500-UE population,
/// 16-code RA block, -97.8 dBm noise floor).
struct SimConfig {
    // Network geometry and numerology.
    double cell_side = 500.0;        // meters
    double min_distance = 25.0;      // meters
    double bandwidth = 20e6;         // Hz
    int n_fft = 1024;
    double subcarrier_spacing = 15e3;  // Hz

    // RA block and population.
    int population = 2500;  // inactive UEs per cell
    double p_active = 0.01;
    int q_len = 2;
    int n_len = 8;

    // Powers (watts) and noise.
    double rho_min = 0.1;
    double rho_max = 1.0;
    double rho_dl = 1.0;
    double noise_dbm = -97.8;

    // Fading.
    FadingModel fading = FadingModel::Uncorrelated;
    double corr_r = 0.0;

    // Receiver and protocol.
    int m_ant = 100;
    double delta1 = 0.5;
    double delta2 = 1.5;
    bool intercell = false;
    int interferers_per_cell = 10;
    bool bias_auto = true;       // bias = -mean_intercell/2 when intercell is on
    double decision_bias = 0.0;  // used when bias_auto is off
    double snr_floor_db = 5.0;
    PowerMode power_mode = PowerMode::Ensemble;
    double backoff_mean = 1.0;

    // Execution.
    int trials = 100;
    int rounds = 1;  // chained RA rounds per trial (retry loop)
    std::uint64_t seed = 1;
    int workers = 1;

    double noise_watts() const;
    NetworkGeometry geometry() const;
    /// Throws std::invalid_argument naming the violated precondition.
    void validate() const;
    /// Canonical key=value serialization (defines the config hash).
    std::string serialize() const;
    std::string hash() const;
};

/// Parse key=value text ('#' comments, blank lines ignored). Unknown keys and
/// out-of-range values raise std::invalid_argument.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

/// Optional forced two-UE collision scenario attached to a sweep point.
struct ForcedPair {
    bool enabled = false;
    int delta_theta = 0;  // timing separation, samples
};

/// One sweep point: metrics plus the closed-form companions at the same
/// parameters.
struct ResultRow {
    std::string preset;
    int m_ant = 0;
    int q_len = 0;
    int n_len = 0;
    double p_active = 0.0;
    double corr_r = 0.0;
    int intercell = 0;
    int delta_theta = -1;  // -1 when no forced pair
    RunMetrics metrics;
    double collision_prob = 0.0;
    double code_load = 0.0;
    double baseline_prob = 0.0;
    long long step1_ops = 0;
    long long step3_ops = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// One independent trial: fresh world, `rounds` chained RA rounds, counters
/// merged across rounds.
TrialMetrics run_trial(const SimConfig& cfg, std::uint64_t trial_index,
                       const ForcedPair& forced = {});

/// All trials of one sweep point, distributed over cfg.workers threads;
/// results are deterministic in (config, seed) regardless of worker count.
RunMetrics run_point(const SimConfig& cfg, const ForcedPair& forced = {});

/// Figure presets at desk (quick) or full scale:
/// fig2 (analytic collision/load/baseline vs p_active), fig4 (forced pair vs
/// delta-theta), fig5 (detection and RMSE vs M), fig6 (correlation sweep),
/// fig7 (attempts vs p_active, power ramping), fig8 (complexity vs M),
/// table2 (collision resolution).
std::vector<std::string> preset_names();
std::vector<ResultRow> run_preset(const std::string& name, const SimConfig& base, bool full_scale);

/// CSV with one header line and a fixed column order; numbers printed with 17
/// significant digits.
void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os);
/// JSON-lines mirror of the CSV fields.
void emit_jsonl(const std::vector<ResultRow>& rows, std::ostream& os);

}  // namespace mmra
