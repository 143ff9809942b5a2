#include "mmra/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mmra {

namespace {

constexpr std::uint64_t kStreamsPerTrial = 1024;  // round index folds into the stream key

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double SimConfig::noise_watts() const { return std::pow(10.0, (noise_dbm - 30.0) / 10.0); }

NetworkGeometry SimConfig::geometry() const {
    NetworkGeometry g;
    g.cell_side = cell_side;
    g.min_distance = min_distance;
    g.bandwidth = bandwidth;
    g.n_fft = n_fft;
    g.subcarrier_spacing = subcarrier_spacing;
    g.inter_site = cell_side;
    return g;
}

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (cell_side <= 0.0) fail("cell_side must be > 0");
    if (min_distance < 0.0 || min_distance >= cell_side / 2.0)
        fail("min_distance must be in [0, cell_side/2)");
    if (bandwidth <= 0.0) fail("bandwidth must be > 0");
    if (n_fft < 2) fail("n_fft must be >= 2");
    if (subcarrier_spacing <= 0.0) fail("subcarrier_spacing must be > 0");
    if (population < 0) fail("population must be >= 0");
    if (p_active < 0.0 || p_active > 1.0) fail("p_active must be in [0, 1]");
    if (q_len < 1 || (q_len & (q_len - 1)) != 0) fail("q_len must be a power of two");
    if (n_len < 2) fail("n_len must be >= 2");
    if (rho_min <= 0.0 || rho_max < rho_min) fail("need 0 < rho_min <= rho_max");
    if (rho_dl <= 0.0) fail("rho_dl must be > 0");
    if (corr_r < 0.0 || corr_r >= 1.0) fail("corr_r must be in [0, 1)");
    if (m_ant < 1) fail("m_ant must be >= 1");
    if (!(0.0 < delta1 && delta1 < 1.0 && 1.0 < delta2 && delta2 < 2.0))
        fail("need 0 < delta1 < 1 < delta2 < 2");
    if (interferers_per_cell < 0) fail("interferers_per_cell must be >= 0");
    if (trials < 1) fail("trials must be >= 1");
    if (rounds < 1 || rounds > static_cast<int>(kStreamsPerTrial))
        fail("rounds must be in [1, 1024]");
    if (workers < 1) fail("workers must be >= 1");
    // Unambiguous timing demap needs the worst-case offset inside one
    // frequency-code bin.
    const NetworkGeometry g = geometry();
    if (g.theta_max() > n_fft / n_len) {
        std::ostringstream os;
        os << "config: worst-case timing offset " << g.theta_max()
           << " exceeds n_fft/n_len = " << n_fft / n_len
           << "; shrink the cell or the frequency-code count";
        throw std::invalid_argument(os.str());
    }
}

std::string SimConfig::serialize() const {
    std::ostringstream os;
    os << "cell_side=" << fmt(cell_side) << "\nmin_distance=" << fmt(min_distance)
       << "\nbandwidth=" << fmt(bandwidth) << "\nn_fft=" << n_fft
       << "\nsubcarrier_spacing=" << fmt(subcarrier_spacing) << "\npopulation=" << population
       << "\np_active=" << fmt(p_active) << "\nq_len=" << q_len << "\nn_len=" << n_len
       << "\nrho_min=" << fmt(rho_min) << "\nrho_max=" << fmt(rho_max)
       << "\nrho_dl=" << fmt(rho_dl) << "\nnoise_dbm=" << fmt(noise_dbm)
       << "\nfading=" << (fading == FadingModel::Exponential ? "exponential" : "uncorrelated")
       << "\ncorr_r=" << fmt(corr_r) << "\nm_ant=" << m_ant << "\ndelta1=" << fmt(delta1)
       << "\ndelta2=" << fmt(delta2) << "\nintercell=" << (intercell ? 1 : 0)
       << "\ninterferers_per_cell=" << interferers_per_cell
       << "\ndecision_bias=" << (bias_auto ? std::string("auto") : fmt(decision_bias))
       << "\nsnr_floor_db=" << fmt(snr_floor_db)
       << "\npower_mode=" << (power_mode == PowerMode::Ramping ? "ramping" : "ensemble")
       << "\nbackoff_mean=" << fmt(backoff_mean) << "\ntrials=" << trials
       << "\nrounds=" << rounds << "\nseed=" << seed << "\n";
    return os.str();
}

std::string SimConfig::hash() const {
    // FNV-1a over the canonical serialization.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + value + "'");
    }
    if (pos != value.size())
        throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + value + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v != std::floor(v))
        throw std::invalid_argument("config: key '" + key + "' needs an integer");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    throw std::invalid_argument("config: key '" + key + "' needs a boolean");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

SimConfig parse_config(const std::string& text) {
    SimConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "cell_side") cfg.cell_side = parse_double(key, value);
        else if (key == "min_distance") cfg.min_distance = parse_double(key, value);
        else if (key == "bandwidth") cfg.bandwidth = parse_double(key, value);
        else if (key == "n_fft") cfg.n_fft = parse_int(key, value);
        else if (key == "subcarrier_spacing") cfg.subcarrier_spacing = parse_double(key, value);
        else if (key == "population") cfg.population = parse_int(key, value);
        else if (key == "p_active") cfg.p_active = parse_double(key, value);
        else if (key == "q_len") cfg.q_len = parse_int(key, value);
        else if (key == "n_len") cfg.n_len = parse_int(key, value);
        else if (key == "rho_min") cfg.rho_min = parse_double(key, value);
        else if (key == "rho_max") cfg.rho_max = parse_double(key, value);
        else if (key == "rho_dl") cfg.rho_dl = parse_double(key, value);
        else if (key == "noise_dbm") cfg.noise_dbm = parse_double(key, value);
        else if (key == "fading") {
            if (value == "uncorrelated") cfg.fading = FadingModel::Uncorrelated;
            else if (value == "exponential") cfg.fading = FadingModel::Exponential;
            else throw std::invalid_argument("config: fading must be uncorrelated|exponential");
        } else if (key == "corr_r") cfg.corr_r = parse_double(key, value);
        else if (key == "m_ant") cfg.m_ant = parse_int(key, value);
        else if (key == "delta1") cfg.delta1 = parse_double(key, value);
        else if (key == "delta2") cfg.delta2 = parse_double(key, value);
        else if (key == "intercell") cfg.intercell = parse_bool(key, value);
        else if (key == "interferers_per_cell") cfg.interferers_per_cell = parse_int(key, value);
        else if (key == "decision_bias") {
            if (value == "auto") {
                cfg.bias_auto = true;
            } else {
                cfg.bias_auto = false;
                cfg.decision_bias = parse_double(key, value);
            }
        } else if (key == "snr_floor_db") cfg.snr_floor_db = parse_double(key, value);
        else if (key == "power_mode") {
            if (value == "ensemble") cfg.power_mode = PowerMode::Ensemble;
            else if (value == "ramping") cfg.power_mode = PowerMode::Ramping;
            else throw std::invalid_argument("config: power_mode must be ensemble|ramping");
        } else if (key == "backoff_mean") cfg.backoff_mean = parse_double(key, value);
        else if (key == "trials") cfg.trials = parse_int(key, value);
        else if (key == "rounds") cfg.rounds = parse_int(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_double(key, value));
        else if (key == "workers") cfg.workers = parse_int(key, value);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

namespace {

RaParams make_params(const SimConfig& cfg) {
    RaParams p;
    p.p_active = cfg.p_active;
    p.rho_min = cfg.rho_min;
    p.rho_max = cfg.rho_max;
    p.rho_dl = cfg.rho_dl;
    p.delta1 = cfg.delta1;
    p.delta2 = cfg.delta2;
    p.snr_floor_db = cfg.snr_floor_db;
    p.noise_var = cfg.noise_watts();
    p.power_mode = cfg.power_mode;
    p.backoff_mean = cfg.backoff_mean;
    p.intercell = cfg.intercell;
    p.interferers_per_cell = cfg.interferers_per_cell;
    if (cfg.intercell) {
        const double mean_power = mean_intercell_power(cfg.interferers_per_cell, cfg.geometry(),
                                                       p.power_levels());
        // DL disturbance: every surrounding BS serves its active UEs at
        // rho_dl each, so the per-entry power seen by a UE in this cell is
        // the same spatial average taken at the BS transmit power.
        p.dl_intercell_power =
            mean_intercell_power(cfg.interferers_per_cell, cfg.geometry(), {cfg.rho_dl});
        p.decision_bias = cfg.bias_auto ? -mean_power / 2.0 : cfg.decision_bias;
    } else {
        p.decision_bias = cfg.bias_auto ? 0.0 : cfg.decision_bias;
    }
    return p;
}

void merge(TrialMetrics& into, const TrialMetrics& round) {
    into.activated += round.activated;
    into.eligible += round.eligible;
    into.detected += round.detected;
    into.detected_any += round.detected_any;
    into.detected_entries += round.detected_entries;
    into.codes_in_use += round.codes_in_use;
    into.collisions_offered += round.collisions_offered;
    into.collisions_replied += round.collisions_replied;
    into.collisions_resolved += round.collisions_resolved;
    into.timing_sq_err.insert(into.timing_sq_err.end(), round.timing_sq_err.begin(),
                              round.timing_sq_err.end());
    into.attempts_at_admission.insert(into.attempts_at_admission.end(),
                                      round.attempts_at_admission.begin(),
                                      round.attempts_at_admission.end());
    into.forced_code_detected += round.forced_code_detected;
}

void setup_forced_pair(World& world, const SimConfig& cfg, const ForcedPair& forced, Rng& rng) {
    if (world.ues.size() < 2) throw std::invalid_argument("forced pair needs >= 2 UEs");
    const auto levels = RaParams{.rho_min = cfg.rho_min, .rho_max = cfg.rho_max}.power_levels();
    const double noise = cfg.noise_watts();
    const double snr_floor = std::pow(10.0, cfg.snr_floor_db / 10.0);
    const double half = cfg.cell_side / 2.0;

    world.forced_time_code = 0;
    world.forced_freq_code = 0;
    for (int u = 0; u < 2; ++u) {
        UeRecord& ue = world.ues[u];
        // The pair transmits at the top power level so the sweep isolates the
        // effect of the timing separation from power diversity.
        ue.power_index = static_cast<int>(levels.size()) - 1;
        ue.power = levels[ue.power_index];
        // Redraw the position until the pair clears the SNR floor with a
        // 10 dB margin, so the scenario probes collision handling rather
        // than coverage: at marginal SNR the offset estimator cannot
        // separate the pair regardless of the timing gap.
        for (int tries = 0; tries < 10000; ++tries) {
            const double x = (2.0 * rng.uniform() - 1.0) * half;
            const double y = (2.0 * rng.uniform() - 1.0) * half;
            const double d = std::sqrt(x * x + y * y);
            if (d < cfg.min_distance) continue;
            const double beta = path_loss(d);
            if (ue.power * beta / noise <= snr_floor * 10.0) continue;
            ue.x = x;
            ue.y = y;
            ue.distance = d;
            ue.beta = beta;
            break;
        }
        ue.time_code_idx = world.forced_time_code;
        ue.freq_code_idx = world.forced_freq_code;
        ue.theta = (u == 0) ? 0 : forced.delta_theta;
        world.forced_ids.push_back(ue.id);
    }
}

}  // namespace

TrialMetrics run_trial(const SimConfig& cfg, std::uint64_t trial_index, const ForcedPair& forced) {
    const std::uint64_t stream_base = trial_index * kStreamsPerTrial;

    World world;
    world.geometry = cfg.geometry();
    world.codebook = RaCodebook::make(cfg.q_len, cfg.n_len);
    world.m_ant = cfg.m_ant;

    Rng placement(cfg.seed, stream_base, StreamPurpose::Placement);
    world.ues = place_ues(cfg.population, world.geometry, cfg.fading, cfg.corr_r, placement);

    if (forced.enabled) {
        Rng scenario(cfg.seed, stream_base, StreamPurpose::Scenario);
        setup_forced_pair(world, cfg, forced, scenario);
    }

    const RaParams params = make_params(cfg);
    TrialMetrics total;
    for (int round = 0; round < cfg.rounds; ++round)
        merge(total, run_ra_round(world, params, cfg.seed, stream_base + round));
    return total;
}

RunMetrics run_point(const SimConfig& cfg, const ForcedPair& forced) {
    cfg.validate();
    std::vector<TrialMetrics> results(cfg.trials);
    const int workers = std::min(cfg.workers, cfg.trials);
    if (workers <= 1) {
        for (int t = 0; t < cfg.trials; ++t) results[t] = run_trial(cfg, t, forced);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
                    results[t] = run_trial(cfg, t, forced);
            });
        }
        for (auto& th : pool) th.join();
    }
    return aggregate(results);
}

namespace {

ResultRow make_row(const std::string& preset, const SimConfig& cfg, const RunMetrics& metrics,
                   int delta_theta = -1) {
    ResultRow row;
    row.preset = preset;
    row.m_ant = cfg.m_ant;
    row.q_len = cfg.q_len;
    row.n_len = cfg.n_len;
    row.p_active = cfg.p_active;
    row.corr_r = cfg.corr_r;
    row.intercell = cfg.intercell ? 1 : 0;
    row.delta_theta = delta_theta;
    row.metrics = metrics;
    row.collision_prob = collision_probability(cfg.population, cfg.p_active, cfg.q_len, cfg.n_len);
    row.code_load = expected_code_load(cfg.population, cfg.p_active, cfg.q_len, cfg.n_len);
    row.baseline_prob =
        cfg.p_active > 0.0
            ? baseline_detection_probability(cfg.population, cfg.p_active, cfg.q_len, cfg.n_len)
            : 0.0;
    const int k = std::max(1, static_cast<int>(std::lround(cfg.population * cfg.p_active)));
    const auto ops = complexity_counts(cfg.m_ant, cfg.n_len, k, cfg.q_len);
    row.step1_ops = ops.step1;
    row.step3_ops = ops.step3;
    row.seed = cfg.seed;
    row.config_hash = cfg.hash();
    return row;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "table2"};
}

std::vector<ResultRow> run_preset(const std::string& name, const SimConfig& base, bool full_scale) {
    std::vector<ResultRow> rows;
    SimConfig cfg = base;

    if (name == "fig2") {
        // Closed forms only; no Monte Carlo.
        for (int n : {8, 12}) {
            for (double pa : {0.005, 0.01, 0.02}) {
                cfg.n_len = n;
                cfg.p_active = pa;
                rows.push_back(make_row(name, cfg, RunMetrics{}));
            }
        }
    } else if (name == "fig4") {
        cfg.trials = full_scale ? 1000 : 500;
        cfg.rounds = 1;
        const std::vector<int> deltas =
            full_scale ? std::vector<int>{0, 4, 8, 12, 16, 20, 24, 28, 32}
                       : std::vector<int>{0, 8, 16, 24, 32};
        for (int dt : deltas) {
            ForcedPair fp{true, dt};
            rows.push_back(make_row(name, cfg, run_point(cfg, fp), dt));
        }
    } else if (name == "fig5") {
        cfg.trials = full_scale ? 1000 : 300;
        const std::vector<int> ms = full_scale
                                        ? std::vector<int>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100}
                                        : std::vector<int>{20, 60, 100};
        for (int n : {8, 12})
            for (bool ic : {false, true})
                for (int m : ms) {
                    cfg.n_len = n;
                    cfg.intercell = ic;
                    cfg.m_ant = m;
                    rows.push_back(make_row(name, cfg, run_point(cfg)));
                }
    } else if (name == "fig6") {
        cfg.trials = full_scale ? 1000 : 300;
        cfg.fading = FadingModel::Exponential;
        const std::vector<double> rs = full_scale
                                           ? std::vector<double>{0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                                                 0.6, 0.7, 0.8, 0.9}
                                           : std::vector<double>{0, 0.4, 0.8};
        for (int m : {50, 100})
            for (double r : rs) {
                cfg.m_ant = m;
                cfg.corr_r = r;
                rows.push_back(make_row(name, cfg, run_point(cfg)));
            }
    } else if (name == "fig7") {
        cfg.trials = full_scale ? 200 : 60;
        cfg.rounds = full_scale ? 40 : 30;
        cfg.power_mode = PowerMode::Ramping;
        for (int n : {8, 12})
            for (double pa : {0.005, 0.01, 0.02}) {
                cfg.n_len = n;
                cfg.p_active = pa;
                rows.push_back(make_row(name, cfg, run_point(cfg)));
            }
    } else if (name == "fig8") {
        // Closed-form complexity only.
        const std::vector<int> ms = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
        for (int n : {8, 12})
            for (int m : ms) {
                cfg.n_len = n;
                cfg.m_ant = m;
                rows.push_back(make_row(name, cfg, RunMetrics{}));
            }
    } else if (name == "table2") {
        cfg.trials = full_scale ? 1000 : 300;
        for (int n : {8, 12})
            for (bool ic : {false, true}) {
                cfg.n_len = n;
                cfg.intercell = ic;
                rows.push_back(make_row(name, cfg, run_point(cfg)));
            }
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return rows;
}

namespace {

const char* kColumns[] = {
    "preset",          "m_ant",
    "q_len",           "n_len",
    "p_active",        "corr_r",
    "intercell",       "delta_theta",
    "trials",          "detection_prob",
    "detection_stderr", "detection_prob_all",
    "timing_rmse",     "collision_resolution_prob",
    "collision_resolution_stderr", "avg_attempts",
    "avg_activated",   "avg_detected_entries",
    "avg_forced_detected", "collision_prob",
    "code_load",       "baseline_prob",
    "step1_ops",       "step3_ops",
    "seed",            "config_hash",
};

std::vector<std::string> row_values(const ResultRow& r) {
    const auto& m = r.metrics;
    return {r.preset,
            std::to_string(r.m_ant),
            std::to_string(r.q_len),
            std::to_string(r.n_len),
            fmt(r.p_active),
            fmt(r.corr_r),
            std::to_string(r.intercell),
            std::to_string(r.delta_theta),
            std::to_string(m.trials),
            fmt(m.detection_prob),
            fmt(m.detection_stderr),
            fmt(m.detection_prob_all),
            fmt(m.timing_rmse),
            fmt(m.collision_resolution_prob),
            fmt(m.collision_resolution_stderr),
            fmt(m.avg_attempts),
            fmt(m.avg_activated),
            fmt(m.avg_detected_entries),
            fmt(m.avg_forced_detected),
            fmt(r.collision_prob),
            fmt(r.code_load),
            fmt(r.baseline_prob),
            std::to_string(r.step1_ops),
            std::to_string(r.step3_ops),
            std::to_string(r.seed),
            r.config_hash};
}

bool is_string_column(std::size_t i) {
    return i == 0 || i == sizeof(kColumns) / sizeof(kColumns[0]) - 1;
}

}  // namespace

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    constexpr std::size_t n = sizeof(kColumns) / sizeof(kColumns[0]);
    for (std::size_t i = 0; i < n; ++i) os << kColumns[i] << (i + 1 < n ? "," : "\n");
    for (const auto& r : rows) {
        const auto vals = row_values(r);
        for (std::size_t i = 0; i < vals.size(); ++i)
            os << vals[i] << (i + 1 < vals.size() ? "," : "\n");
    }
}

void emit_jsonl(const std::vector<ResultRow>& rows, std::ostream& os) {
    constexpr std::size_t n = sizeof(kColumns) / sizeof(kColumns[0]);
    for (const auto& r : rows) {
        const auto vals = row_values(r);
        os << "{";
        for (std::size_t i = 0; i < n; ++i) {
            os << "\"" << kColumns[i] << "\":";
            if (is_string_column(i)) os << "\"" << vals[i] << "\"";
            else os << vals[i];
            if (i + 1 < n) os << ",";
        }
        os << "}\n";
    }
}

}  // namespace mmra
