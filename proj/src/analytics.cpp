#include "mmra/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace mmra {

namespace {

void check_args(int inactive, double p_active, int q_len, int n_len) {
    if (inactive < 0) throw std::invalid_argument("population size must be >= 0");
    if (p_active < 0.0 || p_active > 1.0)
        throw std::invalid_argument("activation probability must be in [0, 1]");
    if (q_len < 1 || n_len < 1) throw std::invalid_argument("code dimensions must be >= 1");
}

// log (1-p)^i, stable near p = 0.
double log_pow_1mp(double p, int i) { return static_cast<double>(i) * std::log1p(-p); }

}  // namespace

double collision_probability(int inactive, double p_active, int q_len, int n_len) {
    check_args(inactive, p_active, q_len, n_len);
    const double p = p_active / (q_len * n_len);
    if (p == 0.0 || inactive < 2) return 0.0;
    const double none = std::exp(log_pow_1mp(p, inactive));
    const double one = inactive * p * std::exp(log_pow_1mp(p, inactive - 1));
    return 1.0 - none - one;
}

double expected_code_load(int inactive, double p_active, int q_len, int n_len) {
    check_args(inactive, p_active, q_len, n_len);
    return inactive * p_active / (q_len * n_len);
}

double baseline_detection_probability(int inactive, double p_active, int q_len, int n_len) {
    check_args(inactive, p_active, q_len, n_len);
    const double p = p_active / (q_len * n_len);
    if (p == 0.0 || inactive == 0)
        throw std::invalid_argument("baseline detection undefined when nobody can pick the code");
    if (inactive == 1) return 1.0;
    const double picked = -std::expm1(log_pow_1mp(p, inactive));  // 1 - (1-p)^I
    const double exactly_one = inactive * p * std::exp(log_pow_1mp(p, inactive - 1));
    return exactly_one / picked;
}

namespace {

// Exact distribution of the tagged-code picker count, capped at 2, by
// stepping UE-by-UE through (activate? x which code?) outcomes.
struct PickerDist {
    double p0 = 1.0, p1 = 0.0, p2 = 0.0;
};

PickerDist enumerate_pickers(int inactive, double p_active, int q_len, int n_len) {
    const double p = p_active / (q_len * n_len);
    PickerDist d;
    for (int i = 0; i < inactive; ++i) {
        const double q = 1.0 - p;
        PickerDist next;
        next.p0 = d.p0 * q;
        next.p1 = d.p1 * q + d.p0 * p;
        next.p2 = d.p2 + d.p1 * p;
        d = next;
    }
    return d;
}

}  // namespace

double collision_probability_oracle(int inactive, double p_active, int q_len, int n_len) {
    check_args(inactive, p_active, q_len, n_len);
    return enumerate_pickers(inactive, p_active, q_len, n_len).p2;
}

double baseline_detection_probability_oracle(int inactive, double p_active, int q_len, int n_len) {
    check_args(inactive, p_active, q_len, n_len);
    const auto d = enumerate_pickers(inactive, p_active, q_len, n_len);
    const double picked = d.p1 + d.p2;
    if (picked <= 0.0)
        throw std::invalid_argument("baseline detection undefined when nobody can pick the code");
    return d.p1 / picked;
}

ComplexityCounts complexity_counts(int m_ant, int n_len, int k, int q_len) {
    if (m_ant < 1 || n_len < 1 || k < 1 || q_len < 1)
        throw std::invalid_argument("complexity_counts: all arguments must be >= 1");
    const long long m = m_ant, n = n_len, kk = k, q = q_len;
    const long long k2 = kk * kk, k3 = k2 * kk;
    const long long subspace =
        (k2 + kk) / 2 * (n - 1) + k2 * (n - 1) + k3 + (k3 - kk) / 3;
    const long long per_snapshot =
        n + (n * n + n) / 2 + k2 * n + kk * n * n + k2 + (k3 - kk) / 3;
    ComplexityCounts c;
    c.step1 = q * (subspace + m * per_snapshot);
    c.step3 = q * (m * kk * (n + n * q) + m * kk);
    return c;
}

RunMetrics aggregate(const std::vector<TrialMetrics>& trials) {
    if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
    RunMetrics out;
    out.trials = static_cast<int>(trials.size());

    long long eligible = 0, detected = 0, activated = 0, detected_any = 0;
    long long coll_replied = 0, coll_resolved = 0;
    long long entries = 0, forced = 0;
    double sq_sum = 0.0;
    long long sq_n = 0;
    double attempts_sum = 0.0;
    long long attempts_n = 0;
    for (const auto& t : trials) {
        eligible += t.eligible;
        detected += t.detected;
        activated += t.activated;
        detected_any += t.detected_any;
        coll_replied += t.collisions_replied;
        coll_resolved += t.collisions_resolved;
        entries += t.detected_entries;
        forced += t.forced_code_detected;
        for (double e : t.timing_sq_err) {
            sq_sum += e;
            ++sq_n;
        }
        for (int a : t.attempts_at_admission) {
            attempts_sum += a;
            ++attempts_n;
        }
    }
    const double nt = static_cast<double>(trials.size());
    if (eligible > 0) {
        out.detection_prob = static_cast<double>(detected) / eligible;
        out.detection_stderr =
            std::sqrt(out.detection_prob * (1.0 - out.detection_prob) / eligible);
    }
    if (activated > 0) out.detection_prob_all = static_cast<double>(detected_any) / activated;
    if (sq_n > 0) out.timing_rmse = std::sqrt(sq_sum / sq_n);
    if (coll_replied > 0) {
        out.collision_resolution_prob = static_cast<double>(coll_resolved) / coll_replied;
        out.collision_resolution_stderr = std::sqrt(
            out.collision_resolution_prob * (1.0 - out.collision_resolution_prob) / coll_replied);
    }
    if (attempts_n > 0) out.avg_attempts = attempts_sum / attempts_n;
    out.avg_activated = static_cast<double>(activated) / nt;
    out.avg_detected_entries = static_cast<double>(entries) / nt;
    out.avg_forced_detected = static_cast<double>(forced) / nt;
    return out;
}

}  // namespace mmra
