#pragma once

#include <cstdint>
#include <vector>

#include "mmra/protocol.hpp"

namespace mmra {

/// Aggregated Monte Carlo results for one sweep point.
struct RunMetrics {
    int trials = 0;
    double detection_prob = 0.0;  // per eligible UE (SNR above the floor)
    double detection_stderr = 0.0;
    double detection_prob_all = 0.0;  // no SNR filter
    double timing_rmse = 0.0;         // samples
    double collision_resolution_prob = 0.0;
    double collision_resolution_stderr = 0.0;
    double avg_attempts = 0.0;
    double avg_activated = 0.0;
    double avg_detected_entries = 0.0;
    double avg_forced_detected = 0.0;  // forced-pair scenarios: mean admissions per round
};

/// Probability that a given code pair is picked by two or more UEs:
/// 1 - (1-p)^I - I p (1-p)^{I-1} with p = p_active/(Q N).
double collision_probability(int inactive, double p_active, int q_len, int n_len);

/// E{|K|} = I p_active / (Q N).
double expected_code_load(int inactive, double p_active, int q_len, int n_len);

/// Probability that a code pair is picked by exactly one UE, given it is
/// picked at all: I p (1-p)^{I-1} / (1 - (1-p)^I).
double baseline_detection_probability(int inactive, double p_active, int q_len, int n_len);

/// Brute-force binomial oracles for the two formulas above (enumeration over
/// the picker count; tractable for small populations).
double collision_probability_oracle(int inactive, double p_active, int q_len, int n_len);
double baseline_detection_probability_oracle(int inactive, double p_active, int q_len, int n_len);

/// Complex multiply/divide counts for the two receiver stages.
struct ComplexityCounts {
    long long step1 = 0;
    long long step3 = 0;
};
ComplexityCounts complexity_counts(int m_ant, int n_len, int k, int q_len);

/// Fold per-trial counters into figure-ready statistics.
RunMetrics aggregate(const std::vector<TrialMetrics>& trials);

}  // namespace mmra
