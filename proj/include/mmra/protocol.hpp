#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmra/airlink.hpp"
#include "mmra/codebook.hpp"
#include "mmra/estimator.hpp"
#include "mmra/geometry_channel.hpp"
#include "mmra/rng.hpp"

namespace mmra {

enum class UeDecision { Repeat, Wait };
enum class BsDecision { Detected, Undetected };

enum class PowerMode {
    Ensemble,  // power index drawn uniformly (steady-state emulation)
    Ramping,   // power index follows the attempt counter, wrapping at the top
};

/// Protocol parameters (thresholds, powers, metric filter).
struct RaParams {
    double p_active = 0.01;
    double rho_min = 0.1;   // watts
    double rho_max = 1.0;   // watts
    double rho_dl = 1.0;    // watts
    double delta1 = 0.5;
    double delta2 = 1.5;
    double decision_bias = 0.0;  // the Step-2 bias term (watts scale)
    // Cap on the Step-3 retransmission power. The nominal formula
    // alpha / (rho tau Q beta^2) has units of inverse gain, so clamping it at
    // the RA power budget would zero out the detection statistic for every
    // realistic path gain; the default leaves it unclamped.
    double rho_ul_cap = std::numeric_limits<double>::infinity();
    double snr_floor_db = 5.0;   // metric filter
    double noise_var = 0.0;      // sigma^2, watts
    PowerMode power_mode = PowerMode::Ensemble;
    double backoff_mean = 1.0;  // mean skipped rounds between attempts
    bool intercell = false;
    int interferers_per_cell = 10;
    double dl_intercell_power = 0.0;  // per-entry DL disturbance power

    std::vector<double> power_levels() const;
};

/// Counters gathered from a single RA round.
struct TrialMetrics {
    int activated = 0;
    int eligible = 0;           // activated with SNR above the floor
    int detected = 0;           // eligible UEs admitted this round
    int detected_any = 0;       // all admitted UEs, no SNR filter
    int detected_entries = 0;   // report entries declared Detected (per-code view)
    int codes_in_use = 0;       // code pairs picked by at least one UE
    int collisions_offered = 0;
    int collisions_replied = 0;   // collision groups where >= 2 UEs replied
    int collisions_resolved = 0;  // of those, groups with >= 1 admission
    std::vector<double> timing_sq_err;  // squared sample errors of admitted UEs
    std::vector<int> attempts_at_admission;
    int forced_code_detected = 0;  // entries declared Detected on the forced code pair
};

/// Simulation world: geometry, codebook and the persistent UE population.
struct World {
    NetworkGeometry geometry;
    RaCodebook codebook;
    int m_ant = 100;
    std::vector<UeRecord> ues;

    // Forced-collision scenario (two preset UEs sharing a code pair). UEs
    // listed here are activated unconditionally with their preset codes,
    // timing and power.
    std::vector<int> forced_ids;
    int forced_time_code = 0;
    int forced_freq_code = 0;
};

/// Power-ramping level Delta_i = rho_min e^{i Delta}, Delta = 0.1 ln(rho_max/rho_min).
double power_level(int attempt_index, double rho_min, double rho_max);

/// Independent activation with probability p_A; activated UEs pick a code
/// pair uniformly and a power level per the configured mode.
void activate(std::vector<UeRecord>& ues, const World& world, const RaParams& params, Rng& rng);

/// Eq-40-style estimate of the precoded-response power share.
double alpha_hat(cplx r_dl, int m_ant, double rho_dl, int tau, double rho_k, double beta_k,
                 int q_len, double noise_var);

/// Repeat iff rho beta Q > alpha_hat / 2 + bias; Wait on equality.
UeDecision ue_decide(double alpha_hat_value, double rho_k, double beta_k, int q_len,
                     double decision_bias);

/// Step-3 retransmission power, capped at rho_max.
double ul_retx_power(double alpha_hat_value, double rho_k, int tau, int q_len, double beta_k,
                     double rho_max);

/// r_(j) = hhat_(j)^H Z_(j) / ||hhat_(j)|| with Z despread by the detected
/// effective code and time code.
cplx step3_statistic(const UlObservation& y3, const DetectionReport& report, int entry_index,
                     const RaCodebook& cb);

/// Detected iff delta1 < Re(r)/sqrt(M) < delta2 (strict).
BsDecision detect_rule(cplx r_ul, int m_ant, double delta1, double delta2);

/// One full RA round: Step 1 (UL synthesis + estimation), Step 2 (DL
/// response + distributed decisions), Step 3 (retransmission + detection),
/// state updates for undetected UEs.
TrialMetrics run_ra_round(World& world, const RaParams& params, std::uint64_t seed,
                          std::uint64_t stream);

}  // namespace mmra
