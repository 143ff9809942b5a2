#pragma once

#include <vector>

#include "mmra/codebook.hpp"
#include "mmra/complex_matrix.hpp"
#include "mmra/geometry_channel.hpp"
#include "mmra/rng.hpp"

namespace mmra {

/// Per-antenna stack of N x Q DFT-output matrices for one RA block.
struct UlObservation {
    std::vector<ComplexMatrix> per_antenna;  // M matrices, N x Q each
    double noise_var = 0.0;
    int n_len = 0;
    int q_len = 0;

    int m_ant() const { return static_cast<int>(per_antenna.size()); }
};

/// The N x Q block received by one UE in the DL.
struct DlObservation {
    ComplexMatrix matrix;
};

/// One transmitting UE as seen by the UL synthesizer.
struct UlTransmitter {
    double power = 0.0;  // watts
    double eps = 0.0;    // effective timing offset
    int time_code_idx = 0;
    const std::vector<cplx>* channel = nullptr;  // length M
};

/// Per-antenna inter-cell interference: each interferer contributes
/// sqrt(rho) h_m times an i.i.d. unit-power CN data matrix.
std::vector<ComplexMatrix> intercell_term(const std::vector<Interferer>& interferers, int m_ant,
                                          int n_len, int q_len, Rng& rng);

/// Superposition of per-UE rank-1 terms sqrt(rho_k) h_km c(eps_k) t_{i_k}^T
/// plus white noise plus the optional inter-cell term.
UlObservation synthesize_ul(const std::vector<UlTransmitter>& ues, const RaCodebook& cb, int m_ant,
                            double noise_var, const std::vector<Interferer>* intercell, Rng& noise_rng,
                            Rng* intercell_rng);

/// z_m = Y_m t* / ||t|| for every antenna.
std::vector<std::vector<cplx>> despread_time(const UlObservation& y, const std::vector<double>& t);

/// One detected entry used by the DL precoder: LS channel estimate plus the
/// demapped code pair.
struct PrecodedEntry {
    std::vector<cplx> channel;  // h-hat', length M
    double channel_norm = 0.0;
    int l_hat = 0;
    int time_code_idx = 0;
};

/// Received DL block at one UE per the precoded multicast response:
/// sqrt(rho_dl) sum_j (h^H hhat_j / ||hhat_j||) f_{lhat_j} t_j^T + noise +
/// interference. DL inter-cell is modeled as i.i.d. entries of the ensemble
/// mean power.
DlObservation synthesize_dl(const std::vector<PrecodedEntry>& entries, const RaCodebook& cb,
                            double rho_dl, const std::vector<cplx>& ue_channel, double noise_var,
                            double intercell_power, Rng& rng);

/// f_l^H R t* / (||f_l|| ||t||).
cplx ue_correlate_dl(const DlObservation& r, const std::vector<cplx>& f, const std::vector<double>& t);

/// Step-3 retransmission: same structure as synthesize_ul with the
/// Step-2-derived UL powers already set in the transmitter list.
UlObservation synthesize_step3(const std::vector<UlTransmitter>& repliers, const RaCodebook& cb,
                               int m_ant, double noise_var, const std::vector<Interferer>* intercell,
                               Rng& noise_rng, Rng* intercell_rng);

}  // namespace mmra
