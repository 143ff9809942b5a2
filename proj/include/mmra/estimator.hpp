#pragma once

#include <vector>

#include "mmra/airlink.hpp"
#include "mmra/codebook.hpp"
#include "mmra/complex_matrix.hpp"
#include "mmra/numerics.hpp"

namespace mmra {

/// Step-1 output for one time-domain code.
struct DetectionReport {
    int time_code_idx = 0;
    int k_hat = 0;
    std::vector<double> eps_hats;     // strictly increasing
    std::vector<int> l_hats;          // demapped code indices
    std::vector<double> theta_hats;   // demapped timings, samples (real)
    std::vector<bool> in_model;       // false for out-of-model timing
    ComplexMatrix channels;           // M x K-hat, column j pairs with eps_hats[j]
    bool saturated = false;           // LS conditioning flag when K-hat = N-1
};

/// R-hat_z = (1/M) sum_m z_m z_m^H.
ComplexMatrix sample_covariance(const std::vector<std::vector<cplx>>& z);

/// MDL model-order estimate from sorted (non-increasing) covariance
/// eigenvalues with M snapshots.
int mdl_order(const std::vector<double>& eigenvalues, int m_snapshots);

/// ESPRIT on the signal subspace: effective offsets in [0, 1), sorted
/// ascending.
std::vector<double> esprit_offsets(const HermitianEvd& evd, int k_hat);

/// Asymptotic variance of one offset estimate. This evaluates the
/// subspace-method error formula with the derivative-projection term
/// d^H (I - C (C^H C)^{-1} C^H) d; for a single source and large N it reduces
/// to 6 / (4 pi^2 N^3 M SNR).
double esprit_variance(const std::vector<double>& eps_set, int source_index, double snr, int n_len,
                       int m_snapshots);

/// Large-N, high-SNR limit: 6 / (4 pi^2 N^3 M SNR).
double esprit_variance_limit(double snr, int n_len, int m_snapshots);

/// True iff |eps_a - eps_b| > 8 sqrt(variance).
bool resolvable(double eps_a, double eps_b, double variance);

/// LS channel estimates: column j, row m = e_j^T (C^H C)^{-1} C^H z_m.
/// Sets *saturated when the normal-equation conditioning exceeds 1e8.
ComplexMatrix ls_channels(const std::vector<double>& eps_hats,
                          const std::vector<std::vector<cplx>>& z, bool* saturated = nullptr);

/// Full Step-1 pipeline per time code: despread, covariance, EVD, MDL,
/// ESPRIT, demap, LS channels.
/// theta_cap (< 0 = unknown) is the worst-case propagation delay in samples;
/// when provided, timing demaps beyond it fold to the adjacent code index.
std::vector<DetectionReport> run_step1(const UlObservation& y, const RaCodebook& cb, int n_fft,
                                       double theta_cap = -1.0);

}  // namespace mmra
