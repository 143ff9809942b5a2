#pragma once

#include <vector>

#include "mmra/complex_matrix.hpp"

namespace mmra {

/// Fourier frequency code f_l of length n_len: entry n is e^{j 2 pi n l / N}.
std::vector<cplx> fourier_code(int l, int n_len);

/// Walsh-Hadamard time codes (Sylvester construction): q_len mutually
/// orthogonal +-1 vectors. q_len must be a power of two.
std::vector<std::vector<double>> walsh_hadamard_codebook(int q_len);

/// Effective frequency-domain code under offset eps (cycles per subcarrier):
/// c(eps) = [1, e^{j 2 pi eps}, ..., e^{j 2 pi (N-1) eps}].
std::vector<cplx> effective_code(double eps, int n_len);

/// eps = l/N - theta/N_FFT.
double effective_offset(int l, int theta, int n_len, int n_fft);

struct DemappedOffset {
    int code_index;   // l
    double timing;    // theta, in samples (real; estimates are non-integer)
    bool in_model;    // false when theta falls outside [0, N_FFT/N] + slack
};

/// Inverse of effective_offset: l = ceil(N eps), theta = N_FFT (l/N - eps).
/// eps just above (N-1)/N wraps to l = 0 with positive theta. Out-of-model
/// timing is flagged, never clamped. When the receiver knows the worst-case
/// propagation delay (theta_cap >= 0, samples), aliases landing beyond it are
/// folded back to the adjacent code index; a noisy estimate of a UE sitting
/// right at a code boundary would otherwise flip to (l+1, ~N_FFT/N).
DemappedOffset demap_offset(double eps, int n_len, int n_fft, double theta_slack = 2.0,
                            double theta_cap = -1.0);

/// The Q time-domain and N frequency-domain RA codes of a block.
struct RaCodebook {
    int q_len = 0;
    int n_len = 0;
    std::vector<std::vector<double>> time_codes;
    std::vector<std::vector<cplx>> freq_codes;

    static RaCodebook make(int q_len, int n_len);
    int tau() const { return q_len * n_len; }
};

}  // namespace mmra
