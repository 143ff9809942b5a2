#pragma once

#include <vector>

#include "mmra/complex_matrix.hpp"
#include "mmra/rng.hpp"

namespace mmra {

/// Cell layout and system-level constants.
struct NetworkGeometry {
    double cell_side = 500.0;        // D, meters
    double min_distance = 25.0;      // meters
    double bandwidth = 20e6;         // B, Hz
    int n_fft = 1024;
    double subcarrier_spacing = 15e3;  // Hz
    int num_cells = 9;
    double inter_site = 500.0;  // meters

    double sampling_period() const { return 1.0 / (subcarrier_spacing * n_fft); }
    /// Worst-case round-trip offset for a UE in the cell corner.
    int theta_max() const;
};

enum class FadingModel { Uncorrelated, Exponential };

/// Spatial covariance in parametric form. entry()/matrix() materialize the
/// exponential-correlation entries; draws use the equivalent AR(1) recursion.
struct SpatialCovariance {
    int m_ant = 0;
    double beta = 0.0;  // normalized trace, Eq-level average gain
    FadingModel model = FadingModel::Uncorrelated;
    double r = 0.0;    // correlation factor in [0, 1)
    double phi = 0.0;  // angle-of-arrival, radians

    cplx entry(int m, int n) const;
    ComplexMatrix matrix() const;
};

/// One UE's geometry, fading and protocol state.
struct UeRecord {
    int id = -1;
    double x = 0.0, y = 0.0;  // position relative to the serving BS
    double distance = 0.0;    // d_k, meters
    double beta = 0.0;        // large-scale gain
    int theta = 0;            // timing offset, samples
    FadingModel fading = FadingModel::Uncorrelated;
    double corr_r = 0.0;
    double phi = 0.0;  // per-UE angle for the exponential model

    int time_code_idx = -1;  // i_k
    int freq_code_idx = -1;  // l_k
    double power = 0.0;      // rho_k, watts (0 = silent)
    int attempts = 0;
    bool active = false;

    std::vector<cplx> channel;  // drawn for the current RA block

    // Protocol-loop bookkeeping.
    bool admitted = false;
    int backoff_rounds = 0;
    int power_index = 0;

    SpatialCovariance covariance(int m_ant) const {
        return {m_ant, beta, fading, fading == FadingModel::Exponential ? corr_r : 0.0, phi};
    }
};

/// beta = Omega d^-kappa with Omega = -148.1 dB at 1 km, kappa = 3.7.
double path_loss(double d_meters);

/// theta = round(2 d B / c), half away from zero.
int timing_offset(double d_meters, double bandwidth);

/// Exponential correlation model: [R]_{m,n} = beta r^|n-m| e^{j phi (n-m)}.
SpatialCovariance exp_correlation(double beta, double r, double phi, int m_ant);

/// h ~ CN(0, R). Uncorrelated and exponential models use O(M) exact draws.
std::vector<cplx> draw_channel(const SpatialCovariance& cov, Rng& rng);

/// Generic draw through the Cholesky factor of R + 1e-12 beta I; used as an
/// oracle against the parametric fast paths.
std::vector<cplx> draw_channel_cholesky(const ComplexMatrix& r, double beta, Rng& rng);

/// Uniform placement on the cell square minus the inner exclusion disk;
/// distance, beta and theta populated. Angles for the exponential model drawn
/// uniform on [-pi, pi).
std::vector<UeRecord> place_ues(int count, const NetworkGeometry& geo, FadingModel fading,
                                double corr_r, Rng& rng);

/// An active UE in a neighboring cell, as seen by the serving BS.
struct Interferer {
    double power = 0.0;
    double beta = 0.0;  // path gain to the serving BS
};

/// Interferers placed uniformly in each of the 8 neighboring cells; powers
/// drawn uniformly from the given set; path gains measured to the serving BS
/// at the origin.
std::vector<Interferer> place_interferers(int per_cell, const NetworkGeometry& geo,
                                          const std::vector<double>& power_levels, Rng& rng);

/// Analytic mean of sum_nu rho_nu beta_nu over the interferer ensemble
/// (uniform placement, uniform power levels), by quadrature over each
/// neighboring cell.
double mean_intercell_power(int per_cell, const NetworkGeometry& geo,
                            const std::vector<double>& power_levels);

}  // namespace mmra
