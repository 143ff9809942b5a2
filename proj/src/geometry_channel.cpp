#include "mmra/geometry_channel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmra {

namespace {
constexpr double kSpeedOfLight = 3e8;
constexpr double kPathLossExponent = 3.7;
// -148.1 dB at the 1 km reference distance.
const double kOmega = std::pow(10.0, -148.1 / 10.0);

double round_half_away(double x) {
    return x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
}
}  // namespace

int NetworkGeometry::theta_max() const {
    return static_cast<int>(round_half_away(std::numbers::sqrt2 * cell_side * bandwidth / kSpeedOfLight));
}

double path_loss(double d_meters) {
    if (d_meters <= 0.0) throw std::invalid_argument("path_loss: distance must be positive");
    return kOmega * std::pow(d_meters / 1000.0, -kPathLossExponent);
}

int timing_offset(double d_meters, double bandwidth) {
    if (d_meters < 0.0) throw std::invalid_argument("timing_offset: distance must be >= 0");
    return static_cast<int>(round_half_away(2.0 * d_meters * bandwidth / kSpeedOfLight));
}

cplx SpatialCovariance::entry(int m, int n) const {
    if (model == FadingModel::Uncorrelated) return m == n ? cplx(beta, 0.0) : cplx(0.0, 0.0);
    const double mag = beta * std::pow(r, std::abs(n - m));
    const double a = phi * (n - m);
    return {mag * std::cos(a), mag * std::sin(a)};
}

ComplexMatrix SpatialCovariance::matrix() const {
    ComplexMatrix out(m_ant, m_ant);
    for (int m = 0; m < m_ant; ++m)
        for (int n = 0; n < m_ant; ++n) out(m, n) = entry(m, n);
    return out;
}

SpatialCovariance exp_correlation(double beta, double r, double phi, int m_ant) {
    if (r < 0.0 || r >= 1.0) throw std::invalid_argument("exp_correlation: r must be in [0, 1)");
    if (m_ant < 1) throw std::invalid_argument("exp_correlation: m_ant must be >= 1");
    return {m_ant, beta, FadingModel::Exponential, r, phi};
}

std::vector<cplx> draw_channel(const SpatialCovariance& cov, Rng& rng) {
    std::vector<cplx> h(cov.m_ant);
    const double amp = std::sqrt(cov.beta);
    if (cov.model == FadingModel::Uncorrelated || cov.r == 0.0) {
        for (auto& v : h) v = amp * rng.cnormal();
        return h;
    }
    // AR(1) recursion: u_0 = g_0, u_m = r u_{m-1} + sqrt(1-r^2) g_m gives
    // E[u_m conj(u_n)] = r^|m-n| exactly; the per-antenna phase ramp restores
    // the e^{j phi (n-m)} factor of the exponential model.
    const double w = std::sqrt(1.0 - cov.r * cov.r);
    cplx u = rng.cnormal();
    for (int m = 0; m < cov.m_ant; ++m) {
        if (m > 0) u = cov.r * u + w * rng.cnormal();
        const double a = -cov.phi * m;
        h[m] = amp * u * cplx(std::cos(a), std::sin(a));
    }
    return h;
}

std::vector<cplx> draw_channel_cholesky(const ComplexMatrix& r, double beta, Rng& rng) {
    const std::size_t n = r.rows();
    if (n != r.cols()) throw std::invalid_argument("draw_channel_cholesky: covariance must be square");
    ComplexMatrix a = r;
    const double ridge = 1e-12 * beta;
    for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;

    // In-place lower Cholesky.
    ComplexMatrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cplx s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            if (i == j) {
                const double d = s.real();
                if (d <= 0.0) throw std::runtime_error("draw_channel_cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(d);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    std::vector<cplx> g(n);
    for (auto& v : g) v = rng.cnormal();
    std::vector<cplx> h(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) h[i] += l(i, j) * g[j];
    return h;
}

std::vector<UeRecord> place_ues(int count, const NetworkGeometry& geo, FadingModel fading,
                                double corr_r, Rng& rng) {
    if (count < 0) throw std::invalid_argument("place_ues: count must be >= 0");
    std::vector<UeRecord> ues;
    ues.reserve(count);
    const double half = geo.cell_side / 2.0;
    for (int i = 0; i < count; ++i) {
        UeRecord ue;
        ue.id = i;
        do {
            ue.x = (rng.uniform() - 0.5) * geo.cell_side;
            ue.y = (rng.uniform() - 0.5) * geo.cell_side;
            ue.distance = std::hypot(ue.x, ue.y);
        } while (ue.distance < geo.min_distance || std::abs(ue.x) > half || std::abs(ue.y) > half);
        ue.beta = path_loss(ue.distance);
        ue.theta = timing_offset(ue.distance, geo.bandwidth);
        ue.fading = fading;
        ue.corr_r = corr_r;
        ue.phi = (rng.uniform() - 0.5) * 2.0 * std::numbers::pi;
        ues.push_back(ue);
    }
    return ues;
}

namespace {
// Offsets of the surrounding cell centers on the regular grid: two tiers
// (24 cells) approximate the interference from the whole network; farther
// tiers are negligible under the d^-3.7 path loss.
std::vector<std::array<int, 2>> neighbor_cells() {
    std::vector<std::array<int, 2>> out;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            if (i != 0 || j != 0) out.push_back({i, j});
    return out;
}
const std::vector<std::array<int, 2>> kNeighbors = neighbor_cells();
}  // namespace

std::vector<Interferer> place_interferers(int per_cell, const NetworkGeometry& geo,
                                          const std::vector<double>& power_levels, Rng& rng) {
    std::vector<Interferer> out;
    out.reserve(kNeighbors.size() * per_cell);
    for (const auto& nb : kNeighbors) {
        const double cx = nb[0] * geo.inter_site;
        const double cy = nb[1] * geo.inter_site;
        for (int i = 0; i < per_cell; ++i) {
            double x, y;
            do {
                x = cx + (rng.uniform() - 0.5) * geo.cell_side;
                y = cy + (rng.uniform() - 0.5) * geo.cell_side;
            } while (std::hypot(x - cx, y - cy) < geo.min_distance);
            Interferer iv;
            iv.power = power_levels[rng.uniform_int(power_levels.size())];
            iv.beta = path_loss(std::hypot(x, y));
            out.push_back(iv);
        }
    }
    return out;
}

double mean_intercell_power(int per_cell, const NetworkGeometry& geo,
                            const std::vector<double>& power_levels) {
    double mean_power = 0.0;
    for (double p : power_levels) mean_power += p;
    mean_power /= static_cast<double>(power_levels.size());

    // Grid quadrature of E[beta] over each neighboring cell; the exclusion
    // disk around the interferer's own BS has negligible effect on the gain
    // toward the serving BS and is ignored here.
    const int grid = 64;
    double total = 0.0;
    for (const auto& nb : kNeighbors) {
        const double cx = nb[0] * geo.inter_site;
        const double cy = nb[1] * geo.inter_site;
        double cell_mean = 0.0;
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                const double x = cx + ((i + 0.5) / grid - 0.5) * geo.cell_side;
                const double y = cy + ((j + 0.5) / grid - 0.5) * geo.cell_side;
                cell_mean += path_loss(std::hypot(x, y));
            }
        }
        total += cell_mean / (grid * grid);
    }
    return per_cell * mean_power * total;
}

}  // namespace mmra
