#include "mmra/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmra {

ComplexMatrix sample_covariance(const std::vector<std::vector<cplx>>& z) {
    if (z.empty()) throw std::invalid_argument("sample_covariance: empty snapshot list");
    const std::size_t n = z.front().size();
    ComplexMatrix r(n, n);
    for (const auto& v : z) {
        if (v.size() != n) throw std::invalid_argument("sample_covariance: snapshot length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            const cplx vi = v[i];
            for (std::size_t j = i; j < n; ++j) r(i, j) += vi * std::conj(v[j]);
        }
    }
    const double inv_m = 1.0 / static_cast<double>(z.size());
    for (std::size_t i = 0; i < n; ++i) {
        r(i, i) = cplx(r(i, i).real() * inv_m, 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            r(i, j) *= inv_m;
            r(j, i) = std::conj(r(i, j));
        }
    }
    return r;
}

int mdl_order(const std::vector<double>& eigenvalues, int m_snapshots) {
    const int n = static_cast<int>(eigenvalues.size());
    if (n < 2) throw std::invalid_argument("mdl_order: need at least two eigenvalues");
    if (m_snapshots < 1) throw std::invalid_argument("mdl_order: snapshot count must be >= 1");
    for (int i = 1; i < n; ++i)
        if (eigenvalues[i] > eigenvalues[i - 1] * (1.0 + 1e-12) + 1e-300)
            throw std::invalid_argument("mdl_order: eigenvalues must be sorted non-increasing");

    const double m = static_cast<double>(m_snapshots);
    int best = 0;
    double best_val = 0.0;
    for (int l = 0; l < n; ++l) {
        // g(l): ratio of geometric to arithmetic mean of the tail eigenvalues.
        double log_geo = 0.0, arith = 0.0;
        for (int i = l; i < n; ++i) {
            log_geo += std::log(std::max(eigenvalues[i], 1e-300));
            arith += eigenvalues[i];
        }
        const int tail = n - l;
        log_geo /= tail;
        arith /= tail;
        const double log_g = log_geo - std::log(std::max(arith, 1e-300));
        const double val = 0.5 * l * (2.0 * n - l) * std::log(m) - m * tail * log_g;
        if (l == 0 || val < best_val) {
            best_val = val;
            best = l;
        }
    }
    return best;
}

std::vector<double> esprit_offsets(const HermitianEvd& evd, int k_hat) {
    const int n = static_cast<int>(evd.eigenvectors.rows());
    if (k_hat < 1 || k_hat > n - 1) throw std::invalid_argument("esprit_offsets: k_hat out of range");

    // V1 / V2: first and last N-1 rows of the signal-subspace matrix.
    ComplexMatrix v1(n - 1, k_hat), v2(n - 1, k_hat);
    for (int i = 0; i < n - 1; ++i) {
        for (int j = 0; j < k_hat; ++j) {
            v1(i, j) = evd.eigenvectors(i, j);
            v2(i, j) = evd.eigenvectors(i + 1, j);
        }
    }
    const ComplexMatrix rotation = ls_solve(v1, v2);
    const std::vector<cplx> psi = general_eigenvalues(rotation);

    std::vector<double> eps(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        double a = std::arg(psi[j]) / (2.0 * std::numbers::pi);
        if (a < 0.0) a += 1.0;
        eps[j] = a;
    }
    std::sort(eps.begin(), eps.end());
    return eps;
}

double esprit_variance(const std::vector<double>& eps_set, int source_index, double snr, int n_len,
                       int m_snapshots) {
    const int k = static_cast<int>(eps_set.size());
    if (k < 1 || k >= n_len) throw std::invalid_argument("esprit_variance: need 1 <= K < N");
    if (source_index < 0 || source_index >= k)
        throw std::invalid_argument("esprit_variance: source index out of range");

    ComplexMatrix c(n_len, k);
    for (int j = 0; j < k; ++j) c.set_column(j, effective_code(eps_set[j], n_len));

    ComplexMatrix gram = c.adjoint() * c;
    ComplexMatrix gram_inv;
    try {
        gram_inv = ls_solve(gram, ComplexMatrix::identity(k));
    } catch (const std::runtime_error&) {
        throw std::runtime_error("esprit_variance: coincident offsets make C^H C singular");
    }

    // Projection onto the orthogonal complement of the signal manifold,
    // applied to the derivative d = d c / d omega at the source offset.
    const auto ck = effective_code(eps_set[source_index], n_len);
    std::vector<cplx> d(n_len);
    for (int n = 0; n < n_len; ++n) d[n] = cplx(0.0, static_cast<double>(n)) * ck[n];

    // gamma = d^H d - d^H C (C^H C)^{-1} C^H d
    std::vector<cplx> chd(k, cplx(0.0, 0.0));  // C^H d
    for (int j = 0; j < k; ++j)
        for (int n = 0; n < n_len; ++n) chd[j] += std::conj(c(n, j)) * d[n];
    cplx quad = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) quad += std::conj(chd[i]) * gram_inv(i, j) * chd[j];
    double dd = 0.0;
    for (const auto& v : d) dd += std::norm(v);
    const double gamma = dd - quad.real();
    if (gamma <= 0.0) throw std::runtime_error("esprit_variance: degenerate source geometry");

    const double inv_diag = gram_inv(source_index, source_index).real();
    const double var_omega =
        (1.0 / (2.0 * m_snapshots * snr)) * (1.0 / gamma) * (1.0 + inv_diag / snr);
    return var_omega / (4.0 * std::numbers::pi * std::numbers::pi);
}

double esprit_variance_limit(double snr, int n_len, int m_snapshots) {
    const double n3 = static_cast<double>(n_len) * n_len * n_len;
    return 6.0 / (4.0 * std::numbers::pi * std::numbers::pi * n3 * m_snapshots * snr);
}

bool resolvable(double eps_a, double eps_b, double variance) {
    if (variance < 0.0) throw std::invalid_argument("resolvable: variance must be >= 0");
    return std::abs(eps_a - eps_b) > 8.0 * std::sqrt(variance);
}

ComplexMatrix ls_channels(const std::vector<double>& eps_hats,
                          const std::vector<std::vector<cplx>>& z, bool* saturated) {
    if (eps_hats.empty()) throw std::invalid_argument("ls_channels: no offsets");
    if (z.empty()) throw std::invalid_argument("ls_channels: no snapshots");
    const int n = static_cast<int>(z.front().size());
    const int k = static_cast<int>(eps_hats.size());
    const int m = static_cast<int>(z.size());

    ComplexMatrix c(n, k);
    for (int j = 0; j < k; ++j) c.set_column(j, effective_code(eps_hats[j], n));

    if (saturated) {
        *saturated = false;
        const auto gram_eig = hermitian_evd(c.adjoint() * c).eigenvalues;
        const double lo = gram_eig.back();
        if (lo <= 0.0 || gram_eig.front() / lo > 1e8) *saturated = true;
    }

    ComplexMatrix zmat(n, m);
    for (int i = 0; i < m; ++i) zmat.set_column(i, z[i]);
    ComplexMatrix x;  // K x M
    try {
        x = ls_solve(c, zmat);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("ls_channels: coincident offsets, Vandermonde rank failure");
    }

    ComplexMatrix channels(m, k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) channels(i, j) = x(j, i);
    return channels;
}

std::vector<DetectionReport> run_step1(const UlObservation& y, const RaCodebook& cb, int n_fft,
                                       double theta_cap) {
    if (y.n_len != cb.n_len || y.q_len != cb.q_len)
        throw std::invalid_argument("run_step1: observation/codebook dimension mismatch");
    std::vector<DetectionReport> reports;
    reports.reserve(cb.q_len);

    for (int i = 0; i < cb.q_len; ++i) {
        DetectionReport rep;
        rep.time_code_idx = i;

        const auto z = despread_time(y, cb.time_codes[i]);
        const auto cov = sample_covariance(z);
        const auto evd = hermitian_evd(cov);
        rep.k_hat = mdl_order(evd.eigenvalues, y.m_ant());

        if (rep.k_hat > 0) {
            rep.eps_hats = esprit_offsets(evd, rep.k_hat);
            for (double eps : rep.eps_hats) {
                const auto dm = demap_offset(eps, cb.n_len, n_fft, 2.0, theta_cap);
                rep.l_hats.push_back(dm.code_index);
                rep.theta_hats.push_back(dm.timing);
                rep.in_model.push_back(dm.in_model);
            }
            rep.channels = ls_channels(rep.eps_hats, z, &rep.saturated);
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

}  // namespace mmra
