#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mmra/estimator.hpp"

using mmra::cplx;

namespace {

std::vector<std::vector<cplx>> snapshots(const std::vector<double>& eps,
                                         const std::vector<double>& amps, int n_len, int m,
                                         double noise_std, mmra::Rng& rng) {
    std::vector<std::vector<cplx>> codes;
    for (double e : eps) codes.push_back(mmra::effective_code(e, n_len));
    std::vector<std::vector<cplx>> z(m, std::vector<cplx>(n_len));
    for (auto& row : z) {
        for (std::size_t k = 0; k < eps.size(); ++k) {
            const cplx g = amps[k] * rng.cnormal();
            for (int n = 0; n < n_len; ++n) row[n] += g * codes[k][n];
        }
        if (noise_std > 0.0)
            for (auto& v : row) v += noise_std * rng.cnormal();
    }
    return z;
}

}  // namespace

TEST_CASE("sample covariance basics") {
    std::vector<std::vector<cplx>> e1{{1.0, 0.0, 0.0}};
    auto r = mmra::sample_covariance(e1);
    CHECK(std::abs(r(0, 0) - 1.0) < 1e-12);
    CHECK(r.frobenius_norm() == doctest::Approx(1.0));

    const auto c = mmra::effective_code(0.37, 4);
    std::vector<std::vector<cplx>> rep(5, c);
    r = mmra::sample_covariance(rep);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(std::abs(r(i, j) - c[i] * std::conj(c[j])) < 1e-12);

    CHECK_THROWS(mmra::sample_covariance({}));
}

TEST_CASE("sample covariance converges to the ensemble covariance") {
    mmra::Rng rng(20, 0, mmra::StreamPurpose::Noise);
    const double sigma2 = 0.5;
    std::vector<std::vector<cplx>> z(10000, std::vector<cplx>(6));
    for (auto& row : z)
        for (auto& v : row) v = std::sqrt(sigma2) * rng.cnormal();
    const auto r = mmra::sample_covariance(z);
    mmra::ComplexMatrix target = mmra::ComplexMatrix::identity(6);
    target *= cplx(sigma2, 0.0);
    CHECK((r - target).frobenius_norm() / target.frobenius_norm() < 0.1);
}

TEST_CASE("MDL order selection") {
    CHECK(mmra::mdl_order({1, 1, 1, 1, 1, 1, 1, 1}, 100) == 0);
    CHECK(mmra::mdl_order({101, 1, 1, 1, 1, 1, 1, 1}, 100) == 1);
    CHECK_THROWS(mmra::mdl_order({1, 2, 3}, 100));
    CHECK_THROWS(mmra::mdl_order({1.0}, 100));
}

TEST_CASE("ESPRIT recovers noiseless offsets") {
    mmra::Rng rng(21, 0, mmra::StreamPurpose::Channel);
    // Single source, smallest sizes included.
    for (int n : {2, 8}) {
        for (double eps : {0.0, 0.3291015625, 0.71}) {
            const auto z = snapshots({eps}, {1.0}, n, 3, 0.0, rng);
            const auto evd = hermitian_evd(mmra::sample_covariance(z));
            const double eps_hat = mmra::esprit_offsets(evd, 1)[0];
            double d = std::abs(eps_hat - eps);
            d = std::min(d, 1.0 - d);
            CHECK(d < 1e-9);
        }
    }
    // Two sources.
    const auto z = snapshots({0.1, 0.4}, {1.0, 1.0}, 8, 16, 0.0, rng);
    const auto evd = hermitian_evd(mmra::sample_covariance(z));
    const auto eps = mmra::esprit_offsets(evd, 2);
    CHECK(eps[0] == doctest::Approx(0.1).epsilon(1e-8));
    CHECK(eps[1] == doctest::Approx(0.4).epsilon(1e-8));
}

TEST_CASE("ESPRIT is exactly invariant to covariance scaling") {
    mmra::Rng rng(22, 0, mmra::StreamPurpose::Channel);
    const auto z = snapshots({0.23, 0.61}, {1.0, 0.7}, 8, 50, 0.1, rng);
    auto r = mmra::sample_covariance(z);
    const auto a = mmra::esprit_offsets(hermitian_evd(r), 2);
    r *= cplx(3.0, 0.0);
    const auto b = mmra::esprit_offsets(hermitian_evd(r), 2);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("analytic ESPRIT variance forms") {
    // High-SNR single-source value quoted for N=8, M=100, SNR=10.
    CHECK(mmra::esprit_variance_limit(10.0, 8, 100) == doctest::Approx(2.97e-7).epsilon(2e-3));

    // Exact single-source expression differs from the N^3 limit only by
    // N^3 vs N(N^2-1) and the finite-SNR correction.
    const double v = mmra::esprit_variance({0.3}, 0, 10.0, 8, 100);
    const double expected =
        mmra::esprit_variance_limit(10.0, 8, 100) * (512.0 / 504.0) * (1.0 + 1.0 / (8.0 * 10.0));
    CHECK(v == doctest::Approx(expected).epsilon(1e-9));
    CHECK(v >= 0.0);

    // Variance shrinks as N grows, everything else fixed.
    CHECK(mmra::esprit_variance({0.3}, 0, 10.0, 12, 100) < v);

    CHECK_THROWS(mmra::esprit_variance({0.3, 0.3}, 0, 10.0, 8, 100));
}

TEST_CASE("resolution rule boundary") {
    CHECK_FALSE(mmra::resolvable(0.2, 0.2, 1e-4));
    CHECK(mmra::resolvable(0.2, 0.5, 0.0));
    const double var = 1e-4;
    CHECK_FALSE(mmra::resolvable(0.0, 8.0 * std::sqrt(var), var));
    CHECK(mmra::resolvable(0.0, 8.0 * std::sqrt(var) + 1e-9, var));
}

TEST_CASE("LS channel estimation") {
    mmra::Rng rng(23, 0, mmra::StreamPurpose::Channel);
    const int n = 8, m = 12;
    // K=1 noiseless: exact effective channels back.
    {
        std::vector<cplx> h(m);
        for (auto& v : h) v = rng.cnormal();
        const auto c = mmra::effective_code(0.42, n);
        std::vector<std::vector<cplx>> z(m, std::vector<cplx>(n));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) z[i][j] = h[i] * c[j];
        const auto est = mmra::ls_channels({0.42}, z);
        for (int i = 0; i < m; ++i) CHECK(std::abs(est(i, 0) - h[i]) < 1e-9);
    }
    // K=2 noiseless.
    {
        std::vector<cplx> h1(m), h2(m);
        for (auto& v : h1) v = rng.cnormal();
        for (auto& v : h2) v = rng.cnormal();
        const auto c1 = mmra::effective_code(0.1, n);
        const auto c2 = mmra::effective_code(0.55, n);
        std::vector<std::vector<cplx>> z(m, std::vector<cplx>(n));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) z[i][j] = h1[i] * c1[j] + h2[i] * c2[j];
        const auto est = mmra::ls_channels({0.1, 0.55}, z);
        for (int i = 0; i < m; ++i) {
            CHECK(std::abs(est(i, 0) - h1[i]) < 1e-9);
            CHECK(std::abs(est(i, 1) - h2[i]) < 1e-9);
        }
    }
    // Coincident offsets surface as a rank failure.
    std::vector<std::vector<cplx>> z(2, std::vector<cplx>(n, cplx(1.0, 0.0)));
    CHECK_THROWS(mmra::ls_channels({0.2, 0.2}, z));
}

TEST_CASE("offset bias scales the LS estimate by the Dirichlet kernel") {
    mmra::Rng rng(24, 0, mmra::StreamPurpose::Channel);
    const int n = 8, m = 6;
    const double eps = 0.3, delta = 0.004;
    std::vector<cplx> h(m);
    for (auto& v : h) v = rng.cnormal();
    const auto c = mmra::effective_code(eps, n);
    std::vector<std::vector<cplx>> z(m, std::vector<cplx>(n));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) z[i][j] = h[i] * c[j];
    const auto est = mmra::ls_channels({eps + delta}, z);
    const double kappa =
        std::abs(std::sin(std::numbers::pi * n * delta) / (n * std::sin(std::numbers::pi * delta)));
    for (int i = 0; i < m; ++i)
        CHECK(std::abs(est(i, 0)) == doctest::Approx(kappa * std::abs(h[i])).epsilon(1e-9));
}

TEST_CASE("LS error has the predicted noise covariance") {
    mmra::Rng rng(25, 0, mmra::StreamPurpose::Noise);
    const int n = 8, m = 64;
    const double eps = 0.27, sigma2 = 0.5;
    std::vector<cplx> h(m);
    for (auto& v : h) v = rng.cnormal();
    const auto c = mmra::effective_code(eps, n);
    double err_power = 0.0;
    const int draws = 10000 / m;  // ~10k scalar error samples total
    for (int t = 0; t < draws; ++t) {
        std::vector<std::vector<cplx>> z(m, std::vector<cplx>(n));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                z[i][j] = h[i] * c[j] + std::sqrt(sigma2) * rng.cnormal();
        const auto est = mmra::ls_channels({eps}, z);
        for (int i = 0; i < m; ++i) err_power += std::norm(est(i, 0) - h[i]);
    }
    err_power /= draws * m;
    CHECK(err_power == doctest::Approx(sigma2 / n).epsilon(0.1));
}

TEST_CASE("step-1 pipeline end to end") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const int n_fft = 1024, m_ant = 100;

    // Noise-only block: every report empty.
    {
        mmra::Rng noise(26, 0, mmra::StreamPurpose::Noise);
        const auto y = mmra::synthesize_ul({}, cb, m_ant, 1.0, nullptr, noise, nullptr);
        const auto reports = mmra::run_step1(y, cb, n_fft);
        REQUIRE(reports.size() == 2);
        for (const auto& rep : reports) {
            CHECK(rep.k_hat == 0);
            CHECK(rep.eps_hats.empty());
        }
    }

    // Single UE at high SNR.
    {
        mmra::Rng ch(27, 0, mmra::StreamPurpose::Channel);
        mmra::Rng noise(28, 0, mmra::StreamPurpose::Noise);
        std::vector<cplx> h(m_ant);
        for (auto& v : h) v = ch.cnormal();
        const int l = 3, theta = 29;
        std::vector<mmra::UlTransmitter> tx{
            {1.0, mmra::effective_offset(l, theta, 8, n_fft), 1, &h}};
        const auto y = mmra::synthesize_ul(tx, cb, m_ant, 1e-4, nullptr, noise, nullptr);
        const auto reports = mmra::run_step1(y, cb, n_fft);
        CHECK(reports[0].k_hat == 0);
        REQUIRE(reports[1].k_hat == 1);
        CHECK(reports[1].l_hats[0] == l);
        CHECK(std::abs(reports[1].theta_hats[0] - theta) <= 1.0);
        CHECK(reports[1].in_model[0]);
        CHECK(reports[1].channels.rows() == static_cast<std::size_t>(m_ant));
    }

    // Two UEs on the same time code, well separated offsets.
    {
        mmra::Rng ch(29, 0, mmra::StreamPurpose::Channel);
        mmra::Rng noise(30, 0, mmra::StreamPurpose::Noise);
        std::vector<cplx> h1(m_ant), h2(m_ant);
        for (auto& v : h1) v = ch.cnormal();
        for (auto& v : h2) v = ch.cnormal();
        std::vector<mmra::UlTransmitter> tx{
            {1.0, mmra::effective_offset(1, 10, 8, n_fft), 0, &h1},
            {1.0, mmra::effective_offset(5, 40, 8, n_fft), 0, &h2}};
        const auto y = mmra::synthesize_ul(tx, cb, m_ant, 1e-4, nullptr, noise, nullptr);
        const auto reports = mmra::run_step1(y, cb, n_fft);
        REQUIRE(reports[0].k_hat == 2);
        CHECK(reports[0].eps_hats[0] < reports[0].eps_hats[1]);
        CHECK(reports[0].l_hats[0] == 1);
        CHECK(reports[0].l_hats[1] == 5);
        CHECK(std::abs(reports[0].theta_hats[0] - 10) <= 1.0);
        CHECK(std::abs(reports[0].theta_hats[1] - 40) <= 1.0);
    }
}
