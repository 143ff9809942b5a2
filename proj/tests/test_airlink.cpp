#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "mmra/airlink.hpp"
#include "mmra/codebook.hpp"

using mmra::cplx;

namespace {
std::vector<cplx> fixed_channel(int m, unsigned seed) {
    mmra::Rng rng(seed, 0, mmra::StreamPurpose::Channel);
    std::vector<cplx> h(m);
    for (auto& v : h) v = rng.cnormal();
    return h;
}
}  // namespace

TEST_CASE("single UE, single symbol, noiseless synthesis") {
    const auto cb = mmra::RaCodebook::make(1, 4);
    const auto h = fixed_channel(1, 1);
    mmra::Rng noise(2, 0, mmra::StreamPurpose::Noise);
    std::vector<mmra::UlTransmitter> tx{{1.0, 0.0, 0, &h}};
    const auto y = mmra::synthesize_ul(tx, cb, 1, 0.0, nullptr, noise, nullptr);
    for (int n = 0; n < 4; ++n) CHECK(std::abs(y.per_antenna[0](n, 0) - h[0]) < 1e-12);
}

TEST_CASE("noise-only synthesis has the configured per-entry variance") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    mmra::Rng noise(3, 0, mmra::StreamPurpose::Noise);
    const double sigma2 = 0.37;
    double acc = 0.0;
    const int draws = 2000, m_ant = 4;
    for (int t = 0; t < draws; ++t) {
        const auto y = mmra::synthesize_ul({}, cb, m_ant, sigma2, nullptr, noise, nullptr);
        for (const auto& mat : y.per_antenna)
            for (int n = 0; n < 8; ++n)
                for (int q = 0; q < 2; ++q) acc += std::norm(mat(n, q));
    }
    acc /= draws * m_ant * 16;
    CHECK(acc == doctest::Approx(sigma2).epsilon(0.02));
}

TEST_CASE("time-domain despreading: exact separation and channel scaling") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const int m_ant = 3;
    const auto h1 = fixed_channel(m_ant, 4);
    const auto h2 = fixed_channel(m_ant, 5);
    const double rho1 = 0.64, eps1 = 0.21, eps2 = 0.58;
    mmra::Rng noise(6, 0, mmra::StreamPurpose::Noise);
    std::vector<mmra::UlTransmitter> tx{{rho1, eps1, 0, &h1}, {0.25, eps2, 1, &h2}};
    const auto y = mmra::synthesize_ul(tx, cb, m_ant, 0.0, nullptr, noise, nullptr);

    // Despreading with t_0 must null UE 2 exactly and leave sqrt(rho Q) h c(eps).
    const auto z = mmra::despread_time(y, cb.time_codes[0]);
    const auto c = mmra::effective_code(eps1, 8);
    const double scale = std::sqrt(rho1 * 2.0);
    for (int m = 0; m < m_ant; ++m)
        for (int n = 0; n < 8; ++n) CHECK(std::abs(z[m][n] - scale * h1[m] * c[n]) < 1e-12);
}

TEST_CASE("synthesis is linear in the UE set") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const int m_ant = 2;
    const auto h1 = fixed_channel(m_ant, 7);
    const auto h2 = fixed_channel(m_ant, 8);
    mmra::Rng noise(9, 0, mmra::StreamPurpose::Noise);
    std::vector<mmra::UlTransmitter> a{{0.5, 0.1, 0, &h1}};
    std::vector<mmra::UlTransmitter> b{{0.9, 0.6, 1, &h2}};
    std::vector<mmra::UlTransmitter> both = {a[0], b[0]};
    const auto ya = mmra::synthesize_ul(a, cb, m_ant, 0.0, nullptr, noise, nullptr);
    const auto yb = mmra::synthesize_ul(b, cb, m_ant, 0.0, nullptr, noise, nullptr);
    const auto yab = mmra::synthesize_ul(both, cb, m_ant, 0.0, nullptr, noise, nullptr);
    for (int m = 0; m < m_ant; ++m)
        for (int n = 0; n < 8; ++n)
            for (int q = 0; q < 2; ++q)
                CHECK(std::abs(yab.per_antenna[m](n, q) - ya.per_antenna[m](n, q) -
                               yb.per_antenna[m](n, q)) < 1e-12);
}

TEST_CASE("despread noise power is N sigma^2") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    mmra::Rng noise(10, 0, mmra::StreamPurpose::Noise);
    const double sigma2 = 1.7;
    double acc = 0.0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        const auto y = mmra::synthesize_ul({}, cb, 1, sigma2, nullptr, noise, nullptr);
        const auto z = mmra::despread_time(y, cb.time_codes[0]);
        for (const auto& v : z[0]) acc += std::norm(v);
    }
    acc /= draws;
    CHECK(acc == doctest::Approx(8.0 * sigma2).epsilon(0.02));
}

TEST_CASE("synthesize_ul validates its inputs") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const auto h = fixed_channel(2, 11);
    mmra::Rng noise(12, 0, mmra::StreamPurpose::Noise);
    std::vector<mmra::UlTransmitter> no_power{{0.0, 0.0, 0, &h}};
    CHECK_THROWS(mmra::synthesize_ul(no_power, cb, 2, 0.0, nullptr, noise, nullptr));
    std::vector<mmra::UlTransmitter> wrong_len{{1.0, 0.0, 0, &h}};
    CHECK_THROWS(mmra::synthesize_ul(wrong_len, cb, 3, 0.0, nullptr, noise, nullptr));
    std::vector<mmra::UlTransmitter> bad_code{{1.0, 0.0, 5, &h}};
    CHECK_THROWS(mmra::synthesize_ul(bad_code, cb, 2, 0.0, nullptr, noise, nullptr));
}

TEST_CASE("intercell term moments") {
    mmra::Rng rng(13, 0, mmra::StreamPurpose::Intercell);
    CHECK(mmra::intercell_term({}, 2, 8, 2, rng)[0].frobenius_norm() == 0.0);

    const std::vector<mmra::Interferer> one{{0.9, 1.3}};
    double acc = 0.0;
    const int draws = 4000;
    for (int t = 0; t < draws; ++t) {
        const auto im = mmra::intercell_term(one, 2, 8, 2, rng);
        for (const auto& mat : im)
            for (int n = 0; n < 8; ++n)
                for (int q = 0; q < 2; ++q) acc += std::norm(mat(n, q));
    }
    acc /= draws * 2 * 16;
    CHECK(acc == doctest::Approx(0.9 * 1.3).epsilon(0.05));
}

TEST_CASE("despread intercell power averages to the sum of rho beta") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const std::vector<mmra::Interferer> ivs{{0.4, 0.8}, {1.0, 0.3}, {0.2, 2.0}};
    double expected = 0.0;
    for (const auto& iv : ivs) expected += iv.power * iv.beta;

    mmra::Rng noise(14, 0, mmra::StreamPurpose::Noise);
    mmra::Rng icell(15, 0, mmra::StreamPurpose::Intercell);
    double acc = 0.0;
    const int draws = 3000, m_ant = 2;
    for (int t = 0; t < draws; ++t) {
        const auto y = mmra::synthesize_ul({}, cb, m_ant, 0.0, &ivs, noise, &icell);
        const auto z = mmra::despread_time(y, cb.time_codes[0]);
        for (const auto& zm : z)
            for (const auto& v : zm) acc += std::norm(v);
    }
    acc /= draws * m_ant * 8;  // per despread element
    CHECK(acc == doctest::Approx(expected).epsilon(0.06));
}

TEST_CASE("DL correlation of matched and mismatched codes") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    mmra::DlObservation r;
    r.matrix = mmra::ComplexMatrix(8, 2);
    for (int n = 0; n < 8; ++n)
        for (int q = 0; q < 2; ++q) r.matrix(n, q) = cb.freq_codes[3][n] * cb.time_codes[1][q];

    const cplx matched = mmra::ue_correlate_dl(r, cb.freq_codes[3], cb.time_codes[1]);
    CHECK(std::abs(matched - std::sqrt(16.0)) < 1e-12);
    const cplx other_f = mmra::ue_correlate_dl(r, cb.freq_codes[4], cb.time_codes[1]);
    CHECK(std::abs(other_f) < 1e-12);
    const cplx other_t = mmra::ue_correlate_dl(r, cb.freq_codes[3], cb.time_codes[0]);
    CHECK(std::abs(other_t) < 1e-12);
}

TEST_CASE("DL correlation preserves noise power") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    mmra::Rng rng(16, 0, mmra::StreamPurpose::DlNoise);
    const double sigma2 = 0.8;
    double acc = 0.0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        const auto r = mmra::synthesize_dl({}, cb, 1.0, {}, sigma2, 0.0, rng);
        acc += std::norm(mmra::ue_correlate_dl(r, cb.freq_codes[2], cb.time_codes[0]));
    }
    acc /= draws;
    CHECK(acc == doctest::Approx(sigma2).epsilon(0.03));
}

TEST_CASE("aligned DL beam delivers sqrt(rho_dl) ||h|| on the reported codes") {
    const auto cb = mmra::RaCodebook::make(2, 8);
    const int m_ant = 16;
    const auto h = fixed_channel(m_ant, 17);
    double norm = 0.0;
    for (const auto& v : h) norm += std::norm(v);
    norm = std::sqrt(norm);

    mmra::PrecodedEntry e;
    e.channel = h;
    e.channel_norm = norm;
    e.l_hat = 5;
    e.time_code_idx = 1;
    mmra::Rng rng(18, 0, mmra::StreamPurpose::DlNoise);
    const auto r = mmra::synthesize_dl({e}, cb, 4.0, h, 0.0, 0.0, rng);
    for (int n = 0; n < 8; ++n)
        for (int q = 0; q < 2; ++q)
            CHECK(std::abs(r.matrix(n, q) -
                           2.0 * norm * cb.freq_codes[5][n] * cb.time_codes[1][q]) < 1e-9);

    // Orthogonal estimate: the UE hears nothing.
    std::vector<cplx> perp(m_ant, cplx(0.0, 0.0));
    perp[0] = std::conj(h[1]);
    perp[1] = -std::conj(h[0]);  // h^H perp = 0 in the first two coordinates
    mmra::PrecodedEntry e2 = e;
    e2.channel = perp;
    double pn = 0.0;
    for (const auto& v : perp) pn += std::norm(v);
    e2.channel_norm = std::sqrt(pn);
    const auto r2 = mmra::synthesize_dl({e2}, cb, 4.0, h, 0.0, 0.0, rng);
    CHECK(r2.matrix.frobenius_norm() < 1e-9);
}
