#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "mmra/protocol.hpp"

using mmra::cplx;

TEST_CASE("power ramping levels") {
    CHECK(mmra::power_level(0, 0.1, 1.0) == doctest::Approx(0.1));
    CHECK(mmra::power_level(10, 0.1, 1.0) == doctest::Approx(1.0));
    CHECK(mmra::power_level(5, 0.1, 1.0) == doctest::Approx(0.1 * std::sqrt(10.0)).epsilon(1e-12));
    CHECK_THROWS(mmra::power_level(-1, 0.1, 1.0));
    CHECK_THROWS(mmra::power_level(11, 0.1, 1.0));
    const auto levels = mmra::RaParams{}.power_levels();
    CHECK(levels.size() == 11);
    for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i] > levels[i - 1]);
}

TEST_CASE("alpha estimate") {
    const int m = 100, tau = 16, q = 2;
    const double rho = 0.5, beta = 2.0, rho_dl = 1.0, sigma2 = 0.1;
    // Asymptotic sole-contender response: Re r = sqrt(M rho_dl tau rho beta^2 Q / alpha)
    // with alpha = rho beta Q + sigma^2 recovers alpha back.
    const double alpha = rho * beta * q + sigma2;
    const double r = std::sqrt(m * rho_dl * tau * rho * beta * beta * q / alpha);
    CHECK(mmra::alpha_hat(cplx(r, 0.0), m, rho_dl, tau, rho, beta, q, sigma2) ==
          doctest::Approx(rho * beta * q).epsilon(1e-9));

    // Two equal colliders: each sees Re r scaled by alpha = 2 rho beta Q.
    const double alpha2 = 2.0 * rho * beta * q + sigma2;
    const double r2 = std::sqrt(m * rho_dl * tau * rho * beta * beta * q / alpha2);
    CHECK(mmra::alpha_hat(cplx(r2, 0.0), m, rho_dl, tau, rho, beta, q, sigma2) ==
          doctest::Approx(2.0 * rho * beta * q).epsilon(1e-9));

    // Floor clamp and the Re r = 0 guard.
    CHECK(mmra::alpha_hat(cplx(1e9, 0.0), m, rho_dl, tau, rho, beta, q, sigma2) ==
          doctest::Approx(rho * beta * q));
    CHECK(mmra::alpha_hat(cplx(0.0, 3.0), m, rho_dl, tau, rho, beta, q, sigma2) ==
          doctest::Approx(rho * beta * q));
}

TEST_CASE("distributed repeat/wait decision") {
    const double rho = 0.5, beta = 2.0;
    const int q = 2;
    const double contention = rho * beta * q;
    // Sole contender: alpha = rho beta Q -> Repeat.
    CHECK(mmra::ue_decide(contention, rho, beta, q, 0.0) == mmra::UeDecision::Repeat);
    // Two exactly equal colliders: boundary goes to Wait.
    CHECK(mmra::ue_decide(2.0 * contention, rho, beta, q, 0.0) == mmra::UeDecision::Wait);
    // Negative bias shifts the threshold down: the same boundary now repeats.
    CHECK(mmra::ue_decide(2.0 * contention, rho, beta, q, -0.1) == mmra::UeDecision::Repeat);
    // Positive bias suppresses a marginal winner.
    CHECK(mmra::ue_decide(2.0 * contention - 1e-9, rho, beta, q, 0.5) == mmra::UeDecision::Wait);
}

TEST_CASE("retransmission power") {
    const int tau = 16, q = 2;
    // Sole contender: rho_ul rho tau Q beta^2 = alpha keeps the step-3 statistic at 1.
    const double rho = 0.5, beta = 2.0;
    const double alpha = rho * beta * q;
    const double rho_ul = mmra::ul_retx_power(alpha, rho, tau, q, beta, 10.0);
    CHECK(rho_ul == doctest::Approx(alpha / (rho * tau * q * beta * beta)));
    // Cap binds.
    CHECK(mmra::ul_retx_power(1e9, rho, tau, q, beta, 1.0) == 1.0);
    // beta^2 scaling.
    CHECK(mmra::ul_retx_power(alpha, rho, tau, q, 2.0 * beta, 100.0) ==
          doctest::Approx(rho_ul / 4.0));
    CHECK_THROWS(mmra::ul_retx_power(alpha, 0.0, tau, q, beta, 1.0));
}

TEST_CASE("detection rule boundaries") {
    const int m = 100;
    const double s = std::sqrt(static_cast<double>(m));
    CHECK(mmra::detect_rule(cplx(1.0 * s, 0.0), m, 0.5, 1.5) == mmra::BsDecision::Detected);
    CHECK(mmra::detect_rule(cplx(2.0 * s, 0.0), m, 0.5, 1.5) == mmra::BsDecision::Undetected);
    CHECK(mmra::detect_rule(cplx(0.0, 0.0), m, 0.5, 1.5) == mmra::BsDecision::Undetected);
    // Strict inequalities at both thresholds.
    CHECK(mmra::detect_rule(cplx(0.5 * s, 0.0), m, 0.5, 1.5) == mmra::BsDecision::Undetected);
    CHECK(mmra::detect_rule(cplx(1.5 * s, 0.0), m, 0.5, 1.5) == mmra::BsDecision::Undetected);
    // Imaginary part is ignored.
    CHECK(mmra::detect_rule(cplx(1.0 * s, 40.0), m, 0.5, 1.5) == mmra::BsDecision::Detected);
}

namespace {

mmra::World small_world(int population, int m_ant) {
    mmra::World world;
    world.codebook = mmra::RaCodebook::make(2, 8);
    world.m_ant = m_ant;
    mmra::Rng placement(77, 0, mmra::StreamPurpose::Placement);
    world.ues = mmra::place_ues(population, world.geometry, mmra::FadingModel::Uncorrelated, 0.0,
                                placement);
    return world;
}

}  // namespace

TEST_CASE("activation statistics") {
    mmra::World world = small_world(2500, 4);
    mmra::RaParams params;
    params.p_active = 0.0;
    mmra::Rng rng(31, 0, mmra::StreamPurpose::Activation);
    mmra::activate(world.ues, world, params, rng);
    for (const auto& ue : world.ues) CHECK_FALSE(ue.active);

    params.p_active = 0.01;
    double total = 0.0;
    const int rounds = 200;
    for (int r = 0; r < rounds; ++r) {
        mmra::activate(world.ues, world, params, rng);
        int n = 0;
        for (auto& ue : world.ues) {
            if (ue.active) {
                ++n;
                CHECK(ue.time_code_idx >= 0);
                CHECK(ue.time_code_idx < 2);
                CHECK(ue.freq_code_idx >= 0);
                CHECK(ue.freq_code_idx < 8);
                CHECK(ue.power >= 0.1);
                CHECK(ue.power <= 1.0 + 1e-12);
            }
            ue.active = false;
            ue.backoff_rounds = 0;
        }
        total += n;
    }
    total /= rounds;
    // Mean 25 with per-round sigma ~5: +-3 sigma of the 200-round average.
    CHECK(std::abs(total - 25.0) <= 3.0 * 5.0 / std::sqrt(static_cast<double>(rounds)));
}

TEST_CASE("empty round leaves the world untouched") {
    mmra::World world = small_world(50, 8);
    mmra::RaParams params;
    params.p_active = 0.0;
    params.noise_var = 1e-13;
    const auto before = world.ues;
    const auto metrics = mmra::run_ra_round(world, params, 5, 0);
    CHECK(metrics.activated == 0);
    CHECK(metrics.detected == 0);
    CHECK(metrics.detected_entries == 0);
    for (std::size_t i = 0; i < world.ues.size(); ++i) {
        CHECK(world.ues[i].attempts == before[i].attempts);
        CHECK_FALSE(world.ues[i].active);
        CHECK_FALSE(world.ues[i].admitted);
    }
}

TEST_CASE("single strong UE is detected nearly always") {
    int detected = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        mmra::World world;
        world.codebook = mmra::RaCodebook::make(2, 8);
        world.m_ant = 100;
        mmra::UeRecord ue;
        ue.id = 0;
        ue.distance = 100.0;
        ue.beta = mmra::path_loss(ue.distance);
        ue.theta = mmra::timing_offset(ue.distance, 20e6);
        ue.time_code_idx = 0;
        ue.freq_code_idx = 4;
        ue.power = 1.0;
        world.ues = {ue};
        world.forced_ids = {0};
        world.forced_time_code = 0;
        world.forced_freq_code = 4;

        mmra::RaParams params;
        params.noise_var = 1.66e-13;
        const auto metrics = mmra::run_ra_round(world, params, 99, t);
        CHECK(metrics.eligible == 1);  // SNR far above the 5 dB floor
        detected += metrics.detected;
    }
    CHECK(detected >= static_cast<int>(0.99 * trials));
}

TEST_CASE("decisions are invariant to a common gain/noise rescale") {
    auto run_scaled = [](double c) {
        mmra::World world = small_world(300, 32);
        for (auto& ue : world.ues) ue.beta *= c;
        mmra::RaParams params;
        params.p_active = 0.05;
        params.noise_var = 1.66e-13 * c;
        return mmra::run_ra_round(world, params, 7, 3);
    };
    const auto a = run_scaled(1.0);
    const auto b = run_scaled(7.3);
    CHECK(a.activated == b.activated);
    CHECK(a.detected_any == b.detected_any);
    CHECK(a.detected_entries == b.detected_entries);
    CHECK(a.collisions_offered == b.collisions_offered);
    REQUIRE(a.timing_sq_err.size() == b.timing_sq_err.size());
    for (std::size_t i = 0; i < a.timing_sq_err.size(); ++i)
        CHECK(a.timing_sq_err[i] == doctest::Approx(b.timing_sq_err[i]).epsilon(1e-6));
}

TEST_CASE("detected UEs repeated in step 2 and get admitted exactly once") {
    mmra::World world = small_world(400, 50);
    mmra::RaParams params;
    params.p_active = 0.05;
    params.noise_var = 1.66e-13;
    int admitted = 0;
    for (int round = 0; round < 5; ++round) {
        const auto metrics = mmra::run_ra_round(world, params, 11, round);
        CHECK(metrics.detected <= metrics.eligible);
        CHECK(metrics.detected_any <= metrics.activated);
        admitted += metrics.detected_any;
    }
    int flagged = 0;
    for (const auto& ue : world.ues)
        if (ue.admitted) ++flagged;
    CHECK(flagged == admitted);
}
