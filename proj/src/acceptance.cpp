#include "mmra/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "mmra/analytics.hpp"
#include "mmra/estimator.hpp"
#include "mmra/harness.hpp"

namespace mmra {

namespace {

double wrap_unit(double x) {
    x -= std::floor(x);
    return std::min(x, 1.0 - x);  // cyclic distance to 0
}

// Synthetic despread snapshots: K complex-exponential sources with i.i.d.
// CN(0,1) per-snapshot gains plus white noise.
std::vector<std::vector<cplx>> source_snapshots(const std::vector<double>& eps, int n_len,
                                                int m_snapshots, double noise_std, Rng& rng) {
    std::vector<std::vector<cplx>> codes;
    for (double e : eps) codes.push_back(effective_code(e, n_len));
    std::vector<std::vector<cplx>> z(m_snapshots, std::vector<cplx>(n_len));
    for (int m = 0; m < m_snapshots; ++m) {
        for (std::size_t k = 0; k < eps.size(); ++k) {
            const cplx g = rng.cnormal();
            for (int n = 0; n < n_len; ++n) z[m][n] += g * codes[k][n];
        }
        if (noise_std > 0.0)
            for (int n = 0; n < n_len; ++n) z[m][n] += noise_std * rng.cnormal();
    }
    return z;
}

std::vector<double> estimate_offsets(const std::vector<std::vector<cplx>>& z, int k) {
    const auto evd = hermitian_evd(sample_covariance(z));
    return esprit_offsets(evd, k);
}

CriterionResult criterion_1() {
    CriterionResult c{1, "analytic collision probability vs quoted series + Monte Carlo", false, ""};
    std::ostringstream d;
    const double quoted[3] = {0.18, 0.47, 0.82};
    const double pa[3] = {0.005, 0.01, 0.02};
    bool ok = true;

    const double ref = collision_probability(2500, 0.01, 2, 8);
    d << "P_coll(2500,1%,2,8)=" << ref;
    ok = ok && std::abs(ref - 0.4633) < 1e-3;
    for (int i = 0; i < 3; ++i) {
        const double v = collision_probability(2500, pa[i], 2, 8);
        ok = ok && std::abs(v - quoted[i]) <= 0.01;
    }

    // Monte Carlo: exact per-round picker count of one tagged code via
    // geometric skips over the 2500-UE population.
    const double p = 0.01 / 16.0;
    const int rounds = 100000;
    Rng rng(20260823, 0, StreamPurpose::Scenario);
    const double log1mp = std::log1p(-p);
    int collisions = 0;
    for (int r = 0; r < rounds; ++r) {
        int pos = 0, pickers = 0;
        while (true) {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            pos += 1 + static_cast<int>(std::floor(std::log(u) / log1mp));
            if (pos > 2500) break;
            ++pickers;
        }
        if (pickers >= 2) ++collisions;
    }
    const double freq = static_cast<double>(collisions) / rounds;
    const double se = std::sqrt(ref * (1.0 - ref) / rounds);
    d << " mc=" << freq << " (3se=" << 3.0 * se << ")";
    ok = ok && std::abs(freq - ref) <= 3.0 * se;
    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_2() {
    CriterionResult c{2, "expected code load at p_active in {0.5%,1%,2%}", false, ""};
    const double pa[3] = {0.005, 0.01, 0.02};
    const double exact[3] = {0.78125, 1.5625, 3.125};
    const double quoted[3] = {0.78, 1.56, 3.12};
    bool ok = true;
    std::ostringstream d;
    for (int i = 0; i < 3; ++i) {
        const double v = expected_code_load(2500, pa[i], 2, 8);
        d << v << " ";
        ok = ok && v == exact[i] && std::abs(v - quoted[i]) <= 0.005 + 1e-12;
    }
    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_3() {
    CriterionResult c{3, "brute-force oracle equivalence for the closed forms", false, ""};
    bool ok = true;
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
        for (double pa : {0.02, 0.1, 0.37, 0.9, 1.0}) {
            for (int qn : {1, 4, 16}) {
                const double a = collision_probability(i, pa, qn, 1);
                const double b = collision_probability_oracle(i, pa, qn, 1);
                worst = std::max(worst, std::abs(a - b));
                const double x = baseline_detection_probability(i, pa, qn, 1);
                const double y = baseline_detection_probability_oracle(i, pa, qn, 1);
                worst = std::max(worst, std::abs(x - y));
            }
        }
    }
    ok = worst <= 1e-12;
    std::ostringstream d;
    d << "max |formula - enumeration| = " << worst;
    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_4() {
    CriterionResult c{4, "noiseless ESPRIT exactness and exhaustive timing demap", false, ""};
    const int n_fft = 1024;
    Rng rng(7, 0, StreamPurpose::Scenario);
    double worst_eps = 0.0;
    bool ok = true;

    for (int n : {2, 8, 12}) {
        const int theta_hi = n_fft / n;
        for (int l = 0; l < n && ok; ++l) {
            for (int theta = 0; theta <= theta_hi; ++theta) {
                const double eps = effective_offset(l, theta, n, n_fft);
                // Noiseless rank-1 snapshots.
                std::vector<std::vector<cplx>> z(std::max(3, 1), std::vector<cplx>(n));
                const auto code = effective_code(eps - std::floor(eps), n);
                for (auto& row : z) {
                    const cplx g = rng.cnormal();
                    for (int i = 0; i < n; ++i) row[i] = g * code[i];
                }
                const double eps_hat = estimate_offsets(z, 1)[0];
                const double err = wrap_unit(eps_hat - eps);
                worst_eps = std::max(worst_eps, err);
                if (err > 1e-9) {
                    ok = false;
                    break;
                }
                const auto dm = demap_offset(eps_hat, n, n_fft);
                const double theta_round = std::round(dm.timing);
                const bool integer_theta = std::abs(dm.timing - theta_round) < 1e-5;
                // theta = n_fft/n aliases to (l-1, 0); accept any exact
                // representation of the same effective offset.
                const bool same_offset =
                    wrap_unit(effective_offset(dm.code_index, static_cast<int>(theta_round), n,
                                               n_fft) -
                              eps) < 1e-9;
                const bool exact_pair =
                    (dm.code_index == l && static_cast<int>(theta_round) == theta);
                if (!integer_theta || !same_offset || (theta < theta_hi && !exact_pair)) {
                    ok = false;
                    break;
                }
            }
        }
    }
    std::ostringstream d;
    d << "worst offset error " << worst_eps;
    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_5() {
    CriterionResult c{5, "ESPRIT error variance vs analytic curve (factor 2)", false, ""};
    const int n = 8, m = 100, trials = 2000;
    const double snr = 10.0, eps = 0.3;
    Rng rng(11, 0, StreamPurpose::Scenario);
    std::vector<double> est;
    est.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        const auto z = source_snapshots({eps}, n, m, std::sqrt(1.0 / snr), rng);
        est.push_back(estimate_offsets(z, 1)[0]);
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= trials;
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    var /= trials - 1;

    const double analytic = esprit_variance({eps}, 0, snr, n, m);
    std::ostringstream d;
    d << "empirical " << var << " analytic " << analytic << " limit "
      << esprit_variance_limit(snr, n, m);
    c.pass = var > analytic / 2.0 && var < analytic * 2.0;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_6() {
    CriterionResult c{6, "MDL order selection consistency", false, ""};
    const int n = 12, m = 100, trials = 500;
    const double noise_std = std::sqrt(0.1);  // per-source SNR 10 dB
    Rng rng(13, 0, StreamPurpose::Scenario);
    bool ok = true;
    std::ostringstream d;
    const std::vector<double> pool = {0.08, 0.42, 0.77};
    for (int k = 1; k <= 3; ++k) {
        const std::vector<double> eps(pool.begin(), pool.begin() + k);
        int hits = 0;
        for (int t = 0; t < trials; ++t) {
            const auto z = source_snapshots(eps, n, m, noise_std, rng);
            const auto evd = hermitian_evd(sample_covariance(z));
            if (mdl_order(evd.eigenvalues, m) == k) ++hits;
        }
        const double rate = static_cast<double>(hits) / trials;
        d << "K=" << k << ":" << rate << " ";
        ok = ok && rate >= 0.9;
    }
    int zeros = 0;
    for (int t = 0; t < trials; ++t) {
        const auto z = source_snapshots({}, n, m, 1.0, rng);
        const auto evd = hermitian_evd(sample_covariance(z));
        if (mdl_order(evd.eigenvalues, m) == 0) ++zeros;
    }
    const double zrate = static_cast<double>(zeros) / trials;
    d << "noise-only:" << zrate;
    ok = ok && zrate >= 0.99;
    c.pass = ok;
    c.detail = d.str();
    return c;
}

SimConfig reference_config() {
    SimConfig cfg;
    cfg.seed = 2026;
    return cfg;
}

struct Fig5Runs {
    RunMetrics n8;        // M=100, N=8, no intercell
    RunMetrics n8_ic;     // + intercell
    RunMetrics n12;       // M=100, N=12
    RunMetrics n12_ic;    // + intercell
    RunMetrics n8_m20;    // M=20, N=8
};

Fig5Runs run_fig5_points() {
    Fig5Runs out;
    SimConfig cfg = reference_config();
    cfg.trials = 500;
    out.n8 = run_point(cfg);
    cfg.intercell = true;
    out.n8_ic = run_point(cfg);
    cfg.n_len = 12;
    out.n12_ic = run_point(cfg);
    cfg.intercell = false;
    out.n12 = run_point(cfg);
    cfg.n_len = 8;
    cfg.m_ant = 20;
    cfg.trials = 300;
    out.n8_m20 = run_point(cfg);
    return out;
}

CriterionResult criterion_7(const Fig5Runs& runs) {
    CriterionResult c{7, "per-UE detection probability at M=100 (four scenarios)", false, ""};
    const double got[4] = {runs.n8.detection_prob, runs.n8_ic.detection_prob,
                           runs.n12.detection_prob, runs.n12_ic.detection_prob};
    const double want[4] = {0.75, 0.66, 0.83, 0.76};
    bool ok = true;
    std::ostringstream d;
    for (int i = 0; i < 4; ++i) {
        d << got[i] << "/" << want[i] << " ";
        ok = ok && std::abs(got[i] - want[i]) <= 0.05;
    }
    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_8(const Fig5Runs& runs) {
    CriterionResult c{8, "timing RMSE small at M=100 and improving with M", false, ""};
    std::ostringstream d;
    d << "rmse(M=100)=" << runs.n8.timing_rmse << " rmse(M=20)=" << runs.n8_m20.timing_rmse;
    c.pass = runs.n8.timing_rmse <= 3.0 && runs.n8.timing_rmse < runs.n8_m20.timing_rmse;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_9() {
    CriterionResult c{9, "two-UE collision asymptotics (statistic 2, strongest-user rule)", false,
                      ""};
    const int m_ant = 4096;
    const RaCodebook cb = RaCodebook::make(2, 8);
    const int n_fft = 1024;
    const double noise_var = 1e-3;
    std::ostringstream d;
    bool ok = true;

    Rng ch(99, 0, StreamPurpose::Channel);
    Rng noise(99, 0, StreamPurpose::Noise);
    Rng dl(99, 0, StreamPurpose::DlNoise);

    auto run_case = [&](double beta2, double* stat_out, UeDecision* dec1, UeDecision* dec2,
                        BsDecision* bs_out) {
        const double beta1 = 1.0, rho1 = 1.0, rho2 = 1.0;
        const auto h1 = draw_channel({m_ant, beta1, FadingModel::Uncorrelated, 0.0, 0.0}, ch);
        const auto h2 = draw_channel({m_ant, beta2, FadingModel::Uncorrelated, 0.0, 0.0}, ch);

        std::vector<UlTransmitter> tx{{rho1, 0.0, 0, &h1}, {rho2, 0.0, 0, &h2}};
        const auto y1 = synthesize_ul(tx, cb, m_ant, noise_var, nullptr, noise, nullptr);
        const auto reports = run_step1(y1, cb, n_fft);
        if (reports[0].k_hat != 1) {
            ok = false;
            return;
        }

        std::vector<PrecodedEntry> entries;
        PrecodedEntry e;
        e.channel = reports[0].channels.column(0);
        double nrm = 0.0;
        for (const auto& v : e.channel) nrm += std::norm(v);
        e.channel_norm = std::sqrt(nrm);
        e.l_hat = reports[0].l_hats[0];
        e.time_code_idx = 0;
        entries.push_back(e);

        const int tau = cb.tau();
        double ahat[2];
        UeDecision dec[2];
        const std::vector<cplx>* hs[2] = {&h1, &h2};
        const double rho[2] = {rho1, rho2}, beta[2] = {beta1, beta2};
        for (int u = 0; u < 2; ++u) {
            const auto r_obs = synthesize_dl(entries, cb, 1.0, *hs[u], noise_var, 0.0, dl);
            const cplx r = ue_correlate_dl(r_obs, cb.freq_codes[0], cb.time_codes[0]);
            ahat[u] = alpha_hat(r, m_ant, 1.0, tau, rho[u], beta[u], cb.q_len, noise_var);
            dec[u] = ue_decide(ahat[u], rho[u], beta[u], cb.q_len, 0.0);
        }
        *dec1 = dec[0];
        *dec2 = dec[1];

        // Both retransmit regardless of the decisions; the statistic checks
        // the unresolved-collision asymptote.
        std::vector<UlTransmitter> tx3 = tx;
        for (int u = 0; u < 2; ++u)
            tx3[u].power = ul_retx_power(ahat[u], rho[u], tau, cb.q_len, beta[u], 1.0);
        const auto y3 = synthesize_step3(tx3, cb, m_ant, noise_var, nullptr, noise, nullptr);
        const cplx r3 = step3_statistic(y3, reports[0], 0, cb);
        *stat_out = r3.real() / std::sqrt(static_cast<double>(m_ant));
        *bs_out = detect_rule(r3, m_ant, 0.5, 1.5);
    };

    double stat = 0.0;
    UeDecision d1, d2;
    BsDecision bs;
    run_case(1.0, &stat, &d1, &d2, &bs);
    d << "equal colliders: stat " << stat;
    ok = ok && stat >= 1.8 && stat <= 2.2 && bs == BsDecision::Undetected;

    run_case(0.25, &stat, &d1, &d2, &bs);
    d << "; 4:1 decisions " << (d1 == UeDecision::Repeat ? "Repeat" : "Wait") << "/"
      << (d2 == UeDecision::Repeat ? "Repeat" : "Wait");
    ok = ok && d1 == UeDecision::Repeat && d2 == UeDecision::Wait;

    c.pass = ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_10() {
    CriterionResult c{10, "forced two-UE collision resolves with timing separation", false, ""};
    SimConfig cfg = reference_config();
    cfg.trials = 500;
    double avg[3] = {0, 0, 0};
    const int deltas[3] = {0, 16, 32};
    for (int i = 0; i < 3; ++i) {
        ForcedPair fp{true, deltas[i]};
        avg[i] = run_point(cfg, fp).avg_forced_detected;
    }
    std::ostringstream d;
    d << "avg detected at dtheta {0,16,32} = " << avg[0] << ", " << avg[1] << ", " << avg[2];
    c.pass = (avg[2] - avg[0] >= 0.3) && avg[1] >= 0.9 && avg[2] >= 0.9;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_11() {
    CriterionResult c{11, "spatial correlation: robust at M=100, degraded at M=50", false, ""};
    SimConfig cfg = reference_config();
    cfg.trials = 400;
    cfg.fading = FadingModel::Exponential;
    double p[2][2];  // [M index][r index]
    const int ms[2] = {100, 50};
    const double rs[2] = {0.0, 0.8};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            cfg.m_ant = ms[i];
            cfg.corr_r = rs[j];
            p[i][j] = run_point(cfg).detection_prob;
        }
    std::ostringstream d;
    d << "M=100: " << p[0][0] << "->" << p[0][1] << "; M=50: " << p[1][0] << "->" << p[1][1];
    c.pass = std::abs(p[0][0] - p[0][1]) <= 0.05 && (p[1][0] - p[1][1]) >= 0.05;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_12() {
    CriterionResult c{12, "average attempts small at 1% and increasing in the activation rate",
                      false, ""};
    SimConfig cfg = reference_config();
    cfg.trials = 60;
    cfg.rounds = 30;
    cfg.power_mode = PowerMode::Ramping;
    const double pas[3] = {0.005, 0.01, 0.02};
    double attempts[3];
    for (int i = 0; i < 3; ++i) {
        cfg.p_active = pas[i];
        attempts[i] = run_point(cfg).avg_attempts;
    }
    std::ostringstream d;
    d << "attempts at {0.5%,1%,2%} = " << attempts[0] << ", " << attempts[1] << ", " << attempts[2];
    c.pass = attempts[1] <= 3.0 && attempts[0] <= attempts[1] + 0.1 &&
             attempts[1] <= attempts[2] + 0.1;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_13() {
    CriterionResult c{13, "receiver complexity counts and linear antenna scaling", false, ""};
    const auto base = complexity_counts(100, 8, 25, 2);
    const auto twice = complexity_counts(200, 8, 25, 2);
    const auto quad = complexity_counts(400, 8, 25, 2);
    std::ostringstream d;
    d << "step3(100,8,25,2)=" << base.step3;
    const bool step3_ok = base.step3 == 125000 && twice.step3 == 2 * base.step3;
    // Step 1 has an antenna-independent subspace term; its antenna-dependent
    // part must double exactly.
    const bool step1_ok = (quad.step1 - twice.step1) == 2 * (twice.step1 - base.step1) &&
                          (twice.step1 - base.step1) > 0;
    c.pass = step3_ok && step1_ok;
    c.detail = d.str();
    return c;
}

CriterionResult criterion_14() {
    CriterionResult c{14, "byte-identical output across reruns and worker counts", false, ""};
    SimConfig base;
    base.population = 400;
    base.m_ant = 40;
    base.seed = 42;
    auto render = [&](int workers) {
        SimConfig cfg = base;
        cfg.workers = workers;
        const auto rows = run_preset("table2", cfg, false);
        std::ostringstream os;
        emit_csv(rows, os);
        return os.str();
    };
    const std::string a = render(1);
    const std::string b = render(1);
    const std::string d3 = render(3);
    c.pass = (a == b) && (a == d3) && !a.empty();
    c.detail = c.pass ? "identical across rerun and 3-worker pool" : "outputs differ";
    return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance() {
    std::vector<CriterionResult> out;
    out.push_back(criterion_1());
    out.push_back(criterion_2());
    out.push_back(criterion_3());
    out.push_back(criterion_4());
    out.push_back(criterion_5());
    out.push_back(criterion_6());
    const Fig5Runs runs = run_fig5_points();
    out.push_back(criterion_7(runs));
    out.push_back(criterion_8(runs));
    out.push_back(criterion_9());
    out.push_back(criterion_10());
    out.push_back(criterion_11());
    out.push_back(criterion_12());
    out.push_back(criterion_13());
    out.push_back(criterion_14());
    std::sort(out.begin(), out.end(),
              [](const CriterionResult& x, const CriterionResult& y) { return x.id < y.id; });
    return out;
}

}  // namespace mmra
