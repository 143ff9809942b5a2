#include "mmra/airlink.hpp"

#include <cmath>
#include <stdexcept>

namespace mmra {

std::vector<ComplexMatrix> intercell_term(const std::vector<Interferer>& interferers, int m_ant,
                                          int n_len, int q_len, Rng& rng) {
    std::vector<ComplexMatrix> out(m_ant, ComplexMatrix(n_len, q_len));
    for (const auto& iv : interferers) {
        const double amp = std::sqrt(iv.power * iv.beta);
        // Uncorrelated Rayleigh channel to the serving BS, i.i.d. CN(0,1)
        // data per resource element.
        for (int m = 0; m < m_ant; ++m) {
            const cplx g = amp * rng.cnormal();
            auto& mat = out[m];
            for (int n = 0; n < n_len; ++n)
                for (int q = 0; q < q_len; ++q) mat(n, q) += g * rng.cnormal();
        }
    }
    return out;
}

UlObservation synthesize_ul(const std::vector<UlTransmitter>& ues, const RaCodebook& cb, int m_ant,
                            double noise_var, const std::vector<Interferer>* intercell, Rng& noise_rng,
                            Rng* intercell_rng) {
    const int n_len = cb.n_len, q_len = cb.q_len;
    UlObservation y;
    y.n_len = n_len;
    y.q_len = q_len;
    y.noise_var = noise_var;
    y.per_antenna.assign(m_ant, ComplexMatrix(n_len, q_len));

    for (const auto& ue : ues) {
        if (ue.power <= 0.0) throw std::invalid_argument("synthesize_ul: active UE has no power");
        if (!ue.channel || static_cast<int>(ue.channel->size()) != m_ant)
            throw std::invalid_argument("synthesize_ul: channel length mismatch");
        if (ue.time_code_idx < 0 || ue.time_code_idx >= q_len)
            throw std::invalid_argument("synthesize_ul: time code index out of range");
        const auto c = effective_code(ue.eps, n_len);
        const auto& t = cb.time_codes[ue.time_code_idx];
        const double amp = std::sqrt(ue.power);
        for (int m = 0; m < m_ant; ++m) {
            const cplx g = amp * (*ue.channel)[m];
            auto& mat = y.per_antenna[m];
            for (int n = 0; n < n_len; ++n) {
                const cplx gc = g * c[n];
                for (int q = 0; q < q_len; ++q) mat(n, q) += gc * t[q];
            }
        }
    }

    if (noise_var > 0.0) {
        const double amp = std::sqrt(noise_var);
        for (int m = 0; m < m_ant; ++m) {
            auto& mat = y.per_antenna[m];
            for (int n = 0; n < n_len; ++n)
                for (int q = 0; q < q_len; ++q) mat(n, q) += amp * noise_rng.cnormal();
        }
    }

    if (intercell && !intercell->empty()) {
        if (!intercell_rng) throw std::invalid_argument("synthesize_ul: missing interference stream");
        auto im = intercell_term(*intercell, m_ant, n_len, q_len, *intercell_rng);
        for (int m = 0; m < m_ant; ++m) y.per_antenna[m] += im[m];
    }
    return y;
}

std::vector<std::vector<cplx>> despread_time(const UlObservation& y, const std::vector<double>& t) {
    if (static_cast<int>(t.size()) != y.q_len)
        throw std::invalid_argument("despread_time: code length mismatch");
    double norm = 0.0;
    for (double v : t) norm += v * v;
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw std::invalid_argument("despread_time: zero-norm code");

    std::vector<std::vector<cplx>> z(y.per_antenna.size(), std::vector<cplx>(y.n_len));
    for (std::size_t m = 0; m < y.per_antenna.size(); ++m) {
        const auto& mat = y.per_antenna[m];
        for (int n = 0; n < y.n_len; ++n) {
            cplx s = 0.0;
            for (int q = 0; q < y.q_len; ++q) s += mat(n, q) * t[q];
            z[m][n] = s / norm;
        }
    }
    return z;
}

DlObservation synthesize_dl(const std::vector<PrecodedEntry>& entries, const RaCodebook& cb,
                            double rho_dl, const std::vector<cplx>& ue_channel, double noise_var,
                            double intercell_power, Rng& rng) {
    const int n_len = cb.n_len, q_len = cb.q_len;
    DlObservation r;
    r.matrix = ComplexMatrix(n_len, q_len);
    const double amp = std::sqrt(rho_dl);

    for (const auto& e : entries) {
        if (e.channel_norm <= 0.0) throw std::invalid_argument("synthesize_dl: zero-norm channel estimate");
        if (e.channel.size() != ue_channel.size())
            throw std::invalid_argument("synthesize_dl: channel length mismatch");
        cplx gain = 0.0;
        for (std::size_t m = 0; m < ue_channel.size(); ++m)
            gain += std::conj(ue_channel[m]) * e.channel[m];
        gain *= amp / e.channel_norm;
        const auto& f = cb.freq_codes[e.l_hat];
        const auto& t = cb.time_codes[e.time_code_idx];
        for (int n = 0; n < n_len; ++n)
            for (int q = 0; q < q_len; ++q) r.matrix(n, q) += gain * f[n] * t[q];
    }

    const double disturbance = noise_var + intercell_power;
    if (disturbance > 0.0) {
        const double damp = std::sqrt(disturbance);
        for (int n = 0; n < n_len; ++n)
            for (int q = 0; q < q_len; ++q) r.matrix(n, q) += damp * rng.cnormal();
    }
    return r;
}

cplx ue_correlate_dl(const DlObservation& r, const std::vector<cplx>& f, const std::vector<double>& t) {
    const std::size_t n_len = r.matrix.rows(), q_len = r.matrix.cols();
    if (f.size() != n_len || t.size() != q_len)
        throw std::invalid_argument("ue_correlate_dl: code length mismatch");
    double fn = 0.0, tn = 0.0;
    for (const auto& v : f) fn += std::norm(v);
    for (double v : t) tn += v * v;
    cplx s = 0.0;
    for (std::size_t n = 0; n < n_len; ++n) {
        cplx row = 0.0;
        for (std::size_t q = 0; q < q_len; ++q) row += r.matrix(n, q) * t[q];
        s += std::conj(f[n]) * row;
    }
    return s / std::sqrt(fn * tn);
}

UlObservation synthesize_step3(const std::vector<UlTransmitter>& repliers, const RaCodebook& cb,
                               int m_ant, double noise_var, const std::vector<Interferer>* intercell,
                               Rng& noise_rng, Rng* intercell_rng) {
    return synthesize_ul(repliers, cb, m_ant, noise_var, intercell, noise_rng, intercell_rng);
}

}  // namespace mmra
