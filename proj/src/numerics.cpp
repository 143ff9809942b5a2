#include "mmra/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mmra {

namespace {

double off_diagonal_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace

HermitianEvd hermitian_evd(const ComplexMatrix& input) {
    const std::size_t n = input.rows();
    if (n != input.cols()) throw std::invalid_argument("hermitian_evd: matrix must be square");

    const double norm_a = input.frobenius_norm();
    // Hermitian check, relative asymmetry tolerance 1e-12.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double asym = std::abs(input(i, j) - std::conj(input(j, i)));
            if (asym > 1e-12 * std::max(norm_a, 1e-300)) {
                throw std::invalid_argument("hermitian_evd: matrix is not Hermitian");
            }
        }
    }

    ComplexMatrix a = input;
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double threshold = 1e-13 * norm_a;

    if (norm_a > 0.0) {
        bool converged = false;
        for (int sweep = 0; sweep < 100; ++sweep) {
            if (off_diagonal_norm(a) <= threshold) {
                converged = true;
                break;
            }
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const cplx apq = a(p, q);
                    const double mag = std::abs(apq);
                    if (mag <= threshold / static_cast<double>(n)) continue;

                    const double app = a(p, p).real();
                    const double aqq = a(q, q).real();
                    const cplx phase = apq / mag;

                    // Rotation zeroing the (p,q) entry: diagonal phase factor
                    // followed by a real Jacobi rotation.
                    const double tau = (aqq - app) / (2.0 * mag);
                    double t;
                    if (tau >= 0.0)
                        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                    else
                        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    // U = [[c, s], [-s*conj(phase), c*conj(phase)]] acting on
                    // columns (p, q); A := U^H A U, V := V U.
                    const cplx u_qp = -s * std::conj(phase);
                    const cplx u_qq = c * std::conj(phase);
                    for (std::size_t i = 0; i < n; ++i) {
                        const cplx aip = a(i, p), aiq = a(i, q);
                        a(i, p) = c * aip + u_qp * aiq;
                        a(i, q) = s * aip + u_qq * aiq;
                        const cplx vip = v(i, p), viq = v(i, q);
                        v(i, p) = c * vip + u_qp * viq;
                        v(i, q) = s * vip + u_qq * viq;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        const cplx apj = a(p, j), aqj = a(q, j);
                        a(p, j) = c * apj + std::conj(u_qp) * aqj;
                        a(q, j) = s * apj + std::conj(u_qq) * aqj;
                    }
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    a(p, p) = cplx(a(p, p).real(), 0.0);
                    a(q, q) = cplx(a(q, q).real(), 0.0);
                }
            }
        }
        if (!converged && off_diagonal_norm(a) > threshold) {
            throw std::runtime_error("hermitian_evd: Jacobi iteration did not converge in 100 sweeps");
        }
    }

    // Sort eigenpairs non-increasing; stable so Jacobi output order breaks ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });

    HermitianEvd out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]).real();
        std::vector<cplx> col = v.column(order[k]);
        // Normalize and fix the phase: first entry above tolerance made real
        // non-negative.
        double nrm = 0.0;
        for (const auto& e : col) nrm += std::norm(e);
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (auto& e : col) e /= nrm;
        for (const auto& e : col) {
            if (std::abs(e) > 1e-12) {
                const cplx ph = std::conj(e) / std::abs(e);
                for (auto& x : col) x *= ph;
                break;
            }
        }
        out.eigenvectors.set_column(k, col);
    }
    return out;
}

namespace {

// Unitary Givens pair: G^H [a; b] = [r; 0].
struct Givens {
    cplx ca, cb;  // conj(a)/r, conj(b)/r
    double r;
};

Givens make_givens(cplx a, cplx b) {
    const double r = std::sqrt(std::norm(a) + std::norm(b));
    Givens g{std::conj(a) / r, std::conj(b) / r, r};
    return g;
}

void hessenberg_reduce(ComplexMatrix& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        // Householder vector for column k below the subdiagonal.
        std::vector<cplx> x(n - k - 1);
        double xnorm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = h(k + 1 + i, k);
            xnorm += std::norm(x[i]);
        }
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        cplx alpha = x[0];
        const cplx sign = (std::abs(alpha) > 0.0) ? alpha / std::abs(alpha) : cplx(1.0, 0.0);
        x[0] += sign * xnorm;
        double vnorm = 0.0;
        for (const auto& e : x) vnorm += std::norm(e);
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) continue;
        for (auto& e : x) e /= vnorm;

        // H := (I - 2 v v^H) H (I - 2 v v^H) on the trailing block.
        for (std::size_t j = 0; j < n; ++j) {
            cplx dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += std::conj(x[i]) * h(k + 1 + i, j);
            dot *= 2.0;
            for (std::size_t i = 0; i < x.size(); ++i) h(k + 1 + i, j) -= dot * x[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            cplx dot = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) dot += h(i, k + 1 + j) * x[j];
            dot *= 2.0;
            for (std::size_t j = 0; j < x.size(); ++j) h(i, k + 1 + j) -= dot * std::conj(x[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

void eig2x2(cplx a, cplx b, cplx c, cplx d, cplx& l1, cplx& l2) {
    const cplx tr = a + d;
    const cplx disc = std::sqrt((a - d) * (a - d) * 0.25 + b * c);
    l1 = tr * 0.5 + disc;
    l2 = tr * 0.5 - disc;
}

}  // namespace

std::vector<cplx> general_eigenvalues(const ComplexMatrix& input) {
    const std::size_t n = input.rows();
    if (n != input.cols()) throw std::invalid_argument("general_eigenvalues: matrix must be square");

    ComplexMatrix h = input;
    hessenberg_reduce(h);
    const double hnorm = std::max(h.frobenius_norm(), 1e-300);

    std::vector<cplx> eig(n);
    std::size_t m = n;
    int iter = 0;

    while (m > 0) {
        if (m == 1) {
            eig[0] = h(0, 0);
            break;
        }
        // Deflation scan from the bottom of the active block.
        std::size_t l = m - 1;
        while (l > 0) {
            double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
            if (s == 0.0) s = hnorm;
            if (std::abs(h(l, l - 1)) <= 1e-15 * s) {
                h(l, l - 1) = 0.0;
                break;
            }
            --l;
        }
        if (l == m - 1) {
            eig[m - 1] = h(m - 1, m - 1);
            --m;
            continue;
        }
        if (l == m - 2) {
            eig2x2(h(l, l), h(l, l + 1), h(l + 1, l), h(l + 1, l + 1), eig[l], eig[l + 1]);
            if (l > 0) h(l, l - 1) = 0.0;
            m = l;
            continue;
        }
        if (++iter > 500) throw std::runtime_error("general_eigenvalues: QR iteration cap exceeded");

        // Wilkinson shift from the trailing 2x2 of the active block.
        cplx l1, l2;
        eig2x2(h(m - 2, m - 2), h(m - 2, m - 1), h(m - 1, m - 2), h(m - 1, m - 1), l1, l2);
        const cplx target = h(m - 1, m - 1);
        const cplx shift = (std::abs(l1 - target) < std::abs(l2 - target)) ? l1 : l2;

        for (std::size_t i = l; i < m; ++i) h(i, i) -= shift;
        std::vector<Givens> rots;
        rots.reserve(m - l - 1);
        for (std::size_t k = l; k + 1 < m; ++k) {
            Givens g = make_givens(h(k, k), h(k + 1, k));
            rots.push_back(g);
            for (std::size_t j = k; j < m; ++j) {
                const cplx top = h(k, j), bot = h(k + 1, j);
                h(k, j) = g.ca * top + g.cb * bot;
                h(k + 1, j) = (-std::conj(g.cb) * top + std::conj(g.ca) * bot);
            }
        }
        for (std::size_t k = l; k + 1 < m; ++k) {
            const Givens& g = rots[k - l];
            const std::size_t top_row = (k + 2 < m) ? k + 2 : m;
            for (std::size_t i = l; i < top_row; ++i) {
                const cplx left = h(i, k), right = h(i, k + 1);
                h(i, k) = left * std::conj(g.ca) + right * std::conj(g.cb);
                h(i, k + 1) = -left * g.cb + right * g.ca;
            }
        }
        for (std::size_t i = l; i < m; ++i) h(i, i) += shift;
    }

    std::sort(eig.begin(), eig.end(), [](const cplx& x, const cplx& y) {
        auto key = [](const cplx& z) {
            double a = std::arg(z);
            if (a < 0.0) a += 2.0 * std::numbers::pi;
            return a;
        };
        return key(x) < key(y);
    });
    return eig;
}

ComplexMatrix ls_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw std::invalid_argument("ls_solve: system must be square or overdetermined");
    if (b.rows() != m) throw std::invalid_argument("ls_solve: right-hand-side row count mismatch");

    ComplexMatrix r = a;
    ComplexMatrix qtb = b;
    const double anorm = a.frobenius_norm();

    // Householder QR, reflectors applied to B on the fly.
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<cplx> v(m - k);
        double xnorm = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = r(k + i, k);
            xnorm += std::norm(v[i]);
        }
        xnorm = std::sqrt(xnorm);
        if (xnorm > 0.0) {
            const cplx sign = (std::abs(v[0]) > 0.0) ? v[0] / std::abs(v[0]) : cplx(1.0, 0.0);
            v[0] += sign * xnorm;
            double vnorm = 0.0;
            for (const auto& e : v) vnorm += std::norm(e);
            vnorm = std::sqrt(vnorm);
            for (auto& e : v) e /= vnorm;

            for (std::size_t j = k; j < n; ++j) {
                cplx dot = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) dot += std::conj(v[i]) * r(k + i, j);
                dot *= 2.0;
                for (std::size_t i = 0; i < v.size(); ++i) r(k + i, j) -= dot * v[i];
            }
            for (std::size_t j = 0; j < qtb.cols(); ++j) {
                cplx dot = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) dot += std::conj(v[i]) * qtb(k + i, j);
                dot *= 2.0;
                for (std::size_t i = 0; i < v.size(); ++i) qtb(k + i, j) -= dot * v[i];
            }
        }
        if (std::abs(r(k, k)) <= 1e-12 * std::max(anorm, 1e-300)) {
            throw std::runtime_error("ls_solve: rank-deficient system");
        }
    }

    ComplexMatrix x(n, b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = n; i-- > 0;) {
            cplx s = qtb(i, j);
            for (std::size_t k = i + 1; k < n; ++k) s -= r(i, k) * x(k, j);
            x(i, j) = s / r(i, i);
        }
    }
    return x;
}

}  // namespace mmra
