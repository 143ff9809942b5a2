#pragma once

#include <vector>

#include "mmra/complex_matrix.hpp"

namespace mmra {

/// Eigendecomposition of a Hermitian matrix. Eigenvalues are sorted
/// non-increasing and column j of `eigenvectors` pairs with eigenvalue j.
struct HermitianEvd {
    std::vector<double> eigenvalues;
    ComplexMatrix eigenvectors;
};

/// Cyclic Jacobi EVD for small Hermitian matrices.
/// Eigenvector phases are fixed so the first non-negligible entry is real
/// and non-negative. Throws std::invalid_argument on non-square or
/// non-Hermitian input and std::runtime_error if 100 sweeps do not converge.
HermitianEvd hermitian_evd(const ComplexMatrix& a);

/// Eigenvalues of a small general complex matrix via shifted QR on the
/// Hessenberg form. Returned sorted by complex argument (in [0, 2pi))
/// ascending.
std::vector<cplx> general_eigenvalues(const ComplexMatrix& a);

/// Least-squares solve: returns argmin_X ||A X - B||_F via Householder QR.
/// Requires full column rank; throws std::runtime_error otherwise.
ComplexMatrix ls_solve(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace mmra
