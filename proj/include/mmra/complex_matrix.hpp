#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mmra {

using cplx = std::complex<double>;

/// Dense complex matrix, row-major storage.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    ComplexMatrix adjoint() const;
    ComplexMatrix operator*(const ComplexMatrix& rhs) const;
    ComplexMatrix operator+(const ComplexMatrix& rhs) const;
    ComplexMatrix operator-(const ComplexMatrix& rhs) const;
    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(cplx scale);

    double frobenius_norm() const;
    cplx trace() const;

    const std::vector<cplx>& data() const { return data_; }
    std::vector<cplx>& data() { return data_; }

    std::vector<cplx> column(std::size_t j) const;
    void set_column(std::size_t j, const std::vector<cplx>& v);

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> data_;
};

}  // namespace mmra
