#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "cfidd/errors.hpp"

namespace cfidd {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// Dense row-major complex matrix. Just enough linear algebra for the
// detectors; no expression templates, no views.
class CMat {
  public:
    CMat() = default;
    CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    static CMat identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }

    CVec col(std::size_t j) const;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> a_;
};

CMat adjoint(const CMat& a);
CMat matmul(const CMat& a, const CMat& b);
CVec matvec(const CMat& a, const CVec& x);

// sum_i conj(a_i) b_i
cplx cdot(const CVec& a, const CVec& b);
double norm2(const CVec& v);  // Euclidean norm
double frobenius_norm(const CMat& a);

// c*I + G * diag(weights) * G^H, exactly Hermitian by construction.
// weights are per-column, nonnegative; c >= 0.
CMat gram_plus_scaled_identity(const CMat& g, const std::vector<double>& weights, double c);

// Solve A x = b for Hermitian positive definite A via Cholesky.
// Throws solver_error naming the failing pivot when A is not positive
// definite (pivot <= 1e-12 * max diagonal), contract_error on shape mismatch.
CVec hermitian_solve(const CMat& a, const CVec& b);

// Cached Cholesky factorization for repeated right-hand sides.
class HermitianFactor {
  public:
    explicit HermitianFactor(const CMat& a);
    CVec solve(const CVec& b) const;
    std::size_t dim() const { return l_.rows(); }

  private:
    CMat l_;  // lower triangular
};

// General complex LU with partial pivoting. Internal plumbing used by the
// frame engine for the K x K dual-domain systems, which are not Hermitian.
class LuFactor {
  public:
    explicit LuFactor(const CMat& a);
    CVec solve(const CVec& b) const;
    CMat inverse() const;
    std::size_t dim() const { return lu_.rows(); }

  private:
    CMat lu_;
    std::vector<int> piv_;
};

}  // namespace cfidd
