#include "cfidd/numerics.hpp"

#include <cmath>
#include <string>

namespace cfidd {

CMat CMat::identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CVec CMat::col(std::size_t j) const {
    CVec v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

CMat adjoint(const CMat& a) {
    CMat r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
    return r;
}

CMat matmul(const CMat& a, const CMat& b) {
    if (a.cols() != b.rows()) throw contract_error("matmul: inner dimensions differ");
    CMat r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

CVec matvec(const CMat& a, const CVec& x) {
    if (a.cols() != x.size()) throw contract_error("matvec: dimension mismatch");
    CVec y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx s{};
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

cplx cdot(const CVec& a, const CVec& b) {
    if (a.size() != b.size()) throw contract_error("cdot: length mismatch");
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double norm2(const CVec& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

double frobenius_norm(const CMat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

CMat gram_plus_scaled_identity(const CMat& g, const std::vector<double>& weights, double c) {
    if (weights.size() != g.cols()) throw contract_error("gram_plus_scaled_identity: one weight per column required");
    if (c < 0.0) throw contract_error("gram_plus_scaled_identity: c must be nonnegative");
    for (double w : weights)
        if (!(w >= 0.0)) throw contract_error("gram_plus_scaled_identity: weights must be nonnegative");

    const std::size_t n = g.rows(), k = g.cols();
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cplx s{};
            for (std::size_t t = 0; t < k; ++t) s += weights[t] * g(i, t) * std::conj(g(j, t));
            if (i == j) {
                m(i, i) = cplx(s.real() + c, 0.0);  // diagonal forced real
            } else {
                m(i, j) = s;
                m(j, i) = std::conj(s);
            }
        }
    }
    return m;
}

namespace {

// In-place Cholesky of the lower triangle; returns L with A = L L^H.
CMat cholesky_lower(const CMat& a) {
    if (a.rows() != a.cols()) throw contract_error("hermitian_solve: matrix must be square");
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i).real()));

    CMat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cplx s = a(i, j);
            for (std::size_t t = 0; t < j; ++t) s -= l(i, t) * std::conj(l(j, t));
            if (i == j) {
                const double d = s.real();
                if (!(d > 1e-12 * max_diag) || !std::isfinite(d))
                    throw solver_error("hermitian_solve: matrix not positive definite at pivot " + std::to_string(i),
                                       static_cast<int>(i));
                l(i, i) = std::sqrt(d);
            } else {
                l(i, j) = s / l(j, j).real();
            }
        }
    }
    return l;
}

}  // namespace

HermitianFactor::HermitianFactor(const CMat& a) : l_(cholesky_lower(a)) {}

CVec HermitianFactor::solve(const CVec& b) const {
    const std::size_t n = l_.rows();
    if (b.size() != n) throw contract_error("hermitian_solve: rhs length mismatch");
    CVec y(b);
    for (std::size_t i = 0; i < n; ++i) {  // L y = b
        cplx s = y[i];
        for (std::size_t t = 0; t < i; ++t) s -= l_(i, t) * y[t];
        y[i] = s / l_(i, i).real();
    }
    for (std::size_t ii = n; ii-- > 0;) {  // L^H x = y
        cplx s = y[ii];
        for (std::size_t t = ii + 1; t < n; ++t) s -= std::conj(l_(t, ii)) * y[t];
        y[ii] = s / l_(ii, ii).real();
    }
    return y;
}

CVec hermitian_solve(const CMat& a, const CVec& b) { return HermitianFactor(a).solve(b); }

LuFactor::LuFactor(const CMat& a) : lu_(a), piv_(a.rows()) {
    if (a.rows() != a.cols()) throw contract_error("lu: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) piv_[j] = static_cast<int>(j);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t p = j;
        double best = std::abs(lu_(j, j));
        for (std::size_t i = j + 1; i < n; ++i) {
            const double v = std::abs(lu_(i, j));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (!(best > 0.0) || !std::isfinite(best))
            throw solver_error("lu: singular matrix at pivot " + std::to_string(j), static_cast<int>(j));
        if (p != j) {
            for (std::size_t t = 0; t < n; ++t) std::swap(lu_(p, t), lu_(j, t));
            std::swap(piv_[p], piv_[j]);
        }
        const cplx inv_pivot = 1.0 / lu_(j, j);
        for (std::size_t i = j + 1; i < n; ++i) {
            const cplx f = lu_(i, j) * inv_pivot;
            lu_(i, j) = f;
            if (f == cplx{}) continue;
            for (std::size_t t = j + 1; t < n; ++t) lu_(i, t) -= f * lu_(j, t);
        }
    }
}

CVec LuFactor::solve(const CVec& b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw contract_error("lu: rhs length mismatch");
    CVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[piv_[i]];
    for (std::size_t i = 1; i < n; ++i) {  // L has unit diagonal
        cplx s = x[i];
        for (std::size_t t = 0; t < i; ++t) s -= lu_(i, t) * x[t];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        cplx s = x[ii];
        for (std::size_t t = ii + 1; t < n; ++t) s -= lu_(ii, t) * x[t];
        x[ii] = s / lu_(ii, ii);
    }
    return x;
}

CMat LuFactor::inverse() const {
    const std::size_t n = lu_.rows();
    CMat inv(n, n);
    CVec e(n);
    for (std::size_t j = 0; j < n; ++j) {
        e.assign(n, cplx{});
        e[j] = 1.0;
        const CVec x = solve(e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
    }
    return inv;
}

}  // namespace cfidd
