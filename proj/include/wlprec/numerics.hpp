#pragma once

// Complex and composite-real linear algebra shared by the precoders and the
// user-selection algorithms.
//
// The composite-real maps used throughout:
//   stack_composite(U)   = [Re U; Im U]        (M x K  -> 2M x K)
//   widen_composite(H)   = [Re H, -Im H]       (K x M  -> K x 2M)
//   composite_rows(H)    = [Re H,  Im H]       (K x M  -> K x 2M)
// so that widen_composite(H) * stack_composite(U) == Re{H U} and
// composite_rows(h) * composite_rows(g)^T == Re{h g^H}.

#include <cmath>
#include <complex>
#include <string>
#include <type_traits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "wlprec/error.hpp"

namespace wlprec {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using ComplexRow = Eigen::RowVectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using RealRow = Eigen::RowVectorXd;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Relative pivot floor below which a Gram matrix is treated as singular.
inline constexpr double kPivotTolerance = 1e-10;

inline RealMatrix stack_composite(const ComplexMatrix& u) {
    RealMatrix out(2 * u.rows(), u.cols());
    out.topRows(u.rows()) = u.real();
    out.bottomRows(u.rows()) = u.imag();
    return out;
}

inline ComplexMatrix unstack_composite(const RealMatrix& stacked) {
    if (stacked.rows() % 2 != 0) {
        throw Error(ErrorCode::DimensionMismatch,
                    "stacked composite matrix needs an even row count, got " +
                        std::to_string(stacked.rows()));
    }
    const Eigen::Index m = stacked.rows() / 2;
    ComplexMatrix out(m, stacked.cols());
    out.real() = stacked.topRows(m);
    out.imag() = stacked.bottomRows(m);
    return out;
}

inline RealMatrix widen_composite(const ComplexMatrix& h) {
    RealMatrix out(h.rows(), 2 * h.cols());
    out.leftCols(h.cols()) = h.real();
    out.rightCols(h.cols()) = -h.imag();
    return out;
}

inline RealMatrix composite_rows(const ComplexMatrix& h) {
    RealMatrix out(h.rows(), 2 * h.cols());
    out.leftCols(h.cols()) = h.real();
    out.rightCols(h.cols()) = h.imag();
    return out;
}

/// Solves A X = B for symmetric (Hermitian) positive definite A via Cholesky.
///
/// Throws NotPositiveDefinite when A is not symmetric within 1e-10 relative,
/// when the factorization breaks down, or when the smallest squared pivot
/// falls below kPivotTolerance times the largest diagonal entry of A. The
/// last case is how a rank-deficient channel Gram matrix (more users than
/// real or complex dimensions) shows up in floating point.
template <typename Scalar>
Matrix<Scalar> spd_solve(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows() || a.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "spd_solve expects square A matching B rows");
    }
    const double scale = a.diagonal().real().cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix has no positive diagonal");
    }
    const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kPivotTolerance * scale) {
        throw Error(ErrorCode::InvalidArgument, "matrix is not symmetric");
    }
    Eigen::LLT<Matrix<Scalar>> llt(a);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
    }
    const auto pivots = llt.matrixLLT().diagonal().real();
    const double min_pivot_sq = pivots.cwiseAbs2().minCoeff();
    if (!(min_pivot_sq > kPivotTolerance * scale)) {
        throw Error(ErrorCode::NotPositiveDefinite,
                    "pivot ratio " + std::to_string(min_pivot_sq / scale) + " below tolerance");
    }
    return llt.solve(b);
}

/// Unit-norm maximizer of |a v|^2 / (v^H Q v) for a rank-one numerator a^H a.
///
/// The maximizer is Q^{-1} a^H up to scale; the returned vector has
/// ||v|| = 1 and a v real and nonnegative.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rank1_gev_max(
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& a, const Matrix<Scalar>& q) {
    if (a.size() != q.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "rank1_gev_max: a and Q sizes differ");
    }
    const double a_norm = a.norm();
    if (!(a_norm > 0.0)) {
        throw Error(ErrorCode::ZeroVector, "rank1_gev_max: numerator vector is zero");
    }
    Matrix<Scalar> rhs = a.adjoint();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = spd_solve<Scalar>(q, rhs).col(0);
    v /= v.norm();
    const Scalar gain = (a * v)(0, 0);
    if constexpr (std::is_same_v<Scalar, double>) {
        if (gain < 0.0) v = -v;
    } else {
        const double mag = std::abs(gain);
        if (mag > 0.0) v *= std::conj(gain) / mag;
    }
    return v;
}

}  // namespace wlprec
