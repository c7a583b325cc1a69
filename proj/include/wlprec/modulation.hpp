#pragma once

// PAM and square-QAM constellations, the real-part (widely linear) PAM
// decision rule, QAM detection, and discrete-input AWGN mutual information.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "wlprec/error.hpp"
#include "wlprec/numerics.hpp"

namespace wlprec {

enum class ConstellationKind { Pam, SquareQam };

/// L-PAM, or square QAM built as the product of two L-PAM axes.
///
/// PAM amplitudes are (2l - 1 - L) d sqrt(Eg), l = 1..L, with average power
/// (L^2 - 1)/3 d^2 Eg. For QAM the same grid is used on both axes, so the
/// QAM average power is twice the axis power.
class Constellation {
public:
    static Constellation pam(std::size_t order, double half_spacing = 1.0, double pulse_power = 1.0) {
        return Constellation(ConstellationKind::Pam, order, half_spacing, pulse_power);
    }

    /// PAM with d chosen so the average symbol power is one.
    static Constellation pam_unit_power(std::size_t order) {
        return pam(order, unit_half_spacing(order, 1.0));
    }

    /// Square QAM with `points` = L^2 constellation points.
    static Constellation square_qam(std::size_t points, double half_spacing = 1.0,
                                    double pulse_power = 1.0) {
        const auto axis = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(points))));
        if (axis * axis != points || axis < 2 || (axis & (axis - 1)) != 0) {
            throw Error(ErrorCode::InvalidArgument,
                        "square QAM needs L^2 points with L a power of two, got " + std::to_string(points));
        }
        return Constellation(ConstellationKind::SquareQam, axis, half_spacing, pulse_power);
    }

    static Constellation square_qam_unit_power(std::size_t points) {
        const auto axis = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(points))));
        return square_qam(points, unit_half_spacing(axis, 2.0));
    }

    ConstellationKind kind() const noexcept { return kind_; }
    std::size_t axis_order() const noexcept { return axis_; }
    std::size_t size() const noexcept { return kind_ == ConstellationKind::Pam ? axis_ : axis_ * axis_; }
    double half_spacing() const noexcept { return half_spacing_; }
    double pulse_power() const noexcept { return pulse_power_; }

    /// Distance from a point to its decision thresholds, d sqrt(Eg).
    double step() const noexcept { return half_spacing_ * std::sqrt(pulse_power_); }

    double axis_power() const noexcept {
        const double l = static_cast<double>(axis_);
        return (l * l - 1.0) / 3.0 * half_spacing_ * half_spacing_ * pulse_power_;
    }

    double average_power() const noexcept {
        return kind_ == ConstellationKind::Pam ? axis_power() : 2.0 * axis_power();
    }

    /// Amplitude of axis level `index` in 0..L-1.
    double level(std::size_t index) const noexcept {
        return (2.0 * static_cast<double>(index) + 1.0 - static_cast<double>(axis_)) * step();
    }

    double bits() const noexcept { return std::log2(static_cast<double>(size())); }

private:
    Constellation(ConstellationKind kind, std::size_t axis, double half_spacing, double pulse_power)
        : kind_(kind), axis_(axis), half_spacing_(half_spacing), pulse_power_(pulse_power) {
        if (axis_ < 2) {
            throw Error(ErrorCode::InvalidArgument, "constellation order must be at least 2");
        }
        if (!(half_spacing_ > 0.0) || !(pulse_power_ > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "half spacing and pulse power must be positive");
        }
    }

    static double unit_half_spacing(std::size_t axis, double axes) {
        const double l = static_cast<double>(axis);
        return std::sqrt(3.0 / (axes * (l * l - 1.0)));
    }

    ConstellationKind kind_;
    std::size_t axis_;
    double half_spacing_;
    double pulse_power_;
};

inline std::vector<double> pam_points(const Constellation& c) {
    if (c.kind() != ConstellationKind::Pam) {
        throw Error(ErrorCode::WrongKind, "pam_points called on a QAM constellation");
    }
    std::vector<double> out(c.axis_order());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.level(i);
    return out;
}

namespace detail {

inline std::size_t gray_encode(std::size_t n) { return n ^ (n >> 1); }

inline std::size_t gray_decode(std::size_t g) {
    std::size_t n = 0;
    for (; g != 0; g >>= 1) n ^= g;
    return n;
}

inline std::size_t axis_bits(std::size_t axis) {
    std::size_t b = 0;
    while ((std::size_t{1} << b) < axis) ++b;
    return b;
}

// Nearest level on a unit-step grid, ties to the lower level.
inline std::size_t nearest_level(double x, std::size_t order) {
    const double l = static_cast<double>(order);
    const double idx = std::ceil((x + l) / 2.0) - 1.0;
    if (!(idx > 0.0)) return 0;
    if (idx >= l - 1.0) return order - 1;
    return static_cast<std::size_t>(idx);
}

}  // namespace detail

/// QAM point for a Gray-mapped symbol index (high bits on the in-phase axis).
inline Complex qam_point(const Constellation& c, std::size_t index) {
    if (c.kind() != ConstellationKind::SquareQam) {
        throw Error(ErrorCode::WrongKind, "qam_point called on a PAM constellation");
    }
    const std::size_t b = detail::axis_bits(c.axis_order());
    const std::size_t mask = (std::size_t{1} << b) - 1;
    const std::size_t i_level = detail::gray_decode(index >> b);
    const std::size_t q_level = detail::gray_decode(index & mask);
    return {c.level(i_level), c.level(q_level)};
}

inline std::vector<Complex> qam_points(const Constellation& c) {
    std::vector<Complex> out(c.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = qam_point(c, i);
    return out;
}

/// Widely linear PAM decision on the real part of the processed sample.
///
/// `gain` is the effective useful gain Re{w_k h_k u_k}. Regions are the
/// half-open intervals (gain (s_l - d sqrt(Eg)), gain (s_l + d sqrt(Eg))],
/// so a sample exactly on a threshold goes to the lower index. Returns the
/// zero-based level index.
inline std::size_t wl_pam_detect(double y_real, double gain, const Constellation& c) {
    if (c.kind() != ConstellationKind::Pam) {
        throw Error(ErrorCode::WrongKind, "wl_pam_detect needs a PAM constellation");
    }
    if (!(gain > 0.0)) {
        throw Error(ErrorCode::NonPositiveGain, "useful gain must be positive, got " + std::to_string(gain));
    }
    return detail::nearest_level(y_real / (gain * c.step()), c.axis_order());
}

/// Coherent square-QAM detection: undo the complex gain, then slice each axis.
inline std::size_t qam_detect(Complex y, Complex gain, const Constellation& c) {
    if (c.kind() != ConstellationKind::SquareQam) {
        throw Error(ErrorCode::WrongKind, "qam_detect needs a QAM constellation");
    }
    const double mag2 = std::norm(gain);
    if (!(mag2 > 0.0)) {
        throw Error(ErrorCode::ZeroGain, "QAM detection gain is zero");
    }
    const Complex x = y * std::conj(gain) / (mag2 * c.step());
    const std::size_t i_level = detail::nearest_level(x.real(), c.axis_order());
    const std::size_t q_level = detail::nearest_level(x.imag(), c.axis_order());
    const std::size_t b = detail::axis_bits(c.axis_order());
    return (detail::gray_encode(i_level) << b) | detail::gray_encode(q_level);
}

/// Gauss-Hermite rule for the weight exp(-t^2), computed by Golub-Welsch.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(std::size_t n) {
    RealMatrix jacobi = RealMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double off = std::sqrt(static_cast<double>(i) / 2.0);
        jacobi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = off;
        jacobi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = off;
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mass = std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        rule.nodes[i] = eig.eigenvalues()(col);
        rule.weights[i] = mass * eig.eigenvectors()(0, col) * eig.eigenvectors()(0, col);
    }
    return rule;
}

inline constexpr std::size_t kMutualInformationNodes = 96;

/// Mutual information (bits per real channel use) of equiprobable L-PAM over
/// a real AWGN channel, where `sinr` is average symbol power over noise
/// variance. Gauss-Hermite quadrature in the noise variable.
inline double mi_pam_awgn(std::size_t order, double sinr) {
    if (order < 2) throw Error(ErrorCode::InvalidArgument, "PAM order must be at least 2");
    if (!(sinr > 0.0)) return 0.0;
    static const GaussHermiteRule rule = gauss_hermite(kMutualInformationNodes);

    const double l = static_cast<double>(order);
    // Levels scaled to average power sinr with unit noise variance.
    const double step = std::sqrt(3.0 * sinr / (l * l - 1.0));
    std::vector<double> x(order);
    for (std::size_t i = 0; i < order; ++i) x[i] = (2.0 * static_cast<double>(i) + 1.0 - l) * step;

    double loss = 0.0;
    std::vector<double> expo(order);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double n = std::numbers::sqrt2 * rule.nodes[q];
        double acc = 0.0;
        for (std::size_t i = 0; i < order; ++i) {
            double top = 0.0;
            for (std::size_t j = 0; j < order; ++j) {
                const double d = x[i] - x[j];
                expo[j] = -(d * d + 2.0 * d * n) / 2.0;
                top = std::max(top, expo[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < order; ++j) sum += std::exp(expo[j] - top);
            acc += top + std::log(sum);
        }
        loss += rule.weights[q] * acc;
    }
    loss /= std::sqrt(std::numbers::pi) * l * std::numbers::ln2;
    return std::clamp(std::log2(l) - loss, 0.0, std::log2(l));
}

inline double mi_pam_awgn(const Constellation& c, double sinr) {
    if (c.kind() != ConstellationKind::Pam) {
        throw Error(ErrorCode::WrongKind, "mi_pam_awgn needs a PAM constellation");
    }
    return mi_pam_awgn(c.axis_order(), sinr);
}

/// Square QAM over complex AWGN splits into two independent PAM axes with
/// the same per-axis signal-to-noise ratio.
inline double mi_qam_awgn(const Constellation& c, double sinr) {
    if (c.kind() != ConstellationKind::SquareQam) {
        throw Error(ErrorCode::WrongKind, "mi_qam_awgn needs a QAM constellation");
    }
    return 2.0 * mi_pam_awgn(c.axis_order(), sinr);
}

inline double mutual_information(const Constellation& c, double sinr) {
    return c.kind() == ConstellationKind::Pam ? mi_pam_awgn(c, sinr) : mi_qam_awgn(c, sinr);
}

}  // namespace wlprec
