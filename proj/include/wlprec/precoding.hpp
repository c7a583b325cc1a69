#pragma once

// Widely linear (WL) transmit precoders for real-valued (PAM) symbols and
// their complex-domain linear baselines.
//
// The WL versions only constrain or optimize the real part of the effective
// channel-precoder product, Re{H' U}. Solutions for WL MMSE and WL MSLNR are
// computed in composite-real space and mapped back to a complex M x K
// precoder through unstack_composite.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wlprec/channel.hpp"
#include "wlprec/error.hpp"
#include "wlprec/numerics.hpp"

namespace wlprec {

enum class Method { Mrt, WlMrt, Zf, WlZf, Mmse, WlMmse, MmseIter, WlMmseIter, Mslnr, WlMslnr };

inline constexpr std::array kAllMethods{Method::Mrt,      Method::WlMrt,      Method::Zf,    Method::WlZf,
                                        Method::Mmse,     Method::WlMmse,     Method::MmseIter,
                                        Method::WlMmseIter, Method::Mslnr,    Method::WlMslnr};

constexpr std::string_view method_name(Method m) {
    switch (m) {
        case Method::Mrt: return "mrt";
        case Method::WlMrt: return "wl_mrt";
        case Method::Zf: return "zf";
        case Method::WlZf: return "wl_zf";
        case Method::Mmse: return "mmse";
        case Method::WlMmse: return "wl_mmse";
        case Method::MmseIter: return "mmse_iter";
        case Method::WlMmseIter: return "wl_mmse_iter";
        case Method::Mslnr: return "mslnr";
        case Method::WlMslnr: return "wl_mslnr";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

constexpr bool is_widely_linear(Method m) {
    return m == Method::WlMrt || m == Method::WlZf || m == Method::WlMmse || m == Method::WlMmseIter ||
           m == Method::WlMslnr;
}

/// Largest user count the method can serve on `antennas` transmit antennas,
/// or 0 when it has no dimension limit.
constexpr Eigen::Index max_users_for(Method m, Eigen::Index antennas) {
    switch (m) {
        case Method::Zf:
        case Method::Mmse:
        case Method::MmseIter: return antennas;
        case Method::WlZf:
        case Method::WlMmse:
        case Method::WlMmseIter: return 2 * antennas;
        default: return 0;
    }
}

/// M x K precoding matrix U together with the symbol powers (diagonal of R_s).
struct Precoder {
    ComplexMatrix u;
    RealVector symbol_powers;
    Method method = Method::Mrt;

    /// Tr(U R_s U^H).
    double transmit_power() const {
        return u.colwise().squaredNorm().dot(symbol_powers.transpose());
    }
};

struct PowerBudget {
    double total = 1.0;
    RealVector per_user;
};

inline PowerBudget allocate_power(double tau, Eigen::Index users) {
    if (!(tau > 0.0) || users < 1) {
        throw Error(ErrorCode::InvalidArgument, "power budget needs tau > 0 and at least one user");
    }
    return PowerBudget{tau, RealVector::Constant(users, tau / static_cast<double>(users))};
}

/// Received amplitudes sqrt(lambda_k) enforced by zero-forcing.
struct ZfTargets {
    RealVector sqrt_lambda;

    static ZfTargets uniform(Eigen::Index users, double value = 1.0) {
        return ZfTargets{RealVector::Constant(users, value)};
    }
};

namespace detail {

inline void check_powers(const ChannelSet& cs, const RealVector& powers) {
    if (powers.size() != cs.users()) {
        throw Error(ErrorCode::DimensionMismatch, "need one symbol power per user");
    }
    if (!(powers.minCoeff() > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "symbol powers must be positive");
    }
}

// Linear MMSE shares the K <= M contract of linear ZF even though the
// regularizer keeps its Gram matrix invertible.
inline void require_linear_dimensions(const ChannelSet& cs) {
    if (cs.users() > cs.antennas()) {
        throw Error(ErrorCode::NotPositiveDefinite, "linear precoding needs K <= M (K=" +
                                                        std::to_string(cs.users()) +
                                                        ", M=" + std::to_string(cs.antennas()) + ")");
    }
}

inline double common_noise_var(const ChannelSet& cs) {
    const double first = cs.noise_vars(0);
    if ((cs.noise_vars.array() - first).abs().maxCoeff() > 1e-12 * first) {
        throw Error(ErrorCode::UnequalNoise, "regularized MMSE assumes equal noise variances");
    }
    return first;
}

template <typename Scalar>
double weighted_power(const Matrix<Scalar>& u, const RealVector& powers) {
    return u.colwise().squaredNorm().dot(powers.transpose());
}

template <typename Scalar>
Precoder to_precoder(const Matrix<Scalar>& u, const RealVector& powers, Method method) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return Precoder{unstack_composite(u), powers, method};
    } else {
        return Precoder{u, powers, method};
    }
}

}  // namespace detail

enum class InversionForm {
    Users,     ///< A^H (A A^H + mu I_K)^-1, a K x K solve
    Antennas,  ///< (A^H A + mu I)^-1 A^H, a solve in transmit dimensions
};

/// Minimizer of the MMSE Lagrangian for multiplier mu, for the K x n matrix
/// A (the widened channel in WL mode, H' itself in linear mode).
///
/// Both forms are equal by the matrix inversion lemma whenever both
/// inverses exist. The users form needs mu > 0 or full row rank.
template <typename Scalar>
Matrix<Scalar> regularized_inverse(const Matrix<Scalar>& a, double mu, InversionForm form = InversionForm::Users) {
    if (form == InversionForm::Users) {
        Matrix<Scalar> gram = a * a.adjoint();
        gram.diagonal().array() += mu;
        const Matrix<Scalar> eye = Matrix<Scalar>::Identity(a.rows(), a.rows());
        return a.adjoint() * spd_solve<Scalar>(gram, eye);
    }
    Matrix<Scalar> gram = a.adjoint() * a;
    gram.diagonal().array() += mu;
    return spd_solve<Scalar>(gram, Matrix<Scalar>(a.adjoint()));
}

/// Maximum ratio transmission, u_k = sqrt(tau_k)/sigma_k * h'_k^H / ||h'_k||.
///
/// The real-part SNR and the complex SNR share this maximizer, so the result
/// is the same whether `tag` is Mrt or WlMrt.
inline Precoder mrt(const ChannelSet& cs, const PowerBudget& pb, const RealVector& powers,
                    Method tag = Method::Mrt) {
    detail::check_powers(cs, powers);
    if (pb.per_user.size() != cs.users()) throw Error(ErrorCode::DimensionMismatch, "power budget size");
    const ComplexMatrix hp = effective_channel(cs);
    ComplexMatrix u(cs.antennas(), cs.users());
    for (Eigen::Index k = 0; k < cs.users(); ++k) {
        const double norm = hp.row(k).norm();
        if (!(norm > 0.0)) throw Error(ErrorCode::ZeroChannel, "user " + std::to_string(k) + " has a zero channel");
        u.col(k) = hp.row(k).adjoint() * (std::sqrt(pb.per_user(k)) / (std::sqrt(powers(k)) * norm));
    }
    return Precoder{std::move(u), powers, tag};
}

/// WL zero-forcing, U = H'^H [Re{H' H'^H}]^-1 Lambda.
///
/// Nulls only the real part of the interference, so up to 2M users can be
/// served. The result is not power normalized.
inline Precoder wl_zf(const ChannelSet& cs, const ZfTargets& targets, const RealVector& powers) {
    detail::check_powers(cs, powers);
    if (targets.sqrt_lambda.size() != cs.users()) throw Error(ErrorCode::DimensionMismatch, "ZF target size");
    const ComplexMatrix hp = effective_channel(cs);
    const RealMatrix gram = (hp * hp.adjoint()).real();
    const RealMatrix lambda = targets.sqrt_lambda.asDiagonal();
    const RealMatrix x = spd_solve<double>(gram, lambda);
    return Precoder{hp.adjoint() * x.cast<Complex>(), powers, Method::WlZf};
}

/// Linear zero-forcing, U = H'^H (H' H'^H)^-1 Lambda; needs K <= M.
inline Precoder linear_zf(const ChannelSet& cs, const ZfTargets& targets, const RealVector& powers) {
    detail::check_powers(cs, powers);
    if (targets.sqrt_lambda.size() != cs.users()) throw Error(ErrorCode::DimensionMismatch, "ZF target size");
    const ComplexMatrix hp = effective_channel(cs);
    const ComplexMatrix gram = hp * hp.adjoint();
    const ComplexMatrix lambda = targets.sqrt_lambda.cast<Complex>().asDiagonal();
    return Precoder{hp.adjoint() * spd_solve<Complex>(gram, lambda), powers, Method::Zf};
}

/// Scales U by gamma = sqrt(tau / Tr(U R_s U^H)).
inline Precoder normalize_power(Precoder p, double tau) {
    const double power = p.transmit_power();
    if (!(power > 0.0) || !std::isfinite(power)) {
        throw Error(ErrorCode::ZeroPrecoder, "cannot normalize a precoder with zero transmit power");
    }
    p.u *= std::sqrt(tau / power);
    return p;
}

/// Regularized WL MMSE, U_bar = H~'^T (H~' H~'^T + I / (2 gamma))^-1 with
/// gamma = tau / (K sigma_z^2), rescaled to total power tau.
inline Precoder wl_mmse_regularized(const ChannelSet& cs, double tau, const RealVector& powers) {
    detail::check_powers(cs, powers);
    const double gamma = tau / (static_cast<double>(cs.users()) * detail::common_noise_var(cs));
    const RealMatrix widened = widen_composite(effective_channel(cs));
    const RealMatrix ubar = regularized_inverse<double>(widened, 1.0 / (2.0 * gamma));
    return normalize_power(detail::to_precoder<double>(ubar, powers, Method::WlMmse), tau);
}

/// Complex regularized channel inversion with the same regularizer; needs
/// K <= M.
inline Precoder linear_mmse_regularized(const ChannelSet& cs, double tau, const RealVector& powers) {
    detail::check_powers(cs, powers);
    detail::require_linear_dimensions(cs);
    const double gamma = tau / (static_cast<double>(cs.users()) * detail::common_noise_var(cs));
    const ComplexMatrix hp = effective_channel(cs);
    const ComplexMatrix u = regularized_inverse<Complex>(hp, 1.0 / (2.0 * gamma));
    return normalize_power(Precoder{u, powers, Method::Mmse}, tau);
}

struct DualAscentOptions {
    std::optional<double> initial_mu;    ///< default K sigma_z'^2 / (2 tau)
    std::optional<double> initial_step;  ///< default 0.1 / tau
    double step_decay = 100.0;           ///< step_l = step_0 / (1 + l / step_decay)
    double tolerance = 1e-8;             ///< on ||U_{l+1} - U_l||_F
    int max_iterations = 5000;
};

struct DualAscentResult {
    Precoder precoder;
    double mu = 0.0;
    int iterations = 0;
    double power = 0.0;
    double slackness = 0.0;  ///< mu (Tr(U R_s U^H) - tau)
    bool converged = false;
};

namespace detail {

template <typename Scalar>
DualAscentResult dual_ascent(const Matrix<Scalar>& a, const ChannelSet& cs, double tau, const RealVector& powers,
                             const DualAscentOptions& opts, Method tag) {
    check_powers(cs, powers);
    if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
    const double users = static_cast<double>(cs.users());
    double mu = opts.initial_mu.value_or(users * effective_noise_vars(cs).mean() / (2.0 * tau));
    const double step0 = opts.initial_step.value_or(0.1 / tau);
    if (!(step0 > 0.0) || mu < 0.0) throw Error(ErrorCode::InvalidArgument, "step size and mu must be positive");

    DualAscentResult out;
    Matrix<Scalar> u = regularized_inverse<Scalar>(a, mu);
    double power = weighted_power<Scalar>(u, powers);
    for (int l = 0; l < opts.max_iterations; ++l) {
        const double step = step0 / (1.0 + static_cast<double>(l) / opts.step_decay);
        const double mu_next = std::max(0.0, mu + step * (power - tau));
        Matrix<Scalar> u_next = regularized_inverse<Scalar>(a, mu_next);
        const double change = (u_next - u).norm();
        mu = mu_next;
        u = std::move(u_next);
        power = weighted_power<Scalar>(u, powers);
        out.iterations = l + 1;
        if (change < opts.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.precoder = to_precoder<Scalar>(u, powers, tag);
    out.mu = mu;
    out.power = power;
    out.slackness = mu * (power - tau);
    return out;
}

}  // namespace detail

/// WL MMSE by dual ascent on the power-constraint multiplier.
///
/// Alternates U_bar(mu) = H~'^T (H~' H~'^T + mu I_K)^-1 with the projected
/// step mu <- [mu + step_l (Tr(U_bar R_s U_bar^T) - tau)]^+ until U_bar moves
/// less than the tolerance. When the iteration budget runs out the last
/// iterate is returned with converged = false.
inline DualAscentResult wl_mmse_dual_ascent(const ChannelSet& cs, double tau, const RealVector& powers,
                                            const DualAscentOptions& opts = {}) {
    const RealMatrix widened = widen_composite(effective_channel(cs));
    return detail::dual_ascent<double>(widened, cs, tau, powers, opts, Method::WlMmseIter);
}

/// Complex-domain counterpart of wl_mmse_dual_ascent; needs K <= M.
inline DualAscentResult linear_mmse_dual_ascent(const ChannelSet& cs, double tau, const RealVector& powers,
                                                const DualAscentOptions& opts = {}) {
    detail::require_linear_dimensions(cs);
    const ComplexMatrix hp = effective_channel(cs);
    return detail::dual_ascent<Complex>(hp, cs, tau, powers, opts, Method::MmseIter);
}

/// WL maximum signal-to-leakage-and-noise ratio precoding.
///
/// Per user: u_bar_k = sqrt(tau_k)/sigma_k * v, with v the unit dominant
/// generalized eigenvector of (h~'_k^T h~'_k, Q'_k) and
/// Q'_k = H~'_{-k}^T H~'_{-k} + sigma_z'k^2 / (2 tau_k) I_2M.
inline Precoder wl_mslnr(const ChannelSet& cs, const PowerBudget& pb, const RealVector& powers) {
    detail::check_powers(cs, powers);
    if (pb.per_user.size() != cs.users()) throw Error(ErrorCode::DimensionMismatch, "power budget size");
    const RealMatrix widened = widen_composite(effective_channel(cs));
    const RealVector noise = effective_noise_vars(cs);
    const Eigen::Index users = cs.users();
    const Eigen::Index dims = widened.cols();
    RealMatrix ubar(dims, users);
    for (Eigen::Index k = 0; k < users; ++k) {
        if (!(pb.per_user(k) > 0.0)) throw Error(ErrorCode::InvalidArgument, "MSLNR needs positive per-user power");
        RealMatrix q = RealMatrix::Identity(dims, dims) * (noise(k) / (2.0 * pb.per_user(k)));
        for (Eigen::Index j = 0; j < users; ++j) {
            if (j != k) q.noalias() += widened.row(j).transpose() * widened.row(j);
        }
        const RealRow a = widened.row(k);
        ubar.col(k) = rank1_gev_max<double>(a, q) * std::sqrt(pb.per_user(k) / powers(k));
    }
    return Precoder{unstack_composite(ubar), powers, Method::WlMslnr};
}

/// Complex-domain MSLNR, Q_k = H'_{-k}^H H'_{-k} + sigma_z'k^2 / tau_k I_M.
inline Precoder linear_mslnr(const ChannelSet& cs, const PowerBudget& pb, const RealVector& powers) {
    detail::check_powers(cs, powers);
    if (pb.per_user.size() != cs.users()) throw Error(ErrorCode::DimensionMismatch, "power budget size");
    const ComplexMatrix hp = effective_channel(cs);
    const RealVector noise = effective_noise_vars(cs);
    const Eigen::Index users = cs.users();
    const Eigen::Index dims = hp.cols();
    ComplexMatrix u(dims, users);
    for (Eigen::Index k = 0; k < users; ++k) {
        if (!(pb.per_user(k) > 0.0)) throw Error(ErrorCode::InvalidArgument, "MSLNR needs positive per-user power");
        ComplexMatrix q = ComplexMatrix::Identity(dims, dims) * (noise(k) / pb.per_user(k));
        for (Eigen::Index j = 0; j < users; ++j) {
            if (j != k) q.noalias() += hp.row(j).adjoint() * hp.row(j);
        }
        const ComplexRow a = hp.row(k);
        u.col(k) = rank1_gev_max<Complex>(a, q) * std::sqrt(pb.per_user(k) / powers(k));
    }
    return Precoder{std::move(u), powers, Method::Mslnr};
}

/// Complex-domain baselines with the default parameters used in sweeps:
/// unit ZF targets followed by normalization, equal power for MSLNR.
inline Precoder linear_baseline(Method method, const ChannelSet& cs, double tau, const RealVector& powers,
                                const DualAscentOptions& opts = {}) {
    switch (method) {
        case Method::Zf: return normalize_power(linear_zf(cs, ZfTargets::uniform(cs.users()), powers), tau);
        case Method::Mmse: return linear_mmse_regularized(cs, tau, powers);
        case Method::MmseIter: return linear_mmse_dual_ascent(cs, tau, powers, opts).precoder;
        case Method::Mslnr: return linear_mslnr(cs, allocate_power(tau, cs.users()), powers);
        default: break;
    }
    throw Error(ErrorCode::InvalidArgument,
                "linear_baseline does not cover method " + std::string(method_name(method)));
}

/// Any method with sweep defaults: equal power allocation for MRT and MSLNR,
/// unit ZF targets scaled to total power tau, regularized MMSE with
/// gamma = tau / (K sigma_z^2), and dual ascent with `opts`.
inline Precoder build_precoder(Method method, const ChannelSet& cs, double tau, const RealVector& powers,
                               const DualAscentOptions& opts = {}) {
    switch (method) {
        case Method::Mrt:
        case Method::WlMrt: return mrt(cs, allocate_power(tau, cs.users()), powers, method);
        case Method::WlZf: return normalize_power(wl_zf(cs, ZfTargets::uniform(cs.users()), powers), tau);
        case Method::WlMmse: return wl_mmse_regularized(cs, tau, powers);
        case Method::WlMmseIter: return wl_mmse_dual_ascent(cs, tau, powers, opts).precoder;
        case Method::WlMslnr: return wl_mslnr(cs, allocate_power(tau, cs.users()), powers);
        default: return linear_baseline(method, cs, tau, powers, opts);
    }
}

}  // namespace wlprec
