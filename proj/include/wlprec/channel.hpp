#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wlprec/error.hpp"
#include "wlprec/numerics.hpp"

namespace wlprec {

/// Deterministic random substream identified by (seed, stream_id).
///
/// Monte Carlo trials use the trial index as stream id, so a trial's draws do
/// not depend on which other trials ran or in what order. A stream must not
/// be shared mutably across threads.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), 0x5eedu};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    double standard_normal() { return normal_(engine_); }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    Complex cscg(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = standard_normal();
        const double im = standard_normal();
        return {s * re, s * im};
    }

    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// K single-antenna users seen from an M-antenna transmitter.
///
/// Row k of `h` is the channel h_k; user k has noise variance
/// noise_vars[k] > 0 and receive-filter coefficient rx_filters[k] != 0.
struct ChannelSet {
    ComplexMatrix h;
    RealVector noise_vars;
    ComplexVector rx_filters;

    Eigen::Index users() const noexcept { return h.rows(); }
    Eigen::Index antennas() const noexcept { return h.cols(); }

    /// W = I and a common noise variance.
    static ChannelSet with_defaults(ComplexMatrix h, double noise_var = 1.0) {
        ChannelSet cs;
        const Eigen::Index k = h.rows();
        cs.h = std::move(h);
        cs.noise_vars = RealVector::Constant(k, noise_var);
        cs.rx_filters = ComplexVector::Ones(k);
        cs.validate();
        return cs;
    }

    void set_noise_var(double noise_var) {
        noise_vars = RealVector::Constant(users(), noise_var);
        validate();
    }

    void validate() const {
        if (h.rows() < 1 || h.cols() < 1) {
            throw Error(ErrorCode::InvalidArgument, "channel needs at least one user and one antenna");
        }
        if (noise_vars.size() != h.rows() || rx_filters.size() != h.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "noise variances and filters must have one entry per user");
        }
        if (!h.allFinite()) throw Error(ErrorCode::InvalidArgument, "channel has non-finite entries");
        for (Eigen::Index k = 0; k < h.rows(); ++k) {
            if (!(noise_vars(k) > 0.0) || !std::isfinite(noise_vars(k))) {
                throw Error(ErrorCode::InvalidArgument, "noise variance of user " + std::to_string(k) +
                                                            " must be positive and finite");
            }
            if (std::abs(rx_filters(k)) == 0.0) {
                throw Error(ErrorCode::InvalidArgument, "receive filter of user " + std::to_string(k) + " is zero");
            }
        }
    }

    /// The subset of users listed in `rows`, in that order.
    ChannelSet subset(std::span<const std::size_t> rows) const {
        ChannelSet out;
        const auto n = static_cast<Eigen::Index>(rows.size());
        out.h.resize(n, antennas());
        out.noise_vars.resize(n);
        out.rx_filters.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
            if (r >= users()) throw Error(ErrorCode::InvalidArgument, "subset row out of range");
            out.h.row(i) = h.row(r);
            out.noise_vars(i) = noise_vars(r);
            out.rx_filters(i) = rx_filters(r);
        }
        return out;
    }
};

/// i.i.d. CSCG(0, 1) entries; W = I and unit noise variance until the caller
/// changes them.
inline ChannelSet draw_rayleigh_channel(Eigen::Index antennas, Eigen::Index users, RngStream& rng) {
    if (antennas < 1 || users < 1) {
        throw Error(ErrorCode::InvalidArgument, "need at least one antenna and one user");
    }
    ComplexMatrix h(users, antennas);
    for (Eigen::Index k = 0; k < users; ++k) {
        for (Eigen::Index m = 0; m < antennas; ++m) h(k, m) = rng.cscg(1.0);
    }
    return ChannelSet::with_defaults(std::move(h));
}

/// H' = W H.
inline ComplexMatrix effective_channel(const ChannelSet& cs) {
    return cs.rx_filters.asDiagonal() * cs.h;
}

/// Post-filter noise variances sigma_z'^2 = sigma_z^2 |w|^2.
inline RealVector effective_noise_vars(const ChannelSet& cs) {
    return cs.noise_vars.cwiseProduct(cs.rx_filters.cwiseAbs2());
}

/// K x n matrix of CSCG noise, row k with variance noise_vars[k].
inline ComplexMatrix draw_noise(const ChannelSet& cs, Eigen::Index n_symbols, RngStream& rng) {
    if (n_symbols < 1) throw Error(ErrorCode::InvalidArgument, "need at least one symbol");
    ComplexMatrix z(cs.users(), n_symbols);
    for (Eigen::Index t = 0; t < n_symbols; ++t) {
        for (Eigen::Index k = 0; k < cs.users(); ++k) z(k, t) = rng.cscg(cs.noise_vars(k));
    }
    return z;
}

}  // namespace wlprec
