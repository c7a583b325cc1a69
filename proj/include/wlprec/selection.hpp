#pragma once

// Greedy semi-orthogonal user selection.
//
// SUSOM treats two channels as orthogonal when Re{h_k h_j^H} = 0, which
// allows up to 2M mutually orthogonal users on M antennas. SUS uses the
// complex inner product and stops at M users.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wlprec/channel.hpp"
#include "wlprec/error.hpp"
#include "wlprec/numerics.hpp"

namespace wlprec {

enum class Orthogonality { Real, Complex };

struct SelectionResult {
    std::vector<std::size_t> selected;  ///< in selection order
    std::vector<ComplexRow> basis;      ///< orthogonalized channel of each selected user
    double alpha = 0.0;
};

namespace detail {

inline Complex inner(const ComplexRow& a, const ComplexRow& b, Orthogonality mode) {
    const Complex ip = (a * b.adjoint())(0, 0);
    return mode == Orthogonality::Real ? Complex(ip.real(), 0.0) : ip;
}

}  // namespace detail

/// Normalized correlation |<h_j, e>| / (||h_j|| ||e||), real part only in
/// Real mode. Zero means orthogonal under that notion.
inline double channel_dist(const ComplexRow& hj, const ComplexRow& e, Orthogonality mode) {
    const double nh = hj.norm();
    const double ne = e.norm();
    if (!(nh > 0.0) || !(ne > 0.0)) {
        throw Error(ErrorCode::ZeroVector, "channel_dist needs nonzero vectors");
    }
    return std::min(1.0, std::abs(detail::inner(hj, e, mode)) / (nh * ne));
}

/// Shared greedy loop. Each round picks the largest ||h~_k|| / sigma_zk,
/// where h~_k is h_k minus its projections on the stored basis, then drops
/// the candidates whose channel_dist to the new basis vector exceeds alpha.
inline SelectionResult semi_orthogonal_select(const ChannelSet& cs, double alpha, Orthogonality mode,
                                              std::size_t max_users) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1), got " + std::to_string(alpha));
    }
    cs.validate();
    SelectionResult out;
    out.alpha = alpha;

    std::vector<std::size_t> available(static_cast<std::size_t>(cs.users()));
    for (std::size_t k = 0; k < available.size(); ++k) available[k] = k;

    while (out.selected.size() < max_users && !available.empty()) {
        std::size_t best = available.front();
        double best_metric = -1.0;
        ComplexRow best_residual;
        for (std::size_t k : available) {
            const ComplexRow h = cs.h.row(static_cast<Eigen::Index>(k));
            ComplexRow residual = h;
            for (const ComplexRow& e : out.basis) {
                residual -= detail::inner(h, e, mode) / e.squaredNorm() * e;
            }
            const double metric = residual.norm() / std::sqrt(cs.noise_vars(static_cast<Eigen::Index>(k)));
            if (metric > best_metric) {
                best_metric = metric;
                best = k;
                best_residual = std::move(residual);
            }
        }
        // A residual of exactly zero cannot serve as a basis direction.
        if (!(best_residual.norm() > 0.0)) break;

        out.selected.push_back(best);
        out.basis.push_back(best_residual);
        std::erase(available, best);
        std::erase_if(available, [&](std::size_t j) {
            return channel_dist(cs.h.row(static_cast<Eigen::Index>(j)), out.basis.back(), mode) > alpha;
        });
    }
    return out;
}

/// Semi-orthogonal user selection for one-dimensional modulation; selects at
/// most 2M users.
inline SelectionResult susom(const ChannelSet& cs, double alpha) {
    return semi_orthogonal_select(cs, alpha, Orthogonality::Real, 2 * static_cast<std::size_t>(cs.antennas()));
}

/// Classical semi-orthogonal user selection; selects at most M users.
inline SelectionResult sus(const ChannelSet& cs, double alpha) {
    return semi_orthogonal_select(cs, alpha, Orthogonality::Complex, static_cast<std::size_t>(cs.antennas()));
}

}  // namespace wlprec
