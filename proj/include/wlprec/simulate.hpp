#pragma once

// Monte Carlo link-level engine for the downlink broadcast channel.
//
// Every (SNR point, channel realization) pair draws from its own RngStream
// keyed by (seed, realization index): channel first, then symbols, then
// unit-shape noise scaled to the SNR point. Methods and SNR points therefore
// see the same channels, symbols and noise shapes (common random numbers),
// and results do not depend on thread scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wlprec/channel.hpp"
#include "wlprec/error.hpp"
#include "wlprec/modulation.hpp"
#include "wlprec/numerics.hpp"
#include "wlprec/precoding.hpp"
#include "wlprec/selection.hpp"

namespace wlprec {

enum class SelectionMethod { None, Sus, Susom };

constexpr std::string_view selection_name(SelectionMethod s) {
    switch (s) {
        case SelectionMethod::None: return "none";
        case SelectionMethod::Sus: return "sus";
        case SelectionMethod::Susom: return "susom";
    }
    return "?";
}

inline constexpr double kDefaultAlpha = 0.5;

struct ScenarioConfig {
    Eigen::Index antennas = 4;
    Eigen::Index users = 4;            ///< K, used when selection == None
    Eigen::Index available_users = 0;  ///< K_T, used with a selection method
    ConstellationKind constellation = ConstellationKind::Pam;
    std::size_t order = 4;  ///< constellation points (16 for 16-QAM)
    Method method = Method::WlMmse;
    SelectionMethod selection = SelectionMethod::None;
    double alpha = kDefaultAlpha;
    std::vector<double> snr_grid_db;
    std::size_t n_channels = 1000;
    std::size_t n_symbols = 200;
    double tau = 1.0;
    std::uint64_t seed = 1;
    DualAscentOptions dual;
    unsigned threads = 0;  ///< 0 = hardware concurrency

    /// Unit average symbol power, so SNR = tau / sigma_z^2.
    Constellation make_constellation() const {
        return constellation == ConstellationKind::Pam ? Constellation::pam_unit_power(order)
                                                       : Constellation::square_qam_unit_power(order);
    }

    Eigen::Index pool_size() const { return selection == SelectionMethod::None ? users : available_users; }
};

/// SNR_dB = 10 log10(tau / sigma_z^2).
inline double noise_var_for_snr(double snr_db, double tau) { return tau / std::pow(10.0, snr_db / 10.0); }

/// Per-user measurements of one accepted channel realization.
struct RealizationRecord {
    std::vector<std::size_t> users;  ///< indices into the drawn pool
    std::vector<double> sinr;
    std::vector<std::uint64_t> errors;
    std::uint64_t symbols_per_user = 0;
};

struct SweepPoint {
    double snr_db = 0.0;
    double avg_ser = 0.0;
    double avg_sum_rate = 0.0;
    double avg_selected_users = 0.0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t symbols = 0;
    std::size_t realizations = 0;  ///< accepted
    std::size_t skipped = 0;       ///< rejected for numerical failure
    double ser_std_error = 0.0;
    double sum_rate_std_error = 0.0;
    std::vector<RealizationRecord> records;  ///< filled when requested
};

struct SweepResult {
    std::vector<SweepPoint> points;

    std::size_t skipped() const {
        std::size_t n = 0;
        for (const auto& p : points) n += p.skipped;
        return n;
    }
    std::size_t attempted() const {
        std::size_t n = 0;
        for (const auto& p : points) n += p.skipped + p.realizations;
        return n;
    }
};

struct SweepOptions {
    bool ser = true;
    bool rate = true;
    bool keep_records = false;
};

/// Processed received samples y = W (H U s + z).
inline ComplexMatrix transmit_block_complex(const ChannelSet& cs, const Precoder& p, const ComplexMatrix& symbols,
                                            const ComplexMatrix& noise) {
    if (p.u.rows() != cs.antennas() || p.u.cols() != cs.users() || symbols.rows() != cs.users() ||
        noise.rows() != cs.users() || noise.cols() != symbols.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "transmit_block: inconsistent dimensions");
    }
    return cs.rx_filters.asDiagonal() * (cs.h * (p.u * symbols) + noise);
}

/// Real part of the processed samples for real-valued (PAM) symbols.
inline RealMatrix transmit_block(const ChannelSet& cs, const Precoder& p, const RealMatrix& symbols,
                                 const ComplexMatrix& noise) {
    return transmit_block_complex(cs, p, symbols.cast<Complex>(), noise).real();
}

enum class SinrMode {
    RealPart,  ///< only Re{.} of signal and interference, half the noise variance
    Complex,
};

/// Post-processing SINR of every user under precoder p.
inline RealVector measure_sinr(const ChannelSet& cs, const Precoder& p, SinrMode mode = SinrMode::RealPart) {
    const ComplexMatrix g = effective_channel(cs) * p.u;
    const RealVector noise = effective_noise_vars(cs);
    const Eigen::Index users = cs.users();
    RealVector out(users);
    for (Eigen::Index k = 0; k < users; ++k) {
        double signal = 0.0;
        double interference = 0.0;
        for (Eigen::Index j = 0; j < users; ++j) {
            const double amp2 = mode == SinrMode::RealPart ? g(k, j).real() * g(k, j).real() : std::norm(g(k, j));
            (j == k ? signal : interference) += p.symbol_powers(j) * amp2;
        }
        const double n = mode == SinrMode::RealPart ? noise(k) / 2.0 : noise(k);
        out(k) = signal / (interference + n);
    }
    return out;
}

namespace detail {

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct Outcome {
    bool accepted = false;
    double sum_rate = 0.0;
    RealizationRecord record;
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline Outcome run_realization(const ScenarioConfig& cfg, const Constellation& constellation, double noise_var,
                               std::uint64_t index, const SweepOptions& opts) {
    RngStream rng(cfg.seed, index);
    ChannelSet pool = draw_rayleigh_channel(cfg.antennas, cfg.pool_size(), rng);
    pool.set_noise_var(noise_var);

    Outcome out;
    ChannelSet cs;
    if (cfg.selection == SelectionMethod::None) {
        cs = std::move(pool);
        out.record.users.resize(static_cast<std::size_t>(cs.users()));
        for (std::size_t k = 0; k < out.record.users.size(); ++k) out.record.users[k] = k;
    } else {
        const SelectionResult sel =
            cfg.selection == SelectionMethod::Susom ? susom(pool, cfg.alpha) : sus(pool, cfg.alpha);
        cs = pool.subset(sel.selected);
        out.record.users = sel.selected;
    }
    const Eigen::Index users = cs.users();
    const RealVector powers = RealVector::Constant(users, constellation.average_power());

    Precoder p;
    try {
        p = build_precoder(cfg.method, cs, cfg.tau, powers, cfg.dual);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotPositiveDefinite) return out;
        throw;
    }
    out.accepted = true;

    const bool pam = constellation.kind() == ConstellationKind::Pam;
    const RealVector sinr = measure_sinr(cs, p, pam ? SinrMode::RealPart : SinrMode::Complex);
    out.record.sinr.assign(sinr.data(), sinr.data() + sinr.size());
    if (opts.rate) {
        for (double s : out.record.sinr) out.sum_rate += mutual_information(constellation, s);
    }
    if (!opts.ser) return out;

    const auto n = static_cast<Eigen::Index>(cfg.n_symbols);
    std::vector<std::size_t> sent(static_cast<std::size_t>(users * n));
    ComplexMatrix symbols(users, n);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index k = 0; k < users; ++k) {
            const std::size_t idx = rng.uniform_index(constellation.size());
            sent[static_cast<std::size_t>(t * users + k)] = idx;
            symbols(k, t) = pam ? Complex(constellation.level(idx), 0.0) : qam_point(constellation, idx);
        }
    }
    const ComplexMatrix noise = draw_noise(cs, n, rng);
    const ComplexMatrix y = transmit_block_complex(cs, p, symbols, noise);
    const ComplexMatrix g = effective_channel(cs) * p.u;

    out.record.errors.assign(static_cast<std::size_t>(users), 0);
    out.record.symbols_per_user = cfg.n_symbols;
    for (Eigen::Index k = 0; k < users; ++k) {
        auto& errors = out.record.errors[static_cast<std::size_t>(k)];
        for (Eigen::Index t = 0; t < n; ++t) {
            const std::size_t detected = pam ? wl_pam_detect(y(k, t).real(), g(k, k).real(), constellation)
                                             : qam_detect(y(k, t), g(k, k), constellation);
            if (detected != sent[static_cast<std::size_t>(t * users + k)]) ++errors;
        }
    }
    return out;
}

}  // namespace detail

/// Runs every SNR point of the scenario. Realizations whose precoder hits a
/// singular Gram matrix are skipped and counted in SweepPoint::skipped.
inline SweepResult run_sweep(const ScenarioConfig& cfg, const SweepOptions& opts = {}) {
    if (cfg.snr_grid_db.empty()) throw Error(ErrorCode::InvalidConfig, "snr grid is empty");
    if (cfg.n_channels < 1 || cfg.n_symbols < 1) {
        throw Error(ErrorCode::InvalidConfig, "need at least one channel and one symbol");
    }
    const Constellation constellation = cfg.make_constellation();

    SweepResult result;
    for (double snr : cfg.snr_grid_db) {
        const double noise_var = noise_var_for_snr(snr, cfg.tau);
        std::vector<detail::Outcome> outcomes(cfg.n_channels);
        detail::parallel_for(cfg.n_channels, cfg.threads, [&](std::size_t i) {
            outcomes[i] = detail::run_realization(cfg, constellation, noise_var, i, opts);
        });

        SweepPoint pt;
        pt.snr_db = snr;
        detail::CompensatedSum rate;
        detail::CompensatedSum rate_sq;
        std::uint64_t selected = 0;
        for (auto& o : outcomes) {
            if (!o.accepted) {
                ++pt.skipped;
                continue;
            }
            ++pt.realizations;
            selected += o.record.users.size();
            rate.add(o.sum_rate);
            rate_sq.add(o.sum_rate * o.sum_rate);
            for (auto e : o.record.errors) pt.symbol_errors += e;
            pt.symbols += o.record.symbols_per_user * o.record.errors.size();
            if (opts.keep_records) pt.records.push_back(std::move(o.record));
        }
        if (pt.realizations > 0) {
            const double n = static_cast<double>(pt.realizations);
            pt.avg_sum_rate = rate.value() / n;
            pt.avg_selected_users = static_cast<double>(selected) / n;
            const double var = std::max(0.0, rate_sq.value() / n - pt.avg_sum_rate * pt.avg_sum_rate);
            pt.sum_rate_std_error = std::sqrt(var / n);
        }
        if (pt.symbols > 0) {
            const double total = static_cast<double>(pt.symbols);
            pt.avg_ser = static_cast<double>(pt.symbol_errors) / total;
            pt.ser_std_error = std::sqrt(pt.avg_ser * (1.0 - pt.avg_ser) / total);
        }
        result.points.push_back(std::move(pt));
    }
    return result;
}

inline SweepResult run_ser_sweep(const ScenarioConfig& cfg) { return run_sweep(cfg, {true, false, false}); }

inline SweepResult run_rate_sweep(const ScenarioConfig& cfg) { return run_sweep(cfg, {false, true, false}); }

struct CensusPoint {
    Eigen::Index available_users = 0;
    SelectionMethod algorithm = SelectionMethod::Susom;
    double mean_selected = 0.0;
    std::size_t trials = 0;
};

/// Mean number of users selected by each algorithm for each pool size K_T.
/// Trial t of every pool size uses stream t, so pools share their leading
/// channels.
inline std::vector<CensusPoint> run_selection_census(Eigen::Index antennas, const std::vector<Eigen::Index>& pool_sizes,
                                                     double alpha, std::size_t trials,
                                                     const std::vector<SelectionMethod>& algorithms,
                                                     std::uint64_t seed = 1, unsigned threads = 0) {
    if (trials < 1) throw Error(ErrorCode::InvalidConfig, "census needs at least one trial");
    std::vector<CensusPoint> out;
    for (Eigen::Index pool_size : pool_sizes) {
        for (SelectionMethod algo : algorithms) {
            if (algo == SelectionMethod::None) continue;
            std::vector<std::size_t> counts(trials);
            detail::parallel_for(trials, threads, [&](std::size_t t) {
                RngStream rng(seed, t);
                const ChannelSet cs = draw_rayleigh_channel(antennas, pool_size, rng);
                counts[t] = (algo == SelectionMethod::Susom ? susom(cs, alpha) : sus(cs, alpha)).selected.size();
            });
            std::size_t total = 0;
            for (auto c : counts) total += c;
            out.push_back({pool_size, algo, static_cast<double>(total) / static_cast<double>(trials), trials});
        }
    }
    return out;
}

}  // namespace wlprec
