#include <random>

#include <Eigen/LU>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wlprec/precoding.hpp"

using namespace wlprec;

namespace {

ChannelSet random_channel(Eigen::Index m, Eigen::Index k, std::uint64_t seed, double noise = 0.1) {
    RngStream rng(seed, 99);
    auto cs = draw_rayleigh_channel(m, k, rng);
    cs.set_noise_var(noise);
    return cs;
}

ChannelSet quadrature_pair() {
    ComplexMatrix h(2, 1);
    h << 1.0, Complex(0, 1);
    return ChannelSet::with_defaults(h);
}

RealVector ones(Eigen::Index k) { return RealVector::Ones(k); }

double cosine(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Complex ip = (a.reshaped().adjoint() * b.reshaped())(0, 0);
    return std::abs(ip) / (a.norm() * b.norm());
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
    for (Method m : kAllMethods) EXPECT_EQ(parse_method(method_name(m)), m);
    EXPECT_FALSE(parse_method("zf2").has_value());
    EXPECT_EQ(max_users_for(Method::WlZf, 4), 8);
    EXPECT_EQ(max_users_for(Method::Mmse, 4), 4);
    EXPECT_EQ(max_users_for(Method::WlMslnr, 4), 0);
}

TEST(AllocatePower, Equal) {
    const auto pb = allocate_power(8.0, 4);
    EXPECT_TRUE((pb.per_user.array() == 2.0).all());
    EXPECT_EQ(allocate_power(3.0, 1).per_user(0), 3.0);
    const auto odd = allocate_power(1.0, 3);
    EXPECT_NEAR(odd.per_user.sum(), 1.0, 1e-12);
    EXPECT_THROW(allocate_power(0.0, 2), Error);
    EXPECT_THROW(allocate_power(1.0, 0), Error);
}

TEST(Mrt, SingleAntenna) {
    const auto cs = ChannelSet::with_defaults(ComplexMatrix::Ones(1, 1));
    const auto p = mrt(cs, allocate_power(1.0, 1), ones(1));
    EXPECT_NEAR(std::abs(p.u(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Mrt, HandExample) {
    ComplexMatrix h(1, 2);
    h << 3.0, Complex(0, 4);
    const auto cs = ChannelSet::with_defaults(h);
    const auto p = mrt(cs, allocate_power(25.0, 1), ones(1));
    EXPECT_NEAR(std::abs(p.u(0, 0) - 3.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(p.u(1, 0) - Complex(0, -4)), 0.0, 1e-12);
    EXPECT_NEAR((h * p.u)(0, 0).real(), 25.0, 1e-12);
}

TEST(Mrt, OrthogonalUsersDoNotInterfere) {
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h(0, 0) = Complex(1, 1);
    h(1, 1) = 2.0;
    const auto cs = ChannelSet::with_defaults(h);
    const auto p = mrt(cs, allocate_power(2.0, 2), ones(2));
    const ComplexMatrix g = h * p.u;
    EXPECT_EQ(std::abs(g(0, 1)), 0.0);
    EXPECT_EQ(std::abs(g(1, 0)), 0.0);
}

TEST(Mrt, LinearAndWlIdentical) {
    const auto cs = random_channel(4, 5, 1);
    const auto a = mrt(cs, allocate_power(1.0, 5), ones(5), Method::Mrt);
    const auto b = mrt(cs, allocate_power(1.0, 5), ones(5), Method::WlMrt);
    EXPECT_TRUE(a.u == b.u);
    const RealVector per_user = a.u.colwise().squaredNorm().transpose();
    EXPECT_LT((per_user.array() - 0.2).abs().maxCoeff(), 1e-12);
}

TEST(Mrt, ZeroChannel) {
    ComplexMatrix h = ComplexMatrix::Ones(2, 2);
    h.row(1).setZero();
    try {
        mrt(ChannelSet::with_defaults(h), allocate_power(1.0, 2), ones(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroChannel);
    }
}

TEST(WlZf, OverloadedSingleAntenna) {
    const auto p = wl_zf(quadrature_pair(), ZfTargets::uniform(2), ones(2));
    EXPECT_NEAR(std::abs(p.u(0, 0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(p.u(0, 1) - Complex(0, -1)), 0.0, 1e-15);
}

TEST(WlZf, RealChannelMatchesLinear) {
    RngStream rng(3, 0);
    auto cs = draw_rayleigh_channel(3, 3, rng);
    cs.h = cs.h.real().cast<Complex>();
    const auto a = wl_zf(cs, ZfTargets::uniform(3), ones(3));
    const auto b = linear_zf(cs, ZfTargets::uniform(3), ones(3));
    EXPECT_LT((a.u - b.u).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WlZf, ResidualUpToTwoM) {
    for (Eigen::Index k = 1; k <= 8; ++k) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto cs = random_channel(4, k, seed * 31 + static_cast<std::uint64_t>(k));
            cs.rx_filters = ComplexVector::Constant(k, Complex(0.8, -0.3));
            RealVector lam(k);
            for (Eigen::Index i = 0; i < k; ++i) lam(i) = 0.5 + 0.25 * static_cast<double>(i);
            const auto p = wl_zf(cs, ZfTargets{lam}, ones(k));
            const RealMatrix g = (effective_channel(cs) * p.u).real();
            EXPECT_LT((g - RealMatrix(lam.asDiagonal())).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(WlZf, TooManyUsers) {
    const auto cs = random_channel(2, 5, 4);
    try {
        wl_zf(cs, ZfTargets::uniform(5), ones(5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
}

TEST(LinearZf, ResidualAndDoubling) {
    const auto cs = random_channel(4, 4, 6);
    const auto p = linear_zf(cs, ZfTargets::uniform(4), ones(4));
    EXPECT_LT((cs.h * p.u - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);

    const auto over = random_channel(4, 5, 7);
    try {
        linear_zf(over, ZfTargets::uniform(5), ones(5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
    EXPECT_NO_THROW(wl_zf(over, ZfTargets::uniform(5), ones(5)));
}

TEST(NormalizePower, Basics) {
    Precoder p{ComplexMatrix::Identity(2, 2), ones(2), Method::WlZf};
    p.u *= std::sqrt(2.0);  // power 4
    const auto n = normalize_power(p, 1.0);
    EXPECT_NEAR(n.u(0, 0).real(), std::sqrt(2.0) * 0.5, 1e-15);
    EXPECT_NEAR(n.transmit_power(), 1.0, 1e-12);
    const auto again = normalize_power(n, 1.0);
    EXPECT_LT((again.u - n.u).cwiseAbs().maxCoeff(), 1e-15);

    Precoder zero{ComplexMatrix::Zero(2, 2), ones(2), Method::WlZf};
    try {
        normalize_power(zero, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroPrecoder);
    }
}

TEST(PowerConstraint, AllPowerConstrainedMethods) {
    for (Method m : kAllMethods) {
        const Eigen::Index k = 4;
        const auto cs = random_channel(4, k, 8, 0.05);
        RealVector powers(k);
        powers << 1.0, 0.5, 2.0, 1.5;
        const auto p = build_precoder(m, cs, 3.0, powers);
        if (m == Method::MmseIter || m == Method::WlMmseIter) {
            EXPECT_LE(p.transmit_power(), 3.0 * 1.1) << method_name(m);
        } else {
            EXPECT_NEAR(p.transmit_power(), 3.0, 1e-9) << method_name(m);
        }
        EXPECT_EQ(p.method, m);
    }
}

TEST(WlMmseRegularized, ZfLimit) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // Regularizer K sigma^2 / (2 tau) = 1e-12.
        const auto cs = random_channel(4, 6, seed, 2e-12 / 6.0);
        const auto mmse = wl_mmse_regularized(cs, 1.0, ones(6));
        const auto zf = normalize_power(wl_zf(cs, ZfTargets::uniform(6), ones(6)), 1.0);
        EXPECT_GT(cosine(mmse.u, zf.u), 0.9999);
    }
}

TEST(WlMmseRegularized, SingleUserIsMatchedFilter) {
    const auto cs = random_channel(4, 1, 2, 0.3);
    const auto mmse = wl_mmse_regularized(cs, 1.0, ones(1));
    const auto m = mrt(cs, allocate_power(1.0, 1), ones(1));
    EXPECT_NEAR(cosine(mmse.u, m.u), 1.0, 1e-12);
}

TEST(WlMmseRegularized, Overloaded) {
    const auto cs = random_channel(4, 8, 3, 0.1);
    const auto p = wl_mmse_regularized(cs, 1.0, ones(8));
    EXPECT_TRUE(p.u.allFinite());
    EXPECT_NEAR(p.transmit_power(), 1.0, 1e-9);
}

TEST(WlMmseRegularized, UnequalNoiseRejected) {
    auto cs = random_channel(2, 2, 4, 0.1);
    cs.noise_vars(1) = 0.2;
    try {
        wl_mmse_regularized(cs, 1.0, ones(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnequalNoise);
    }
}

TEST(RegularizedInverse, FormsAgree) {
    for (Eigen::Index k = 1; k <= 8; ++k) {
        const auto cs = random_channel(4, k, static_cast<std::uint64_t>(k));
        const RealMatrix a = widen_composite(cs.h);
        for (double mu : {1e-3, 0.1, 5.0}) {
            const RealMatrix x = regularized_inverse<double>(a, mu, InversionForm::Users);
            const RealMatrix y = regularized_inverse<double>(a, mu, InversionForm::Antennas);
            EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
    const auto cs = random_channel(4, 3, 12);
    const ComplexMatrix x = regularized_inverse<Complex>(cs.h, 0.2, InversionForm::Users);
    const ComplexMatrix y = regularized_inverse<Complex>(cs.h, 0.2, InversionForm::Antennas);
    EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DualAscent, FixedPointAndSlackness) {
    DualAscentOptions opts;
    opts.tolerance = 1e-10;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto cs = random_channel(4, 4 + static_cast<Eigen::Index>(seed % 5), seed, 0.05);
        const Eigen::Index k = cs.users();
        const auto res = wl_mmse_dual_ascent(cs, 1.0, ones(k), opts);
        EXPECT_TRUE(res.converged);
        EXPECT_GE(res.mu, 0.0);
        const RealMatrix again = regularized_inverse<double>(widen_composite(cs.h), res.mu);
        EXPECT_LT((unstack_composite(again) - res.precoder.u).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT(std::abs(res.slackness), 1e-6);
        EXPECT_NEAR(res.power, res.precoder.transmit_power(), 1e-12);
        const double delta = 1e-6;
        EXPECT_NEAR(std::max(0.0, res.mu + delta * (res.power - 1.0)), res.mu, 1e-6);
    }
}

TEST(DualAscent, InactiveConstraint) {
    const auto cs = random_channel(4, 6, 5, 0.1);
    const auto res = wl_mmse_dual_ascent(cs, 1e6, ones(6));
    EXPECT_EQ(res.mu, 0.0);
    const RealMatrix a = widen_composite(cs.h);
    const RealMatrix ls = a.transpose() * (a * a.transpose()).inverse();
    EXPECT_LT((stack_composite(res.precoder.u) - ls).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DualAscent, IterationBudget) {
    DualAscentOptions opts;
    opts.max_iterations = 2;
    const auto cs = random_channel(4, 4, 6, 0.1);
    const auto res = wl_mmse_dual_ascent(cs, 1.0, ones(4), opts);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 2);
    EXPECT_TRUE(res.precoder.u.allFinite());
}

TEST(DualAscent, LinearVariant) {
    DualAscentOptions opts;
    opts.tolerance = 1e-10;
    const auto cs = random_channel(4, 3, 7, 0.05);
    const auto res = linear_mmse_dual_ascent(cs, 1.0, ones(3), opts);
    EXPECT_TRUE(res.converged);
    EXPECT_LT(std::abs(res.slackness), 1e-6);
    const ComplexMatrix again = regularized_inverse<Complex>(cs.h, res.mu);
    EXPECT_LT((again - res.precoder.u).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(res.precoder.method, Method::MmseIter);
}

TEST(WlMslnr, SingleUserIsMatchedFilter) {
    const auto cs = random_channel(3, 1, 8, 0.2);
    const auto p = wl_mslnr(cs, allocate_power(1.0, 1), ones(1));
    const auto m = mrt(cs, allocate_power(1.0, 1), ones(1));
    EXPECT_NEAR(cosine(p.u, m.u), 1.0, 1e-12);
}

TEST(WlMslnr, QuadraturePairHasNoLeakage) {
    const auto cs = quadrature_pair();
    const auto p = wl_mslnr(cs, allocate_power(1.0, 2), ones(2));
    const ComplexMatrix g = cs.h * p.u;
    EXPECT_NEAR(g(0, 1).real(), 0.0, 1e-15);
    EXPECT_NEAR(g(1, 0).real(), 0.0, 1e-15);
    EXPECT_NEAR(cosine(p.u.col(0), cs.h.row(0).adjoint()), 1.0, 1e-12);
    EXPECT_NEAR(cosine(p.u.col(1), cs.h.row(1).adjoint()), 1.0, 1e-12);
}

TEST(WlMslnr, SamplingOracle) {
    std::mt19937_64 gen(17);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cs = random_channel(4, 4, seed, 0.3);
        cs.rx_filters = ComplexVector::Constant(4, std::polar(1.2, 0.4));
        const auto pb = allocate_power(1.0, 4);
        const auto p = wl_mslnr(cs, pb, ones(4));
        const ComplexMatrix hp = effective_channel(cs);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double c = effective_noise_vars(cs)(kk) / (2.0 * pb.per_user(kk));
            EXPECT_NEAR(p.u.col(kk).squaredNorm(), pb.per_user(kk), 1e-9);
            const double best = oracle::slnr_real_part(hp, k, p.u.col(kk), c);
            for (int i = 0; i < 1000; ++i) {
                const oracle::CVec v = oracle::random_direction(4, gen);
                EXPECT_LE(oracle::slnr_real_part(hp, k, v, c), best * (1 + 1e-12));
            }
            EXPECT_GT((hp.row(kk) * p.u.col(kk))(0, 0).real(), 0.0);
        }
    }
}

TEST(LinearMslnr, SamplingOracle) {
    std::mt19937_64 gen(18);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto cs = random_channel(3, 4, seed, 0.3);
        const auto pb = allocate_power(2.0, 4);
        const auto p = linear_mslnr(cs, pb, ones(4));
        for (std::size_t k = 0; k < 4; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double c = cs.noise_vars(kk) / pb.per_user(kk);
            const double best = oracle::slnr_complex(cs.h, k, p.u.col(kk), c);
            for (int i = 0; i < 1000; ++i) {
                EXPECT_LE(oracle::slnr_complex(cs.h, k, oracle::random_direction(3, gen), c), best * (1 + 1e-12));
            }
        }
    }
}

TEST(LinearBaseline, RejectsWlMethods) {
    const auto cs = random_channel(4, 4, 9);
    EXPECT_THROW(linear_baseline(Method::WlZf, cs, 1.0, ones(4)), Error);
    const auto over = random_channel(4, 5, 10);
    EXPECT_THROW(linear_baseline(Method::Mmse, over, 1.0, ones(5)), Error);
    EXPECT_NO_THROW(linear_baseline(Method::Mslnr, over, 1.0, ones(5)));
}

TEST(Precoders, InputChecks) {
    const auto cs = random_channel(2, 2, 11);
    EXPECT_THROW(wl_zf(cs, ZfTargets::uniform(3), ones(2)), Error);
    EXPECT_THROW(wl_zf(cs, ZfTargets::uniform(2), ones(3)), Error);
    EXPECT_THROW(wl_mslnr(cs, allocate_power(1.0, 3), ones(2)), Error);
    RealVector bad = ones(2);
    bad(0) = 0.0;
    EXPECT_THROW(mrt(cs, allocate_power(1.0, 2), bad), Error);
}
