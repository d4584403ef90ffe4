// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bnppca/model.hpp"
#include "bnppca/special.hpp"
#include "oracle_utils.hpp"

using namespace bnppca;

namespace {

Dataset tiny_data()
{
    Dataset d;
    d.Y.resize(2, 2);
    d.Y << 0.6, -1.1, 0.4, 0.9;
    return d;
}

LatentState tiny_state(const Dataset& data, Rng& rng)
{
    LatentState s;
    s.P = sample_uniform_stiefel(data.D(), 1, rng);
    s.Z.n_obs = data.N();
    s.Z.rows = {{1, 1}};
    s.delta2 = {1.7};
    s.sigma2 = 0.4;
    s.alpha = 0.9;
    return s;
}

}  // namespace

TEST_CASE("orthonormal complement")
{
    SUBCASE("e1 in R^3 spans {e2, e3}")
    {
        Eigen::MatrixXd p(3, 1);
        p << 1, 0, 0;
        const auto n = orthonormal_complement(p);
        const Eigen::Matrix3d proj = n * n.transpose();
        Eigen::Matrix3d expect = Eigen::Matrix3d::Identity();
        expect(0, 0) = 0.0;
        CHECK((proj - expect).norm() < 1e-12);
    }
    SUBCASE("full basis has empty complement; empty input gives identity")
    {
        Rng rng(3);
        const auto q = sample_uniform_stiefel(4, 4, rng);
        CHECK(orthonormal_complement(q).cols() == 0);
        CHECK(orthonormal_complement(Eigen::MatrixXd(4, 0)).isApprox(Eigen::MatrixXd::Identity(4, 4)));
    }
    SUBCASE("random inputs satisfy the invariants")
    {
        Rng rng(19);
        for (int i = 0; i < 50; ++i) {
            const auto p = sample_uniform_stiefel(6, 2, rng);
            const auto n = orthonormal_complement(p);
            CHECK((p.transpose() * n).norm() < 1e-10);
            CHECK((n.transpose() * n - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-10);
        }
    }
    SUBCASE("non-orthonormal input rejected")
    {
        Eigen::MatrixXd bad(3, 1);
        bad << 1, 1, 0;
        CHECK_THROWS_AS(orthonormal_complement(bad), std::domain_error);
    }
}

TEST_CASE("leading eigenpair")
{
    SUBCASE("diagonal")
    {
        Eigen::Matrix2d m;
        m << 3, 0, 0, 1;
        const auto [v, lam] = leading_eigpair(m);
        CHECK(lam == doctest::Approx(3.0));
        CHECK(v(0) == doctest::Approx(1.0));
    }
    SUBCASE("rank one")
    {
        Eigen::Vector3d u(-0.3, 0.6, 0.9);
        const auto [v, lam] = leading_eigpair(u * u.transpose());
        CHECK(lam == doctest::Approx(u.squaredNorm()).epsilon(1e-12));
        CHECK(v(0) > 0.0);  // sign convention
        CHECK(std::abs(std::abs(v.dot(u.normalized())) - 1.0) < 1e-10);
    }
    SUBCASE("residual check on a random PSD matrix")
    {
        Rng rng(7);
        Eigen::MatrixXd a(5, 5);
        std::normal_distribution<double> g;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) a(i, j) = g(rng);
        const Eigen::MatrixXd m = a * a.transpose();
        const auto [v, lam] = leading_eigpair(m);
        CHECK((m * v - lam * v).norm() < 1e-8 * lam);
    }
    SUBCASE("non-symmetric rejected")
    {
        Eigen::Matrix2d bad;
        bad << 1, 2, 0, 1;
        CHECK_THROWS_AS(leading_eigpair(bad), std::domain_error);
    }
}

TEST_CASE("marginal posterior structure")
{
    Rng rng(101);
    const Dataset data = tiny_data();
    const Hyperparams hyper;
    SUBCASE("K=0 reduces to the noise likelihood plus fixed terms")
    {
        LatentState s;
        s.P.resize(2, 0);
        s.Z.n_obs = 2;
        s.sigma2 = 0.7;
        s.alpha = 1.2;
        const double lp = log_marginal_posterior(s, hyper, data);
        const double expect = -0.5 * 4.0 * std::log(2 * M_PI * 0.7)
                              - data.Y.squaredNorm() / 1.4 - 1.2 * 1.5 - std::log(0.7)
                              - std::log(1.2);
        CHECK(lp == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("invariant to column sign flips")
    {
        LatentState s = tiny_state(data, rng);
        const double lp = log_marginal_posterior(s, hyper, data);
        s.P.col(0) = -s.P.col(0);
        CHECK(log_marginal_posterior(s, hyper, data) == doctest::Approx(lp).epsilon(1e-14));
    }
    SUBCASE("invariant under joint permutation of columns/rows/scales")
    {
        Dataset d4;
        d4.Y.resize(3, 4);
        d4.Y << 0.3, -1.0, 0.4, 0.9, 1.2, 0.1, -0.6, 0.2, -0.5, 0.8, 0.3, -1.1;
        LatentState s;
        s.P = sample_uniform_stiefel(3, 2, rng);
        s.Z.n_obs = 4;
        s.Z.rows = {{1, 0, 1, 1}, {0, 1, 1, 0}};
        s.delta2 = {2.0, 0.5};
        s.sigma2 = 0.3;
        s.alpha = 1.0;
        const double lp = log_marginal_posterior(s, hyper, d4);
        LatentState sp = s;
        sp.P.col(0) = s.P.col(1);
        sp.P.col(1) = s.P.col(0);
        std::swap(sp.Z.rows[0], sp.Z.rows[1]);
        std::swap(sp.delta2[0], sp.delta2[1]);
        CHECK(log_marginal_posterior(sp, hyper, d4) == doctest::Approx(lp).epsilon(1e-14));
    }
    SUBCASE("errors on bad inputs")
    {
        LatentState s = tiny_state(data, rng);
        s.sigma2 = -1.0;
        CHECK_THROWS_AS(log_marginal_posterior(s, hyper, data), std::domain_error);
        s = tiny_state(data, rng);
        s.delta2.push_back(1.0);
        CHECK_THROWS_AS(log_marginal_posterior(s, hyper, data), std::domain_error);
    }
}

TEST_CASE("collapsed posterior equals quadrature marginalization of the joint")
{
    Rng rng(211);
    const Dataset data = tiny_data();
    Hyperparams hyper;
    LatentState s = tiny_state(data, rng);

    // integrate exp(log_marginal_posterior) over delta2 (via u = 1/(1+delta2))
    // and alpha; both factors separate, so two 1-D quadratures suffice
    const auto log_delta_integral = [&](double lo, double hi) {
        return oracle::log_integrate_exp(
            [&](double u) {
                LatentState t = s;
                t.delta2[0] = 1.0 / u - 1.0;
                // alpha fixed: remove its factors afterwards
                return log_marginal_posterior(t, hyper, data) - 2.0 * std::log(u);
            },
            lo, hi);
    };
    const double log_joint_delta = log_delta_integral(1e-9, 1.0 - 1e-12);
    // alpha part: p(Z|alpha)/alpha integrated = Gamma(K)/H_N^K times the rest;
    // remove the fixed-alpha IBP+Jeffreys terms and add the marginal ones
    const double hn = harmonic_number(2);
    const double K = 1.0;
    const double alpha_terms_fixed = K * std::log(s.alpha) - s.alpha * hn - std::log(s.alpha);
    const double alpha_marginal = std::lgamma(K) - K * std::log(hn);
    const double oracle_value = log_joint_delta - alpha_terms_fixed + alpha_marginal;

    const double lib = log_collapsed_posterior_PZsigma(s.P, s.Z, s.sigma2, hyper, data);
    CHECK(lib == doctest::Approx(oracle_value).epsilon(1e-6));

    SUBCASE("K=0 equals noise likelihood plus constants")
    {
        BinaryActivation empty(2);
        const double lp =
            log_collapsed_posterior_PZsigma(Eigen::MatrixXd(2, 0), empty, 0.5, hyper, data);
        const double expect =
            -2.0 * std::log(2 * M_PI * 0.5) - data.Y.squaredNorm() - std::log(0.5);
        CHECK(lp == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("monotone in an active squared projection")
    {
        // increasing the b-accumulator raises the collapsed direction term
        double prev = -1e300;
        for (double sbar : {0.1, 0.5, 2.0, 8.0, 32.0}) {
            const double v = collapsed_direction_term(3.0, sbar, hyper);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("polar projection returns the nearest orthonormal matrix")
{
    Rng rng(33);
    const auto q = sample_uniform_stiefel(5, 3, rng);
    Eigen::MatrixXd noisy = q;
    std::normal_distribution<double> g;
    for (int i = 0; i < noisy.rows(); ++i)
        for (int j = 0; j < noisy.cols(); ++j) noisy(i, j) += 1e-3 * g(rng);
    const auto p = polar_orthonormal(noisy);
    CHECK(is_orthonormal(p, 1e-12));
    CHECK((p - q).norm() < 1e-2);
}

TEST_CASE("dataset centering")
{
    Eigen::MatrixXd y(2, 3);
    y << 1.0, 2.0, 6.0, -1.0, 0.0, 4.0;
    const Dataset d = center_dataset(y);
    CHECK(d.centered);
    CHECK(d.Y.rowwise().mean().norm() < 1e-14);
    CHECK(d.original_mean(0) == doctest::Approx(3.0));
    CHECK_NOTHROW(d.validate());
}
