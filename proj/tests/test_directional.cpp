// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bnppca/directional.hpp"
#include "bnppca/special.hpp"
#include "oracle_utils.hpp"

using namespace bnppca;

namespace {

Eigen::VectorXd unit(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double c : v) x(i++) = c;
    return x / x.norm();
}

}  // namespace

TEST_CASE("stiefel volume: closed forms and sphere areas")
{
    CHECK(stiefel_log_volume(1, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(stiefel_log_volume(2, 1) == doctest::Approx(std::log(2.0 * M_PI)).epsilon(1e-14));
    CHECK(stiefel_log_volume(3, 1) == doctest::Approx(std::log(4.0 * M_PI)).epsilon(1e-14));
    CHECK(stiefel_log_volume(5, 0) == 0.0);
    // vol V_1(R^D) = surface of S^{D-1} = 2 pi^{D/2} / Gamma(D/2)
    for (int d = 1; d <= 10; ++d) {
        const double ref = std::log(2.0) + 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d);
        CHECK(stiefel_log_volume(d, 1) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK_THROWS_AS(stiefel_log_volume(3, 4), std::domain_error);
    CHECK_THROWS_AS(stiefel_log_volume(0, 0), std::domain_error);
}

TEST_CASE("uniform stiefel draws")
{
    Rng rng(11);
    SUBCASE("orthonormality invariant")
    {
        const auto p = sample_uniform_stiefel(5, 3, rng);
        CHECK(is_orthonormal(p, 1e-10));
        CHECK(sample_uniform_stiefel(4, 0, rng).cols() == 0);
    }
    SUBCASE("D=K=1 is a fair sign")
    {
        int pos = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) pos += sample_uniform_stiefel(1, 1, rng)(0, 0) > 0;
        CHECK(std::abs(pos / static_cast<double>(n) - 0.5) < 4.0 * 0.5 / std::sqrt(n));
    }
    SUBCASE("entrywise mean vanishes (symmetry)")
    {
        const int n = 100000;
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        std::vector<double> first;
        for (int i = 0; i < n; ++i) {
            const auto p = sample_uniform_stiefel(3, 1, rng);
            mean += p.col(0);
            first.push_back(p(0, 0));
        }
        mean /= n;
        const auto [m0, se] = oracle::mc_mean_se(first);
        for (int d = 0; d < 3; ++d) CHECK(std::abs(mean(d)) < 4.0 * se);
    }
    SUBCASE("rotation invariance on a linear functional")
    {
        // fixed rotation R: <a, R p> and <a, p> must share a distribution;
        // compare means and second moments at MC precision
        Eigen::Matrix3d r;
        r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 2).normalized());
        const Eigen::Vector3d a(0.3, -0.8, 0.52);
        std::vector<double> plain, rotated;
        for (int i = 0; i < 60000; ++i) {
            const auto p = sample_uniform_stiefel(3, 1, rng);
            plain.push_back(a.dot(p.col(0)));
            rotated.push_back(a.dot(r * p.col(0)));
        }
        const auto [m1, se1] = oracle::mc_mean_se(plain);
        const auto [m2, se2] = oracle::mc_mean_se(rotated);
        CHECK(std::abs(m1 - m2) < 4.0 * std::hypot(se1, se2));
        for (auto& v : plain) v = v * v;
        for (auto& v : rotated) v = v * v;
        const auto [q1, qse1] = oracle::mc_mean_se(plain);
        const auto [q2, qse2] = oracle::mc_mean_se(rotated);
        CHECK(std::abs(q1 - q2) < 4.0 * std::hypot(qse1, qse2));
    }
}

TEST_CASE("von Mises-Fisher sampler and density")
{
    Rng rng(23);
    SUBCASE("kappa=0 reduces to uniform: mean resultant length vanishes")
    {
        const auto mu = unit({1, 0, 0});
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        const int n = 100000;
        for (int i = 0; i < n; ++i) sum += sample_vmf_sphere(mu, 0.0, rng);
        CHECK((sum / n).norm() < 0.02);
    }
    SUBCASE("mean cosine matches the quadrature oracle (p=3, kappa=10)")
    {
        // E[t], t = mu.x, against the 1-D marginal e^{kappa t}(1-t^2)^{(p-3d)/2}
        const int p = 3;
        const double kappa = 10.0;
        const double lognum = oracle::log_integrate_exp(
            [&](double th) {
                return kappa * std::cos(th) + (p - 2) * std::log(std::sin(th))
                       + std::log(std::cos(th) + 1.0 + 1e-300);
            },
            1e-10, M_PI - 1e-10);
        const double logden = oracle::log_integrate_exp(
            [&](double th) { return kappa * std::cos(th) + (p - 2) * std::log(std::sin(th)); },
            1e-10, M_PI - 1e-10);
        const double expected = std::exp(lognum - logden) - 1.0;  // E[cos+1] - 1
        // closed form for p=3: coth(k) - 1/k = I_{3/2}/I_{1/2}
        CHECK(expected == doctest::Approx(1.0 / std::tanh(kappa) - 1.0 / kappa).epsilon(1e-9));
        const auto mu = unit({1, 0, 0});
        std::vector<double> ts;
        for (int i = 0; i < 100000; ++i) ts.push_back(mu.dot(sample_vmf_sphere(mu, kappa, rng)));
        const auto [mean, se] = oracle::mc_mean_se(ts);
        CHECK(std::abs(mean - expected) < 3.0 * se);
    }
    SUBCASE("p=1 two-point law")
    {
        const double kappa = 1.3;
        Eigen::VectorXd mu(1);
        mu << 1.0;
        int hits = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) hits += sample_vmf_sphere(mu, kappa, rng)(0) > 0;
        const double expect = std::exp(kappa) / (std::exp(kappa) + std::exp(-kappa));
        CHECK(std::abs(hits / static_cast<double>(n) - expect)
              < 4.0 * std::sqrt(expect * (1 - expect) / n));
    }
    SUBCASE("density integrates to 1 over the sphere (p=4, kappa=3)")
    {
        const int p = 4;
        const double kappa = 3.0;
        const auto mu = unit({0.5, -0.5, 0.5, 0.5});
        // E_Haar[f] = 1: integrate exp(logdens) against the cosine marginal of Haar
        const double c = std::exp(std::lgamma(0.5 * p) - 0.5 * std::log(M_PI)
                                  - std::lgamma(0.5 * (p - 1)));
        Eigen::VectorXd x = mu;
        const double total = oracle::integrate(
            [&](double th) {
                const double t = std::cos(th);
                const double logdens = kappa * t - vmf_log_normalizer(p, kappa);
                return std::exp(logdens) * c * std::pow(std::sin(th), p - 2);
            },
            0.0, M_PI, 1e-12);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("density is symmetric in x and mu, zero at kappa=0")
    {
        const auto x = unit({0.2, 0.5, -0.6, 0.1});
        const auto mu = unit({-0.3, 0.8, 0.1, 0.3});
        CHECK(vmf_log_density(x, mu, 2.7) == doctest::Approx(vmf_log_density(mu, x, 2.7)));
        CHECK(vmf_log_density(x, mu, 0.0) == 0.0);
        CHECK_THROWS_AS(sample_vmf_sphere(mu, -1.0, rng), std::domain_error);
        CHECK_THROWS_AS(vmf_log_density(unit({1, 0}), mu, 1.0), std::domain_error);
    }
}

TEST_CASE("Bingham sampler")
{
    Rng rng(31);
    SUBCASE("Lambda = 0 gives uniform: covariance = I/p")
    {
        const int p = 3;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto x = sample_bingham_sphere(Eigen::Matrix3d::Zero(), rng);
            cov += x * x.transpose();
        }
        cov /= n;
        CHECK((cov - Eigen::Matrix3d::Identity() / p).norm() < 0.02);
    }
    SUBCASE("E[x1^2] matches quadrature for diag(20, 0)")
    {
        Eigen::Matrix2d lambda = Eigen::Matrix2d::Zero();
        lambda(0, 0) = 20.0;
        const double num = oracle::integrate(
            [](double th) { return std::cos(th) * std::cos(th) * std::exp(20.0 * std::cos(th) * std::cos(th)); },
            0.0, 2.0 * M_PI, 1e-12);
        const double den = oracle::integrate(
            [](double th) { return std::exp(20.0 * std::cos(th) * std::cos(th)); }, 0.0, 2.0 * M_PI,
            1e-12);
        const double expected = num / den;
        std::vector<double> x1sq;
        for (int i = 0; i < 100000; ++i) {
            const auto x = sample_bingham_sphere(lambda, rng);
            x1sq.push_back(x(0) * x(0));
        }
        const auto [mean, se] = oracle::mc_mean_se(x1sq);
        CHECK(std::abs(mean - expected) < 3.0 * se);
    }
    SUBCASE("shift invariance Lambda -> Lambda + cI on a quadratic functional")
    {
        Eigen::Matrix3d lambda;
        lambda << 3.0, 0.4, -0.2, 0.4, -1.0, 0.7, -0.2, 0.7, 0.5;
        Eigen::Matrix3d a;
        a << 1.0, 0.2, 0.0, 0.2, -0.5, 0.3, 0.0, 0.3, 2.0;
        std::vector<double> f0, f1;
        const int n = 40000;
        for (int i = 0; i < n; ++i) {
            const auto x = sample_bingham_sphere(lambda, rng);
            f0.push_back(x.dot(a * x));
            const auto y = sample_bingham_sphere(lambda + 17.0 * Eigen::Matrix3d::Identity(), rng);
            f1.push_back(y.dot(a * y));
        }
        // two-sample KS at level 0.01
        std::sort(f0.begin(), f0.end());
        std::sort(f1.begin(), f1.end());
        double d = 0.0;
        std::size_t i = 0, j = 0;
        while (i < f0.size() && j < f1.size()) {
            if (f0[i] <= f1[j])
                ++i;
            else
                ++j;
            d = std::max(d, std::abs(static_cast<double>(i) / f0.size()
                                     - static_cast<double>(j) / f1.size()));
        }
        const double ne = std::sqrt(static_cast<double>(n) * n / (2.0 * n));
        const double pvalue = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
        CHECK(pvalue > 0.01);
    }
    SUBCASE("rejects a non-symmetric matrix")
    {
        Eigen::Matrix2d bad;
        bad << 1.0, 2.0, 0.0, 1.0;
        CHECK_THROWS_AS(sample_bingham_sphere(bad, rng), std::domain_error);
    }
}

TEST_CASE("shifted inverse gamma")
{
    Rng rng(47);
    SUBCASE("density integrates to 1 (a=1.5, b=6)")
    {
        const SIGParams prm{1.5, 6.0};
        const double total = oracle::integrate(
            [&](double u) {
                // substitute x = u/(1-u) for the infinite range
                const double x = u / (1.0 - u);
                return std::exp(sig_log_density(x, prm)) / ((1.0 - u) * (1.0 - u));
            },
            1e-12, 1.0 - 1e-12, 1e-12);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("variance formula matches quadrature moments (a=3.2, b=5)")
    {
        const SIGParams prm{3.2, 5.0};
        auto moment = [&](int k) {
            return oracle::integrate(
                [&](double u) {
                    const double x = u / (1.0 - u);
                    return std::pow(x, k) * std::exp(sig_log_density(x, prm))
                           / ((1.0 - u) * (1.0 - u));
                },
                1e-12, 1.0 - 1e-12, 1e-13);
        };
        const double m1 = moment(1), m2 = moment(2);
        CHECK(sig_mean(prm) == doctest::Approx(m1).epsilon(1e-7));
        CHECK(sig_var(prm) == doctest::Approx(m2 - m1 * m1).epsilon(1e-6));
    }
    SUBCASE("a=1, b->0 limit has the (1+x)^-2 shape")
    {
        const SIGParams prm{1.0, 1e-9};
        const double r10 = std::exp(sig_log_density(1.0, prm) - sig_log_density(0.5, prm));
        CHECK(r10 == doctest::Approx(std::pow(2.25 / 4.0, 1.0)).epsilon(1e-6));  // (1.5/2)^2
    }
    SUBCASE("empirical mode near b/(a+1) - 1 for (a=1, b=6)")
    {
        const SIGParams prm{1.0, 6.0};
        const int n = 1000000;
        std::vector<int> hist(80, 0);
        for (int i = 0; i < n; ++i) {
            const double x = sample_sig(prm, rng);
            if (x < 8.0) hist[static_cast<int>(x / 0.1)] += 1;
        }
        int best = 0;
        for (std::size_t b = 0; b < hist.size(); ++b)
            if (hist[b] > hist[best]) best = static_cast<int>(b);
        const double mode = (best + 0.5) * 0.1;
        CHECK(mode == doctest::Approx(2.0).epsilon(0.15));
    }
    SUBCASE("empirical mean matches the moment formula (a=2, b=1)")
    {
        const SIGParams prm{2.0, 1.0};
        std::vector<double> xs;
        for (int i = 0; i < 100000; ++i) xs.push_back(sample_sig(prm, rng));
        const auto [mean, se] = oracle::mc_mean_se(xs);
        CHECK(std::abs(mean - sig_mean(prm)) < 3.0 * se);
    }
    SUBCASE("support and domain errors")
    {
        for (int i = 0; i < 1000; ++i) CHECK(sample_sig(SIGParams{0.7, 0.03}, rng) > 0.0);
        CHECK_THROWS_AS(sig_log_density(-1.0, SIGParams{1, 1}), std::domain_error);
        CHECK_THROWS_AS(sample_sig(SIGParams{0.0, 1.0}, rng), std::domain_error);
    }
    SUBCASE("sampler moments match the oracle at 4 MC standard errors (a=2.5, b=4)")
    {
        const SIGParams prm{2.5, 4.0};
        std::vector<double> xs;
        for (int i = 0; i < 120000; ++i) xs.push_back(sample_sig(prm, rng));
        const auto [mean, se] = oracle::mc_mean_se(xs);
        CHECK(std::abs(mean - sig_mean(prm)) < 4.0 * se);
    }
}
