// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/directional.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bnppca/special.hpp"

namespace bnppca {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool is_unit_vector(const Eigen::VectorXd& v, double tol)
{
    return std::abs(v.norm() - 1.0) <= tol;
}

bool is_orthonormal(const Eigen::MatrixXd& m, double tol)
{
    if (m.cols() == 0) return true;
    const Eigen::MatrixXd g = m.transpose() * m;
    return (g - Eigen::MatrixXd::Identity(m.cols(), m.cols())).norm() <= tol;
}

double stiefel_log_volume(int D, int K)
{
    if (D < 1 || K < 0 || K > D) throw std::domain_error("stiefel_log_volume: need 0 <= K <= D, D >= 1");
    double lv = K * std::log(2.0) + 0.25 * K * (2.0 * D - K + 1.0) * std::log(M_PI);
    for (int i = 1; i <= K; ++i) lv -= std::lgamma(0.5 * (D - i + 1));
    return lv;
}

StiefelMatrix sample_uniform_stiefel(int D, int K, Rng& rng)
{
    if (D < 1 || K < 0 || K > D) throw std::domain_error("sample_uniform_stiefel: need 0 <= K <= D, D >= 1");
    if (K == 0) return Eigen::MatrixXd(D, 0);
    Eigen::MatrixXd g(D, K);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < K; ++j)
        for (int i = 0; i < D; ++i) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(D, K);
    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(K, K);
    for (int j = 0; j < K; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

UnitVector sample_uniform_sphere(int p, Rng& rng)
{
    if (p < 1) throw std::domain_error("sample_uniform_sphere: p < 1");
    for (;;) {
        Eigen::VectorXd g = rnorm_vector(p, rng);
        const double n = g.norm();
        if (n > 1e-12) return g / n;
    }
}

double sample_vmf_cosine(int p, double kappa, Rng& rng)
{
    if (p < 2) throw std::domain_error("sample_vmf_cosine: p < 2");
    if (kappa < 0.0) throw std::domain_error("sample_vmf_cosine: kappa < 0");
    const double half = 0.5 * (p - 1);
    if (kappa == 0.0) return 2.0 * rbeta(half, half, rng) - 1.0;
    // Wood (1994) envelope on the cosine.
    const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + (p - 1.0) * (p - 1.0))) / (p - 1.0);
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + (p - 1.0) * std::log(1.0 - x0 * x0);
    for (;;) {
        const double z = rbeta(half, half, rng);
        const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        const double u = runif(rng);
        if (kappa * w + (p - 1.0) * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
    }
}

UnitVector sample_vmf_sphere(const UnitVector& mu, double kappa, Rng& rng)
{
    if (kappa < 0.0) throw std::domain_error("sample_vmf_sphere: kappa < 0");
    if (!is_unit_vector(mu)) throw std::domain_error("sample_vmf_sphere: mu not unit norm");
    const int p = static_cast<int>(mu.size());
    if (p == 1) {
        const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * kappa));
        UnitVector x(1);
        x(0) = runif(rng) < p_plus ? mu(0) : -mu(0);
        return x;
    }
    if (kappa == 0.0) return sample_uniform_sphere(p, rng);
    const double t = sample_vmf_cosine(p, kappa, rng);
    // tangential part: uniform direction orthogonal to mu
    Eigen::VectorXd g;
    double n = 0.0;
    do {
        g = rnorm_vector(p, rng);
        g -= mu.dot(g) * mu;
        n = g.norm();
    } while (n < 1e-12);
    UnitVector x = t * mu + std::sqrt(std::max(0.0, 1.0 - t * t)) * (g / n);
    return x / x.norm();
}

double vmf_log_normalizer(int p, double kappa)
{
    if (p < 1) throw std::domain_error("vmf_log_normalizer: p < 1");
    if (kappa < 0.0) throw std::domain_error("vmf_log_normalizer: kappa < 0");
    if (kappa == 0.0) return 0.0;
    const double nu = 0.5 * p - 1.0;
    return std::lgamma(0.5 * p) + nu * (std::log(2.0) - std::log(kappa)) + log_bessel_i(nu, kappa);
}

double vmf_log_density(const UnitVector& x, const UnitVector& mu, double kappa)
{
    if (x.size() != mu.size()) throw std::domain_error("vmf_log_density: dimension mismatch");
    if (kappa < 0.0) throw std::domain_error("vmf_log_density: kappa < 0");
    return kappa * mu.dot(x) - vmf_log_normalizer(static_cast<int>(x.size()), kappa);
}

double sample_von_mises(double mu, double kappa, Rng& rng)
{
    if (kappa < 0.0) throw std::domain_error("sample_von_mises: kappa < 0");
    if (kappa < 1e-8) return mu + 2.0 * M_PI * (runif(rng) - 0.5);
    if (kappa > 1e13) return mu + rnorm(rng) / std::sqrt(kappa);
    // Best-Fisher wrapped-Cauchy rejection.
    const double r = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (r - std::sqrt(2.0 * r)) / (2.0 * kappa);
    const double s = (1.0 + rho * rho) / (2.0 * rho);
    double w = 0.0;
    for (;;) {
        const double z = std::cos(M_PI * runif(rng));
        w = (1.0 + s * z) / (s + z);
        const double y = kappa * (s - w);
        const double v = runif(rng);
        if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) break;
    }
    const double theta = runif(rng) < 0.5 ? std::acos(w) : -std::acos(w);
    return mu + theta;
}

namespace {

// Gibbs fallback for the vector Bingham in the eigenbasis of -A: updates
// (i,j) planes through the von Mises conditional of the doubled angle.
void bingham_pair_gibbs(Eigen::VectorXd& u, const Eigen::VectorXd& lam, Rng& rng, int sweeps)
{
    const int p = static_cast<int>(u.size());
    for (int s = 0; s < sweeps; ++s) {
        for (int i = 0; i < p; ++i) {
            for (int j = i + 1; j < p; ++j) {
                const double r2 = u(i) * u(i) + u(j) * u(j);
                if (r2 < 1e-14) continue;
                const double b = -0.5 * r2 * (lam(i) - lam(j));
                const double psi = sample_von_mises(b >= 0.0 ? 0.0 : M_PI, std::abs(b), rng);
                const double theta = 0.5 * psi + (runif(rng) < 0.5 ? 0.0 : M_PI);
                const double r = std::sqrt(r2);
                u(i) = r * std::cos(theta);
                u(j) = r * std::sin(theta);
            }
        }
    }
    u /= u.norm();
}

}  // namespace

UnitVector sample_bingham_sphere(const Eigen::MatrixXd& Lambda, Rng& rng)
{
    const int p = static_cast<int>(Lambda.rows());
    if (Lambda.cols() != p) throw std::domain_error("sample_bingham_sphere: Lambda not square");
    const double scale = 1.0 + Lambda.cwiseAbs().maxCoeff();
    if ((Lambda - Lambda.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::domain_error("sample_bingham_sphere: Lambda not symmetric");
    if (p == 1) {
        UnitVector x(1);
        x(0) = runif(rng) < 0.5 ? 1.0 : -1.0;
        return x;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Lambda + Lambda.transpose()));
    const Eigen::VectorXd phi = es.eigenvalues();  // ascending
    const Eigen::MatrixXd e = es.eigenvectors();
    // shift so the target reads exp(-u^T diag(lam) u), lam >= 0, min lam = 0
    const double phimax = phi(p - 1);
    Eigen::VectorXd lam = (phimax - phi.array()).matrix();

    // envelope parameter: solve sum_i 1/(b + 2 lam_i) = 1 on (0, p]
    double lo = 1e-12, hi = static_cast<double>(p);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double f = 0.0;
        for (int i = 0; i < p; ++i) f += 1.0 / (mid + 2.0 * lam(i));
        (f > 1.0 ? lo : hi) = mid;
    }
    const double b = 0.5 * (lo + hi);
    const double log_m = -0.5 * (p - b) + 0.5 * p * std::log(static_cast<double>(p) / b);

    Eigen::VectorXd omega_isqrt(p);
    for (int i = 0; i < p; ++i) omega_isqrt(i) = 1.0 / std::sqrt(1.0 + 2.0 * lam(i) / b);

    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd u(p);
    long rejections = 0;
    for (;;) {
        for (int i = 0; i < p; ++i) u(i) = gauss(rng) * omega_isqrt(i);
        const double n = u.norm();
        if (n < 1e-12) continue;
        u /= n;
        const double s = (lam.array() * u.array().square()).sum();
        const double log_ratio = -s + 0.5 * p * std::log1p(2.0 * s / b) - log_m;
        if (std::log(runif(rng)) < log_ratio) break;
        if (++rejections > 50000) {  // acceptance rate below ~1e-3: Gibbs fallback
            u.setZero();
            u(p - 1) = 1.0;  // mode (lam is 0 at the top eigenvalue)
            bingham_pair_gibbs(u, lam, rng, 50);
            break;
        }
    }
    UnitVector x = e * u;
    return x / x.norm();
}

double sample_sig(const SIGParams& params, Rng& rng)
{
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw std::domain_error("sample_sig: need a, b > 0");
    // invert F(w) = gamma(a, b w)/gamma(a, b) on w in (0,1)
    const double log_total = log_lower_inc_gamma(params.a, params.b);
    const double target = std::log(runif(rng)) + log_total;
    double lo = 0.0, hi = std::nextafter(1.0, 0.0);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double val = mid > 0.0 ? log_lower_inc_gamma(params.a, params.b * mid) : -kInf;
        (val < target ? lo : hi) = mid;
        if (hi - lo <= 1e-16 * hi) break;
    }
    const double w = 0.5 * (lo + hi);
    return std::max(1.0 / w - 1.0, 1e-300);
}

double sig_log_density(double x, const SIGParams& params)
{
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw std::domain_error("sig_log_density: need a, b > 0");
    if (!(x > 0.0)) throw std::domain_error("sig_log_density: x <= 0");
    return params.a * std::log(params.b) - log_lower_inc_gamma(params.a, params.b)
           - (params.a + 1.0) * std::log1p(x) - params.b / (1.0 + x);
}

double sig_mean(const SIGParams& params)
{
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw std::domain_error("sig_mean: need a, b > 0");
    if (params.a <= 1.0) return kInf;
    const double lg = log_lower_inc_gamma(params.a, params.b);
    return params.b * std::exp(log_lower_inc_gamma(params.a - 1.0, params.b) - lg) - 1.0;
}

double sig_var(const SIGParams& params)
{
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw std::domain_error("sig_var: need a, b > 0");
    if (params.a <= 2.0) return kInf;
    const double lg = log_lower_inc_gamma(params.a, params.b);
    const double m1 = std::exp(log_lower_inc_gamma(params.a - 1.0, params.b) - lg);
    const double m2 = std::exp(log_lower_inc_gamma(params.a - 2.0, params.b) - lg);
    return params.b * params.b * (m2 - m1 * m1);
}

}  // namespace bnppca
