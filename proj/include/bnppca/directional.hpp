// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>

#include "bnppca/rng.hpp"

namespace bnppca {

// A UnitVector is an Eigen vector with ||v|| = 1 (1e-10), a StiefelMatrix a
// D x K matrix with P^T P = I_K (1e-10 Frobenius). Checked where contracts
// require it rather than wrapped in dedicated classes.
using UnitVector = Eigen::VectorXd;
using StiefelMatrix = Eigen::MatrixXd;

bool is_unit_vector(const Eigen::VectorXd& v, double tol = 1e-10);
bool is_orthonormal(const Eigen::MatrixXd& m, double tol = 1e-10);

// log vol(V_K(R^D)) = log [ 2^K pi^{DK/2} / ( pi^{K(K-1)/4} prod_{i=1..K}
// Gamma((D-i+1)/2) ) ]; K = 0 gives log 1 = 0.
double stiefel_log_volume(int D, int K);

// Haar draw on V_K(R^D): QR of a Gaussian matrix with the R diagonal forced
// positive, so the map from the Gaussian draw is deterministic.
StiefelMatrix sample_uniform_stiefel(int D, int K, Rng& rng);

// Uniform draw on the unit sphere S^{p-1}.
UnitVector sample_uniform_sphere(int p, Rng& rng);

// von Mises-Fisher on S^{p-1}, density prop. to exp(kappa mu^T x).
// Sampling uses the beta-envelope rejection on the cosine t = mu^T x.
UnitVector sample_vmf_sphere(const UnitVector& mu, double kappa, Rng& rng);

// Cosine marginal draw t ~ f(t) prop. to exp(kappa t)(1-t^2)^{(p-3)/2}, p >= 2.
double sample_vmf_cosine(int p, double kappa, Rng& rng);

// log of the vMF normalizer c_p(kappa) = E_{Haar}[exp(kappa mu^T x)].
double vmf_log_normalizer(int p, double kappa);

// Normalized log density of x w.r.t. the uniform (Haar) probability measure.
double vmf_log_density(const UnitVector& x, const UnitVector& mu, double kappa);

// Vector Bingham on S^{p-1}, density prop. to exp(x^T Lambda x); invariant to
// Lambda -> Lambda + c I. Rejection sampling with an angular-central-Gaussian
// envelope; per-coordinate (Givens-pair) Gibbs fallback when the envelope
// acceptance collapses.
UnitVector sample_bingham_sphere(const Eigen::MatrixXd& Lambda, Rng& rng);

// von Mises on the circle, density prop. to exp(kappa cos(theta - mu)).
double sample_von_mises(double mu, double kappa, Rng& rng);

// Shifted inverse gamma sIG(a, b): density
//   p(x) = b^a / gamma(a,b) (1+x)^{-(a+1)} exp(-b/(1+x)),  x > 0,
// with gamma the lower incomplete gamma function.
struct SIGParams {
    double a = 1.0;
    double b = 0.1;
};

// Draw via u = 1 + x with u^{-1} ~ Gamma(a, rate b) truncated to (0,1);
// the truncated Gamma is inverted through its cdf (monotone bisection).
double sample_sig(const SIGParams& params, Rng& rng);

double sig_log_density(double x, const SIGParams& params);
double sig_mean(const SIGParams& params);   // +inf when a <= 1
double sig_var(const SIGParams& params);    // +inf when a <= 2

}  // namespace bnppca
