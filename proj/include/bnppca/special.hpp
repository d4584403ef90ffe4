// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

namespace bnppca {

// log I_nu(x), modified Bessel function of the first kind, nu >= -1/2, x > 0.
// Series expansion for small/moderate x, large-argument asymptotics otherwise.
double log_bessel_i(double nu, double x);

// log gamma(a, x) where gamma is the *lower* incomplete gamma function
// int_0^x t^{a-1} e^{-t} dt, a > 0, x >= 0. Computed in log space so it stays
// finite for parameters where gamma(a,x) itself under/overflows.
double log_lower_inc_gamma(double a, double x);

// Regularized incomplete gamma P(a,x) = gamma(a,x)/Gamma(a) and its complement.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

// H_N = sum_{n=1..N} 1/n.
double harmonic_number(int n);

// Regularized chi-square upper tail P(X > x) with k degrees of freedom.
double chi2_sf(double x, double k);

}  // namespace bnppca
