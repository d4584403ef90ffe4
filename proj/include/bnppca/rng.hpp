// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <random>

namespace bnppca {

// All samplers take an injected generator; callers own the stream.
using Rng = std::mt19937_64;

inline double runif(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rnorm(Rng& rng)
{
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double rgamma(double shape, double scale, Rng& rng)
{
    return std::gamma_distribution<double>(shape, scale)(rng);
}

inline double rbeta(double a, double b, Rng& rng)
{
    const double x = rgamma(a, 1.0, rng);
    const double y = rgamma(b, 1.0, rng);
    return x / (x + y);
}

inline int rpois(double mean, Rng& rng)
{
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(rng);
}

inline Eigen::VectorXd rnorm_vector(int n, Rng& rng)
{
    Eigen::VectorXd v(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
}

}  // namespace bnppca
