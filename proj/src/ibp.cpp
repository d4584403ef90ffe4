// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/ibp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bnppca/special.hpp"

namespace bnppca {

int BinaryActivation::row_sum(int k) const
{
    int s = 0;
    for (std::uint8_t z : rows[k]) s += z;
    return s;
}

void BinaryActivation::validate() const
{
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != n_obs)
            throw std::domain_error("BinaryActivation: row length != N");
        int s = 0;
        for (std::uint8_t z : row) {
            if (z > 1) throw std::domain_error("BinaryActivation: entries must be 0/1");
            s += z;
        }
        if (s == 0) throw std::domain_error("BinaryActivation: all-zero row");
    }
}

double ibp_log_prob(const BinaryActivation& Z, double alpha)
{
    if (!(alpha > 0.0)) throw std::domain_error("ibp_log_prob: alpha <= 0");
    Z.validate();
    const int N = Z.N();
    const int K = Z.K();
    const double hn = harmonic_number(N);
    double lp = K * std::log(alpha) - alpha * hn;

    std::map<std::vector<std::uint8_t>, int> histories;
    for (int k = 0; k < K; ++k) {
        histories[Z.rows[k]] += 1;
        const int m = Z.row_sum(k);
        lp += std::lgamma(N - m + 1.0) + std::lgamma(static_cast<double>(m)) - std::lgamma(N + 1.0);
    }
    for (const auto& [row, count] : histories) lp -= std::lgamma(count + 1.0);
    return lp;
}

BinaryActivation sample_ibp(double alpha, int N, Rng& rng)
{
    if (!(alpha > 0.0)) throw std::domain_error("sample_ibp: alpha <= 0");
    if (N < 1) throw std::domain_error("sample_ibp: N < 1");
    BinaryActivation Z(N);
    std::vector<int> m;
    for (int n = 0; n < N; ++n) {
        const int existing = Z.K();
        for (int k = 0; k < existing; ++k) {
            if (runif(rng) < static_cast<double>(m[k]) / (n + 1.0)) {
                Z.rows[k][n] = 1;
                m[k] += 1;
            }
        }
        const int fresh = rpois(alpha / (n + 1.0), rng);
        for (int j = 0; j < fresh; ++j) {
            std::vector<std::uint8_t> row(N, 0);
            row[n] = 1;
            Z.rows.push_back(std::move(row));
            m.push_back(1);
        }
    }
    return Z;
}

double sample_alpha_posterior(int K, int N, Rng& rng)
{
    if (N < 1) throw std::domain_error("sample_alpha_posterior: N < 1");
    if (K < 0) throw std::domain_error("sample_alpha_posterior: K < 0");
    const double shape = std::max(static_cast<double>(K), kAlphaShapeFloor);
    const double rate = harmonic_number(N);
    return rgamma(shape, 1.0 / rate, rng);
}

}  // namespace bnppca
