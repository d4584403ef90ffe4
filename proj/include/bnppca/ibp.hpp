// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <vector>

#include "bnppca/rng.hpp"

namespace bnppca {

// Binary activation matrix: row k holds the activations of direction k across
// the N observations. Invariant: no all-zero rows (they are pruned on sight).
struct BinaryActivation {
    int n_obs = 0;
    std::vector<std::vector<std::uint8_t>> rows;

    BinaryActivation() = default;
    explicit BinaryActivation(int n) : n_obs(n) {}

    int K() const { return static_cast<int>(rows.size()); }
    int N() const { return n_obs; }

    int row_sum(int k) const;
    // throws std::domain_error on zero rows, length mismatches or non-binary entries
    void validate() const;
};

// Floor applied to the Gamma shape of the alpha update when K = 0 (the
// Jeffreys conditional is improper there).
inline constexpr double kAlphaShapeFloor = 1e-2;

// log P[Z | alpha], the exchangeable feature probability function: includes
// the history multiplicity factor prod_h 1/K_h! with identical rows counted
// by exact row comparison. K = 0 gives -alpha H_N.
double ibp_log_prob(const BinaryActivation& Z, double alpha);

// Buffet simulation: customer 1 draws Poisson(alpha) dishes, customer n
// reuses dish k with probability m_k/n and adds Poisson(alpha/n) new ones.
BinaryActivation sample_ibp(double alpha, int N, Rng& rng);

// alpha | Z ~ Gamma(shape K, rate H_N); K = 0 uses shape kAlphaShapeFloor.
double sample_alpha_posterior(int K, int N, Rng& rng);

}  // namespace bnppca
