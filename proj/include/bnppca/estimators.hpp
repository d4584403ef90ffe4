// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bnppca/model.hpp"
#include "bnppca/special.hpp"

namespace bnppca {

// cdf of omega = |w^T u| for w uniform on S^{L-1} and u a fixed unit vector:
// F_L(lambda) = 2 c_L int_0^lambda (1-z^2)^{(L-3)/2} dz,
// c_L = Gamma(L/2) / (sqrt(pi) Gamma((L-1)/2)); L = 1 degenerates to the unit
// step at 1.
double projection_cdf(double lambda, int L);

// Mode of the posterior sample of K; ties broken toward smaller K.
int k_mmap(const ChainTrace& trace);

struct KsRow {
    int K = 0;
    double stat = 0.0;
    double pvalue = 1.0;
    bool rejected = false;
    bool skipped = false;  // L = 1 degenerate row
};

struct KsReport {
    double level = 0.05;
    std::vector<KsRow> per_k;
    int k_ks = 0;
    int k_mmap = 0;
};

// Kolmogorov-Smirnov dimension estimate: relabels directions per iteration by
// activation frequency, completes each sampled basis uniformly at random,
// pools the complement projections onto fixed random unit vectors, thins by
// an integrated-autocorrelation-time estimate, and returns the smallest K
// whose null is not rejected at `level`.
std::pair<int, KsReport> k_ks(const ChainTrace& trace, const Dataset& data, double level, Rng& rng);

// Conditional MMSE estimate of P: average of the samples with K^(t) = K_hat
// after column matching / sign alignment, projected back onto the Stiefel
// manifold through the orthogonal polar factor.
class ConditionUnmetError : public std::runtime_error {
public:
    ConditionUnmetError(const std::string& msg, std::vector<int> nearest)
        : std::runtime_error(msg), nearest_k(std::move(nearest)) {}
    std::vector<int> nearest_k;
};

StiefelMatrix conditional_mmse_P(const ChainTrace& trace, int K_hat);

// |<p_k, p_hat_k>| per column; sign is unidentifiable.
Eigen::VectorXd alignment_scores(const StiefelMatrix& P_true, const StiefelMatrix& P_hat);

// Greedy max-|inner product| matching of P_hat columns onto P_ref columns;
// returns P_hat with columns reordered and sign-flipped to face P_ref.
StiefelMatrix match_columns(const StiefelMatrix& P_ref, const StiefelMatrix& P_hat);

// --- supporting statistics ---

struct KsTestResult {
    double stat = 0.0;
    double pvalue = 1.0;
};

// One-sample two-sided KS test of `samples` against a cdf.
template <typename Cdf>
KsTestResult ks_test_against_cdf(std::vector<double> samples, Cdf cdf)
{
    if (samples.empty()) throw std::domain_error("ks_test_against_cdf: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n, (i + 1.0) / n - f));
    }
    const double sn = std::sqrt(n);
    KsTestResult res;
    res.stat = d;
    res.pvalue = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return res;
}

// Integrated autocorrelation time (Geyer initial monotone sequence); >= 1.
double integrated_autocorr_time(const std::vector<double>& series);

}  // namespace bnppca
