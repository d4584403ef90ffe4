// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bnppca/directional.hpp"
#include "bnppca/ibp.hpp"

namespace bnppca {

struct Dataset {
    Eigen::MatrixXd Y;  // D x N
    bool centered = false;
    Eigen::VectorXd original_mean;  // stored sample mean when centered

    int D() const { return static_cast<int>(Y.rows()); }
    int N() const { return static_cast<int>(Y.cols()); }
    void validate() const;
};

// Subtract the sample mean from every column, remembering it.
Dataset center_dataset(const Eigen::MatrixXd& Y);

struct Hyperparams {
    double a_delta = 1.0;
    double b_delta = 0.1;
    double ks_level = 0.05;
    int n_burn = 100;
    int n_iter = 1000;
    std::uint64_t seed = 0;
    bool randomized_scan = false;
    // Shape weight of one activation in the collapsed scale posteriors:
    // every active entry of direction k contributes
    // (1+delta2_k)^{-activation_shape_increment} alongside its exponential
    // data term. Below 1/2 a pure-noise activation carries an expected Bayes
    // factor >= 1 and spurious directions proliferate; at 1 directions with
    // signal-to-noise ratio around 2 are no longer sustained.
    double activation_shape_increment = 1.0;
    // The singleton vMF proposal uses concentration
    // proposal_concentration_scale * lambda, with lambda the leading eigenvalue
    // of the complement-projected Y Y^T: about N sigma^2 when nothing is left
    // to explain (diffuse) and large while signal remains (sharp).
    double proposal_concentration_scale = 1.0;

    SIGParams sig() const { return SIGParams{a_delta, b_delta}; }
    void validate() const;  // a_delta, b_delta > 0 (Jeffreys limit forbidden), etc.
};

// Current sampler state; only the K active directions are stored.
struct LatentState {
    StiefelMatrix P;              // D x K
    BinaryActivation Z;           // K rows of length N
    std::vector<double> delta2;   // K scale factors
    double sigma2 = 1.0;
    double alpha = 1.0;

    int K() const { return static_cast<int>(P.cols()); }
    void validate(int D, int N) const;
};

struct SweepDiagnostics {
    long singleton_proposed = 0;
    long singleton_accepted = 0;
    long alpha_floor_events = 0;
    long noise_clamp_events = 0;
    std::vector<int> k_per_iteration;  // all sweeps, burn-in included
    double wall_seconds = 0.0;
};

struct ChainTrace {
    int D = 0;
    int N = 0;
    int n_burn = 0;
    int n_iter = 0;
    std::uint64_t seed = 0;
    std::vector<int> iteration;        // global sweep index of each kept sample
    std::vector<LatentState> samples;  // post burn-in
    SweepDiagnostics diagnostics;
};

// --- linear-algebra support ---

// D x (D-m) matrix N with N^T N = I and Psub^T N = 0, deterministic in Psub
// (Householder QR completion, each column's largest-magnitude entry positive).
StiefelMatrix orthonormal_complement(const StiefelMatrix& Psub);

// Top eigenpair of a symmetric matrix, eigenvector's first non-negligible
// coordinate made positive.
std::pair<UnitVector, double> leading_eigpair(const Eigen::MatrixXd& M);

// Orthogonal polar factor (closest matrix with orthonormal columns).
StiefelMatrix polar_orthonormal(const Eigen::MatrixXd& A);

// --- evaluable log posteriors ---
//
// Reference measures: normalized Haar on the Stiefel manifold for P (the
// uniform prior contributes density 1), counting measure for Z, Lebesgue for
// delta^2, sigma^2 and alpha. The constant -(ND/2) log(2 pi) is kept; nothing
// else is dropped.

// Coefficient-marginalized posterior of (P, Z, delta^2, sigma^2, alpha).
double log_marginal_posterior(const LatentState& state, const Hyperparams& hyper,
                              const Dataset& data);

// Posterior with delta^2 and alpha integrated out as well. The alpha integral
// Gamma(K) H_N^{-K} exists only for K >= 1; for K = 0 the (improper) alpha
// factor is omitted, leaving the noise likelihood plus the IBP structural
// terms.
double log_collapsed_posterior_PZsigma(const StiefelMatrix& P, const BinaryActivation& Z,
                                       double sigma2, const Hyperparams& hyper,
                                       const Dataset& data);

// Per-direction factor of the collapsed posterior: the delta^2-marginal of a
// direction with b-accumulator sbar = (1/2 sigma^2) sum_n z_{k,n} <p_k,y_n>^2
// and activation count m. Exposed because the Gibbs odds and the singleton
// acceptance ratio are built from differences of it.
double collapsed_direction_term(double m, double sbar, const Hyperparams& hyper);

}  // namespace bnppca
