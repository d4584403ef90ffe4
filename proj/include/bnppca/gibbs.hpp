// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bnppca/model.hpp"

namespace bnppca {

struct SingletonProposal {
    int kappa_star = 0;
    std::vector<UnitVector> new_directions;  // ambient coordinates, mutually
                                             // orthonormal and orthogonal to
                                             // the retained directions
};

// One Gibbs draw of a shared (non-singleton) activation entry z_{k,n}; the
// direction's delta^2_k is marginalized out of the odds. Requires
// m_k(n) = sum_{i != n} z_{k,i} > 0, else std::logic_error (that entry is a
// singleton and belongs to the Metropolis-Hastings move). Returns the new bit
// and updates the state in place.
int gibbs_update_shared_z(int k, int n, LatentState& state, const Hyperparams& hyper,
                          const Dataset& data, Rng& rng);

// log odds P(z_{k,n}=1 | ...)/P(z_{k,n}=0 | ...) used by gibbs_update_shared_z;
// exposed so tests can pin the kernel against density ratios.
double gibbs_shared_z_log_odds(int k, int n, const LatentState& state, const Hyperparams& hyper,
                               const Dataset& data);

// Draw kappa* from (card(I_n)/D) delta_0 + (1 - card(I_n)/D) Poisson(alpha),
// truncated to card(I_n) + kappa* <= D, then build the new directions one by
// one: vMF around the leading eigenvector of the complement-projected Y Y^T,
// concentration scaled by lambda/(2 sigma^2).
SingletonProposal propose_singletons(int n, const LatentState& state, const Dataset& data,
                                     const Hyperparams& hyper, Rng& rng);

// Metropolis-Hastings acceptance of a singleton proposal for observation n;
// returns the (possibly unchanged) state with all-zero rows pruned.
LatentState accept_singletons(int n, const LatentState& state, const SingletonProposal& proposal,
                              const Hyperparams& hyper, const Dataset& data, Rng& rng);

// log acceptance ratio of the singleton move (before min with 0).
double singleton_log_acceptance(int n, const LatentState& state, const SingletonProposal& proposal,
                                const Hyperparams& hyper, const Dataset& data);

// Bingham draw of direction k on the complement sphere of the other active
// directions; the returned column keeps P orthonormal.
UnitVector sample_direction(int k, const LatentState& state, const Hyperparams& hyper,
                            const Dataset& data, Rng& rng);

// delta^2_k ~ sIG(a_delta + (1/2) sum_n z_{k,n},
//                 b_delta + (1/2 sigma^2) sum_n z_{k,n} <p_k,y_n>^2).
double sample_scale(int k, const LatentState& state, const Hyperparams& hyper,
                    const Dataset& data, Rng& rng);

// sigma^2 ~ IG(ND/2, tr(YY^T)/2 - sum_{k,n} (1/2) delta2/(1+delta2) z <y,p>^2).
double sample_noise(const LatentState& state, const Hyperparams& hyper,
                    const Dataset& data, Rng& rng);

// Full collapsed Gibbs chain: n_burn + n_iter sweeps of (Z with singleton MH,
// directions + scales, noise, alpha), keeping the last n_iter states.
// `init` overrides the default initialization when non-null.
ChainTrace run_chain(const Dataset& data, const Hyperparams& hyper, Rng& rng,
                     const LatentState* init = nullptr);

// --- trace serialization (columnar text, bit-exact round trip) ---
//
// Header:  "bnppca-trace 1"
//          "D <D> N <N> n_burn <b> n_iter <i> seed <s> mh_proposed <p> mh_accepted <a>"
// Records: one line per kept sample,
//          <iter> <K> <P: D*K doubles column-major> <Z: K strings of N '0'/'1'>
//          <delta2: K doubles> <sigma2> <alpha>
// Doubles are printed with %.17g, which round-trips IEEE754 binary64 exactly.
void write_trace(std::ostream& os, const ChainTrace& trace);
void write_trace_file(const std::string& path, const ChainTrace& trace);
ChainTrace read_trace(std::istream& is);
ChainTrace read_trace_file(const std::string& path);

}  // namespace bnppca
