// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "bnppca/special.hpp"

namespace bnppca {

namespace {

struct Hash128 {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    bool operator==(const Hash128& o) const { return a == o.a && b == o.b; }
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const
    {
        return static_cast<std::size_t>(h.a ^ (h.b * 0x9e3779b97f4a7c15ULL));
    }
};

std::uint64_t splitmix64(std::uint64_t& x)
{
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Poisson pmf mixed with a point mass at 0, truncated to {0..kappa_max}.
std::vector<double> singleton_count_pmf(int r, int D, double alpha, int kappa_max)
{
    const double w0 = static_cast<double>(r) / D;
    std::vector<double> pmf(kappa_max + 1, 0.0);
    for (int j = 0; j <= kappa_max; ++j)
        pmf[j] = (1.0 - w0) * std::exp(-alpha + j * std::log(alpha) - std::lgamma(j + 1.0));
    pmf[0] += w0;
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    for (double& p : pmf) p /= total;
    return pmf;
}

// Internal chain with incremental caches. The public per-operation functions
// build one of these from a LatentState, so sampler and oracle tests share a
// single implementation of every conditional.
class Chain {
public:
    Chain(const Dataset& data, const Hyperparams& hyper)
        : hyper_(hyper), Y_(data.Y), D_(data.D()), N_(data.N())
    {
        hyper_.validate();
        data.validate();
        M_ = Y_ * Y_.transpose();
        trY2_ = Y_.squaredNorm();
        key1_.resize(N_);
        key2_.resize(N_);
        std::uint64_t s1 = 0x8c5f3a1d2b4e6f07ULL, s2 = 0x1f83d9abfb41bd6bULL;
        for (int n = 0; n < N_; ++n) {
            key1_[n] = splitmix64(s1);
            key2_[n] = splitmix64(s2);
        }
    }

    void set_state(const LatentState& state)
    {
        state.validate(D_, N_);
        pcols_.clear();
        zrows_ = state.Z.rows;
        delta2_ = state.delta2;
        sigma2_ = state.sigma2;
        alpha_ = state.alpha;
        for (int k = 0; k < state.K(); ++k) pcols_.push_back(state.P.col(k));
        rebuild_caches();
    }

    void init_default(Rng& rng)
    {
        alpha_ = 1.0;
        BinaryActivation z0 = sample_ibp(alpha_, N_, rng);
        while (z0.K() > D_) z0.rows.pop_back();  // K capped at D
        zrows_ = z0.rows;
        const int K = static_cast<int>(zrows_.size());
        // leading eigenvectors of Y Y^T: aligned starting basis so strong
        // directions survive the first sweeps
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M_);
        pcols_.clear();
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXd v = es.eigenvectors().col(D_ - 1 - k);
            for (int i = 0; i < D_; ++i) {
                if (std::abs(v(i)) > 1e-12) {
                    if (v(i) < 0.0) v = -v;
                    break;
                }
            }
            pcols_.push_back(v);
        }
        delta2_.clear();
        for (int k = 0; k < K; ++k) delta2_.push_back(sample_sig(hyper_.sig(), rng));
        sigma2_ = trY2_ / (static_cast<double>(N_) * D_);
        rebuild_caches();
    }

    int K() const { return static_cast<int>(pcols_.size()); }

    LatentState state() const
    {
        LatentState s;
        s.P.resize(D_, K());
        for (int k = 0; k < K(); ++k) s.P.col(k) = pcols_[k];
        s.Z.n_obs = N_;
        s.Z.rows = zrows_;
        s.delta2 = delta2_;
        s.sigma2 = sigma2_;
        s.alpha = alpha_;
        return s;
    }

    int shared_count(int k, int n) const { return m_[k] - zrows_[k][n]; }

    double shared_z_log_odds(int k, int n) const
    {
        const int m_ex = shared_count(k, n);
        if (m_ex <= 0) throw std::logic_error("gibbs_update_shared_z: entry is a singleton (m_k(n) = 0)");
        const int zcur = zrows_[k][n];
        const double pyn = py_[k](n);
        const double sbar_n = pyn * pyn / (2.0 * sigma2_);
        const double sbar_ex = (S_[k] - zcur * pyn * pyn) / (2.0 * sigma2_);

        double logodds = collapsed_direction_term(m_ex + 1.0, sbar_ex + sbar_n, hyper_)
                         - collapsed_direction_term(static_cast<double>(m_ex), sbar_ex, hyper_);
        logodds += std::log(static_cast<double>(m_ex)) - std::log(static_cast<double>(N_ - m_ex));

        // exchangeable-history multiplicity correction
        const Hash128 h1{rowhash_[k].a + (zcur ? 0 : key1_[n]), rowhash_[k].b + (zcur ? 0 : key2_[n])};
        const Hash128 h0{h1.a - key1_[n], h1.b - key2_[n]};
        const int c0 = count_excluding(h0, k);
        const int c1 = count_excluding(h1, k);
        logodds += std::log(c0 + 1.0) - std::log(c1 + 1.0);
        return logodds;
    }

    int update_shared_z(int k, int n, Rng& rng)
    {
        const double logodds = shared_z_log_odds(k, n);
        const double p1 = 1.0 / (1.0 + std::exp(-logodds));
        const int zcur = zrows_[k][n];
        const int znew = runif(rng) < p1 ? 1 : 0;
        if (znew != zcur) flip(k, n);
        return znew;
    }

    SingletonProposal propose(int n, Rng& rng)
    {
        std::vector<int> retained, singles;
        classify(n, retained, singles);
        const int r = static_cast<int>(retained.size());
        const int kappa_max = D_ - r;
        const std::vector<double> pmf = singleton_count_pmf(r, D_, alpha_, kappa_max);

        SingletonProposal prop;
        const double u = runif(rng);
        double acc = 0.0;
        for (int j = 0; j <= kappa_max; ++j) {
            acc += pmf[j];
            if (u <= acc || j == kappa_max) {
                prop.kappa_star = j;
                break;
            }
        }
        for (int i = 0; i < prop.kappa_star; ++i) {
            std::vector<const Eigen::VectorXd*> basis;
            basis.reserve(r + i);
            for (int k : retained) basis.push_back(&pcols_[k]);
            for (const auto& d : prop.new_directions) basis.push_back(&d);
            double lambda = 0.0;
            const Eigen::VectorXd w = projected_leading_direction(basis, &lambda);
            const int L = D_ - static_cast<int>(basis.size());
            const double conc = hyper_.proposal_concentration_scale * lambda;
            Eigen::VectorXd d;
            if (L == 1) {
                const double pplus = 1.0 / (1.0 + std::exp(-2.0 * conc));
                d = (runif(rng) < pplus ? 1.0 : -1.0) * w;
            } else {
                const double t = sample_vmf_cosine(L, conc, rng);
                Eigen::VectorXd g;
                double gn = 0.0;
                do {
                    g = rnorm_vector(D_, rng);
                    project_out(basis, g);
                    g -= w.dot(g) * w;
                    gn = g.norm();
                } while (gn < 1e-12);
                d = t * w + std::sqrt(std::max(0.0, 1.0 - t * t)) * (g / gn);
                project_out(basis, d);  // numerical cleanup
                d /= d.norm();
            }
            prop.new_directions.push_back(std::move(d));
        }
        return prop;
    }

    // Density of an ordered direction list under the iterative construction.
    double ordered_directions_log_density(std::vector<const Eigen::VectorXd*>& basis,
                                          const std::vector<const Eigen::VectorXd*>& dirs) const
    {
        const std::size_t base = basis.size();
        double logq = 0.0;
        for (const Eigen::VectorXd* d : dirs) {
            double lambda = 0.0;
            const Eigen::VectorXd w = projected_leading_direction(basis, &lambda);
            const int L = D_ - static_cast<int>(basis.size());
            const double conc = hyper_.proposal_concentration_scale * lambda;
            logq += conc * std::clamp(w.dot(*d), -1.0, 1.0) - vmf_log_normalizer(L, conc);
            basis.push_back(d);
        }
        basis.resize(base);
        return logq;
    }

    // Proposal density of an unordered direction set: the generation order is
    // latent, so the exact density sums over permutations (done up to size 6;
    // larger sets, never seen in practice, use the given order).
    double proposal_set_log_density(int n, const std::vector<Eigen::VectorXd>& dirs) const
    {
        std::vector<int> retained, singles;
        classify(n, retained, singles);
        std::vector<const Eigen::VectorXd*> basis;
        for (int k : retained) basis.push_back(&pcols_[k]);
        std::vector<const Eigen::VectorXd*> ptrs;
        for (const auto& d : dirs) ptrs.push_back(&d);
        if (ptrs.size() <= 1) return ordered_directions_log_density(basis, ptrs);
        if (ptrs.size() > 6) return ordered_directions_log_density(basis, ptrs);
        std::sort(ptrs.begin(), ptrs.end());
        double lse_max = -std::numeric_limits<double>::infinity();
        std::vector<double> terms;
        do {
            const double lq = ordered_directions_log_density(basis, ptrs);
            terms.push_back(lq);
            lse_max = std::max(lse_max, lq);
        } while (std::next_permutation(ptrs.begin(), ptrs.end()));
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - lse_max);
        return lse_max + std::log(acc) - std::lgamma(static_cast<double>(ptrs.size()) + 1.0);
    }

    double singleton_log_acceptance(int n, const SingletonProposal& prop) const
    {
        std::vector<int> retained, singles;
        classify(n, retained, singles);
        const int r = static_cast<int>(retained.size());
        const int kappa = static_cast<int>(singles.size());
        const int kappa_star = prop.kappa_star;
        const std::vector<double> pmf = singleton_count_pmf(r, D_, alpha_, D_ - r);

        double delta_lik = 0.0;
        for (const auto& d : prop.new_directions) {
            const double proj = d.dot(Y_.col(n));
            delta_lik += collapsed_direction_term(1.0, proj * proj / (2.0 * sigma2_), hyper_);
        }
        for (int k : singles) {
            const double proj = py_[k](n);
            delta_lik -= collapsed_direction_term(1.0, proj * proj / (2.0 * sigma2_), hyper_);
        }
        // Poisson(alpha/N) prior on the singleton count; equals the exact
        // Eq.-(7) ratio including history multiplicities of the e_n rows.
        const double delta_prior = (kappa_star - kappa) * std::log(alpha_ / N_)
                                   + std::lgamma(kappa + 1.0) - std::lgamma(kappa_star + 1.0);
        std::vector<Eigen::VectorXd> old_dirs;
        for (int k : singles) old_dirs.push_back(pcols_[k]);
        const double logq_rev_dirs = proposal_set_log_density(n, old_dirs);
        const double logq_fwd_dirs = proposal_set_log_density(n, prop.new_directions);
        return delta_lik + delta_prior + std::log(pmf[kappa]) - std::log(pmf[kappa_star])
               + logq_rev_dirs - logq_fwd_dirs;
    }

    void apply_singletons(int n, const SingletonProposal& prop, Rng& rng)
    {
        std::vector<int> retained, singles;
        classify(n, retained, singles);
        for (auto it = singles.rbegin(); it != singles.rend(); ++it) remove_direction(*it);
        for (const auto& d : prop.new_directions) {
            const double proj = d.dot(Y_.col(n));
            const double sbar = proj * proj / (2.0 * sigma2_);
            const double d2 = sample_sig(
                SIGParams{hyper_.a_delta + hyper_.activation_shape_increment, hyper_.b_delta + sbar}, rng);
            add_direction(d, n, d2);
        }
    }

    bool singleton_mh(int n, Rng& rng)
    {
        ++diag_.singleton_proposed;
        SingletonProposal prop = propose(n, rng);
        // no singletons on either side: every ratio is 1
        bool has_old = false;
        for (int k = 0; k < K(); ++k)
            if (m_[k] == 1 && zrows_[k][n] == 1) { has_old = true; break; }
        if (prop.kappa_star == 0 && !has_old) {
            ++diag_.singleton_accepted;
            return true;
        }
        const double log_a = singleton_log_acceptance(n, prop);
        if (std::log(runif(rng)) < log_a) {
            apply_singletons(n, prop, rng);
            ++diag_.singleton_accepted;
            return true;
        }
        return false;
    }

    UnitVector draw_direction(int k, Rng& rng) const
    {
        Eigen::MatrixXd others(D_, K() - 1);
        for (int j = 0, c = 0; j < K(); ++j)
            if (j != k) others.col(c++) = pcols_[j];
        const StiefelMatrix comp = orthonormal_complement(others);
        const int L = static_cast<int>(comp.cols());
        // Lambda = c N^T (sum_n z y y^T) N with c = delta2/(2 sigma2 (1+delta2))
        Eigen::MatrixXd G(L, m_[k]);
        int c = 0;
        for (int n = 0; n < N_; ++n)
            if (zrows_[k][n]) G.col(c++) = comp.transpose() * Y_.col(n);
        const double coef = delta2_[k] / (2.0 * sigma2_ * (1.0 + delta2_[k]));
        const Eigen::MatrixXd lambda = coef * (G * G.transpose());
        const UnitVector v = sample_bingham_sphere(lambda, rng);
        UnitVector p = comp * v;
        return p / p.norm();
    }

    void set_direction(int k, const UnitVector& p)
    {
        pcols_[k] = p;
        py_[k] = p.transpose() * Y_;
        refresh_S(k);
    }

    double draw_scale(int k, Rng& rng) const
    {
        return sample_sig(SIGParams{hyper_.a_delta + hyper_.activation_shape_increment * m_[k],
                                    hyper_.b_delta + S_[k] / (2.0 * sigma2_)},
                          rng);
    }

    double draw_noise(Rng& rng)
    {
        double rate = 0.5 * trY2_;
        for (int k = 0; k < K(); ++k) rate -= 0.5 * (delta2_[k] / (1.0 + delta2_[k])) * S_[k];
        if (rate <= 0.0) {
            rate = 1e-12;
            ++diag_.noise_clamp_events;
        }
        const double g = rgamma(0.5 * static_cast<double>(N_) * D_, 1.0, rng);
        return rate / std::max(g, 1e-300);
    }

    void draw_alpha(Rng& rng)
    {
        if (K() == 0) ++diag_.alpha_floor_events;
        alpha_ = sample_alpha_posterior(K(), N_, rng);
    }

    void sweep(Rng& rng)
    {
        std::vector<int> obs_order(N_);
        std::iota(obs_order.begin(), obs_order.end(), 0);
        if (hyper_.randomized_scan) std::shuffle(obs_order.begin(), obs_order.end(), rng);
        for (int n : obs_order) {
            for (int k = 0; k < K(); ++k)
                if (shared_count(k, n) > 0) update_shared_z(k, n, rng);
            singleton_mh(n, rng);
        }
        std::vector<int> dir_order(K());
        std::iota(dir_order.begin(), dir_order.end(), 0);
        if (hyper_.randomized_scan) std::shuffle(dir_order.begin(), dir_order.end(), rng);
        for (int k : dir_order) {
            set_direction(k, draw_direction(k, rng));
            delta2_[k] = draw_scale(k, rng);
        }
        sigma2_ = draw_noise(rng);
        draw_alpha(rng);
    }

    void reorthonormalize()
    {
        if (K() == 0) return;
        Eigen::MatrixXd p(D_, K());
        for (int k = 0; k < K(); ++k) p.col(k) = pcols_[k];
        const Eigen::MatrixXd q = polar_orthonormal(p);
        for (int k = 0; k < K(); ++k) set_direction(k, q.col(k));
    }

    SweepDiagnostics& diagnostics() { return diag_; }
    double sigma2() const { return sigma2_; }
    double alpha() const { return alpha_; }

private:
    void classify(int n, std::vector<int>& retained, std::vector<int>& singles) const
    {
        retained.clear();
        singles.clear();
        for (int k = 0; k < K(); ++k) {
            if (m_[k] - zrows_[k][n] > 0)
                retained.push_back(k);
            else
                singles.push_back(k);  // m_k = 1 and z_{k,n} = 1
        }
    }

    void project_out(const std::vector<const Eigen::VectorXd*>& basis, Eigen::VectorXd& v) const
    {
        for (const Eigen::VectorXd* b : basis) v -= b->dot(v) * (*b);
    }

    // Leading eigen-direction of (I - B B^T) M (I - B B^T) by fixed-count
    // power iteration; deterministic in its inputs, which keeps the MH
    // proposal density well defined.
    Eigen::VectorXd projected_leading_direction(const std::vector<const Eigen::VectorXd*>& basis,
                                                double* lambda_out) const
    {
        Eigen::VectorXd x = M_.rowwise().sum();
        project_out(basis, x);
        double nx = x.norm();
        if (nx < 1e-10) {
            for (int j = 0; j < D_ && nx < 0.5; ++j) {
                x = Eigen::VectorXd::Unit(D_, j);
                project_out(basis, x);
                nx = x.norm();
            }
        }
        x /= std::max(nx, 1e-300);
        for (int it = 0; it < 60; ++it) {
            Eigen::VectorXd y = M_ * x;
            project_out(basis, y);
            const double ny = y.norm();
            if (ny < 1e-14) break;  // M vanishes on the complement
            x = y / ny;
        }
        for (int i = 0; i < D_; ++i) {
            if (std::abs(x(i)) > 1e-9) {
                if (x(i) < 0.0) x = -x;
                break;
            }
        }
        if (lambda_out) *lambda_out = std::max(0.0, x.dot(M_ * x));
        return x;
    }

    int count_excluding(const Hash128& h, int k) const
    {
        const auto it = histcount_.find(h);
        int c = it == histcount_.end() ? 0 : it->second;
        if (rowhash_[k] == h) c -= 1;
        return c;
    }

    void flip(int k, int n)
    {
        decrement_hist(rowhash_[k]);
        const double pyn = py_[k](n);
        if (zrows_[k][n]) {
            zrows_[k][n] = 0;
            m_[k] -= 1;
            S_[k] -= pyn * pyn;
            rowhash_[k].a -= key1_[n];
            rowhash_[k].b -= key2_[n];
        } else {
            zrows_[k][n] = 1;
            m_[k] += 1;
            S_[k] += pyn * pyn;
            rowhash_[k].a += key1_[n];
            rowhash_[k].b += key2_[n];
        }
        histcount_[rowhash_[k]] += 1;
    }

    void decrement_hist(const Hash128& h)
    {
        auto it = histcount_.find(h);
        if (it != histcount_.end() && --(it->second) == 0) histcount_.erase(it);
    }

    void remove_direction(int k)
    {
        decrement_hist(rowhash_[k]);
        pcols_.erase(pcols_.begin() + k);
        zrows_.erase(zrows_.begin() + k);
        delta2_.erase(delta2_.begin() + k);
        py_.erase(py_.begin() + k);
        m_.erase(m_.begin() + k);
        S_.erase(S_.begin() + k);
        rowhash_.erase(rowhash_.begin() + k);
    }

    void add_direction(const Eigen::VectorXd& p, int n, double d2)
    {
        pcols_.push_back(p);
        std::vector<std::uint8_t> row(N_, 0);
        row[n] = 1;
        zrows_.push_back(std::move(row));
        delta2_.push_back(d2);
        py_.push_back(p.transpose() * Y_);
        m_.push_back(1);
        const double pyn = py_.back()(n);
        S_.push_back(pyn * pyn);
        rowhash_.push_back(Hash128{key1_[n], key2_[n]});
        histcount_[rowhash_.back()] += 1;
    }

    void refresh_S(int k)
    {
        double s = 0.0;
        for (int n = 0; n < N_; ++n)
            if (zrows_[k][n]) s += py_[k](n) * py_[k](n);
        S_[k] = s;
    }

    void rebuild_caches()
    {
        const int K = static_cast<int>(pcols_.size());
        py_.resize(K);
        m_.assign(K, 0);
        S_.assign(K, 0.0);
        rowhash_.assign(K, Hash128{});
        histcount_.clear();
        for (int k = 0; k < K; ++k) {
            py_[k] = pcols_[k].transpose() * Y_;
            for (int n = 0; n < N_; ++n) {
                if (zrows_[k][n]) {
                    m_[k] += 1;
                    S_[k] += py_[k](n) * py_[k](n);
                    rowhash_[k].a += key1_[n];
                    rowhash_[k].b += key2_[n];
                }
            }
            histcount_[rowhash_[k]] += 1;
        }
    }

    Hyperparams hyper_;
    Eigen::MatrixXd Y_;
    int D_;
    int N_;
    Eigen::MatrixXd M_;
    double trY2_ = 0.0;
    std::vector<std::uint64_t> key1_, key2_;

    std::vector<Eigen::VectorXd> pcols_;
    std::vector<std::vector<std::uint8_t>> zrows_;
    std::vector<double> delta2_;
    double sigma2_ = 1.0;
    double alpha_ = 1.0;

    std::vector<Eigen::RowVectorXd> py_;
    std::vector<int> m_;
    std::vector<double> S_;
    std::vector<Hash128> rowhash_;
    std::unordered_map<Hash128, int, Hash128Hasher> histcount_;
    SweepDiagnostics diag_;
};

}  // namespace

int gibbs_update_shared_z(int k, int n, LatentState& state, const Hyperparams& hyper,
                          const Dataset& data, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    const int bit = chain.update_shared_z(k, n, rng);
    state = chain.state();
    return bit;
}

double gibbs_shared_z_log_odds(int k, int n, const LatentState& state, const Hyperparams& hyper,
                               const Dataset& data)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.shared_z_log_odds(k, n);
}

SingletonProposal propose_singletons(int n, const LatentState& state, const Dataset& data,
                                     const Hyperparams& hyper, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.propose(n, rng);
}

LatentState accept_singletons(int n, const LatentState& state, const SingletonProposal& proposal,
                              const Hyperparams& hyper, const Dataset& data, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    const double log_a = chain.singleton_log_acceptance(n, proposal);
    if (std::log(runif(rng)) < log_a) chain.apply_singletons(n, proposal, rng);
    return chain.state();
}

double singleton_log_acceptance(int n, const LatentState& state, const SingletonProposal& proposal,
                                const Hyperparams& hyper, const Dataset& data)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.singleton_log_acceptance(n, proposal);
}

UnitVector sample_direction(int k, const LatentState& state, const Hyperparams& hyper,
                            const Dataset& data, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.draw_direction(k, rng);
}

double sample_scale(int k, const LatentState& state, const Hyperparams& hyper,
                    const Dataset& data, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.draw_scale(k, rng);
}

double sample_noise(const LatentState& state, const Hyperparams& hyper, const Dataset& data, Rng& rng)
{
    Chain chain(data, hyper);
    chain.set_state(state);
    return chain.draw_noise(rng);
}

ChainTrace run_chain(const Dataset& data, const Hyperparams& hyper, Rng& rng, const LatentState* init)
{
    if (data.N() < 2) throw std::domain_error("run_chain: need N >= 2");
    const auto t0 = std::chrono::steady_clock::now();
    Chain chain(data, hyper);
    if (init)
        chain.set_state(*init);
    else
        chain.init_default(rng);

    ChainTrace trace;
    trace.D = data.D();
    trace.N = data.N();
    trace.n_burn = hyper.n_burn;
    trace.n_iter = hyper.n_iter;
    trace.seed = hyper.seed;
    trace.samples.reserve(hyper.n_iter);

    const int total = hyper.n_burn + hyper.n_iter;
    for (int t = 0; t < total; ++t) {
        chain.sweep(rng);
        if ((t + 1) % 100 == 0) chain.reorthonormalize();
        chain.diagnostics().k_per_iteration.push_back(chain.K());
        if (t >= hyper.n_burn) {
            trace.iteration.push_back(t);
            trace.samples.push_back(chain.state());
        }
    }
    trace.diagnostics = chain.diagnostics();
    trace.diagnostics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

// --- trace serialization ---

namespace {

void put_double(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
    out += ' ';
}

double get_double(std::istream& is)
{
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("trace: truncated record");
    return std::strtod(tok.c_str(), nullptr);
}

}  // namespace

void write_trace(std::ostream& os, const ChainTrace& trace)
{
    os << "bnppca-trace 1\n";
    os << "D " << trace.D << " N " << trace.N << " n_burn " << trace.n_burn << " n_iter "
       << trace.n_iter << " seed " << trace.seed << " mh_proposed "
       << trace.diagnostics.singleton_proposed << " mh_accepted "
       << trace.diagnostics.singleton_accepted << "\n";
    std::string line;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const LatentState& s = trace.samples[i];
        line.clear();
        line += std::to_string(trace.iteration[i]);
        line += ' ';
        line += std::to_string(s.K());
        line += ' ';
        for (int k = 0; k < s.K(); ++k)
            for (int d = 0; d < s.P.rows(); ++d) put_double(line, s.P(d, k));
        for (int k = 0; k < s.K(); ++k) {
            for (std::uint8_t z : s.Z.rows[k]) line += z ? '1' : '0';
            line += ' ';
        }
        for (double d2 : s.delta2) put_double(line, d2);
        put_double(line, s.sigma2);
        put_double(line, s.alpha);
        line += '\n';
        os << line;
    }
}

void write_trace_file(const std::string& path, const ChainTrace& trace)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open trace file for writing: " + path);
    write_trace(os, trace);
}

ChainTrace read_trace(std::istream& is)
{
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "bnppca-trace" || version != 1)
        throw std::runtime_error("trace: bad magic/version");
    ChainTrace trace;
    std::string key;
    for (int i = 0; i < 7; ++i) {
        if (!(is >> key)) throw std::runtime_error("trace: truncated header");
        if (key == "D")
            is >> trace.D;
        else if (key == "N")
            is >> trace.N;
        else if (key == "n_burn")
            is >> trace.n_burn;
        else if (key == "n_iter")
            is >> trace.n_iter;
        else if (key == "seed")
            is >> trace.seed;
        else if (key == "mh_proposed")
            is >> trace.diagnostics.singleton_proposed;
        else if (key == "mh_accepted")
            is >> trace.diagnostics.singleton_accepted;
        else
            throw std::runtime_error("trace: unknown header key " + key);
    }
    int iter = 0;
    while (is >> iter) {
        int K = 0;
        if (!(is >> K)) throw std::runtime_error("trace: truncated record");
        LatentState s;
        s.P.resize(trace.D, K);
        for (int k = 0; k < K; ++k)
            for (int d = 0; d < trace.D; ++d) s.P(d, k) = get_double(is);
        s.Z.n_obs = trace.N;
        for (int k = 0; k < K; ++k) {
            std::string bits;
            if (!(is >> bits) || static_cast<int>(bits.size()) != trace.N)
                throw std::runtime_error("trace: bad activation row");
            std::vector<std::uint8_t> row(trace.N);
            for (int n = 0; n < trace.N; ++n) row[n] = bits[n] == '1';
            s.Z.rows.push_back(std::move(row));
        }
        s.delta2.resize(K);
        for (int k = 0; k < K; ++k) s.delta2[k] = get_double(is);
        s.sigma2 = get_double(is);
        s.alpha = get_double(is);
        trace.iteration.push_back(iter);
        trace.samples.push_back(std::move(s));
    }
    return trace;
}

ChainTrace read_trace_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open trace file: " + path);
    return read_trace(is);
}

}  // namespace bnppca
