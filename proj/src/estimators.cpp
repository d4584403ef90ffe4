// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/estimators.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace bnppca {

namespace {

// 64-point Gauss-Legendre nodes/weights on [-1,1], generated by Newton
// iteration on the Legendre recurrence at first use.
struct GaussLegendre64 {
    double node[64];
    double weight[64];
    GaussLegendre64()
    {
        const int n = 64;
        for (int i = 0; i < n / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            node[i] = -x;
            node[n - 1 - i] = x;
            weight[i] = weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
        }
    }
};

double integrate_cos_power(double theta_hi, int power)
{
    // int_0^theta cos^power(t) dt by Gauss-Legendre (smooth integrand)
    static const GaussLegendre64 gl;
    const double half = 0.5 * theta_hi;
    double sum = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double t = half * (gl.node[i] + 1.0);
        sum += gl.weight[i] * std::pow(std::cos(t), power);
    }
    return half * sum;
}

}  // namespace

double projection_cdf(double lambda, int L)
{
    if (L < 1) throw std::domain_error("projection_cdf: L < 1");
    if (lambda < 0.0 || lambda > 1.0) throw std::domain_error("projection_cdf: lambda outside [0,1]");
    if (L == 1) return lambda >= 1.0 ? 1.0 : 0.0;
    if (lambda == 0.0) return 0.0;
    if (lambda == 1.0) return 1.0;
    const double c = std::exp(std::lgamma(0.5 * L) - 0.5 * std::log(M_PI) - std::lgamma(0.5 * (L - 1)));
    // substitute z = sin(theta): integral becomes int_0^{asin lambda} cos^{L-2}
    const double val = 2.0 * c * integrate_cos_power(std::asin(lambda), L - 2);
    return std::clamp(val, 0.0, 1.0);
}

int k_mmap(const ChainTrace& trace)
{
    if (trace.samples.empty()) throw std::domain_error("k_mmap: empty trace");
    std::map<int, int> counts;
    for (const LatentState& s : trace.samples) counts[s.K()] += 1;
    int best_k = 0, best_c = -1;
    for (const auto& [k, c] : counts) {
        if (c > best_c) {  // map iterates K ascending: ties keep the smaller K
            best_k = k;
            best_c = c;
        }
    }
    return best_k;
}

double integrated_autocorr_time(const std::vector<double>& series)
{
    const int n = static_cast<int>(series.size());
    if (n < 4) return 1.0;
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    std::vector<double> x(series);
    for (double& v : x) v -= mean;
    const int max_lag = n / 3;
    std::vector<double> rho(max_lag + 1, 0.0);
    double c0 = 0.0;
    for (int i = 0; i < n; ++i) c0 += x[i] * x[i];
    c0 /= n;
    if (c0 <= 0.0) return 1.0;
    for (int t = 0; t <= max_lag; ++t) {
        double c = 0.0;
        for (int i = 0; i + t < n; ++i) c += x[i] * x[i + t];
        rho[t] = c / (n * c0);
    }
    // Geyer: sum pairs while positive, enforcing monotone decrease
    double tau = -1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int m = 0; 2 * m + 1 <= max_lag; ++m) {
        double g = rho[2 * m] + rho[2 * m + 1];
        if (g <= 0.0) break;
        g = std::min(g, prev);
        prev = g;
        tau += 2.0 * g;
    }
    return std::max(1.0, tau);
}

std::pair<int, KsReport> k_ks(const ChainTrace& trace, const Dataset& data, double level, Rng& rng)
{
    if (trace.samples.empty()) throw std::domain_error("k_ks: empty trace");
    if (!(level > 0.0 && level < 1.0)) throw std::domain_error("k_ks: level outside (0,1)");
    if (data.D() != trace.D) throw std::domain_error("k_ks: data/trace dimension mismatch");
    const int D = trace.D;
    const int T = static_cast<int>(trace.samples.size());

    // fixed test vectors u_1..u_D
    Eigen::MatrixXd U(D, D);
    for (int j = 0; j < D; ++j) U.col(j) = sample_uniform_sphere(D, rng);

    // omega values per candidate K, grouped by iteration for thinning
    std::vector<std::vector<std::vector<double>>> omegas(D);
    std::vector<std::vector<double>> iter_mean(D);

    for (int t = 0; t < T; ++t) {
        const LatentState& s = trace.samples[t];
        const int Kt = s.K();
        // relabel active directions by activation frequency, ties by index
        std::vector<int> order(Kt);
        std::iota(order.begin(), order.end(), 0);
        std::vector<int> msum(Kt);
        for (int k = 0; k < Kt; ++k) msum[k] = s.Z.row_sum(k);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return msum[a] > msum[b]; });

        Eigen::MatrixXd Q(D, D);
        for (int k = 0; k < Kt; ++k) Q.col(k) = s.P.col(order[k]);
        if (Kt < D) {
            // uniform completion: inactive columns are Haar given the active span
            Eigen::MatrixXd active = Q.leftCols(Kt);
            const StiefelMatrix comp = orthonormal_complement(active);
            const StiefelMatrix haar = sample_uniform_stiefel(D - Kt, D - Kt, rng);
            Q.rightCols(D - Kt) = comp * haar;
        }

        const Eigen::MatrixXd G = Q.transpose() * U;  // G(i,j) = <q_i, u_j>
        // suffix sums of squares per column
        Eigen::MatrixXd ssq = Eigen::MatrixXd::Zero(D + 1, D);
        for (int i = D - 1; i >= 0; --i)
            ssq.row(i) = ssq.row(i + 1) + G.row(i).cwiseAbs2();
        for (int K = 0; K < D - 1; ++K) {
            std::vector<double> vals;
            vals.reserve(D - K);
            for (int j = K; j < D; ++j) {  // 0-based: directions j = K..D-1
                const double denom = std::sqrt(ssq(K, j));
                if (denom < 1e-150) continue;
                vals.push_back(std::min(1.0, std::abs(G(j, j)) / denom));
            }
            const double mean =
                vals.empty() ? 0.0 : std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
            iter_mean[K].push_back(mean);
            omegas[K].push_back(std::move(vals));
        }
    }

    // Decisions for every candidate K (Table-2 style reporting); the selection
    // rule below still takes the smallest non-rejected K.
    KsReport report;
    report.level = level;
    report.k_mmap = k_mmap(trace);
    for (int K = 0; K < D; ++K) {
        KsRow row;
        row.K = K;
        if (K == D - 1) {  // L = 1: omega is identically 1, nothing to test
            row.skipped = true;
            row.stat = 0.0;
            row.pvalue = 1.0;
            row.rejected = false;
            report.per_k.push_back(row);
            continue;
        }
        const int L = D - K;
        const double tau = integrated_autocorr_time(iter_mean[K]);
        const int stride = std::max(1, static_cast<int>(std::ceil(tau)));
        std::vector<double> pooled;
        const int iters = static_cast<int>(omegas[K].size());
        for (int t = 0; t < iters; t += stride)
            pooled.insert(pooled.end(), omegas[K][t].begin(), omegas[K][t].end());
        const KsTestResult ks =
            ks_test_against_cdf(std::move(pooled), [L](double x) { return projection_cdf(x, L); });
        row.stat = ks.stat;
        row.pvalue = ks.pvalue;
        row.rejected = ks.pvalue < level;
        report.per_k.push_back(row);
    }
    int selected = -1;
    for (int K = 0; K < D - 1 && selected < 0; ++K)
        if (!report.per_k[K].rejected) selected = K;
    if (selected < 0) selected = D - 1;  // degenerate row accepted by convention
    report.k_ks = selected;
    return {selected, report};
}

StiefelMatrix match_columns(const StiefelMatrix& P_ref, const StiefelMatrix& P_hat)
{
    if (P_ref.rows() != P_hat.rows() || P_ref.cols() != P_hat.cols())
        throw std::domain_error("match_columns: shape mismatch");
    const int K = static_cast<int>(P_ref.cols());
    if (K == 0) return P_hat;
    Eigen::MatrixXd score = (P_ref.transpose() * P_hat).cwiseAbs();
    const Eigen::MatrixXd inner = P_ref.transpose() * P_hat;
    StiefelMatrix out(P_hat.rows(), K);
    std::vector<bool> used_ref(K, false), used_hat(K, false);
    for (int pick = 0; pick < K; ++pick) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (int i = 0; i < K; ++i) {
            if (used_ref[i]) continue;
            for (int j = 0; j < K; ++j) {
                if (used_hat[j]) continue;
                if (score(i, j) > best) {
                    best = score(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        used_ref[bi] = true;
        used_hat[bj] = true;
        out.col(bi) = (inner(bi, bj) < 0.0 ? -1.0 : 1.0) * P_hat.col(bj);
    }
    return out;
}

StiefelMatrix conditional_mmse_P(const ChainTrace& trace, int K_hat)
{
    if (trace.samples.empty()) throw std::domain_error("conditional_mmse_P: empty trace");
    std::vector<const LatentState*> qualifying;
    std::map<int, int> available;
    for (const LatentState& s : trace.samples) {
        available[s.K()] += 1;
        if (s.K() == K_hat) qualifying.push_back(&s);
    }
    if (qualifying.empty()) {
        std::vector<int> nearest;
        for (const auto& [k, c] : available) nearest.push_back(k);
        std::sort(nearest.begin(), nearest.end(),
                  [K_hat](int a, int b) { return std::abs(a - K_hat) < std::abs(b - K_hat); });
        std::string msg = "conditional_mmse_P: no sample with K = " + std::to_string(K_hat)
                          + "; nearest available K:";
        for (std::size_t i = 0; i < std::min<std::size_t>(3, nearest.size()); ++i)
            msg += " " + std::to_string(nearest[i]);
        throw ConditionUnmetError(msg, nearest);
    }
    if (K_hat == 0) return Eigen::MatrixXd(trace.D, 0);

    // stabilize column order by activation frequency, then match to the first
    // qualifying sample (handles arbitrary column order and signs)
    const auto relabel = [](const LatentState& s) {
        const int K = s.K();
        std::vector<int> order(K);
        std::iota(order.begin(), order.end(), 0);
        std::vector<int> msum(K);
        for (int k = 0; k < K; ++k) msum[k] = s.Z.row_sum(k);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return msum[a] > msum[b]; });
        Eigen::MatrixXd p(s.P.rows(), K);
        for (int k = 0; k < K; ++k) p.col(k) = s.P.col(order[k]);
        return p;
    };

    const Eigen::MatrixXd ref = relabel(*qualifying.front());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ref.rows(), ref.cols());
    for (const LatentState* s : qualifying) acc += match_columns(ref, relabel(*s));
    acc /= static_cast<double>(qualifying.size());
    return polar_orthonormal(acc);
}

Eigen::VectorXd alignment_scores(const StiefelMatrix& P_true, const StiefelMatrix& P_hat)
{
    if (P_true.rows() != P_hat.rows() || P_true.cols() != P_hat.cols())
        throw std::domain_error("alignment_scores: shape mismatch");
    const int K = static_cast<int>(P_true.cols());
    Eigen::VectorXd scores(K);
    for (int k = 0; k < K; ++k) scores(k) = std::abs(P_true.col(k).dot(P_hat.col(k)));
    return scores;
}

}  // namespace bnppca
