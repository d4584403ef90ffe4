// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "bnppca/special.hpp"

namespace bnppca {

void Dataset::validate() const
{
    if (Y.size() == 0) throw std::domain_error("Dataset: empty");
    if (!Y.allFinite()) throw std::domain_error("Dataset: non-finite entries");
    if (centered) {
        const Eigen::VectorXd mean = Y.rowwise().mean();
        if (mean.norm() > 1e-8 * Y.norm())
            throw std::domain_error("Dataset: marked centered but column mean is not zero");
    }
}

Dataset center_dataset(const Eigen::MatrixXd& Y)
{
    Dataset d;
    d.original_mean = Y.rowwise().mean();
    d.Y = Y.colwise() - d.original_mean.col(0);
    d.centered = true;
    return d;
}

void Hyperparams::validate() const
{
    if (!(a_delta > 0.0) || !(b_delta > 0.0))
        throw std::domain_error("Hyperparams: a_delta, b_delta must be > 0 (Jeffreys limit is improper)");
    if (!(ks_level > 0.0 && ks_level < 1.0)) throw std::domain_error("Hyperparams: ks_level outside (0,1)");
    if (n_burn < 0 || n_iter < 1) throw std::domain_error("Hyperparams: bad chain lengths");
    if (!(proposal_concentration_scale > 0.0))
        throw std::domain_error("Hyperparams: proposal_concentration_scale <= 0");
    if (!(activation_shape_increment > 0.0))
        throw std::domain_error("Hyperparams: activation_shape_increment <= 0");
}

void LatentState::validate(int D, int N) const
{
    const int k = K();
    if (P.rows() != D) throw std::domain_error("LatentState: P row count != D");
    if (k > D) throw std::domain_error("LatentState: K > D");
    if (Z.K() != k || Z.N() != N) throw std::domain_error("LatentState: Z shape mismatch");
    if (static_cast<int>(delta2.size()) != k) throw std::domain_error("LatentState: delta2 length mismatch");
    for (double d2 : delta2)
        if (!(d2 > 0.0)) throw std::domain_error("LatentState: delta2 <= 0");
    if (!(sigma2 > 0.0)) throw std::domain_error("LatentState: sigma2 <= 0");
    if (!(alpha > 0.0)) throw std::domain_error("LatentState: alpha <= 0");
    if (!is_orthonormal(P)) throw std::domain_error("LatentState: P not orthonormal");
    Z.validate();
}

StiefelMatrix orthonormal_complement(const StiefelMatrix& Psub)
{
    const int D = static_cast<int>(Psub.rows());
    const int m = static_cast<int>(Psub.cols());
    if (m > D) throw std::domain_error("orthonormal_complement: more columns than rows");
    if (!is_orthonormal(Psub, 1e-8)) throw std::domain_error("orthonormal_complement: input not orthonormal");
    if (m == 0) return Eigen::MatrixXd::Identity(D, D);
    if (m == D) return Eigen::MatrixXd(D, 0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Psub);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(D, D);
    Eigen::MatrixXd n = q.rightCols(D - m);
    for (int j = 0; j < n.cols(); ++j) {
        int imax = 0;
        n.col(j).cwiseAbs().maxCoeff(&imax);
        if (n(imax, j) < 0.0) n.col(j) = -n.col(j);
    }
    return n;
}

std::pair<UnitVector, double> leading_eigpair(const Eigen::MatrixXd& M)
{
    const int p = static_cast<int>(M.rows());
    if (M.cols() != p) throw std::domain_error("leading_eigpair: not square");
    const double scale = 1.0 + M.cwiseAbs().maxCoeff();
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::domain_error("leading_eigpair: not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    UnitVector v = es.eigenvectors().col(p - 1);
    for (int i = 0; i < p; ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0.0) v = -v;
            break;
        }
    }
    return {v, es.eigenvalues()(p - 1)};
}

StiefelMatrix polar_orthonormal(const Eigen::MatrixXd& A)
{
    if (A.cols() == 0) return A;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

double collapsed_direction_term(double m, double sbar, const Hyperparams& hyper)
{
    const double a = hyper.a_delta + hyper.activation_shape_increment * m;
    const double b = hyper.b_delta + sbar;
    return sbar + log_lower_inc_gamma(a, b) - a * std::log(b)
           + hyper.a_delta * std::log(hyper.b_delta)
           - log_lower_inc_gamma(hyper.a_delta, hyper.b_delta);
}

double log_marginal_posterior(const LatentState& state, const Hyperparams& hyper, const Dataset& data)
{
    hyper.validate();
    data.validate();
    state.validate(data.D(), data.N());
    const int D = data.D();
    const int N = data.N();
    const int K = state.K();
    const double sig2 = state.sigma2;

    double lp = -0.5 * N * D * std::log(2.0 * M_PI * sig2) - data.Y.squaredNorm() / (2.0 * sig2);
    const double log_sig_prior_norm =
        hyper.a_delta * std::log(hyper.b_delta) - log_lower_inc_gamma(hyper.a_delta, hyper.b_delta);
    for (int k = 0; k < K; ++k) {
        const Eigen::RowVectorXd proj = state.P.col(k).transpose() * data.Y;
        double s = 0.0;
        int m = 0;
        for (int n = 0; n < N; ++n) {
            if (state.Z.rows[k][n]) {
                s += proj(n) * proj(n);
                ++m;
            }
        }
        const double d2 = state.delta2[k];
        lp += (d2 / (1.0 + d2)) * s / (2.0 * sig2);
        lp -= (hyper.a_delta + 1.0 + hyper.activation_shape_increment * m) * std::log1p(d2);
        lp -= hyper.b_delta / (1.0 + d2);
        lp += log_sig_prior_norm;
    }
    lp += ibp_log_prob(state.Z, state.alpha);
    lp -= std::log(sig2);
    lp -= std::log(state.alpha);
    return lp;
}

double log_collapsed_posterior_PZsigma(const StiefelMatrix& P, const BinaryActivation& Z,
                                       double sigma2, const Hyperparams& hyper, const Dataset& data)
{
    hyper.validate();
    data.validate();
    if (!(sigma2 > 0.0)) throw std::domain_error("log_collapsed_posterior_PZsigma: sigma2 <= 0");
    if (P.rows() != data.D()) throw std::domain_error("log_collapsed_posterior_PZsigma: P rows != D");
    if (Z.K() != P.cols() || Z.N() != data.N())
        throw std::domain_error("log_collapsed_posterior_PZsigma: Z shape mismatch");
    Z.validate();
    if (!is_orthonormal(P)) throw std::domain_error("log_collapsed_posterior_PZsigma: P not orthonormal");

    const int D = data.D();
    const int N = data.N();
    const int K = Z.K();

    double lp = -0.5 * N * D * std::log(2.0 * M_PI * sigma2) - data.Y.squaredNorm() / (2.0 * sigma2)
                - std::log(sigma2);
    for (int k = 0; k < K; ++k) {
        const Eigen::RowVectorXd proj = P.col(k).transpose() * data.Y;
        double s = 0.0;
        int m = 0;
        for (int n = 0; n < N; ++n) {
            if (Z.rows[k][n]) {
                s += proj(n) * proj(n);
                ++m;
            }
        }
        lp += collapsed_direction_term(m, s / (2.0 * sigma2), hyper);
        lp += std::lgamma(N - m + 1.0) + std::lgamma(static_cast<double>(m)) - std::lgamma(N + 1.0);
    }
    // history multiplicities and the alpha marginal Gamma(K) H_N^{-K} (K >= 1)
    {
        std::map<std::vector<std::uint8_t>, int> histories;
        for (int k = 0; k < K; ++k) histories[Z.rows[k]] += 1;
        for (const auto& [row, count] : histories) lp -= std::lgamma(count + 1.0);
    }
    if (K >= 1) lp += std::lgamma(static_cast<double>(K)) - K * std::log(harmonic_number(N));
    return lp;
}

}  // namespace bnppca
