// Apache License, Version 2.0, refer to LICENSE.txt
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bnppca/estimators.hpp"
#include "bnppca/gibbs.hpp"
#include "bnppca/synth.hpp"

namespace py = pybind11;
using namespace bnppca;

namespace {

Eigen::MatrixXi activation_to_matrix(const BinaryActivation& z)
{
    Eigen::MatrixXi m(z.K(), z.N());
    for (int k = 0; k < z.K(); ++k)
        for (int n = 0; n < z.N(); ++n) m(k, n) = z.rows[k][n];
    return m;
}

BinaryActivation activation_from_matrix(const Eigen::MatrixXi& m)
{
    BinaryActivation z(static_cast<int>(m.cols()));
    for (int k = 0; k < m.rows(); ++k) {
        std::vector<std::uint8_t> row(m.cols());
        for (int n = 0; n < m.cols(); ++n) row[n] = m(k, n) != 0;
        z.rows.push_back(std::move(row));
    }
    z.validate();
    return z;
}

}  // namespace

PYBIND11_MODULE(_bnppca, m)
{
    m.doc() = "Bayesian nonparametric PCA: IBP-coupled orthonormal factor model, "
              "collapsed Gibbs sampling and latent-dimension estimators";

    py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>(), py::arg("seed") = 0);

    // directional sampling
    m.def("stiefel_log_volume", &stiefel_log_volume, py::arg("D"), py::arg("K"));
    m.def("sample_uniform_stiefel", &sample_uniform_stiefel, py::arg("D"), py::arg("K"), py::arg("rng"));
    m.def("sample_vmf_sphere", &sample_vmf_sphere, py::arg("mu"), py::arg("kappa"), py::arg("rng"));
    m.def("vmf_log_density", &vmf_log_density, py::arg("x"), py::arg("mu"), py::arg("kappa"));
    m.def("sample_bingham_sphere", &sample_bingham_sphere, py::arg("Lambda"), py::arg("rng"));
    m.def(
        "sample_sig",
        [](double a, double b, Rng& rng) { return sample_sig(SIGParams{a, b}, rng); },
        py::arg("a"), py::arg("b"), py::arg("rng"));
    m.def(
        "sig_log_density", [](double x, double a, double b) { return sig_log_density(x, SIGParams{a, b}); },
        py::arg("x"), py::arg("a"), py::arg("b"));

    // IBP
    m.def(
        "ibp_log_prob",
        [](const Eigen::MatrixXi& z, int n_obs, double alpha) {
            BinaryActivation za = activation_from_matrix(z);
            za.n_obs = n_obs;
            if (z.rows() > 0) za.n_obs = static_cast<int>(z.cols());
            return ibp_log_prob(za, alpha);
        },
        py::arg("Z"), py::arg("n_obs"), py::arg("alpha"));
    m.def(
        "sample_ibp",
        [](double alpha, int n, Rng& rng) { return activation_to_matrix(sample_ibp(alpha, n, rng)); },
        py::arg("alpha"), py::arg("N"), py::arg("rng"));

    // synthetic scenarios
    py::class_<GroundTruth>(m, "GroundTruth")
        .def_readonly("H", &GroundTruth::H)
        .def_readonly("deltas", &GroundTruth::deltas)
        .def_readonly("sigma2", &GroundTruth::sigma2);
    m.def(
        "generate_preset",
        [](const std::string& name, std::uint64_t seed) {
            ScenarioConfig cfg = preset(name);
            cfg.seed = seed;
            Rng rng(seed);
            auto [data, gt] = generate_scenario(cfg, rng);
            return py::make_tuple(data.Y, gt);
        },
        py::arg("name"), py::arg("seed") = 0);

    // model + chain
    py::class_<Hyperparams>(m, "Hyperparams")
        .def(py::init<>())
        .def_readwrite("a_delta", &Hyperparams::a_delta)
        .def_readwrite("b_delta", &Hyperparams::b_delta)
        .def_readwrite("ks_level", &Hyperparams::ks_level)
        .def_readwrite("n_burn", &Hyperparams::n_burn)
        .def_readwrite("n_iter", &Hyperparams::n_iter)
        .def_readwrite("seed", &Hyperparams::seed)
        .def_readwrite("randomized_scan", &Hyperparams::randomized_scan)
        .def_readwrite("activation_shape_increment", &Hyperparams::activation_shape_increment)
        .def_readwrite("proposal_concentration_scale", &Hyperparams::proposal_concentration_scale);

    py::class_<ChainTrace>(m, "ChainTrace")
        .def_property_readonly("n_samples",
                               [](const ChainTrace& t) { return t.samples.size(); })
        .def_property_readonly("k_values",
                               [](const ChainTrace& t) {
                                   std::vector<int> k;
                                   for (const auto& s : t.samples) k.push_back(s.K());
                                   return k;
                               })
        .def("basis", [](const ChainTrace& t, std::size_t i) { return t.samples.at(i).P; })
        .def("activation",
             [](const ChainTrace& t, std::size_t i) { return activation_to_matrix(t.samples.at(i).Z); })
        .def("delta2", [](const ChainTrace& t, std::size_t i) { return t.samples.at(i).delta2; })
        .def("sigma2", [](const ChainTrace& t, std::size_t i) { return t.samples.at(i).sigma2; })
        .def("alpha", [](const ChainTrace& t, std::size_t i) { return t.samples.at(i).alpha; });

    m.def(
        "run_chain",
        [](const Eigen::MatrixXd& Y, const Hyperparams& hyper, bool center) {
            Dataset data;
            if (center)
                data = center_dataset(Y);
            else
                data.Y = Y;
            Rng rng(hyper.seed);
            return run_chain(data, hyper, rng);
        },
        py::arg("Y"), py::arg("hyper") = Hyperparams{}, py::arg("center") = true);

    // estimators
    m.def("projection_cdf", &projection_cdf, py::arg("lam"), py::arg("L"));
    m.def("k_mmap", &k_mmap, py::arg("trace"));
    m.def(
        "k_ks",
        [](const ChainTrace& trace, const Eigen::MatrixXd& Y, double level, std::uint64_t seed) {
            Dataset data;
            data.Y = Y;
            Rng rng(seed);
            auto [k, report] = k_ks(trace, data, level, rng);
            py::list rows;
            for (const auto& r : report.per_k) {
                py::dict d;
                d["K"] = r.K;
                d["stat"] = r.stat;
                d["pvalue"] = r.pvalue;
                d["rejected"] = r.rejected;
                d["skipped"] = r.skipped;
                rows.append(d);
            }
            return py::make_tuple(k, rows);
        },
        py::arg("trace"), py::arg("Y"), py::arg("level") = 0.05, py::arg("seed") = 0);
    m.def("conditional_mmse_P", &conditional_mmse_P, py::arg("trace"), py::arg("K_hat"));
    m.def("alignment_scores", &alignment_scores, py::arg("P_true"), py::arg("P_hat"));
    m.def("match_columns", &match_columns, py::arg("P_ref"), py::arg("P_hat"));
}
