// Apache License, Version 2.0, refer to LICENSE.txt
//
// bnppca: generate | fit | estimate | report
// exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnppca/estimators.hpp"
#include "bnppca/gibbs.hpp"
#include "bnppca/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

int max_threads()
{
    if (const char* env = std::getenv("BNPPCA_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& config,
                    double seconds, const std::vector<std::string>& outputs, std::uint64_t seed)
{
    json j;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = fnv1a(config);
    j["seed"] = seed;
    j["version"] = kVersion;
    j["seconds"] = seconds;
    for (const auto& f : outputs) {
        if (!fs::exists(dir / f)) throw std::runtime_error("manifest: missing output " + f);
    }
    j["outputs"] = outputs;
    std::ofstream os(dir / ("manifest_" + command + ".json"));
    os << j.dump(2) << "\n";
}

struct GenerateArgs {
    std::string preset_name;
    int D = 0, K = -1, N = 0;
    std::string schedule;
    double sigma2 = 0.01;
    std::uint64_t seed = 0;
    bool header = false;
    std::string out;
};

int run_generate(const GenerateArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    bnppca::ScenarioConfig cfg;
    if (!a.preset_name.empty()) {
        cfg = bnppca::preset(a.preset_name);
        if (a.D > 0) {
            cfg.D = a.D;
            if (a.preset_name == "fig3_grid")
                cfg.K = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.D))));
            else if (a.preset_name == "whitenoise")
                cfg.K = 0;
            else if (a.preset_name.rfind("anisotropic", 0) == 0)
                cfg.K = a.D;
        }
        if (a.K >= 0) cfg.K = a.K;
        if (a.N > 0) cfg.N = a.N;
        if (!a.schedule.empty()) cfg.schedule = bnppca::parse_schedule(a.schedule);
    } else {
        if (a.D <= 0 || a.K < 0 || a.N <= 0 || a.schedule.empty())
            throw CLI::ValidationError("generate", "need --preset or all of --D --K --N --schedule");
        cfg.D = a.D;
        cfg.K = a.K;
        cfg.N = a.N;
        cfg.schedule = bnppca::parse_schedule(a.schedule);
        cfg.sigma2 = a.sigma2;
    }
    if (a.sigma2 != 0.01) cfg.sigma2 = a.sigma2;
    cfg.seed = a.seed;
    cfg.validate();

    fs::create_directories(a.out);
    bnppca::Rng rng(cfg.seed);
    auto [data, gt] = bnppca::generate_scenario(cfg, rng);
    bnppca::write_matrix_csv((fs::path(a.out) / "data.csv").string(), data.Y, a.header);
    bnppca::write_ground_truth_json((fs::path(a.out) / "ground_truth.json").string(), gt);

    std::string desc = "generate D=" + std::to_string(cfg.D) + " K=" + std::to_string(cfg.K)
                       + " N=" + std::to_string(cfg.N) + " schedule=" + cfg.schedule.describe()
                       + " sigma2=" + std::to_string(cfg.sigma2) + " seed=" + std::to_string(cfg.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(a.out, "generate", desc, secs, {"data.csv", "ground_truth.json"}, cfg.seed);
    return 0;
}

struct FitArgs {
    std::string data;
    std::uint64_t seed = 0;
    int chains = 1;
    int burn = 100;
    int iters = 1000;
    bool no_center = false;
    std::string out;
};

int run_fit(const FitArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd raw = bnppca::read_matrix_csv(a.data);
    bnppca::Dataset data;
    if (a.no_center) {
        data.Y = raw;
    } else {
        data = bnppca::center_dataset(raw);
    }
    data.validate();
    if (data.N() < 2) throw std::domain_error("fit: need N >= 2 observations");

    bnppca::Hyperparams hyper;
    hyper.n_burn = a.burn;
    hyper.n_iter = a.iters;
    fs::create_directories(a.out);

    std::vector<bnppca::ChainTrace> traces(a.chains);
    const int workers = std::min(a.chains, max_threads());
    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= a.chains) return;
            bnppca::Hyperparams h = hyper;
            h.seed = a.seed + static_cast<std::uint64_t>(c);
            bnppca::Rng rng(h.seed);
            traces[c] = bnppca::run_chain(data, h, rng);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers - 1; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<std::string> outputs;
    json diag;
    std::vector<long> k_counts;
    for (int c = 0; c < a.chains; ++c) {
        const std::string name = "trace_" + std::to_string(c) + ".txt";
        bnppca::write_trace_file((fs::path(a.out) / name).string(), traces[c]);
        outputs.push_back(name);
        json d;
        d["chain"] = c;
        d["seed"] = traces[c].seed;
        d["mh_proposed"] = traces[c].diagnostics.singleton_proposed;
        d["mh_accepted"] = traces[c].diagnostics.singleton_accepted;
        d["alpha_floor_events"] = traces[c].diagnostics.alpha_floor_events;
        d["noise_clamp_events"] = traces[c].diagnostics.noise_clamp_events;
        d["wall_seconds"] = traces[c].diagnostics.wall_seconds;
        diag["chains"].push_back(d);
        for (const auto& s : traces[c].samples) {
            if (static_cast<int>(k_counts.size()) <= s.K()) k_counts.resize(s.K() + 1, 0);
            k_counts[s.K()] += 1;
        }
    }
    if (!a.no_center) {
        std::vector<double> mean(data.original_mean.data(),
                                 data.original_mean.data() + data.original_mean.size());
        diag["centered_mean"] = mean;
    }
    {
        std::ofstream os(fs::path(a.out) / "diagnostics.json");
        os << diag.dump(2) << "\n";
        outputs.push_back("diagnostics.json");
    }
    {
        std::ofstream os(fs::path(a.out) / "k_hist.tsv");
        os << "K\tcount\tfrequency\n";
        const double total = std::accumulate(k_counts.begin(), k_counts.end(), 0.0);
        char buf[40];
        for (std::size_t k = 0; k < k_counts.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", k_counts[k] / std::max(1.0, total));
            os << k << "\t" << k_counts[k] << "\t" << buf << "\n";
        }
        outputs.push_back("k_hist.tsv");
    }
    const std::string desc = "fit data=" + a.data + " chains=" + std::to_string(a.chains) + " burn="
                             + std::to_string(a.burn) + " iters=" + std::to_string(a.iters)
                             + " center=" + (a.no_center ? "0" : "1") + " seed=" + std::to_string(a.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(a.out, "fit", desc, secs, outputs, a.seed);
    return 0;
}

struct EstimateArgs {
    std::string trace;
    std::string data;
    std::string truth;
    double level = 0.05;
    std::uint64_t seed = 0;
    std::string out;
};

// Greedy |inner|-matched per-column alignment of P_hat against H.
std::vector<double> matched_alignment(const Eigen::MatrixXd& H, const Eigen::MatrixXd& P_hat)
{
    const int kt = static_cast<int>(H.cols());
    const int kh = static_cast<int>(P_hat.cols());
    std::vector<double> scores(kt, 0.0);
    Eigen::MatrixXd s = (H.transpose() * P_hat).cwiseAbs();
    std::vector<bool> used_t(kt, false), used_h(kh, false);
    for (int pick = 0; pick < std::min(kt, kh); ++pick) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (int i = 0; i < kt; ++i) {
            if (used_t[i]) continue;
            for (int j = 0; j < kh; ++j) {
                if (used_h[j]) continue;
                if (s(i, j) > best) {
                    best = s(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        used_t[bi] = true;
        used_h[bj] = true;
        scores[bi] = best;
    }
    return scores;
}

int run_estimate(const EstimateArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    bnppca::ChainTrace trace = bnppca::read_trace_file(a.trace);
    const Eigen::MatrixXd raw = bnppca::read_matrix_csv(a.data);
    bnppca::Dataset data = bnppca::center_dataset(raw);

    fs::create_directories(a.out);
    bnppca::Rng rng(a.seed);
    const int kmmap = bnppca::k_mmap(trace);
    auto [kks, report] = bnppca::k_ks(trace, data, a.level, rng);

    json j;
    j["k_mmap"] = kmmap;
    j["k_ks"] = kks;
    json ks;
    ks["level"] = report.level;
    ks["k_ks"] = report.k_ks;
    ks["k_mmap"] = report.k_mmap;
    for (const auto& row : report.per_k) {
        json r;
        r["K"] = row.K;
        r["stat"] = row.stat;
        r["pvalue"] = row.pvalue;
        r["rejected"] = row.rejected;
        r["skipped"] = row.skipped;
        ks["per_K"].push_back(r);
    }
    j["ks_report"] = ks;
    j["n_samples"] = trace.samples.size();

    std::vector<std::string> outputs = {"estimate.json"};
    Eigen::MatrixXd p_hat(trace.D, 0);
    try {
        p_hat = bnppca::conditional_mmse_P(trace, kmmap);
        bnppca::write_matrix_csv((fs::path(a.out) / "p_hat.csv").string(), p_hat, false);
        outputs.push_back("p_hat.csv");
    } catch (const bnppca::ConditionUnmetError& e) {
        j["p_hat_error"] = e.what();
    }

    if (!a.truth.empty()) {
        const bnppca::GroundTruth gt = bnppca::read_ground_truth_json(a.truth);
        j["alignment"] = matched_alignment(gt.H, p_hat);
        j["k_true"] = gt.H.cols();
    }
    {
        std::ofstream os(fs::path(a.out) / "estimate.json");
        os << j.dump(2) << "\n";
    }
    const std::string desc = "estimate trace=" + a.trace + " data=" + a.data
                             + " level=" + std::to_string(a.level) + " seed=" + std::to_string(a.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(a.out, "estimate", desc, secs, outputs, a.seed);
    return 0;
}

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out;
};

int run_report(const ReportArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (a.runs.empty()) throw CLI::ValidationError("report", "need at least one run directory");
    fs::create_directories(a.out);
    char buf[48];

    std::vector<long> k_counts;
    std::vector<std::vector<double>> delta2_by_rank;
    std::vector<std::pair<std::string, std::vector<double>>> alpha_by_run;
    std::vector<std::pair<std::string, std::vector<double>>> alignment_by_run;
    // rejection counts per K over runs with an estimate.json
    std::vector<int> reject_count, reject_total;

    for (const std::string& run : a.runs) {
        // traces
        for (const auto& entry : fs::directory_iterator(run)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("trace_", 0) != 0 || entry.path().extension() != ".txt") continue;
            const bnppca::ChainTrace trace = bnppca::read_trace_file(entry.path().string());
            std::vector<double> alphas;
            for (const auto& s : trace.samples) {
                if (static_cast<int>(k_counts.size()) <= s.K()) k_counts.resize(s.K() + 1, 0);
                k_counts[s.K()] += 1;
                alphas.push_back(s.alpha);
                // delta2 pooled by activation rank
                std::vector<int> order(s.K());
                std::iota(order.begin(), order.end(), 0);
                std::vector<int> msum(s.K());
                for (int k = 0; k < s.K(); ++k) msum[k] = s.Z.row_sum(k);
                std::stable_sort(order.begin(), order.end(),
                                 [&](int x, int y) { return msum[x] > msum[y]; });
                for (int r = 0; r < s.K(); ++r) {
                    if (static_cast<int>(delta2_by_rank.size()) <= r) delta2_by_rank.resize(r + 1);
                    delta2_by_rank[r].push_back(s.delta2[order[r]]);
                }
            }
            alpha_by_run.emplace_back(run + "/" + name, std::move(alphas));
        }
        // estimates
        const fs::path est = fs::path(run) / "estimate.json";
        if (fs::exists(est)) {
            std::ifstream is(est);
            json j;
            is >> j;
            if (j.contains("ks_report")) {
                for (const auto& row : j["ks_report"]["per_K"]) {
                    const int K = row["K"].get<int>();
                    if (static_cast<int>(reject_count.size()) <= K) {
                        reject_count.resize(K + 1, 0);
                        reject_total.resize(K + 1, 0);
                    }
                    if (!row["skipped"].get<bool>()) {
                        reject_total[K] += 1;
                        if (row["rejected"].get<bool>()) reject_count[K] += 1;
                    }
                }
            }
            if (j.contains("alignment"))
                alignment_by_run.emplace_back(run, j["alignment"].get<std::vector<double>>());
        }
    }

    std::vector<std::string> outputs;
    {
        std::ofstream os(fs::path(a.out) / "k_hist.tsv");
        os << "K\tcount\tfrequency\n";
        const double total = std::accumulate(k_counts.begin(), k_counts.end(), 0.0);
        for (std::size_t k = 0; k < k_counts.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", k_counts[k] / std::max(1.0, total));
            os << k << "\t" << k_counts[k] << "\t" << buf << "\n";
        }
        outputs.push_back("k_hist.tsv");
    }
    {
        std::ofstream os(fs::path(a.out) / "delta2_summary.tsv");
        os << "k\tcount\tmean\tq05\tq50\tq95\n";
        for (std::size_t r = 0; r < delta2_by_rank.size(); ++r) {
            std::vector<double>& v = delta2_by_rank[r];
            std::sort(v.begin(), v.end());
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            const auto q = [&](double p) { return v[static_cast<std::size_t>(p * (v.size() - 1))]; };
            os << (r + 1) << "\t" << v.size();
            for (double val : {mean, q(0.05), q(0.50), q(0.95)}) {
                std::snprintf(buf, sizeof(buf), "%.17g", val);
                os << "\t" << buf;
            }
            os << "\n";
        }
        outputs.push_back("delta2_summary.tsv");
    }
    {
        std::ofstream os(fs::path(a.out) / "alignment.tsv");
        os << "run\tk\tscore\n";
        for (const auto& [run, scores] : alignment_by_run)
            for (std::size_t k = 0; k < scores.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.17g", scores[k]);
                os << run << "\t" << (k + 1) << "\t" << buf << "\n";
            }
        outputs.push_back("alignment.tsv");
    }
    {
        std::ofstream os(fs::path(a.out) / "alpha_density.tsv");
        os << "run\tbin_lo\tbin_hi\tdensity\n";
        for (const auto& [run, alphas] : alpha_by_run) {
            if (alphas.empty()) continue;
            const double hi = std::max(1e-12, *std::max_element(alphas.begin(), alphas.end()));
            const int bins = 40;
            std::vector<int> hist(bins, 0);
            for (double v : alphas)
                hist[std::min(bins - 1, static_cast<int>(v / hi * bins))] += 1;
            for (int b = 0; b < bins; ++b) {
                const double lo = hi * b / bins, up = hi * (b + 1) / bins;
                const double dens = hist[b] / (alphas.size() * (up - lo));
                os << run << "\t";
                std::snprintf(buf, sizeof(buf), "%.17g", lo);
                os << buf << "\t";
                std::snprintf(buf, sizeof(buf), "%.17g", up);
                os << buf << "\t";
                std::snprintf(buf, sizeof(buf), "%.17g", dens);
                os << buf << "\n";
            }
        }
        outputs.push_back("alpha_density.tsv");
    }
    {
        std::ofstream os(fs::path(a.out) / "rejection_matrix.tsv");
        os << "K\trejected_fraction\tn_runs\n";
        for (std::size_t k = 0; k < reject_count.size(); ++k) {
            if (reject_total[k] == 0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g",
                          static_cast<double>(reject_count[k]) / reject_total[k]);
            os << k << "\t" << buf << "\t" << reject_total[k] << "\n";
        }
        outputs.push_back("rejection_matrix.tsv");
    }
    std::string desc = "report runs=" + std::to_string(a.runs.size());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(a.out, "report", desc, secs, outputs, 0);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian nonparametric PCA: collapsed Gibbs sampling on the Stiefel manifold "
                 "with an Indian buffet process prior"};
    app.require_subcommand(1);

    GenerateArgs g;
    auto* gen = app.add_subcommand("generate", "simulate a synthetic scenario");
    gen->add_option("--preset", g.preset_name, "fig1a|fig1b|fig3_grid|whitenoise|anisotropic200|anisotropic2000");
    gen->add_option("--D", g.D, "observation dimension");
    gen->add_option("--K", g.K, "latent dimension");
    gen->add_option("--N", g.N, "number of observations");
    gen->add_option("--schedule", g.schedule, "zero|fifty_over_k|inv:c|anisotropic:c,p|explicit:v1,v2,...");
    gen->add_option("--sigma2", g.sigma2, "noise variance (default 0.01)");
    gen->add_option("--seed", g.seed, "rng seed");
    gen->add_flag("--header", g.header, "write a CSV header row");
    gen->add_option("-o,--out", g.out, "output directory")->required();

    FitArgs f;
    auto* fit = app.add_subcommand("fit", "run the collapsed Gibbs sampler");
    fit->add_option("--data", f.data, "data CSV (D rows x N columns)")->required();
    fit->add_option("--seed", f.seed, "rng seed (chain c uses seed + c)");
    fit->add_option("--chains", f.chains, "independent chains")->check(CLI::PositiveNumber);
    fit->add_option("--burn", f.burn, "burn-in sweeps (default 100)");
    fit->add_option("--iters", f.iters, "kept sweeps (default 1000)");
    fit->add_flag("--no-center", f.no_center, "skip centering the data");
    fit->add_option("-o,--out", f.out, "output directory")->required();

    EstimateArgs e;
    auto* est = app.add_subcommand("estimate", "dimension estimates and conditional MMSE basis");
    est->add_option("--trace", e.trace, "trace file from fit")->required();
    est->add_option("--data", e.data, "data CSV used for the fit")->required();
    est->add_option("--truth", e.truth, "ground_truth.json for alignment scoring");
    est->add_option("--level", e.level, "KS test level (default 0.05)");
    est->add_option("--seed", e.seed, "rng seed for the KS test vectors");
    est->add_option("-o,--out", e.out, "output directory")->required();

    ReportArgs r;
    auto* rep = app.add_subcommand("report", "aggregate runs into plot-ready TSV tables");
    rep->add_option("runs", r.runs, "run directories (fit/estimate outputs)");
    rep->add_option("-o,--out", r.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return err.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_generate(g);
        if (fit->parsed()) return run_fit(f);
        if (est->parsed()) return run_estimate(e);
        if (rep->parsed()) return run_report(r);
    } catch (const CLI::ValidationError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return 2;
    } catch (const std::domain_error& err) {
        // bad argument combinations for generate; bad data for fit/estimate
        std::fprintf(stderr, "%s error: %s\n", gen->parsed() ? "usage" : "data", err.what());
        return gen->parsed() ? 2 : 3;
    } catch (const std::runtime_error& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return 3;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return 4;
    }
    return 2;
}
