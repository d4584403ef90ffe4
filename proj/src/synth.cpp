// Apache License, Version 2.0, refer to LICENSE.txt
#include "bnppca/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bnppca {

std::vector<double> Delta2Schedule::evaluate(int K) const
{
    std::vector<double> out;
    switch (kind) {
        case ScheduleKind::ProportionalInverse:
            for (int k = 1; k <= K; ++k) out.push_back(c / k);
            break;
        case ScheduleKind::Zero:
            out.assign(K, 0.0);
            break;
        case ScheduleKind::Anisotropic:
            for (int k = 1; k <= K; ++k) out.push_back(c / std::pow(static_cast<double>(k), power));
            break;
        case ScheduleKind::Explicit:
            if (static_cast<int>(values.size()) != K)
                throw std::domain_error("Delta2Schedule: explicit list length != K");
            out = values;
            break;
    }
    for (double v : out)
        if (v < 0.0 || !std::isfinite(v)) throw std::domain_error("Delta2Schedule: negative or non-finite value");
    return out;
}

std::string Delta2Schedule::describe() const
{
    std::ostringstream os;
    switch (kind) {
        case ScheduleKind::ProportionalInverse: os << "inv:" << c; break;
        case ScheduleKind::Zero: os << "zero"; break;
        case ScheduleKind::Anisotropic: os << "anisotropic:" << c << "," << power; break;
        case ScheduleKind::Explicit:
            os << "explicit:";
            for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
            break;
    }
    return os.str();
}

Delta2Schedule parse_schedule(const std::string& text)
{
    Delta2Schedule s;
    if (text == "zero") {
        s.kind = ScheduleKind::Zero;
        return s;
    }
    if (text == "fifty_over_k") {
        s.kind = ScheduleKind::ProportionalInverse;
        s.c = 50.0;
        return s;
    }
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "inv") {
        s.kind = ScheduleKind::ProportionalInverse;
        if (!args.empty()) s.c = std::stod(args);
        return s;
    }
    if (head == "anisotropic") {
        s.kind = ScheduleKind::Anisotropic;
        s.c = 10.0;
        s.power = 2.2;
        if (!args.empty()) {
            std::istringstream is(args);
            std::string tok;
            if (std::getline(is, tok, ',')) s.c = std::stod(tok);
            if (std::getline(is, tok, ',')) s.power = std::stod(tok);
        }
        return s;
    }
    if (head == "explicit") {
        s.kind = ScheduleKind::Explicit;
        std::istringstream is(args);
        std::string tok;
        while (std::getline(is, tok, ',')) s.values.push_back(std::stod(tok));
        if (s.values.empty()) throw std::domain_error("parse_schedule: empty explicit list");
        return s;
    }
    throw std::domain_error("parse_schedule: unknown schedule '" + text + "'");
}

void ScenarioConfig::validate() const
{
    if (D < 1 || K < 0 || K > D || N < 1) throw std::domain_error("ScenarioConfig: bad dimensions");
    if (!(sigma2 > 0.0)) throw std::domain_error("ScenarioConfig: sigma2 <= 0");
    schedule.evaluate(K);
}

std::pair<Dataset, GroundTruth> generate_scenario(const ScenarioConfig& config, Rng& rng)
{
    config.validate();
    GroundTruth gt;
    gt.H = sample_uniform_stiefel(config.D, config.K, rng);
    gt.deltas = config.schedule.evaluate(config.K);
    gt.sigma2 = config.sigma2;

    const double sigma = std::sqrt(config.sigma2);
    Eigen::MatrixXd Y(config.D, config.N);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd u(config.K);
    for (int n = 0; n < config.N; ++n) {
        for (int k = 0; k < config.K; ++k) u(k) = gauss(rng) * sigma * std::sqrt(gt.deltas[k]);
        Eigen::VectorXd e(config.D);
        for (int d = 0; d < config.D; ++d) e(d) = gauss(rng) * sigma;
        Y.col(n) = gt.H * u + e;
    }
    Dataset data;
    data.Y = std::move(Y);
    data.validate();
    return {std::move(data), std::move(gt)};
}

ScenarioConfig preset(const std::string& name)
{
    ScenarioConfig c;
    if (name == "fig1a") {
        c.D = 16; c.K = 4; c.N = 100;
        c.schedule = Delta2Schedule{ScheduleKind::ProportionalInverse, 50.0, 2.2, {}};
    } else if (name == "fig1b") {
        c.D = 36; c.K = 6; c.N = 500;
        c.schedule = Delta2Schedule{ScheduleKind::ProportionalInverse, 50.0, 2.2, {}};
    } else if (name == "fig3_grid") {
        c.D = 16; c.K = 4; c.N = 100;
        c.schedule = Delta2Schedule{ScheduleKind::ProportionalInverse, 50.0, 2.2, {}};
    } else if (name == "whitenoise") {
        c.D = 9; c.K = 0; c.N = 500;
        c.schedule = Delta2Schedule{ScheduleKind::Zero, 0.0, 2.2, {}};
    } else if (name == "anisotropic200" || name == "anisotropic2000") {
        c.D = 16; c.K = 16;
        c.N = name == "anisotropic200" ? 200 : 2000;
        c.schedule = Delta2Schedule{ScheduleKind::Anisotropic, 10.0, 2.2, {}};
    } else {
        throw std::domain_error("preset: unknown name '" + name + "'");
    }
    c.sigma2 = 0.01;
    return c;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, bool header)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    char buf[40];
    if (header) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? ",y" : "y") << (j + 1);
        os << "\n";
    }
    for (int i = 0; i < m.rows(); ++i) {
        std::string line;
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            if (j) line += ',';
            line += buf;
        }
        line += '\n';
        os << line;
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.find_first_not_of("0123456789.,+-eE \t\r") != std::string::npos) {
            first = false;  // header row
            continue;
        }
        first = false;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) row.push_back(std::strtod(tok.c_str(), nullptr));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("csv: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("csv: no data in " + path);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_ground_truth_json(const std::string& path, const GroundTruth& gt)
{
    nlohmann::json j;
    j["sigma2"] = gt.sigma2;
    j["deltas"] = gt.deltas;
    std::vector<std::vector<double>> h;
    for (int i = 0; i < gt.H.rows(); ++i) {
        std::vector<double> row;
        for (int k = 0; k < gt.H.cols(); ++k) row.push_back(gt.H(i, k));
        h.push_back(std::move(row));
    }
    j["H"] = h;
    j["D"] = gt.H.rows();
    j["K"] = gt.H.cols();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

GroundTruth read_ground_truth_json(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    is >> j;
    GroundTruth gt;
    gt.sigma2 = j.at("sigma2").get<double>();
    gt.deltas = j.at("deltas").get<std::vector<double>>();
    const int D = j.at("D").get<int>();
    const int K = j.at("K").get<int>();
    gt.H.resize(D, K);
    const auto& h = j.at("H");
    for (int i = 0; i < D; ++i)
        for (int k = 0; k < K; ++k) gt.H(i, k) = h.at(i).at(k).get<double>();
    return gt;
}

}  // namespace bnppca
