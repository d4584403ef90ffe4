// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "bnppca/special.hpp"
#include "bnppca/synth.hpp"
#include "oracle_utils.hpp"

using namespace bnppca;

TEST_CASE("presets carry the published settings")
{
    CHECK(preset("fig1a").D == 16);
    CHECK(preset("fig1a").K == 4);
    CHECK(preset("fig1a").N == 100);
    CHECK(preset("fig1b").D == 36);
    CHECK(preset("fig1b").K == 6);
    CHECK(preset("fig1b").N == 500);
    CHECK(preset("whitenoise").sigma2 == 0.01);
    CHECK(preset("whitenoise").K == 0);
    CHECK(preset("anisotropic2000").N == 2000);
    const auto a200 = preset("anisotropic200");
    const auto deltas = a200.schedule.evaluate(a200.K);
    const std::vector<double> expect = {10.0, 2.2, 0.9, 0.5, 0.3};
    for (int k = 0; k < 5; ++k) CHECK(deltas[k] == doctest::Approx(expect[k]).epsilon(0.05));
    const auto f1 = preset("fig1a").schedule.evaluate(4);
    CHECK(f1[0] == doctest::Approx(50.0));
    CHECK(f1[3] == doctest::Approx(12.5));
    CHECK_THROWS_AS(preset("figZZ"), std::domain_error);
}

TEST_CASE("schedule parsing")
{
    CHECK(parse_schedule("zero").kind == ScheduleKind::Zero);
    CHECK(parse_schedule("fifty_over_k").c == doctest::Approx(50.0));
    CHECK(parse_schedule("inv:12").c == doctest::Approx(12.0));
    const auto an = parse_schedule("anisotropic:10,2.2");
    CHECK(an.power == doctest::Approx(2.2));
    const auto ex = parse_schedule("explicit:1,2,3");
    CHECK(ex.evaluate(3)[2] == doctest::Approx(3.0));
    CHECK_THROWS_AS(parse_schedule("nope"), std::domain_error);
    CHECK_THROWS_AS(parse_schedule("explicit:1,2").evaluate(3), std::domain_error);
}

TEST_CASE("generator")
{
    SUBCASE("zero schedule converges to sigma^2 I")
    {
        ScenarioConfig cfg = preset("whitenoise");
        cfg.D = 9;
        cfg.N = 5000;
        Rng rng(4);
        const auto [data, gt] = generate_scenario(cfg, rng);
        const Eigen::MatrixXd cov = data.Y * data.Y.transpose() / cfg.N;
        CHECK((cov - cfg.sigma2 * Eigen::MatrixXd::Identity(9, 9)).norm()
              < 0.15 * cfg.sigma2 * cfg.D);
    }
    SUBCASE("fifty_over_k population eigenvalues")
    {
        ScenarioConfig cfg;
        cfg.D = 16;
        cfg.K = 4;
        cfg.N = 5000;
        cfg.schedule = parse_schedule("fifty_over_k");
        Rng rng(8);
        const auto [data, gt] = generate_scenario(cfg, rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data.Y * data.Y.transpose() / cfg.N);
        for (int k = 0; k < 4; ++k) {
            const double expect = cfg.sigma2 * (1.0 + 50.0 / (k + 1));
            CHECK(es.eigenvalues()(15 - k) == doctest::Approx(expect).epsilon(0.10));
        }
        CHECK(is_orthonormal(gt.H, 1e-10));
        CHECK(data.Y.allFinite());
    }
    SUBCASE("deterministic given the seed")
    {
        ScenarioConfig cfg = preset("fig1a");
        Rng r1(42), r2(42);
        const auto [a, g1] = generate_scenario(cfg, r1);
        const auto [b, g2] = generate_scenario(cfg, r2);
        CHECK(a.Y == b.Y);
        CHECK(g1.H == g2.H);
    }
    SUBCASE("Mardia skewness smoke check at D=9, N=1000")
    {
        ScenarioConfig cfg = preset("whitenoise");
        cfg.D = 9;
        cfg.N = 1000;
        Rng rng(10);
        const auto [data, gt] = generate_scenario(cfg, rng);
        const Eigen::MatrixXd yc = data.Y.colwise() - data.Y.rowwise().mean().eval();
        const Eigen::MatrixXd sinv =
            (yc * yc.transpose() / cfg.N).inverse();
        const Eigen::MatrixXd g = yc.transpose() * sinv * yc;  // N x N
        const double b1 = g.array().cube().sum() / (static_cast<double>(cfg.N) * cfg.N);
        const double stat = cfg.N * b1 / 6.0;
        const double dof = cfg.D * (cfg.D + 1) * (cfg.D + 2) / 6.0;
        CHECK(chi2_sf(stat, dof) > 0.01);
    }
}

TEST_CASE("csv round trip")
{
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "bnppca_csv_test";
    fs::create_directories(dir);
    Eigen::MatrixXd m(3, 4);
    Rng rng(5);
    std::normal_distribution<double> g;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = g(rng) * std::pow(10.0, (i * 4 + j) % 7 - 3);
    const std::string path = (dir / "m.csv").string();
    write_matrix_csv(path, m, false);
    const Eigen::MatrixXd back = read_matrix_csv(path);
    REQUIRE(back.rows() == 3);
    REQUIRE(back.cols() == 4);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * m.size()) == 0);
    // header variant skips the first row
    write_matrix_csv(path, m, true);
    const Eigen::MatrixXd back2 = read_matrix_csv(path);
    CHECK(back2 == back);
    fs::remove_all(dir);
}

TEST_CASE("ground truth json round trip")
{
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "bnppca_json_test";
    fs::create_directories(dir);
    Rng rng(6);
    GroundTruth gt;
    gt.H = sample_uniform_stiefel(5, 2, rng);
    gt.deltas = {3.0, 1.5};
    gt.sigma2 = 0.01;
    const std::string path = (dir / "gt.json").string();
    write_ground_truth_json(path, gt);
    const GroundTruth back = read_ground_truth_json(path);
    CHECK((back.H - gt.H).norm() < 1e-15);
    CHECK(back.deltas == gt.deltas);
    CHECK(back.sigma2 == gt.sigma2);
    fs::remove_all(dir);
}
