// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bnppca/model.hpp"

namespace bnppca {

enum class ScheduleKind {
    ProportionalInverse,  // delta2_k = c / k
    Zero,                 // pure noise
    Anisotropic,          // delta2_k = c / k^p
    Explicit,             // given list
};

struct Delta2Schedule {
    ScheduleKind kind = ScheduleKind::ProportionalInverse;
    double c = 50.0;
    double power = 2.2;            // Anisotropic only
    std::vector<double> values;    // Explicit only

    std::vector<double> evaluate(int K) const;
    std::string describe() const;
};

Delta2Schedule parse_schedule(const std::string& text);

struct ScenarioConfig {
    int D = 16;
    int K = 4;
    int N = 100;
    Delta2Schedule schedule;
    double sigma2 = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    StiefelMatrix H;  // D x K
    std::vector<double> deltas;
    double sigma2 = 0.01;
};

// y_n = H u_n + e_n with H uniform on the Stiefel manifold,
// u_n ~ N(0, diag(delta2_k sigma^2)) and e_n ~ N(0, sigma^2 I).
std::pair<Dataset, GroundTruth> generate_scenario(const ScenarioConfig& config, Rng& rng);

// Paper scenarios: fig1a, fig1b, fig3_grid, whitenoise, anisotropic200,
// anisotropic2000. Grid presets return their first cell; D/N overrides in the
// CLI re-derive K (sqrt(D) for fig3_grid, 0 for whitenoise).
ScenarioConfig preset(const std::string& name);

// Dataset CSV: D rows x N columns, '.' decimal separator, comma-delimited,
// optional single header row "y1,...,yN".
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, bool header = false);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

void write_ground_truth_json(const std::string& path, const GroundTruth& gt);
GroundTruth read_ground_truth_json(const std::string& path);

}  // namespace bnppca
