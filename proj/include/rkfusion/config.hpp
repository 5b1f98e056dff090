#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rkfusion/domain.hpp"
#include "rkfusion/kernel.hpp"
#include "rkfusion/runtime_fwd.hpp"

namespace rkfusion {

/// Closed set of feature primitives the config grammar accepts:
/// constant, monomial(k), exp(+1), exp(-1).
struct FeatureSpec {
    enum class Kind { Constant, Monomial, Exponential };
    Kind kind = Kind::Constant;
    int parameter = 0;  // monomial degree, or +1 / -1 exponent sign

    static FeatureSpec parse(const std::string& token);  // throws ValidationError
    std::string to_string() const;
    Feature build() const;
};

struct AgentConfig {
    std::vector<FeatureSpec> features;
    Domain domain;
    std::vector<double> anchors;   // explicit list, or empty with a pool size
    std::optional<int> anchor_pool;  // uniform grid size for greedy selection
};

struct ExperimentConfig {
    AgentConfig agent1, agent2;

    bool normalize_download = true;
    bool reconstruct_with_fusion_rho = false;  // reconstruction_rho = agent | fusion
    int feature_grid_points = 512;

    double epsilon = 1e-3;
    int k_max = 5;
    int max_iterations = 10000;
    Schedule rho1 = Schedule::geometric(10.0, 2.0);
    Schedule rho2 = Schedule::geometric(10.0, 2.0);
    Schedule rho_fusion = Schedule::geometric(10.0, 2.0);

    std::vector<FeatureSpec> true_features;
    std::vector<double> true_coefficients;
    double sigma = 0.1;
    std::uint64_t seed = 0;

    std::string output_directory = "out";
    int grid_points = 401;
    bool write_svg = true;
};

/// Parses the sectioned key = value grammar. Throws ParseError on the first
/// grammar error and ValidationError on the first semantic one.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// All problems found, one "line N: ..." / "field: ..." string each; empty
/// when the config is valid.
std::vector<std::string> validate_config_text(const std::string& text);

}  // namespace rkfusion
