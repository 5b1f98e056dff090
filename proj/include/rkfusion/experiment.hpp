#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rkfusion/config.hpp"
#include "rkfusion/fusion.hpp"
#include "rkfusion/runtime.hpp"

namespace rkfusion {

struct BuiltSystem {
    Kernel kernel1, kernel2;
    FusionSpace space;
    std::function<double(double)> truth;
};

/// Kernels, anchors (selected from a pool when configured) and the fusion
/// space, ready to run.
BuiltSystem build_system(const ExperimentConfig& config);

DataSource generate_data(const ExperimentConfig& config, std::uint64_t seed);

struct MetricsRow {
    int n = 0;
    double rmse_agent1 = 0.0;
    double rmse_agent2 = 0.0;
    double rmse_fused = 0.0;
    double window_stat = std::numeric_limits<double>::quiet_NaN();
    double rho1 = 0.0, rho2 = 0.0, rho_fusion = 0.0;
};

struct ExperimentOutcome {
    RunResult result;
    std::vector<MetricsRow> metrics;
    std::filesystem::path output_directory;
    int min_rmse_iteration = 0;
    double min_rmse_fused = 0.0;
};

/// Runs the configured experiment and writes metrics.csv,
/// final_functions.csv, run.checkpoint and (optionally) plots.svg into the
/// output directory.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 std::optional<std::uint64_t> seed_override = {},
                                 std::optional<std::string> output_override = {});

/// Text report of the operator diagnostics: basis construction, the
/// per-agent download matrices, the projector overlap constant, and the
/// fusion-map norms over a ladder of regularization values.
std::string dump_operators_report(const ExperimentConfig& config);

/// 17-significant-digit decimal used by every file writer.
std::string format_number(double v);

}  // namespace rkfusion
