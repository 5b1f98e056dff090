#include "rkfusion/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rkfusion/errors.hpp"
#include "rkfusion/operators.hpp"

namespace rkfusion {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

Kernel kernel_from_specs(const std::vector<FeatureSpec>& specs) {
    std::vector<Feature> features;
    features.reserve(specs.size());
    for (const auto& spec : specs) features.push_back(spec.build());
    return Kernel::from_features(FeatureSet(std::move(features)));
}

std::function<double(double)> truth_from_config(const ExperimentConfig& config) {
    std::vector<Feature> features;
    for (const auto& spec : config.true_features) features.push_back(spec.build());
    std::vector<double> coeffs = config.true_coefficients;
    return [features, coeffs](double x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) acc += coeffs[i] * features[i](x);
        return acc;
    };
}

AnchorSet resolve_anchors(const Kernel& fusion_kernel, const AgentConfig& agent, SpaceTag tag,
                          int dimension) {
    if (!agent.anchors.empty()) {
        AnchorSet anchors{agent.anchors, tag};
        validate_anchors(anchors);
        return anchors;
    }
    const std::vector<double> pool = agent.domain.grid(*agent.anchor_pool);
    return select_anchors(fusion_kernel, pool, dimension, tag).anchors;
}

double grid_rmse(const RkhsFunction& f, const std::function<double(double)>& truth,
                 const std::vector<double>& grid) {
    double acc = 0.0;
    for (double x : grid) {
        const double d = f(x) - truth(x);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(grid.size()));
}

void write_csv_header(std::ofstream& out) {
    out << "n,rmse_agent1,rmse_agent2,rmse_fused,window_stat,rho1,rho2,rho_fusion\n";
}

std::string svg_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                         double x0, double x1, double y0, double y1, const char* color) {
    std::ostringstream os;
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const double w = 760.0, h = 420.0, ox = 30.0, oy = 460.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = ox + (xs[i] - x0) / (x1 - x0) * w;
        const double py = oy - (ys[i] - y0) / (y1 - y0) * h;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g ", px, py);
        os << buf;
    }
    os << "\"/>\n";
    return os.str();
}

void write_svg(const fs::path& path, const std::vector<double>& grid,
               const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
    double y0 = 0.0, y1 = 1.0;
    bool first = true;
    for (const auto& [name, ys] : curves)
        for (double y : ys) {
            if (!std::isfinite(y)) continue;
            if (first) {
                y0 = y1 = y;
                first = false;
            }
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (y1 <= y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double x0 = grid.front(), x1 = grid.back();
    static const char* kColors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c"};
    std::ofstream out(path, std::ios::binary);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"520\" "
           "viewBox=\"0 0 820 520\">\n";
    out << "  <rect width=\"820\" height=\"520\" fill=\"white\"/>\n";
    out << "  <line x1=\"30\" y1=\"460\" x2=\"790\" y2=\"460\" stroke=\"#999\"/>\n";
    out << "  <line x1=\"30\" y1=\"40\" x2=\"30\" y2=\"460\" stroke=\"#999\"/>\n";
    int ci = 0;
    for (const auto& [name, ys] : curves) {
        const char* color = kColors[ci % 4];
        out << svg_polyline(grid, ys, x0, x1, y0, y1, color);
        out << "  <text x=\"" << (40 + 180 * ci) << "\" y=\"30\" fill=\"" << color
            << "\" font-size=\"14\">" << name << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

void write_checkpoint(const fs::path& path, const ExperimentConfig& config, std::uint64_t seed,
                      const RunResult& result) {
    std::ofstream out(path, std::ios::binary);
    out << "[run]\n";
    out << "epsilon = " << format_number(config.epsilon) << "\n";
    out << "k_max = " << config.k_max << "\n";
    out << "max_iterations = " << config.max_iterations << "\n";
    out << "rho1 = " << config.rho1.to_string() << "\n";
    out << "rho2 = " << config.rho2.to_string() << "\n";
    out << "rho_fusion = " << config.rho_fusion.to_string() << "\n";
    out << "normalize_download = " << (config.normalize_download ? "true" : "false") << "\n";
    out << "reconstruction_rho = " << (config.reconstruct_with_fusion_rho ? "fusion" : "agent")
        << "\n";
    out << "\n[result]\n";
    out << "seed = " << seed << "\n";
    out << "iterations = " << result.records.size() << "\n";
    out << "stop_reason = "
        << (result.reason == StopReason::WindowCriterion ? "window" : "max_iterations") << "\n";
    const auto write_vector = [&out](const char* key, const Eigen::VectorXd& v) {
        out << key << " = ";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            out << format_number(v(i));
        }
        out << "\n";
    };
    write_vector("final_agent1", result.final1);
    write_vector("final_agent2", result.final2);
    if (!result.records.empty()) write_vector("final_fused", result.records.back().alpha_fused);
}

}  // namespace

BuiltSystem build_system(const ExperimentConfig& config) {
    Kernel k1 = kernel_from_specs(config.agent1.features);
    Kernel k2 = kernel_from_specs(config.agent2.features);
    const Kernel fusion_kernel = Kernel::sum(k1, k2);

    std::vector<Interval> pieces = config.agent1.domain.pieces();
    const auto& other = config.agent2.domain.pieces();
    pieces.insert(pieces.end(), other.begin(), other.end());
    const Domain joint(pieces);
    const int dimension =
        fusion_kernel.features().numerical_rank(joint.grid(config.feature_grid_points));
    if (dimension == 0) throw ValidationError("features", "stacked features have rank zero");

    const AnchorSet a1 = resolve_anchors(fusion_kernel, config.agent1, SpaceTag::Agent1, dimension);
    const AnchorSet a2 = resolve_anchors(fusion_kernel, config.agent2, SpaceTag::Agent2, dimension);

    AgentState s1(1, k1, a1, config.agent1.domain);
    AgentState s2(2, k2, a2, config.agent2.domain);
    return BuiltSystem{std::move(k1), std::move(k2),
                       FusionSpace::build(s1, s2, config.feature_grid_points),
                       truth_from_config(config)};
}

DataSource generate_data(const ExperimentConfig& config, std::uint64_t seed) {
    return DataSource::generated(truth_from_config(config), config.sigma, config.agent1.domain,
                                 config.agent2.domain, seed);
}

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 std::optional<std::uint64_t> seed_override,
                                 std::optional<std::string> output_override) {
    const std::uint64_t seed = seed_override.value_or(config.seed);
    const fs::path out_dir(output_override.value_or(config.output_directory));
    fs::create_directories(out_dir);

    BuiltSystem system = build_system(config);
    const FusionSpace& space = system.space;

    RunConfig run_config;
    run_config.epsilon = config.epsilon;
    run_config.k_max = config.k_max;
    run_config.max_iterations = config.max_iterations;
    run_config.rho1 = config.rho1;
    run_config.rho2 = config.rho2;
    run_config.rho_fusion = config.rho_fusion;
    run_config.normalize_download = config.normalize_download;
    run_config.reconstruct_with_fusion_rho = config.reconstruct_with_fusion_rho;
    run_config.seed = seed;

    DataSource source = generate_data(config, seed);
    ExperimentOutcome outcome;
    outcome.result = run(run_config, source, space);
    outcome.output_directory = out_dir;

    const std::vector<double> grid1 = config.agent1.domain.grid(config.grid_points);
    const std::vector<double> grid2 = config.agent2.domain.grid(config.grid_points);
    const Domain hull = Domain::hull_of(config.agent1.domain, config.agent2.domain);
    const std::vector<double> full_grid = hull.grid(config.grid_points);

    outcome.min_rmse_fused = std::numeric_limits<double>::infinity();
    for (const auto& rec : outcome.result.records) {
        MetricsRow row;
        row.n = rec.n;
        RkhsFunction down1{space.agent_kernel(1), space.agent_anchors(1), rec.alpha_down1,
                           SpaceTag::Agent1};
        RkhsFunction down2{space.agent_kernel(2), space.agent_anchors(2), rec.alpha_down2,
                           SpaceTag::Agent2};
        RkhsFunction fused{space.kernel(), space.combined_anchors(), rec.alpha_fused,
                           SpaceTag::Fusion};
        row.rmse_agent1 = grid_rmse(down1, system.truth, grid1);
        row.rmse_agent2 = grid_rmse(down2, system.truth, grid2);
        row.rmse_fused = grid_rmse(fused, system.truth, full_grid);
        row.window_stat = rec.window_stat;
        row.rho1 = rec.rho1;
        row.rho2 = rec.rho2;
        row.rho_fusion = rec.rho_fusion;
        outcome.metrics.push_back(row);
        if (row.rmse_fused < outcome.min_rmse_fused) {
            outcome.min_rmse_fused = row.rmse_fused;
            outcome.min_rmse_iteration = row.n;
        }
    }

    {
        std::ofstream out(out_dir / "metrics.csv", std::ios::binary);
        write_csv_header(out);
        for (const auto& row : outcome.metrics) {
            out << row.n << ',' << format_number(row.rmse_agent1) << ','
                << format_number(row.rmse_agent2) << ',' << format_number(row.rmse_fused) << ','
                << format_number(row.window_stat) << ',' << format_number(row.rho1) << ','
                << format_number(row.rho2) << ',' << format_number(row.rho_fusion) << '\n';
        }
    }

    {
        std::ofstream out(out_dir / "final_functions.csv", std::ios::binary);
        out << "x,f_true,f_fused,f_agent1,f_agent2\n";
        const auto& last = outcome.result.records;
        RkhsFunction fused{space.kernel(), space.combined_anchors(),
                           last.empty() ? Eigen::VectorXd::Zero(2 * space.dimension())
                                        : last.back().alpha_fused,
                           SpaceTag::Fusion};
        RkhsFunction down1{space.agent_kernel(1), space.agent_anchors(1),
                           outcome.result.final1, SpaceTag::Agent1};
        RkhsFunction down2{space.agent_kernel(2), space.agent_anchors(2),
                           outcome.result.final2, SpaceTag::Agent2};
        for (double x : full_grid) {
            out << format_number(x) << ',' << format_number(system.truth(x)) << ','
                << format_number(fused(x)) << ',' << format_number(down1(x)) << ','
                << format_number(down2(x)) << '\n';
        }
        if (config.write_svg) {
            std::vector<std::pair<std::string, std::vector<double>>> curves(4);
            curves[0].first = "true";
            curves[1].first = "fused";
            curves[2].first = "agent1";
            curves[3].first = "agent2";
            for (double x : full_grid) {
                curves[0].second.push_back(system.truth(x));
                curves[1].second.push_back(fused(x));
                curves[2].second.push_back(down1(x));
                curves[3].second.push_back(down2(x));
            }
            write_svg(out_dir / "plots.svg", full_grid, curves);
        }
    }

    write_checkpoint(out_dir / "run.checkpoint", config, seed, outcome.result);
    return outcome;
}

namespace {

void print_matrix(std::ostringstream& os, const std::string& name, const Eigen::MatrixXd& m) {
    os << name << " =\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        os << "  [";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "% .6g", m(r, c));
            os << buf << (c + 1 < m.cols() ? ", " : "");
        }
        os << "]\n";
    }
}

}  // namespace

std::string dump_operators_report(const ExperimentConfig& config) {
    BuiltSystem system = build_system(config);
    const FusionSpace& space = system.space;
    std::ostringstream os;
    os << "combined space dimension m = " << space.dimension() << "\n";
    os << "orthonormal basis: Gram-Schmidt over "
       << space.kernel().features().dimension() << " stacked features";
    if (space.orthonormal_basis().isIdentity(1e-14))
        os << " (already orthonormal: coordinates are the identity)";
    os << "\n";
    print_matrix(os, "basis coordinates U", space.orthonormal_basis());
    for (int agent_id : {1, 2}) {
        const DownloadOperator& op = space.download_operator(agent_id);
        os << "\nagent " << agent_id << ":\n";
        print_matrix(os, "L", op.basis_matrix);
        print_matrix(os, "sqrt(L)", op.sqrt_matrix);
        print_matrix(os, "projector", op.projector);
        os << "eigenvalues = [";
        for (Eigen::Index i = 0; i < op.eigenvalues.size(); ++i)
            os << (i ? ", " : "") << format_number(op.eigenvalues(i));
        os << "]\n";
    }
    os << "\nc_d = " << format_number(space.download_normalization()) << "\n";
    os << "download map norm (normalized) = "
       << format_number(download_map_norm(space, true)) << "\n";

    for (double rho : {1e2, 1e4, 1e6, 1e8}) {
        const FusionNormReport report = fusion_operator_norm(space, rho);
        os << "\nfusion map at rho = " << format_number(rho) << ":\n";
        os << "  constrained sup norm   = " << format_number(report.sup_norm) << "\n";
        os << "  coefficient-map sigma  = " << format_number(report.matrix_norm) << "\n";
        if (rho == 1e2) {
            os << "  lambda_max(combined Gram)       = " << format_number(report.lambda_max_gram)
               << "\n";
            os << "  lambda_max after diagonalization = "
               << format_number(report.schur_diag_lambda_max) << "\n";
            os << "  max block lambda_max             = "
               << format_number(report.schur_block_bound) << "\n";
        }
    }
    for (const auto& warning : space.warnings()) os << "\nwarning: " << warning << "\n";
    return os.str();
}

}  // namespace rkfusion
