#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rkfusion/experiment.hpp"
#include "rkfusion/operators.hpp"
#include "rkfusion/runtime.hpp"

namespace py = pybind11;
using namespace rkfusion;

namespace {

Kernel kernel_from_tokens(const std::vector<std::string>& tokens) {
    std::vector<Feature> features;
    for (const auto& token : tokens) features.push_back(FeatureSpec::parse(token).build());
    return Kernel::from_features(FeatureSet(std::move(features)));
}

/// Built two-agent system plus the handles the python surface works with.
struct System {
    BuiltSystem built;

    explicit System(const std::string& config_text) : built(build_system(parse_config(config_text))) {}

    const FusionSpace& space() const { return built.space; }

    Eigen::MatrixXd download_matrix(int agent_id) const {
        return space().download_operator(agent_id).basis_matrix;
    }
    Eigen::MatrixXd download_sqrt(int agent_id) const {
        return space().download_operator(agent_id).sqrt_matrix;
    }
    Eigen::VectorXd download_eigenvalues(int agent_id) const {
        return space().download_operator(agent_id).eigenvalues;
    }
    double normalization() const { return space().download_normalization(); }
    int dimension() const { return space().dimension(); }
    std::vector<double> anchors(int agent_id) const {
        return space().agent_anchors(agent_id).points;
    }
    Eigen::MatrixXd combined_gram() const { return space().gram_combined(); }
    Eigen::MatrixXd agent_gram(int agent_id) const { return space().gram_agent(agent_id); }

    Eigen::VectorXd local_fit(int agent_id, const Eigen::VectorXd& prior, double x, double y,
                              double rho) const {
        const AgentState agent = space().agent_state(agent_id).with_downloaded(prior);
        return local_estimate(agent, DataPoint{x, y}, rho).coefficients;
    }

    Eigen::VectorXd reconstruct(int agent_id, const Eigen::VectorXd& coefficients,
                                double rho) const {
        const AgentState& agent = space().agent_state(agent_id);
        RkhsFunction f{agent.kernel(), agent.anchors(), coefficients, agent.tag()};
        return reconstruct_data(f, rho, agent_id).outputs;
    }

    Eigen::VectorXd fuse_outputs(const Eigen::VectorXd& outputs1, const Eigen::VectorXd& outputs2,
                                 double rho) const {
        const ReconstructedData d1{space().agent_anchors(1), outputs1, 1};
        const ReconstructedData d2{space().agent_anchors(2), outputs2, 2};
        return space().fuse(d1, d2, rho).coefficients;
    }

    Eigen::VectorXd download_coefficients(int agent_id, const Eigen::VectorXd& fused) const {
        RkhsFunction f{space().kernel(), space().combined_anchors(), fused, SpaceTag::Fusion};
        return space().download(agent_id, f).coefficients;
    }

    double eval_fused(const Eigen::VectorXd& fused, double x) const {
        RkhsFunction f{space().kernel(), space().combined_anchors(), fused, SpaceTag::Fusion};
        return f(x);
    }
    double eval_agent(int agent_id, const Eigen::VectorXd& coefficients, double x) const {
        const AgentState& agent = space().agent_state(agent_id);
        RkhsFunction f{agent.kernel(), agent.anchors(), coefficients, agent.tag()};
        return f(x);
    }

    py::dict fusion_norms(double rho) const {
        const FusionNormReport rep = fusion_operator_norm(space(), rho);
        py::dict out;
        out["sup_norm"] = rep.sup_norm;
        out["matrix_norm"] = rep.matrix_norm;
        out["lambda_max_gram"] = rep.lambda_max_gram;
        out["schur_diag_lambda_max"] = rep.schur_diag_lambda_max;
        out["schur_block_bound"] = rep.schur_block_bound;
        return out;
    }

    double learning_norm(int agent_id, double rho, int grid_points) const {
        const AgentState& agent = space().agent_state(agent_id);
        std::vector<double> grid;
        for (const auto& piece : agent.domain().pieces()) {
            const auto pts = Domain({piece}).grid(grid_points);
            grid.insert(grid.end(), pts.begin(), pts.end());
        }
        return agent_operator_norm(agent, rho, grid).norm;
    }
};

py::dict run_from_text(const std::string& config_text, std::optional<std::uint64_t> seed,
                       std::optional<std::string> out_dir) {
    const ExperimentConfig config = parse_config(config_text);
    const ExperimentOutcome outcome = run_experiment(config, seed, out_dir);
    py::dict out;
    out["iterations"] = outcome.result.records.size();
    out["stopped_by_window"] = outcome.result.reason == StopReason::WindowCriterion;
    out["min_rmse_fused"] = outcome.min_rmse_fused;
    out["min_rmse_iteration"] = outcome.min_rmse_iteration;
    out["final_agent1"] = outcome.result.final1;
    out["final_agent2"] = outcome.result.final2;
    out["output_directory"] = outcome.output_directory.string();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-agent distributed kernel regression with model fusion";

    py::class_<Kernel>(m, "Kernel")
        .def(py::init(&kernel_from_tokens), py::arg("features"),
             "Build a kernel from feature tokens such as 'constant', 'monomial(2)', 'exp(-1)'.")
        .def("__call__", [](const Kernel& k, double x, double y) { return k(x, y); })
        .def_static("sum", &Kernel::sum);

    m.def("gram", [](const Kernel& k, const std::vector<double>& a, const std::vector<double>& b) {
        return gram(k, AnchorSet{a, SpaceTag::Fusion}, AnchorSet{b, SpaceTag::Fusion});
    }, py::arg("kernel"), py::arg("a"), py::arg("b"));

    m.def("select_anchors",
          [](const Kernel& k, const std::vector<double>& pool, int m) {
              const AnchorSelection sel = select_anchors(k, pool, m, SpaceTag::Fusion);
              return py::make_tuple(sel.anchors.points, sel.gram_condition);
          },
          py::arg("kernel"), py::arg("pool"), py::arg("count"));

    py::class_<System>(m, "System")
        .def(py::init<const std::string&>(), py::arg("config_text"))
        .def_property_readonly("dimension", &System::dimension)
        .def_property_readonly("normalization", &System::normalization)
        .def("anchors", &System::anchors, py::arg("agent_id"))
        .def("download_matrix", &System::download_matrix, py::arg("agent_id"))
        .def("download_sqrt", &System::download_sqrt, py::arg("agent_id"))
        .def("download_eigenvalues", &System::download_eigenvalues, py::arg("agent_id"))
        .def("combined_gram", &System::combined_gram)
        .def("agent_gram", &System::agent_gram, py::arg("agent_id"))
        .def("local_fit", &System::local_fit, py::arg("agent_id"), py::arg("prior"), py::arg("x"),
             py::arg("y"), py::arg("rho"))
        .def("reconstruct", &System::reconstruct, py::arg("agent_id"), py::arg("coefficients"),
             py::arg("rho"))
        .def("fuse", &System::fuse_outputs, py::arg("outputs1"), py::arg("outputs2"),
             py::arg("rho"))
        .def("download", &System::download_coefficients, py::arg("agent_id"), py::arg("fused"))
        .def("eval_fused", &System::eval_fused, py::arg("fused"), py::arg("x"))
        .def("eval_agent", &System::eval_agent, py::arg("agent_id"), py::arg("coefficients"),
             py::arg("x"))
        .def("fusion_norms", &System::fusion_norms, py::arg("rho"))
        .def("learning_norm", &System::learning_norm, py::arg("agent_id"), py::arg("rho"),
             py::arg("grid_points") = 256);

    m.def("validate_config", &validate_config_text, py::arg("config_text"),
          "Problems found in the config text; empty when valid.");
    m.def("run_experiment", &run_from_text, py::arg("config_text"), py::arg("seed") = py::none(),
          py::arg("output_directory") = py::none());
    m.def("dump_operators",
          [](const std::string& text) { return dump_operators_report(parse_config(text)); },
          py::arg("config_text"));
}
