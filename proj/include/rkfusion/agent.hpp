#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rkfusion/domain.hpp"
#include "rkfusion/rkhs.hpp"

namespace rkfusion {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
};

/// psi_(x,y) = (Kbar(x) y)^T Kbar(.): the data point embedded as a function
/// over the agent's anchor basis. Keeps the data location x, which
/// parameterizes the learning map (the map is linear in (f, psi) only for
/// fixed x).
struct DataEmbedding {
    RkhsFunction function;
    double x = 0.0;
};

/// Immutable per-iteration view of one agent: its kernel, anchors, Gram
/// matrices and the estimate downloaded at the previous iteration.
class AgentState {
  public:
    AgentState(int agent_id, Kernel kernel, AnchorSet anchors, Domain domain);

    int agent_id() const { return agent_id_; }
    const Kernel& kernel() const { return kernel_; }
    const AnchorSet& anchors() const { return anchors_; }
    const Domain& domain() const { return domain_; }
    const Eigen::MatrixXd& gram_matrix() const { return gram_; }
    /// Gram with the small-constant diagonal shift applied when singular.
    const Eigen::MatrixXd& gram_regular() const { return gram_regular_; }
    SpaceTag tag() const { return anchors_.space_tag; }

    const RkhsFunction& downloaded() const { return downloaded_; }
    AgentState with_downloaded(Eigen::VectorXd coefficients) const;

  private:
    int agent_id_;
    Kernel kernel_;
    AnchorSet anchors_;
    Domain domain_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd gram_regular_;
    RkhsFunction downloaded_;
};

/// Closed-form minimizer of (y - f(x))^2 + rho ||f - downloaded||^2.
RkhsFunction local_estimate(const AgentState& state, const DataPoint& data, double rho);

DataEmbedding embed_data(const AgentState& state, const DataPoint& data);

/// The learning map applied to an arbitrary (estimate, embedding) pair; with
/// the embedding of the iteration's data point this coincides with
/// local_estimate.
RkhsFunction apply_learning_operator(const AgentState& state, const RkhsFunction& f,
                                     const DataEmbedding& psi, double rho);

struct AgentNormEstimate {
    double norm = 0.0;
    int skipped_grid_points = 0;
};

/// sup over grid x of the largest generalized eigenvalue of the learning map's
/// quadratic form against the unit-energy constraint on (f, psi); square root
/// of the max. Optionally measures the output in the fusion space via an
/// output weight matrix (used by the multi-agent norm).
AgentNormEstimate agent_operator_norm(const AgentState& state, double rho,
                                      const std::vector<double>& x_grid);
AgentNormEstimate agent_operator_norm_weighted(const AgentState& state, double rho,
                                               const std::vector<double>& x_grid,
                                               const Eigen::MatrixXd& output_weight);

}  // namespace rkfusion
