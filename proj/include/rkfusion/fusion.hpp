#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rkfusion/agent.hpp"
#include "rkfusion/linalg.hpp"
#include "rkfusion/rkhs.hpp"

namespace rkfusion {

/// Data points reconstructed from an uploaded function: the agent's anchors
/// as inputs, outputs chosen so that ridge regression on them returns the
/// function exactly.
struct ReconstructedData {
    AnchorSet inputs;
    Eigen::VectorXd outputs;
    int agent_id = 0;
};

/// Spectral machinery of the map f |-> <f, K_agent(., x)> on the combined
/// space, in the orthonormal basis coordinates.
struct DownloadOperator {
    int agent_id = 0;
    Eigen::MatrixXd basis_matrix;  // operator matrix in the orthonormal basis
    Eigen::VectorXd eigenvalues;   // ascending, clamped to [0, inf)
    Eigen::MatrixXd eigenvectors;
    Eigen::MatrixXd sqrt_matrix;
    Eigen::MatrixXd projector;     // onto the complement of null(sqrt)
    Eigen::MatrixXd composed;      // sqrt_matrix * projector
    Eigen::MatrixXd to_agent;      // orthonormal coords -> agent-kernel section coefficients
};

/// The combined estimation space: sum kernel, pooled anchors, basis changes,
/// an orthonormal function basis built by Gram-Schmidt over the stacked
/// features (agent 1 first), and the per-agent download operators.
class FusionSpace {
  public:
    static FusionSpace build(const AgentState& agent1, const AgentState& agent2,
                             int feature_grid_points = 512);

    const Kernel& kernel() const { return kernel_; }
    const Kernel& agent_kernel(int agent_id) const;
    const AgentState& agent_state(int agent_id) const;
    const AnchorSet& combined_anchors() const { return combined_; }
    const AnchorSet& agent_anchors(int agent_id) const;
    int dimension() const { return dimension_; }

    const Eigen::MatrixXd& gram_combined() const { return gram_combined_; }
    const Eigen::MatrixXd& gram_fusion_at_agent(int agent_id) const;
    const Eigen::MatrixXd& gram_agent(int agent_id) const;
    const Eigen::MatrixXd& basis_change_matrix(int agent_id) const;
    /// Columns: stacked-feature coordinates of the orthonormal basis functions.
    const Eigen::MatrixXd& orthonormal_basis() const { return basis_coords_; }
    /// Stacked-feature evaluations at the combined anchors (columns).
    const Eigen::MatrixXd& stacked_at_combined() const { return stacked_combined_; }
    const DownloadOperator& download_operator(int agent_id) const;
    double download_normalization() const { return c_d_; }
    const Domain& joint_domain() const { return joint_domain_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Same function retagged to the combined space, coefficients re-expressed
    /// over fusion-kernel sections at the agent's anchors.
    RkhsFunction upload(const RkhsFunction& f) const;

    RkhsFunction fuse(const ReconstructedData& d1, const ReconstructedData& d2, double rho) const;

    /// Closed-form download over the eigenvector expansion; returns a function
    /// over the agent's own kernel sections.
    RkhsFunction download(int agent_id, const RkhsFunction& f_in_fusion) const;
    /// Same map applied as a dense matrix in the orthonormal coordinates.
    Eigen::VectorXd download_matrix_form(int agent_id, const RkhsFunction& f_in_fusion) const;

    /// Coordinates of any function over fusion- or agent-kernel sections in
    /// the orthonormal basis.
    Eigen::VectorXd orthonormal_coords(const RkhsFunction& f) const;
    /// Function over the combined anchors with the given orthonormal coords.
    RkhsFunction function_from_coords(const Eigen::VectorXd& coords) const;

  private:
    FusionSpace(Kernel fusion, AgentState a1, AgentState a2);

    Kernel kernel_;
    AgentState agent1_;
    AgentState agent2_;
    AnchorSet combined_;
    int dimension_ = 0;
    Eigen::MatrixXd gram_combined_;
    Eigen::MatrixXd gram_breve1_, gram_breve2_;
    Eigen::MatrixXd m1_, m2_;
    Eigen::MatrixXd basis_coords_;      // p x m
    Eigen::MatrixXd stacked_combined_;  // p x 2m
    Eigen::MatrixXd stacked_agent1_, stacked_agent2_;  // p x m (agent slots only)
    DownloadOperator down1_, down2_;
    double c_d_ = 1.0;
    Domain joint_domain_;
    std::vector<std::string> warnings_;
};

/// Outputs (K_agent + rho I) alpha at the agent's anchors (no solve involved).
ReconstructedData reconstruct_data(const RkhsFunction& f_in_agent_space, double rho,
                                   int agent_id);

/// Fresh build of the spectral download machinery for one agent.
DownloadOperator build_download_operator(const FusionSpace& space, int agent_id);

/// c_d = 1 + lambda_max of the symmetrized projector product; in [1, 2].
double download_normalization(const FusionSpace& space);

}  // namespace rkfusion
