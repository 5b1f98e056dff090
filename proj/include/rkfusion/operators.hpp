#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "rkfusion/fusion.hpp"
#include "rkfusion/runtime_fwd.hpp"

namespace rkfusion {

/// Both readings of the fusion-map norm plus the spectral quantities the
/// Schur-complement analysis compares. sup_norm is the constrained supremum
/// over unit combined-space energy; matrix_norm the largest singular value of
/// the coefficient map in fixed coordinates.
struct FusionNormReport {
    double sup_norm = 0.0;
    double matrix_norm = 0.0;
    double lambda_max_gram = 0.0;
    double schur_diag_lambda_max = 0.0;  // after the block diagonalization
    double schur_block_bound = 0.0;      // max over the two diagonal blocks
};

FusionNormReport fusion_operator_norm(const FusionSpace& space, double rho);

struct MultiAgentNormReport {
    double combined = 0.0;
    double block1 = 0.0;
    double block2 = 0.0;
    int skipped_grid_points = 0;
};

/// Norm of the block map (learn at each agent, then upload): max of the two
/// per-agent norms with outputs measured in the combined space.
MultiAgentNormReport multi_agent_operator_norm(const FusionSpace& space, const AgentState& s1,
                                               const AgentState& s2, double rho1, double rho2,
                                               int grid_points_per_piece = 256);

/// sigma of the stacked (normalized) download map between the metricized
/// coordinate spaces; equals 1 exactly when the two projector ranges are
/// orthogonal.
double download_map_norm(const FusionSpace& space, bool normalize);

/// One iteration of the pipeline as a dense linear map on stacked
/// coordinates (f1, f2, psi1, psi2) -> (downloaded1, downloaded2), for fixed
/// data locations.
struct StageOperator {
    Eigen::MatrixXd matrix;  // 2m x 4m
    double norm = 0.0;       // spectral norm between the metricized spaces
    double x1 = 0.0, x2 = 0.0;
    double rho1 = 0.0, rho2 = 0.0, rho_fusion = 0.0;
    bool normalized = false;
};

StageOperator stage_operator(const FusionSpace& space, const AgentState& s1, const AgentState& s2,
                             double rho1, double rho2, double rho_fusion, double x1, double x2,
                             bool normalize_download, std::optional<double> recon_rho1 = {},
                             std::optional<double> recon_rho2 = {});

/// Fixed-coordinate norm of the relearn-and-fit map with the combined Gram
/// rescaled to unit top eigenvalue.
double normalized_fusion_matrix_norm(const FusionSpace& space, double rho);

struct NormTraceRecord {
    int n = 0;
    double rho1 = 0.0, rho2 = 0.0, rho_fusion = 0.0;
    double stage_norm = 0.0;        // composed-matrix operator norm
    double cum_product = 0.0;
    double factor_bound = 0.0;      // ||download|| * ||fusion matrix|| * ||learn+upload||
    double cum_product_factor = 0.0;
};

struct NormTrace {
    std::vector<NormTraceRecord> records;
    double sup_product = 0.0;
    double sup_product_factor = 0.0;
    bool divergence_flag = false;  // composed product exceeded 1e6
};

/// Stage norms for n = 1..N over the given schedules and frozen data
/// locations, with cumulative products of both the composed norm and the
/// per-factor bound.
NormTrace norm_trace(const FusionSpace& space, const AgentState& s1, const AgentState& s2,
                     const Schedule& sched1, const Schedule& sched2, const Schedule& sched_fusion,
                     const std::vector<double>& x1_sequence, const std::vector<double>& x2_sequence,
                     bool normalize_download, int grid_points_per_piece = 256);

struct FixedPointResult {
    Eigen::VectorXd f1;
    Eigen::VectorXd f2;
    int iterations = 0;
    double residual = 0.0;
};

/// Power-iterates the normalized map given by the stage matrix restricted to
/// the estimate slots (data embeddings frozen at zero). Absence of a fixed
/// point within max_iters is a valid outcome.
std::optional<FixedPointResult> fixed_point_probe(const Eigen::MatrixXd& estimate_block,
                                                  const Eigen::MatrixXd& metric, double tolerance,
                                                  int max_iters, std::uint64_t seed,
                                                  int starts = 5);

}  // namespace rkfusion
