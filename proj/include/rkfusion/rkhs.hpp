#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rkfusion/kernel.hpp"

namespace rkfusion {

enum class SpaceTag { Agent1, Agent2, Fusion };

std::string to_string(SpaceTag tag);

/// Points whose kernel sections serve as the working basis of a space.
struct AnchorSet {
    std::vector<double> points;
    SpaceTag space_tag = SpaceTag::Fusion;

    int size() const { return static_cast<int>(points.size()); }
    bool operator==(const AnchorSet& other) const {
        return points == other.points && space_tag == other.space_tag;
    }
};

/// Throws on duplicate points; returns the Gram min/max eigenvalue ratio so
/// callers can report conditioning.
void validate_anchors(const AnchorSet& anchors);

/// entries[j][k] = K(a_j, b_k).
Eigen::MatrixXd gram(const Kernel& kernel, const AnchorSet& a, const AnchorSet& b);
Eigen::MatrixXd gram(const Kernel& kernel, const AnchorSet& a);

/// Column [K(x, a_j)]_j.
Eigen::VectorXd kernel_column(const Kernel& kernel, const AnchorSet& anchors, double x);

/// f(.) = sum_j coefficients_j K(., anchor_j), tagged with the space whose
/// norm applies.
struct RkhsFunction {
    Kernel kernel;
    AnchorSet anchors;
    Eigen::VectorXd coefficients;
    SpaceTag space_tag;

    double operator()(double x) const;
};

RkhsFunction zero_function(const Kernel& kernel, const AnchorSet& anchors, SpaceTag tag);

double eval_function(const RkhsFunction& f, double x);

/// alpha^T G beta over the shared kernel/anchor basis. Throws MixedSpaceError
/// when the functions live in different spaces or over different anchors.
double inner_product(const RkhsFunction& f, const RkhsFunction& g);
double norm_squared(const RkhsFunction& f);
double norm(const RkhsFunction& f);

/// Minimum of ||f1||^2_{H1} + ||f2||^2_{H2} over decompositions f = f1 + f2,
/// solved as a least-norm projection in stacked feature coordinates on the
/// given evaluation grid. Returns the squared quantity (= ||f||^2 in the sum
/// space). Throws SingularSystemError if the stacked evaluation matrix has no
/// numerical rank on the grid.
double sum_space_norm_sq(const RkhsFunction& f_in_sum_space, const Kernel& k1, const Kernel& k2,
                         const std::vector<double>& grid);

struct AnchorSelection {
    AnchorSet anchors;
    double gram_condition = 0.0;
};

/// Greedy selection of m pool points maximizing, at each step, the smallest
/// eigenvalue of the grown Gram block. Deterministic in pool order; throws
/// InsufficientRankError when no candidate increases the numerical rank.
AnchorSelection select_anchors(const Kernel& kernel, const std::vector<double>& candidate_pool,
                               int m, SpaceTag tag);

/// Matrix M with K_agent(., a_j) = sum_k M(k,j) K_fusion(., a_k): solves
/// G_fusion M = G_cross at the shared anchor set. Throws SingularSystemError
/// when cond(G_fusion) > 1e12.
Eigen::MatrixXd basis_change(const Kernel& agent_kernel, const Kernel& fusion_kernel,
                             const AnchorSet& anchors);

}  // namespace rkfusion
