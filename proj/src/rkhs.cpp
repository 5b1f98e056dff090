#include "rkfusion/rkhs.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "rkfusion/errors.hpp"
#include "rkfusion/linalg.hpp"

namespace rkfusion {

std::string to_string(SpaceTag tag) {
    switch (tag) {
        case SpaceTag::Agent1: return "H1";
        case SpaceTag::Agent2: return "H2";
        case SpaceTag::Fusion: return "H";
    }
    return "?";
}

void validate_anchors(const AnchorSet& anchors) {
    for (std::size_t i = 0; i < anchors.points.size(); ++i)
        for (std::size_t j = i + 1; j < anchors.points.size(); ++j)
            if (anchors.points[i] == anchors.points[j])
                throw ValidationError("anchors", "duplicate anchor point " +
                                                     std::to_string(anchors.points[i]));
}

Eigen::MatrixXd gram(const Kernel& kernel, const AnchorSet& a, const AnchorSet& b) {
    Eigen::MatrixXd out(a.size(), b.size());
    for (int j = 0; j < a.size(); ++j)
        for (int k = 0; k < b.size(); ++k)
            out(j, k) = kernel(a.points[static_cast<std::size_t>(j)], b.points[static_cast<std::size_t>(k)]);
    return out;
}

Eigen::MatrixXd gram(const Kernel& kernel, const AnchorSet& a) {
    Eigen::MatrixXd out = gram(kernel, a, a);
    return 0.5 * (out + out.transpose());  // exact symmetry for downstream eigensolves
}

Eigen::VectorXd kernel_column(const Kernel& kernel, const AnchorSet& anchors, double x) {
    Eigen::VectorXd out(anchors.size());
    for (int j = 0; j < anchors.size(); ++j) out(j) = kernel(x, anchors.points[static_cast<std::size_t>(j)]);
    return out;
}

double RkhsFunction::operator()(double x) const {
    return coefficients.dot(kernel_column(kernel, anchors, x));
}

RkhsFunction zero_function(const Kernel& kernel, const AnchorSet& anchors, SpaceTag tag) {
    return RkhsFunction{kernel, anchors, Eigen::VectorXd::Zero(anchors.size()), tag};
}

double eval_function(const RkhsFunction& f, double x) { return f(x); }

double inner_product(const RkhsFunction& f, const RkhsFunction& g) {
    if (f.space_tag != g.space_tag)
        throw MixedSpaceError("inner product between " + to_string(f.space_tag) + " and " +
                              to_string(g.space_tag));
    if (!(f.anchors == g.anchors))
        throw MixedSpaceError("inner product over different anchor bases");
    const Eigen::MatrixXd G = gram(f.kernel, f.anchors);
    return f.coefficients.dot(G * g.coefficients);
}

double norm_squared(const RkhsFunction& f) { return inner_product(f, f); }

double norm(const RkhsFunction& f) { return std::sqrt(std::max(norm_squared(f), 0.0)); }

double sum_space_norm_sq(const RkhsFunction& f, const Kernel& k1, const Kernel& k2,
                         const std::vector<double>& grid) {
    const FeatureSet stacked = FeatureSet::concatenate(k1.features(), k2.features());
    const int p = stacked.dimension();
    if (stacked.numerical_rank(grid) == 0)
        throw SingularSystemError("stacked feature evaluation matrix has no numerical rank");

    // Stacked coordinates of f: sections K(., a_j) contribute phi(a_j).
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < f.anchors.size(); ++j)
        w += f.coefficients(j) * stacked.eval_at(f.anchors.points[static_cast<std::size_t>(j)]);

    // Least-norm representation: project onto the row space of the grid
    // evaluation matrix (the complement of the dependency null space).
    const Eigen::MatrixXd F = stacked.eval_matrix(grid);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double sq = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > 1e-10 * sv(0)) {
            const double c = svd.matrixV().col(i).dot(w);
            sq += c * c;
        }
    }
    return sq;
}

AnchorSelection select_anchors(const Kernel& kernel, const std::vector<double>& candidate_pool,
                               int m, SpaceTag tag) {
    if (static_cast<int>(candidate_pool.size()) < m)
        throw InsufficientRankError("candidate pool smaller than requested anchor count");
    std::vector<double> chosen;
    std::vector<bool> used(candidate_pool.size(), false);
    for (int step = 0; step < m; ++step) {
        double best_min_eig = -1.0;
        std::size_t best_idx = candidate_pool.size();
        for (std::size_t c = 0; c < candidate_pool.size(); ++c) {
            if (used[c]) continue;
            if (std::find(chosen.begin(), chosen.end(), candidate_pool[c]) != chosen.end()) continue;
            AnchorSet trial{chosen, tag};
            trial.points.push_back(candidate_pool[c]);
            SymmetricEigen eig(gram(kernel, trial));
            const double min_eig = eig.lambda_min();
            if (min_eig > best_min_eig) {
                best_min_eig = min_eig;
                best_idx = c;
            }
        }
        if (best_idx == candidate_pool.size() || best_min_eig <= 0.0)
            throw InsufficientRankError("no pool candidate raises the Gram rank at step " +
                                        std::to_string(step + 1));
        used[best_idx] = true;
        chosen.push_back(candidate_pool[best_idx]);
    }
    AnchorSet anchors{std::move(chosen), tag};
    SymmetricEigen eig(gram(kernel, anchors));
    if (eig.lambda_min() <= kRangeTol * eig.lambda_max())
        throw InsufficientRankError("selected Gram numerically singular");
    return AnchorSelection{std::move(anchors), eig.condition()};
}

Eigen::MatrixXd basis_change(const Kernel& agent_kernel, const Kernel& fusion_kernel,
                             const AnchorSet& anchors) {
    const Eigen::MatrixXd fusion_gram = gram(fusion_kernel, anchors);
    SymmetricEigen eig(fusion_gram);
    if (eig.condition() > 1e12)
        throw SingularSystemError("fusion Gram condition number exceeds 1e12 in basis change");
    const Eigen::MatrixXd cross = gram(agent_kernel, anchors);
    return eig.pinv_solve(cross);
}

}  // namespace rkfusion
