#include "rkfusion/fusion.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "rkfusion/errors.hpp"

namespace rkfusion {

namespace {

Eigen::MatrixXd stacked_eval_at_anchors(const FeatureSet& stacked, const AnchorSet& anchors) {
    Eigen::MatrixXd out(stacked.dimension(), anchors.size());
    for (int j = 0; j < anchors.size(); ++j)
        out.col(j) = stacked.eval_at(anchors.points[static_cast<std::size_t>(j)]);
    return out;
}

// Orthonormal basis coordinates of the span of the stacked features: project
// the unit coordinate vectors onto the complement of the dependency null
// space, then Gram-Schmidt in fixed order.
Eigen::MatrixXd orthonormalize_features(const FeatureSet& stacked, const std::vector<double>& grid,
                                        int rank) {
    const int p = stacked.dimension();
    Eigen::MatrixXd projector = Eigen::MatrixXd::Identity(p, p);
    if (rank < p) {
        const Eigen::MatrixXd F = stacked.eval_matrix(grid);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinV);
        const Eigen::MatrixXd vr = svd.matrixV().leftCols(rank);
        projector = vr * vr.transpose();
    }
    Eigen::MatrixXd basis(p, rank);
    int kept = 0;
    for (int a = 0; a < p; ++a) {
        Eigen::VectorXd v = projector.col(a);
        for (int c = 0; c < kept; ++c) v -= basis.col(c).dot(v) * basis.col(c);
        const double nv = v.norm();
        if (nv > 1e-10) {
            if (kept == rank)
                throw SingularSystemError("feature orthonormalization exceeded computed rank");
            basis.col(kept++) = v / nv;
        }
    }
    if (kept != rank)
        throw SingularSystemError("feature orthonormalization found rank " + std::to_string(kept) +
                                  " but the evaluation matrix has rank " + std::to_string(rank));
    return basis;
}

DownloadOperator make_download_operator(int agent_id, const Eigen::MatrixXd& basis_coords,
                                        const Eigen::MatrixXd& agent_slot_selector,
                                        const Eigen::MatrixXd& gram_breve,
                                        const Eigen::MatrixXd& stacked_at_agent_anchors) {
    DownloadOperator op;
    op.agent_id = agent_id;
    const Eigen::MatrixXd L =
        basis_coords.transpose() * agent_slot_selector * basis_coords;
    op.basis_matrix = 0.5 * (L + L.transpose());
    SymmetricEigen eig(op.basis_matrix);
    op.eigenvalues = eig.values().cwiseMax(0.0);
    op.eigenvectors = eig.vectors();
    const double lmax = op.eigenvalues.size() ? op.eigenvalues.maxCoeff() : 0.0;
    const double cutoff = 1e-10 * std::max(lmax, 0.0);
    const Eigen::Index m = op.eigenvalues.size();
    Eigen::VectorXd sqrt_vals(m), keep_vals(m), inv_sqrt_vals(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const bool pos = op.eigenvalues(k) > cutoff;
        sqrt_vals(k) = pos ? std::sqrt(op.eigenvalues(k)) : 0.0;
        keep_vals(k) = pos ? 1.0 : 0.0;
        inv_sqrt_vals(k) = pos ? 1.0 / std::sqrt(op.eigenvalues(k)) : 0.0;
    }
    op.sqrt_matrix = op.eigenvectors * sqrt_vals.asDiagonal() * op.eigenvectors.transpose();
    op.projector = op.eigenvectors * keep_vals.asDiagonal() * op.eigenvectors.transpose();
    op.composed = op.eigenvectors * sqrt_vals.asDiagonal() * op.eigenvectors.transpose();

    // Each eigenvector expanded over fusion-kernel sections at the agent's
    // anchors; those expansions carry the downloaded coefficients.
    SymmetricEigen breve(gram_breve);
    const Eigen::MatrixXd evals =
        stacked_at_agent_anchors.transpose() * basis_coords * op.eigenvectors;  // m x m
    const Eigen::MatrixXd expansion = breve.pinv_solve(evals);
    op.to_agent = expansion * inv_sqrt_vals.asDiagonal() * op.eigenvectors.transpose();
    return op;
}

}  // namespace

FusionSpace::FusionSpace(Kernel fusion, AgentState a1, AgentState a2)
    : kernel_(std::move(fusion)), agent1_(std::move(a1)), agent2_(std::move(a2)) {}

FusionSpace FusionSpace::build(const AgentState& agent1, const AgentState& agent2,
                               int feature_grid_points) {
    FusionSpace space(Kernel::sum(agent1.kernel(), agent2.kernel()), agent1, agent2);
    const FeatureSet& stacked = space.kernel_.features();

    space.joint_domain_ = [&] {
        std::vector<Interval> pieces = agent1.domain().pieces();
        const auto& other = agent2.domain().pieces();
        pieces.insert(pieces.end(), other.begin(), other.end());
        return Domain(pieces);
    }();
    const std::vector<double> grid = space.joint_domain_.grid(feature_grid_points);

    for (int agent_id : {1, 2}) {
        const AgentState& st = agent_id == 1 ? agent1 : agent2;
        if (!st.kernel().features().linearly_independent(grid))
            space.warnings_.push_back("agent " + std::to_string(agent_id) +
                                      " features not linearly independent on the joint grid");
    }

    space.dimension_ = stacked.numerical_rank(grid);
    if (space.dimension_ == 0) throw SingularSystemError("stacked features have rank zero");
    for (int agent_id : {1, 2}) {
        const AgentState& st = agent_id == 1 ? agent1 : agent2;
        if (st.anchors().size() != space.dimension_)
            throw ValidationError("anchors", "agent " + std::to_string(agent_id) + " supplies " +
                                                 std::to_string(st.anchors().size()) +
                                                 " anchors but the combined space has dimension " +
                                                 std::to_string(space.dimension_));
    }
    for (double p1 : agent1.anchors().points)
        for (double p2 : agent2.anchors().points)
            if (p1 == p2)
                space.warnings_.push_back("anchor sets share the point " + std::to_string(p1));

    space.combined_.space_tag = SpaceTag::Fusion;
    space.combined_.points = agent1.anchors().points;
    space.combined_.points.insert(space.combined_.points.end(), agent2.anchors().points.begin(),
                                  agent2.anchors().points.end());

    space.gram_combined_ = gram(space.kernel_, space.combined_);
    space.gram_breve1_ = gram(space.kernel_, agent1.anchors());
    space.gram_breve2_ = gram(space.kernel_, agent2.anchors());
    for (int agent_id : {1, 2}) {
        const Eigen::MatrixXd& breve = agent_id == 1 ? space.gram_breve1_ : space.gram_breve2_;
        SymmetricEigen eig(breve);
        if (eig.lambda_min() <= 1e-10 * eig.lambda_max())
            throw ValidationError("anchors",
                                  "fusion-kernel sections at agent " + std::to_string(agent_id) +
                                      " anchors are numerically dependent");
    }

    space.m1_ = basis_change(agent1.kernel(), space.kernel_, agent1.anchors());
    space.m2_ = basis_change(agent2.kernel(), space.kernel_, agent2.anchors());

    space.basis_coords_ = orthonormalize_features(stacked, grid, space.dimension_);
    space.stacked_combined_ = stacked_eval_at_anchors(stacked, space.combined_);

    const int p1 = agent1.kernel().features().dimension();
    const int p = stacked.dimension();
    Eigen::MatrixXd select1 = Eigen::MatrixXd::Zero(p, p);
    select1.topLeftCorner(p1, p1).setIdentity();
    Eigen::MatrixXd select2 = Eigen::MatrixXd::Zero(p, p);
    select2.bottomRightCorner(p - p1, p - p1).setIdentity();

    // Agent-kernel sections only populate the agent's own feature slots.
    space.stacked_agent1_ = select1 * stacked_eval_at_anchors(stacked, agent1.anchors());
    space.stacked_agent2_ = select2 * stacked_eval_at_anchors(stacked, agent2.anchors());

    space.down1_ = make_download_operator(1, space.basis_coords_, select1, space.gram_breve1_,
                                          stacked_eval_at_anchors(stacked, agent1.anchors()));
    space.down2_ = make_download_operator(2, space.basis_coords_, select2, space.gram_breve2_,
                                          stacked_eval_at_anchors(stacked, agent2.anchors()));

    const Eigen::MatrixXd sym_product = 0.5 * (space.down1_.projector * space.down2_.projector +
                                               space.down2_.projector * space.down1_.projector);
    SymmetricEigen overlap(sym_product);
    space.c_d_ = 1.0 + std::max(overlap.lambda_max(), 0.0);
    return space;
}

const Kernel& FusionSpace::agent_kernel(int agent_id) const {
    return agent_id == 1 ? agent1_.kernel() : agent2_.kernel();
}

const AgentState& FusionSpace::agent_state(int agent_id) const {
    return agent_id == 1 ? agent1_ : agent2_;
}

const AnchorSet& FusionSpace::agent_anchors(int agent_id) const {
    return agent_id == 1 ? agent1_.anchors() : agent2_.anchors();
}

const Eigen::MatrixXd& FusionSpace::gram_fusion_at_agent(int agent_id) const {
    return agent_id == 1 ? gram_breve1_ : gram_breve2_;
}

const Eigen::MatrixXd& FusionSpace::gram_agent(int agent_id) const {
    return agent_id == 1 ? agent1_.gram_matrix() : agent2_.gram_matrix();
}

const Eigen::MatrixXd& FusionSpace::basis_change_matrix(int agent_id) const {
    return agent_id == 1 ? m1_ : m2_;
}

const DownloadOperator& FusionSpace::download_operator(int agent_id) const {
    return agent_id == 1 ? down1_ : down2_;
}

RkhsFunction FusionSpace::upload(const RkhsFunction& f) const {
    const int agent_id = f.space_tag == SpaceTag::Agent1 ? 1 : 2;
    if (f.space_tag == SpaceTag::Fusion)
        throw MixedSpaceError("upload expects a function in an agent space");
    RkhsFunction out{kernel_,
                     AnchorSet{agent_anchors(agent_id).points, SpaceTag::Fusion},
                     basis_change_matrix(agent_id) * f.coefficients, SpaceTag::Fusion};
    return out;
}

RkhsFunction FusionSpace::fuse(const ReconstructedData& d1, const ReconstructedData& d2,
                               double rho) const {
    if (!(rho > 0.0)) throw SingularSystemError("fusion requires a positive rho");
    Eigen::VectorXd stacked(gram_combined_.rows());
    stacked.head(d1.outputs.size()) = d1.outputs;
    stacked.tail(d2.outputs.size()) = d2.outputs;
    SymmetricEigen eig(gram_combined_);
    if (eig.lambda_max() <= 0.0) throw SingularSystemError("combined Gram has no positive spectrum");
    const Eigen::MatrixXd solve =
        eig.spectral_apply([rho](double l) { return 1.0 / (l + rho); });
    RkhsFunction out{kernel_, combined_, solve * stacked, SpaceTag::Fusion};
    return out;
}

Eigen::VectorXd FusionSpace::orthonormal_coords(const RkhsFunction& f) const {
    const FeatureSet& stacked = kernel_.features();
    const int p = stacked.dimension();
    const int p1 = agent1_.kernel().features().dimension();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    if (f.space_tag == SpaceTag::Fusion) {
        for (int j = 0; j < f.anchors.size(); ++j)
            w += f.coefficients(j) * stacked.eval_at(f.anchors.points[static_cast<std::size_t>(j)]);
    } else {
        const int agent_id = f.space_tag == SpaceTag::Agent1 ? 1 : 2;
        const FeatureSet& own = agent_kernel(agent_id).features();
        const int offset = agent_id == 1 ? 0 : p1;
        for (int j = 0; j < f.anchors.size(); ++j) {
            const Eigen::VectorXd v = own.eval_at(f.anchors.points[static_cast<std::size_t>(j)]);
            w.segment(offset, v.size()) += f.coefficients(j) * v;
        }
    }
    return basis_coords_.transpose() * w;
}

RkhsFunction FusionSpace::function_from_coords(const Eigen::VectorXd& coords) const {
    // Evaluations at the combined anchors determine the expansion; the
    // combined Gram is rank-deficient so the minimum-norm coefficients are
    // used.
    const Eigen::VectorXd at_anchors =
        stacked_combined_.transpose() * (basis_coords_ * coords);
    SymmetricEigen eig(gram_combined_);
    RkhsFunction out{kernel_, combined_, eig.pinv_solve(at_anchors), SpaceTag::Fusion};
    return out;
}

RkhsFunction FusionSpace::download(int agent_id, const RkhsFunction& f_in_fusion) const {
    const DownloadOperator& op = download_operator(agent_id);
    const Eigen::VectorXd coords = orthonormal_coords(f_in_fusion);
    const AgentState& st = agent_id == 1 ? agent1_ : agent2_;
    RkhsFunction out = zero_function(st.kernel(), st.anchors(), st.tag());
    out.coefficients = op.to_agent * coords;
    return out;
}

Eigen::VectorXd FusionSpace::download_matrix_form(int agent_id,
                                                  const RkhsFunction& f_in_fusion) const {
    const DownloadOperator& op = download_operator(agent_id);
    return op.composed * orthonormal_coords(f_in_fusion);
}

ReconstructedData reconstruct_data(const RkhsFunction& f, double rho, int agent_id) {
    if (!(rho > 0.0)) throw SingularSystemError("reconstruction requires a positive rho");
    const Eigen::MatrixXd G = gram(f.kernel, f.anchors);
    ReconstructedData out;
    out.inputs = f.anchors;
    out.outputs = (G + rho * Eigen::MatrixXd::Identity(G.rows(), G.cols())) * f.coefficients;
    out.agent_id = agent_id;
    return out;
}

DownloadOperator build_download_operator(const FusionSpace& space, int agent_id) {
    return space.download_operator(agent_id);
}

double download_normalization(const FusionSpace& space) { return space.download_normalization(); }

}  // namespace rkfusion
