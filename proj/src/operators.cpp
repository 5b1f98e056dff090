#include "rkfusion/operators.hpp"

#include <cmath>
#include <random>

#include "rkfusion/errors.hpp"

namespace rkfusion {

namespace {

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

}  // namespace

FusionNormReport fusion_operator_norm(const FusionSpace& space, double rho) {
    if (!(rho > 0.0)) throw SingularSystemError("fusion operator norm requires positive rho");
    const int m = space.dimension();
    const Eigen::MatrixXd& gf = space.gram_combined();
    SymmetricEigen gf_eig(gf);
    if (gf_eig.lambda_max() <= 0.0)
        throw SingularSystemError("combined Gram has no positive spectrum");

    FusionNormReport report;
    report.lambda_max_gram = gf_eig.lambda_max();

    // Relearn-then-fit coefficient map in fixed coordinates.
    const Eigen::MatrixXd relearn = block_diag(
        space.gram_agent(1) + rho * Eigen::MatrixXd::Identity(m, m),
        space.gram_agent(2) + rho * Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd fit = gf_eig.spectral_apply([rho](double l) { return 1.0 / (l + rho); });
    report.matrix_norm = spectral_norm(fit * relearn);

    // Constrained supremum: output energy alpha^T K alpha against unit summed
    // combined-space energy of the two inputs.
    const Eigen::MatrixXd weight =
        gf_eig.spectral_apply([rho](double l) { return l / ((l + rho) * (l + rho)); });
    const Eigen::MatrixXd quad = relearn.transpose() * weight * relearn;
    const Eigen::MatrixXd c1 = space.basis_change_matrix(1).transpose() *
                               space.gram_fusion_at_agent(1) * space.basis_change_matrix(1);
    const Eigen::MatrixXd c2 = space.basis_change_matrix(2).transpose() *
                               space.gram_fusion_at_agent(2) * space.basis_change_matrix(2);
    const Eigen::MatrixXd constraint = block_diag(0.5 * (c1 + c1.transpose()), 0.5 * (c2 + c2.transpose()));
    report.sup_norm = std::sqrt(std::max(generalized_lambda_max(quad, constraint), 0.0));

    // Schur block diagonalization of the combined Gram.
    const Eigen::MatrixXd& b1 = space.gram_fusion_at_agent(1);
    const Eigen::MatrixXd& b2 = space.gram_fusion_at_agent(2);
    const Eigen::MatrixXd coupling = gf.topRightCorner(m, m);
    SymmetricEigen b2_eig(jittered(b2));
    const Eigen::MatrixXd complement =
        b1 - coupling * b2_eig.pinv_solve(Eigen::MatrixXd(coupling.transpose()));
    SymmetricEigen comp_eig(0.5 * (complement + complement.transpose()));
    SymmetricEigen b1_eig(b1);
    report.schur_diag_lambda_max = std::max(comp_eig.lambda_max(), b2_eig.lambda_max());
    report.schur_block_bound = std::max(b1_eig.lambda_max(), b2_eig.lambda_max());
    return report;
}

MultiAgentNormReport multi_agent_operator_norm(const FusionSpace& space, const AgentState& s1,
                                               const AgentState& s2, double rho1, double rho2,
                                               int grid_points_per_piece) {
    MultiAgentNormReport report;
    const auto weighted = [&](const AgentState& st, double rho, int agent_id) {
        const Eigen::MatrixXd& m = space.basis_change_matrix(agent_id);
        const Eigen::MatrixXd weight =
            m.transpose() * space.gram_fusion_at_agent(agent_id) * m;
        std::vector<double> grid;
        for (const auto& piece : st.domain().pieces()) {
            Domain single({piece});
            const auto pts = single.grid(grid_points_per_piece);
            grid.insert(grid.end(), pts.begin(), pts.end());
        }
        return agent_operator_norm_weighted(st, rho, grid, 0.5 * (weight + weight.transpose()));
    };
    const AgentNormEstimate e1 = weighted(s1, rho1, 1);
    const AgentNormEstimate e2 = weighted(s2, rho2, 2);
    report.block1 = e1.norm;
    report.block2 = e2.norm;
    report.combined = std::max(e1.norm, e2.norm);
    report.skipped_grid_points = e1.skipped_grid_points + e2.skipped_grid_points;
    return report;
}

double download_map_norm(const FusionSpace& space, bool normalize) {
    const Eigen::MatrixXd sum = space.download_operator(1).projector +
                                space.download_operator(2).projector;
    SymmetricEigen eig(sum);
    const double raw = std::sqrt(std::max(eig.lambda_max(), 0.0));
    return normalize ? raw / space.download_normalization() : raw;
}

StageOperator stage_operator(const FusionSpace& space, const AgentState& s1, const AgentState& s2,
                             double rho1, double rho2, double rho_fusion, double x1, double x2,
                             bool normalize_download, std::optional<double> recon_rho1,
                             std::optional<double> recon_rho2) {
    const int m = space.dimension();
    const double rr1 = recon_rho1.value_or(rho1);
    const double rr2 = recon_rho2.value_or(rho2);

    const auto agent_blocks = [&](const AgentState& st, double rho, double x,
                                  Eigen::MatrixXd& on_estimate, Eigen::MatrixXd& on_embedding) {
        const Eigen::VectorXd kx = kernel_column(st.kernel(), st.anchors(), x);
        const Eigen::MatrixXd lhs = rho * st.gram_regular() + kx * kx.transpose();
        SymmetricEigen eig(0.5 * (lhs + lhs.transpose()));
        if (eig.lambda_max() <= 0.0)
            throw SingularSystemError("stage assembly hit a singular local system");
        on_estimate = eig.pinv_solve(Eigen::MatrixXd(rho * st.gram_regular()), 1e-14);
        on_embedding = eig.pinv_solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m)), 1e-14);
    };

    Eigen::MatrixXd a1f, a1p, a2f, a2p;
    agent_blocks(s1, rho1, x1, a1f, a1p);
    agent_blocks(s2, rho2, x2, a2f, a2p);

    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(2 * m, 4 * m);
    local.block(0, 0, m, m) = a1f;
    local.block(0, 2 * m, m, m) = a1p;
    local.block(m, m, m, m) = a2f;
    local.block(m, 3 * m, m, m) = a2p;

    const Eigen::MatrixXd relearn = block_diag(
        space.gram_agent(1) + rr1 * Eigen::MatrixXd::Identity(m, m),
        space.gram_agent(2) + rr2 * Eigen::MatrixXd::Identity(m, m));

    SymmetricEigen gf_eig(space.gram_combined());
    const Eigen::MatrixXd fit =
        gf_eig.spectral_apply([rho_fusion](double l) { return 1.0 / (l + rho_fusion); });

    // Fused coefficients -> orthonormal coords -> agent coefficients.
    const Eigen::MatrixXd to_coords =
        space.orthonormal_basis().transpose() * space.stacked_at_combined();
    Eigen::MatrixXd downloads(2 * m, 2 * m);
    downloads.topRows(m) = space.download_operator(1).to_agent * to_coords;
    downloads.bottomRows(m) = space.download_operator(2).to_agent * to_coords;
    if (normalize_download) downloads /= space.download_normalization();

    StageOperator stage;
    stage.matrix = downloads * fit * relearn * local;
    stage.x1 = x1;
    stage.x2 = x2;
    stage.rho1 = rho1;
    stage.rho2 = rho2;
    stage.rho_fusion = rho_fusion;
    stage.normalized = normalize_download;

    const Eigen::MatrixXd in_metric = block_diag(
        block_diag(space.gram_agent(1), space.gram_agent(2)),
        block_diag(space.gram_agent(1), space.gram_agent(2)));
    const Eigen::MatrixXd out_metric = block_diag(space.gram_agent(1), space.gram_agent(2));
    stage.norm = metric_operator_norm(stage.matrix, in_metric, out_metric);
    return stage;
}

double normalized_fusion_matrix_norm(const FusionSpace& space, double rho) {
    // Coefficient map with the combined Gram rescaled to unit top eigenvalue,
    // the regime in which its limit statement is posed. Rescaling the kernel
    // scales the agent Grams and the combined spectrum by the same factor.
    SymmetricEigen gf_eig(space.gram_combined());
    const double lam = gf_eig.lambda_max();
    if (lam <= 0.0) throw SingularSystemError("combined Gram has no positive spectrum");
    const double s = 1.0 / lam;
    const int m = space.dimension();
    const Eigen::MatrixXd relearn = block_diag(
        s * space.gram_agent(1) + rho * Eigen::MatrixXd::Identity(m, m),
        s * space.gram_agent(2) + rho * Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd fit =
        gf_eig.spectral_apply([rho, s](double l) { return 1.0 / (s * l + rho); });
    return spectral_norm(fit * relearn);
}

NormTrace norm_trace(const FusionSpace& space, const AgentState& s1, const AgentState& s2,
                     const Schedule& sched1, const Schedule& sched2, const Schedule& sched_fusion,
                     const std::vector<double>& x1_sequence, const std::vector<double>& x2_sequence,
                     bool normalize_download, int grid_points_per_piece) {
    if (x1_sequence.size() != x2_sequence.size() || x1_sequence.empty())
        throw SingularSystemError("norm trace needs matching nonempty data sequences");
    NormTrace trace;
    const double that_norm = download_map_norm(space, normalize_download);
    double product = 1.0, product_factor = 1.0;
    for (std::size_t i = 0; i < x1_sequence.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        NormTraceRecord rec;
        rec.n = n;
        rec.rho1 = sched1.value(n);
        rec.rho2 = sched2.value(n);
        rec.rho_fusion = sched_fusion.value(n);
        const StageOperator stage =
            stage_operator(space, s1, s2, rec.rho1, rec.rho2, rec.rho_fusion, x1_sequence[i],
                           x2_sequence[i], normalize_download);
        rec.stage_norm = stage.norm;
        product *= stage.norm;
        rec.cum_product = product;

        // Per-factor estimate, each factor in the regime of its own limit
        // statement: the learning blocks on the actual system, the fusion
        // coefficient map on the unit-normalized combined Gram.
        const MultiAgentNormReport learn = multi_agent_operator_norm(
            space, s1, s2, rec.rho1, rec.rho2, grid_points_per_piece);
        rec.factor_bound =
            that_norm * normalized_fusion_matrix_norm(space, rec.rho_fusion) * learn.combined;
        product_factor *= rec.factor_bound;
        rec.cum_product_factor = product_factor;

        trace.records.push_back(rec);
        trace.sup_product = std::max(trace.sup_product, product);
        trace.sup_product_factor = std::max(trace.sup_product_factor, product_factor);
    }
    trace.divergence_flag = trace.sup_product > 1e6;
    return trace;
}

std::optional<FixedPointResult> fixed_point_probe(const Eigen::MatrixXd& estimate_block,
                                                  const Eigen::MatrixXd& metric, double tolerance,
                                                  int max_iters, std::uint64_t seed, int starts) {
    const Eigen::Index dim = estimate_block.cols();
    if (estimate_block.rows() != dim || metric.rows() != dim)
        throw SingularSystemError("fixed point probe needs a square map and matching metric");
    SymmetricEigen metric_eig(metric);
    const auto metric_norm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(std::max(v.dot(metric * v), 0.0));
    };
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = gauss(engine);
        // keep the start inside the non-degenerate directions
        v = metric_eig.range_projector() * v;
        double nv = metric_norm(v);
        if (nv <= 0.0) continue;
        v /= nv;
        for (int it = 1; it <= max_iters; ++it) {
            Eigen::VectorXd w = estimate_block * v;
            const double nw = metric_norm(w);
            if (!(nw > 0.0) || !w.allFinite()) break;
            w /= nw;
            const double residual = metric_norm(estimate_block * w - w);
            if (residual <= tolerance) {
                FixedPointResult result;
                const Eigen::Index m = dim / 2;
                result.f1 = w.head(m);
                result.f2 = w.tail(dim - m);
                result.iterations = it;
                result.residual = residual;
                return result;
            }
            v = w;
        }
    }
    return std::nullopt;
}

}  // namespace rkfusion
