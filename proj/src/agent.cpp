#include "rkfusion/agent.hpp"

#include <cmath>

#include "rkfusion/errors.hpp"
#include "rkfusion/linalg.hpp"

namespace rkfusion {

AgentState::AgentState(int agent_id, Kernel kernel, AnchorSet anchors, Domain domain)
    : agent_id_(agent_id),
      kernel_(std::move(kernel)),
      anchors_(std::move(anchors)),
      domain_(std::move(domain)),
      gram_(gram(kernel_, anchors_)),
      gram_regular_(jittered(gram_)),
      downloaded_(zero_function(kernel_, anchors_, anchors_.space_tag)) {
    validate_anchors(anchors_);
}

AgentState AgentState::with_downloaded(Eigen::VectorXd coefficients) const {
    AgentState next = *this;
    next.downloaded_.coefficients = std::move(coefficients);
    return next;
}

namespace {

Eigen::VectorXd estimate_coefficients(const AgentState& state, double x, double scaled_y,
                                      const Eigen::VectorXd& prior, double rho) {
    if (!(rho > 0.0)) throw SingularSystemError("regularization parameter must be positive");
    const Eigen::MatrixXd& G = state.gram_regular();
    const Eigen::VectorXd kx = kernel_column(state.kernel(), state.anchors(), x);
    const Eigen::MatrixXd lhs = rho * G + kx * kx.transpose();
    SymmetricEigen eig(0.5 * (lhs + lhs.transpose()));
    if (!(eig.lambda_max() > 0.0) || !std::isfinite(eig.lambda_max()))
        throw SingularSystemError("regularized system numerically singular after jitter");
    const Eigen::VectorXd rhs = kx * scaled_y + rho * (G * prior);
    return eig.pinv_solve(rhs, 1e-14);
}

}  // namespace

RkhsFunction local_estimate(const AgentState& state, const DataPoint& data, double rho) {
    RkhsFunction out = zero_function(state.kernel(), state.anchors(), state.tag());
    out.coefficients =
        estimate_coefficients(state, data.x, data.y, state.downloaded().coefficients, rho);
    return out;
}

DataEmbedding embed_data(const AgentState& state, const DataPoint& data) {
    RkhsFunction f = zero_function(state.kernel(), state.anchors(), state.tag());
    f.coefficients = kernel_column(state.kernel(), state.anchors(), data.x) * data.y;
    return DataEmbedding{std::move(f), data.x};
}

RkhsFunction apply_learning_operator(const AgentState& state, const RkhsFunction& f,
                                     const DataEmbedding& psi, double rho) {
    if (f.space_tag != state.tag() || psi.function.space_tag != state.tag())
        throw MixedSpaceError("learning operator inputs must live in the agent space");
    if (!(rho > 0.0)) throw SingularSystemError("regularization parameter must be positive");
    const Eigen::VectorXd rhs = rho * (state.gram_regular() * f.coefficients);
    const Eigen::VectorXd kx = kernel_column(state.kernel(), state.anchors(), psi.x);
    const Eigen::MatrixXd lhs = rho * state.gram_regular() + kx * kx.transpose();
    SymmetricEigen eig(0.5 * (lhs + lhs.transpose()));
    if (!(eig.lambda_max() > 0.0))
        throw SingularSystemError("regularized system numerically singular after jitter");
    RkhsFunction out = zero_function(state.kernel(), state.anchors(), state.tag());
    const Eigen::VectorXd combined = rhs + psi.function.coefficients;
    out.coefficients = eig.pinv_solve(combined, 1e-14);
    return out;
}

AgentNormEstimate agent_operator_norm(const AgentState& state, double rho,
                                      const std::vector<double>& x_grid) {
    return agent_operator_norm_weighted(state, rho, x_grid, state.gram_matrix());
}

AgentNormEstimate agent_operator_norm_weighted(const AgentState& state, double rho,
                                               const std::vector<double>& x_grid,
                                               const Eigen::MatrixXd& output_weight) {
    if (x_grid.empty()) throw SingularSystemError("empty evaluation grid");
    const Eigen::MatrixXd& G = state.gram_matrix();
    const Eigen::MatrixXd& Gj = state.gram_regular();
    const int m = state.anchors().size();
    AgentNormEstimate est;
    double best = 0.0;
    for (double x : x_grid) {
        const Eigen::VectorXd kx = kernel_column(state.kernel(), state.anchors(), x);
        const double psi_energy = kx.dot(G * kx);
        const Eigen::MatrixXd lhs = rho * Gj + kx * kx.transpose();
        SymmetricEigen lhs_eig(0.5 * (lhs + lhs.transpose()));
        if (lhs_eig.lambda_max() <= 0.0) {
            ++est.skipped_grid_points;
            continue;
        }
        // B maps (alpha, y) to output coefficients.
        Eigen::MatrixXd stacked(m, m + 1);
        stacked.leftCols(m) = rho * Gj;
        stacked.col(m) = kx;
        const Eigen::MatrixXd B = lhs_eig.pinv_solve(stacked, 1e-16);
        const Eigen::MatrixXd A = B.transpose() * output_weight * B;
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m + 1, m + 1);
        C.topLeftCorner(m, m) = G;
        C(m, m) = psi_energy;
        SymmetricEigen c_eig(C);
        if (c_eig.rank() == 0) {
            ++est.skipped_grid_points;
            continue;
        }
        best = std::max(best, generalized_lambda_max(A, C));
    }
    est.norm = std::sqrt(std::max(best, 0.0));
    return est;
}

}  // namespace rkfusion
