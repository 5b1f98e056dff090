#include "rkfusion/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace rkfusion {

SymmetricEigen::SymmetricEigen(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    values_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
}

Eigen::Index SymmetricEigen::rank(double rel_tol) const {
    const double cutoff = rel_tol * std::max(lambda_max(), 0.0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < values_.size(); ++i)
        if (values_(i) > cutoff) ++r;
    return r;
}

double SymmetricEigen::condition(double rel_tol) const {
    const double lmax = lambda_max();
    const double cutoff = rel_tol * std::max(lmax, 0.0);
    double smallest = lmax;
    for (Eigen::Index i = 0; i < values_.size(); ++i)
        if (values_(i) > cutoff && values_(i) < smallest) smallest = values_(i);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return lmax / smallest;
}

Eigen::MatrixXd SymmetricEigen::spectral_apply(const std::function<double(double)>& fn,
                                               double rel_tol) const {
    const double cutoff = rel_tol * std::max(lambda_max(), 0.0);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(vectors_.rows(), vectors_.rows());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (values_(i) > cutoff)
            out += fn(values_(i)) * vectors_.col(i) * vectors_.col(i).transpose();
    }
    return out;
}

Eigen::VectorXd SymmetricEigen::pinv_solve(const Eigen::VectorXd& b, double rel_tol) const {
    const double cutoff = rel_tol * std::max(lambda_max(), 0.0);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (values_(i) > cutoff)
            out += (vectors_.col(i).dot(b) / values_(i)) * vectors_.col(i);
    }
    return out;
}

Eigen::MatrixXd SymmetricEigen::pinv_solve(const Eigen::MatrixXd& b, double rel_tol) const {
    Eigen::MatrixXd out(b.rows(), b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) out.col(c) = pinv_solve(Eigen::VectorXd(b.col(c)), rel_tol);
    return out;
}

Eigen::MatrixXd SymmetricEigen::whitening(double rel_tol) const {
    const double cutoff = rel_tol * std::max(lambda_max(), 0.0);
    Eigen::Index r = rank(rel_tol);
    Eigen::MatrixXd out(vectors_.rows(), r);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (values_(i) > cutoff) out.col(c++) = vectors_.col(i) / std::sqrt(values_(i));
    }
    return out;
}

Eigen::MatrixXd SymmetricEigen::sqrt_matrix(double rel_tol) const {
    return spectral_apply([](double l) { return std::sqrt(l); }, rel_tol);
}

Eigen::MatrixXd SymmetricEigen::range_projector(double rel_tol) const {
    return spectral_apply([](double) { return 1.0; }, rel_tol);
}

Eigen::MatrixXd jittered(const Eigen::MatrixXd& gram) {
    SymmetricEigen eig(gram);
    const double lmax = eig.lambda_max();
    if (lmax <= 0.0)
        return gram + kJitterRel * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    if (eig.lambda_min() < kRangeTol * lmax)
        return gram + (kJitterRel * lmax) * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    return gram;
}

double metric_operator_norm(const Eigen::MatrixXd& S, const Eigen::MatrixXd& c_in,
                            const Eigen::MatrixXd& c_out) {
    SymmetricEigen in(c_in), out(c_out);
    const Eigen::MatrixXd white_in = in.whitening();
    if (white_in.cols() == 0) return 0.0;
    const Eigen::MatrixXd mapped = out.sqrt_matrix() * S * white_in;
    return spectral_norm(mapped);
}

double generalized_lambda_max(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                              double rel_tol) {
    SymmetricEigen ce(C);
    const Eigen::MatrixXd white = ce.whitening(rel_tol);
    if (white.cols() == 0) return 0.0;
    const Eigen::MatrixXd reduced = white.transpose() * A * white;
    SymmetricEigen re(0.5 * (reduced + reduced.transpose()));
    return re.lambda_max();
}

double spectral_norm(const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd gram =
        (S.rows() <= S.cols()) ? Eigen::MatrixXd(S * S.transpose()) : Eigen::MatrixXd(S.transpose() * S);
    SymmetricEigen eig(gram);
    return std::sqrt(std::max(eig.lambda_max(), 0.0));
}

}  // namespace rkfusion
