#pragma once

#include <Eigen/Dense>
#include <functional>

namespace rkfusion {

// Relative eigenvalue cutoff below which a direction counts as null.
inline constexpr double kRangeTol = 1e-12;
// Jitter constant relative to the largest eigenvalue.
inline constexpr double kJitterRel = 1e-10;

/// Eigendecomposition of a symmetric matrix with the spectral helpers the
/// rest of the library is built on. Every solve goes through here so that
/// PSD clamping behaves identically everywhere.
class SymmetricEigen {
  public:
    explicit SymmetricEigen(const Eigen::MatrixXd& sym);

    const Eigen::VectorXd& values() const { return values_; }
    const Eigen::MatrixXd& vectors() const { return vectors_; }
    double lambda_max() const { return values_.size() ? values_(values_.size() - 1) : 0.0; }
    double lambda_min() const { return values_.size() ? values_(0) : 0.0; }
    Eigen::Index rank(double rel_tol = kRangeTol) const;
    double condition(double rel_tol = kRangeTol) const;

    /// V f(lambda) V^T over eigenvalues with lambda > rel_tol * lambda_max.
    Eigen::MatrixXd spectral_apply(const std::function<double(double)>& fn,
                                   double rel_tol = kRangeTol) const;

    /// Minimum-norm solution of A x = b (null directions dropped).
    Eigen::VectorXd pinv_solve(const Eigen::VectorXd& b, double rel_tol = kRangeTol) const;
    Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& b, double rel_tol = kRangeTol) const;

    /// Columns V_k / sqrt(lambda_k) over the kept spectrum; maps the metric
    /// quadratic form to the Euclidean one on its range.
    Eigen::MatrixXd whitening(double rel_tol = kRangeTol) const;

    /// Symmetric square root over the kept spectrum.
    Eigen::MatrixXd sqrt_matrix(double rel_tol = kRangeTol) const;

    /// Orthogonal projector onto the span of kept eigenvectors.
    Eigen::MatrixXd range_projector(double rel_tol = kRangeTol) const;

  private:
    Eigen::VectorXd values_;
    Eigen::MatrixXd vectors_;
};

/// G + c3*I with c3 = 1e-10 * lambda_max(G) when lambda_min < 1e-12 * lambda_max,
/// otherwise G unchanged.
Eigen::MatrixXd jittered(const Eigen::MatrixXd& gram);

/// sup ||S z||_Cout / ||z||_Cin over z with positive Cin-seminorm: the
/// operator norm of S between the seminormed coordinate spaces.
double metric_operator_norm(const Eigen::MatrixXd& S, const Eigen::MatrixXd& c_in,
                            const Eigen::MatrixXd& c_out);

/// Largest generalized eigenvalue of (A, C) restricted to range(C).
/// Returns 0 on an empty range.
double generalized_lambda_max(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                              double rel_tol = kRangeTol);

/// sigma_max of a general dense matrix.
double spectral_norm(const Eigen::MatrixXd& S);

}  // namespace rkfusion
