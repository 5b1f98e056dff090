#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rkfusion {

/// One real-valued feature function with a printable name.
class Feature {
  public:
    Feature(std::string name, std::function<double(double)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    double operator()(double x) const { return fn_(x); }
    const std::string& name() const { return name_; }

  private:
    std::string name_;
    std::function<double(double)> fn_;
};

class FeatureSet {
  public:
    FeatureSet() = default;
    explicit FeatureSet(std::vector<Feature> features) : features_(std::move(features)) {}

    int dimension() const { return static_cast<int>(features_.size()); }
    const Feature& at(int j) const { return features_.at(static_cast<std::size_t>(j)); }
    const std::vector<Feature>& all() const { return features_; }

    /// Rows = grid points, columns = features.
    Eigen::MatrixXd eval_matrix(const std::vector<double>& grid) const;
    /// Column vector of feature values at one point.
    Eigen::VectorXd eval_at(double x) const;

    /// Numerical rank of the evaluation matrix on the grid (columns scaled to
    /// unit norm first so the tolerance is scale-free).
    int numerical_rank(const std::vector<double>& grid, double rel_tol = 1e-10) const;
    bool linearly_independent(const std::vector<double>& grid, double rel_tol = 1e-10) const;

    static FeatureSet concatenate(const FeatureSet& a, const FeatureSet& b);

  private:
    std::vector<Feature> features_;
};

/// Kernel of a finite-dimensional reproducing-kernel space. Either built
/// directly from a feature set, K(x,y) = sum_j phi_j(x) phi_j(y), or the sum
/// of two kernels. Value type, cheap to copy.
class Kernel {
  public:
    static Kernel from_features(FeatureSet features);
    static Kernel sum(const Kernel& a, const Kernel& b);

    double operator()(double x, double y) const;
    /// Feature list; for a sum kernel the concatenation (left part first).
    const FeatureSet& features() const;
    bool is_sum() const;
    const Kernel& left() const;
    const Kernel& right() const;
    bool same_as(const Kernel& other) const { return impl_ == other.impl_; }

  private:
    struct Impl;
    explicit Kernel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

inline double eval_kernel(const Kernel& kernel, double x, double y) { return kernel(x, y); }

}  // namespace rkfusion
