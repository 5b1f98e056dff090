#include "rkfusion/kernel.hpp"

#include <Eigen/SVD>
#include <optional>
#include <stdexcept>

namespace rkfusion {

Eigen::MatrixXd FeatureSet::eval_matrix(const std::vector<double>& grid) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), dimension());
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (int c = 0; c < dimension(); ++c) out(r, c) = features_[static_cast<std::size_t>(c)](grid[static_cast<std::size_t>(r)]);
    return out;
}

Eigen::VectorXd FeatureSet::eval_at(double x) const {
    Eigen::VectorXd out(dimension());
    for (int c = 0; c < dimension(); ++c) out(c) = features_[static_cast<std::size_t>(c)](x);
    return out;
}

int FeatureSet::numerical_rank(const std::vector<double>& grid, double rel_tol) const {
    if (dimension() == 0 || grid.empty()) return 0;
    Eigen::MatrixXd F = eval_matrix(grid);
    for (Eigen::Index c = 0; c < F.cols(); ++c) {
        const double n = F.col(c).norm();
        if (n > 0.0) F.col(c) /= n;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++rank;
    return rank;
}

bool FeatureSet::linearly_independent(const std::vector<double>& grid, double rel_tol) const {
    return numerical_rank(grid, rel_tol) == dimension();
}

FeatureSet FeatureSet::concatenate(const FeatureSet& a, const FeatureSet& b) {
    std::vector<Feature> all = a.all();
    all.insert(all.end(), b.all().begin(), b.all().end());
    return FeatureSet(std::move(all));
}

struct Kernel::Impl {
    FeatureSet features;
    std::optional<std::pair<Kernel, Kernel>> parts;
};

Kernel Kernel::from_features(FeatureSet features) {
    if (features.dimension() < 1) throw std::invalid_argument("feature kernel needs at least one feature");
    auto impl = std::make_shared<Impl>();
    impl->features = std::move(features);
    return Kernel(std::move(impl));
}

Kernel Kernel::sum(const Kernel& a, const Kernel& b) {
    auto impl = std::make_shared<Impl>();
    impl->features = FeatureSet::concatenate(a.features(), b.features());
    impl->parts = std::make_pair(a, b);
    return Kernel(std::move(impl));
}

double Kernel::operator()(double x, double y) const {
    if (impl_->parts) return (impl_->parts->first)(x, y) + (impl_->parts->second)(x, y);
    double acc = 0.0;
    for (const auto& f : impl_->features.all()) acc += f(x) * f(y);
    return acc;
}

const FeatureSet& Kernel::features() const { return impl_->features; }
bool Kernel::is_sum() const { return impl_->parts.has_value(); }
const Kernel& Kernel::left() const { return impl_->parts.value().first; }
const Kernel& Kernel::right() const { return impl_->parts.value().second; }

}  // namespace rkfusion
