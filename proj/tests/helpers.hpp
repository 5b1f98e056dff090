#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rkfusion/agent.hpp"
#include "rkfusion/fusion.hpp"
#include "rkfusion/kernel.hpp"
#include "rkfusion/rkhs.hpp"

namespace rkfusion::testing {

inline Kernel poly_kernel() {
    return Kernel::from_features(FeatureSet({
        Feature("constant", [](double) { return 1.0; }),
        Feature("x", [](double x) { return x; }),
        Feature("x^2", [](double x) { return x * x; }),
    }));
}

inline Kernel exp_kernel() {
    return Kernel::from_features(FeatureSet({
        Feature("exp(-x)", [](double x) { return std::exp(-x); }),
        Feature("exp(x)", [](double x) { return std::exp(x); }),
    }));
}

inline AnchorSet anchors1() { return AnchorSet{{0.0, 2.0, 4.0, -2.0, -4.0}, SpaceTag::Agent1}; }
inline AnchorSet anchors2() { return AnchorSet{{1.0, 3.0, 5.0, -1.0, -3.0}, SpaceTag::Agent2}; }

inline Domain domain1() { return Domain({Interval{-5.0, 5.0}}); }
inline Domain domain2() { return Domain({Interval{-10.0, -5.0}, Interval{5.0, 10.0}}); }

/// The running example system: polynomial and exponential agents on adjacent
/// domains, optionally with both kernels scaled by a common factor.
struct ExampleSystem {
    AgentState agent1;
    AgentState agent2;
    FusionSpace space;
};

inline Kernel scaled(const Kernel& k, double factor) {
    if (factor == 1.0) return k;
    std::vector<Feature> scaled_features;
    const double root = std::sqrt(factor);
    for (const auto& f : k.features().all())
        scaled_features.emplace_back(f.name(), [f, root](double x) { return root * f(x); });
    return Kernel::from_features(FeatureSet(std::move(scaled_features)));
}

inline ExampleSystem example_system(double kernel_scale = 1.0) {
    AgentState s1(1, scaled(poly_kernel(), kernel_scale), anchors1(), domain1());
    AgentState s2(2, scaled(exp_kernel(), kernel_scale), anchors2(), domain2());
    FusionSpace space = FusionSpace::build(s1, s2);
    return ExampleSystem{std::move(s1), std::move(s2), std::move(space)};
}

/// Random two-agent system drawn from the closed primitive pool, anchors
/// greedily selected from a grid pool. Exercises arbitrary overlap between
/// the agents' spans.
struct RandomSystemFactory {
    std::mt19937_64 engine;

    explicit RandomSystemFactory(std::uint64_t seed) : engine(seed) {}

    Kernel random_kernel() {
        std::uniform_int_distribution<int> count(1, 3);
        std::uniform_int_distribution<int> pick(0, 4);
        std::vector<Feature> features;
        std::vector<int> used;
        const int wanted = count(engine);
        while (static_cast<int>(features.size()) < wanted) {
            const int which = pick(engine);
            bool duplicate = false;
            for (int u : used) duplicate = duplicate || u == which;
            if (duplicate) continue;
            used.push_back(which);
            switch (which) {
                case 0: features.emplace_back("constant", [](double) { return 1.0; }); break;
                case 1: features.emplace_back("x", [](double x) { return x; }); break;
                case 2: features.emplace_back("x^2", [](double x) { return x * x; }); break;
                case 3: features.emplace_back("exp(-x)", [](double x) { return std::exp(-x); }); break;
                default: features.emplace_back("exp(x)", [](double x) { return std::exp(x); }); break;
            }
        }
        return Kernel::from_features(FeatureSet(std::move(features)));
    }

    ExampleSystem make() {
        for (;;) {
            Kernel k1 = random_kernel();
            Kernel k2 = random_kernel();
            const Domain d1({Interval{-2.0, 2.0}});
            const Domain d2({Interval{-2.5, 2.5}});
            const Kernel fusion = Kernel::sum(k1, k2);
            const int m = fusion.features().numerical_rank(d2.grid(256));
            std::uniform_real_distribution<double> jiggle(-0.01, 0.01);
            std::vector<double> pool1 = d1.grid(40), pool2 = d2.grid(41);
            for (auto& p : pool1) p += jiggle(engine);
            for (auto& p : pool2) p += jiggle(engine);
            try {
                AnchorSet a1 = select_anchors(fusion, pool1, m, SpaceTag::Agent1).anchors;
                AnchorSet a2 = select_anchors(fusion, pool2, m, SpaceTag::Agent2).anchors;
                AgentState s1(1, k1, a1, d1);
                AgentState s2(2, k2, a2, d2);
                FusionSpace space = FusionSpace::build(s1, s2);
                return ExampleSystem{std::move(s1), std::move(s2), std::move(space)};
            } catch (const std::exception&) {
                continue;  // unlucky pool; redraw
            }
        }
    }
};

inline Eigen::VectorXd random_vector(std::mt19937_64& engine, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(engine);
    return v;
}

/// Projection of v onto the range of the symmetric PSD matrix.
inline Eigen::VectorXd project_to_range(const Eigen::MatrixXd& sym, const Eigen::VectorXd& v) {
    SymmetricEigen eig(sym);
    return eig.range_projector() * v;
}

/// Quadratic cost of the local estimation problem.
inline double local_cost(const Eigen::MatrixXd& gram, const Eigen::VectorXd& kx, double y,
                         const Eigen::VectorXd& prior, double rho, const Eigen::VectorXd& alpha) {
    const double misfit = y - kx.dot(alpha);
    const Eigen::VectorXd d = alpha - prior;
    return misfit * misfit + rho * d.dot(gram * d);
}

inline Eigen::VectorXd local_cost_gradient(const Eigen::MatrixXd& gram, const Eigen::VectorXd& kx,
                                           double y, const Eigen::VectorXd& prior, double rho,
                                           const Eigen::VectorXd& alpha) {
    return 2.0 * ((rho * gram + kx * kx.transpose()) * alpha - (kx * y + rho * (gram * prior)));
}

/// Fixed-step gradient descent on the local cost; the independent oracle for
/// the closed-form minimizer.
inline Eigen::VectorXd gradient_descent_oracle(const Eigen::MatrixXd& gram,
                                               const Eigen::VectorXd& kx, double y,
                                               const Eigen::VectorXd& prior, double rho,
                                               const Eigen::VectorXd& start, int steps) {
    const Eigen::MatrixXd hessian = 2.0 * (rho * gram + kx * kx.transpose());
    SymmetricEigen eig(hessian);
    const double step = 1.0 / std::max(eig.lambda_max(), 1e-30);
    Eigen::VectorXd alpha = start;
    for (int i = 0; i < steps; ++i)
        alpha -= step * local_cost_gradient(gram, kx, y, prior, rho, alpha);
    return alpha;
}

/// Ridge cost of the pooled fusion problem.
inline double fusion_cost(const Eigen::MatrixXd& gram, const Eigen::VectorXd& targets, double rho,
                          const Eigen::VectorXd& alpha) {
    const Eigen::VectorXd fitted = gram * alpha;  // function values at the anchors
    const Eigen::VectorXd misfit = targets - fitted;
    return misfit.squaredNorm() + rho * alpha.dot(gram * alpha);
}

inline Eigen::VectorXd fusion_gradient(const Eigen::MatrixXd& gram, const Eigen::VectorXd& targets,
                                       double rho, const Eigen::VectorXd& alpha) {
    return 2.0 * (gram * (gram * alpha) + rho * (gram * alpha) - gram * targets);
}

inline Eigen::VectorXd fusion_descent_oracle(const Eigen::MatrixXd& gram,
                                             const Eigen::VectorXd& targets, double rho,
                                             const Eigen::VectorXd& start, int steps) {
    SymmetricEigen eig(gram);
    const double lam = eig.lambda_max();
    const double step = 1.0 / std::max(2.0 * (lam * lam + rho * lam), 1e-30);
    Eigen::VectorXd alpha = start;
    for (int i = 0; i < steps; ++i) alpha -= step * fusion_gradient(gram, targets, rho, alpha);
    return alpha;
}

/// Least-squares solve through Eigen's SVD machinery: an algebra path
/// independent of the SelfAdjoint eigendecomposition the library uses.
inline Eigen::VectorXd svd_lstsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

inline double rel_diff(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / denom;
}

}  // namespace rkfusion::testing
