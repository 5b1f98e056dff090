#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "rkfusion/errors.hpp"
#include "rkfusion/linalg.hpp"

using namespace rkfusion;
using namespace rkfusion::testing;

namespace {

AgentState scalar_agent() {
    const Kernel line = Kernel::from_features(FeatureSet({
        Feature("constant", [](double) { return 1.0; }),
        Feature("x", [](double x) { return x; }),
    }));
    // single anchor at the origin: K(., 0) spans the constants
    return AgentState(1, line, AnchorSet{{0.0}, SpaceTag::Agent1},
                      Domain({Interval{-1.0, 1.0}}));
}

AgentState plane_agent() {
    const Kernel line = Kernel::from_features(FeatureSet({
        Feature("constant", [](double) { return 1.0; }),
        Feature("x", [](double x) { return x; }),
    }));
    return AgentState(1, line, AnchorSet{{0.0, 1.0}, SpaceTag::Agent1},
                      Domain({Interval{-1.0, 1.0}}));
}

}  // namespace

TEST_CASE("closed-form local estimate") {
    SUBCASE("scalar normal equation") {
        const AgentState agent = scalar_agent();
        const RkhsFunction f = local_estimate(agent, DataPoint{0.0, 1.0}, 1.0);
        CHECK(f.coefficients(0) == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("data consistent with the prior is a fixed point") {
        std::mt19937_64 engine(7);
        for (int trial = 0; trial < 10; ++trial) {
            AgentState agent = plane_agent().with_downloaded(random_vector(engine, 2));
            const double x = 0.3 + 0.1 * trial;
            const DataPoint d{x, agent.downloaded()(x)};
            const RkhsFunction f = local_estimate(agent, d, 2.5);
            CHECK((f.coefficients - agent.downloaded().coefficients).norm() <= 1e-10);
        }
    }

    SUBCASE("heavy regularization pins the prior") {
        std::mt19937_64 engine(9);
        AgentState agent = plane_agent().with_downloaded(random_vector(engine, 2));
        const RkhsFunction f = local_estimate(agent, DataPoint{0.5, 3.0}, 1e12);
        CHECK((f.coefficients - agent.downloaded().coefficients).norm() <= 1e-6);
    }

    SUBCASE("rho must be positive") {
        CHECK_THROWS_AS((void)local_estimate(scalar_agent(), DataPoint{0.0, 1.0}, 0.0),
                        SingularSystemError);
    }
}

TEST_CASE("local estimate against the descent oracle") {
    std::mt19937_64 engine(13);
    std::uniform_real_distribution<double> xs(-2.0, 2.0);
    std::uniform_real_distribution<double> ys(-10.0, 10.0);
    std::uniform_real_distribution<double> log_rho(-3.0, 3.0);
    RandomSystemFactory factory(101);
    for (int trial = 0; trial < 40; ++trial) {
        const ExampleSystem sys = factory.make();
        const AgentState agent = sys.agent1.with_downloaded(
            random_vector(engine, sys.agent1.anchors().size()));
        const DataPoint d{xs(engine), ys(engine)};
        const double rho = std::pow(10.0, log_rho(engine));
        const RkhsFunction f = local_estimate(agent, d, rho);

        const Eigen::VectorXd kx = kernel_column(agent.kernel(), agent.anchors(), d.x);
        const Eigen::MatrixXd& g = agent.gram_regular();
        const auto cost = [&](const Eigen::VectorXd& alpha) {
            return local_cost(g, kx, d.y, agent.downloaded().coefficients, rho, alpha);
        };
        const double closed = cost(f.coefficients);
        for (int start = 0; start < 3; ++start) {
            const Eigen::VectorXd s = random_vector(engine, kx.size(), 2.0);
            const Eigen::VectorXd opt = gradient_descent_oracle(
                g, kx, d.y, agent.downloaded().coefficients, rho, s, 10000);
            CHECK(closed <= cost(opt) * (1.0 + 1e-8) + 1e-12);
        }

        // analytic gradient against central differences
        const Eigen::VectorXd alpha = random_vector(engine, kx.size());
        const Eigen::VectorXd grad =
            local_cost_gradient(g, kx, d.y, agent.downloaded().coefficients, rho, alpha);
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < alpha.size(); ++i) {
            Eigen::VectorXd up = alpha, down = alpha;
            up(i) += h;
            down(i) -= h;
            const double fd = (cost(up) - cost(down)) / (2.0 * h);
            if (std::abs(grad(i)) > 1e-6) CHECK(rel_diff(grad(i), fd) <= 1e-4);
        }
    }
}

TEST_CASE("data embedding") {
    const ExampleSystem sys = example_system();
    SUBCASE("zero output embeds to the null element") {
        const DataEmbedding psi = embed_data(sys.agent1, DataPoint{1.0, 0.0});
        CHECK(psi.function.coefficients.norm() == 0.0);
    }
    SUBCASE("example coefficients") {
        const DataEmbedding psi = embed_data(sys.agent1, DataPoint{1.0, 2.0});
        Eigen::VectorXd expected(5);
        expected << 2.0, 14.0, 42.0, 6.0, 26.0;  // 2 * [K1(1, anchor_j)]
        CHECK((psi.function.coefficients - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("linear in the output") {
        const DataEmbedding one = embed_data(sys.agent1, DataPoint{0.7, 1.3});
        const DataEmbedding two = embed_data(sys.agent1, DataPoint{0.7, 2.6});
        CHECK((two.function.coefficients - 2.0 * one.function.coefficients).norm() <= 1e-12);
    }
}

TEST_CASE("learning map on (estimate, embedding) pairs") {
    const ExampleSystem sys = example_system();
    std::mt19937_64 engine(37);

    SUBCASE("null pair maps to the null element") {
        const RkhsFunction zero = zero_function(sys.agent1.kernel(), sys.agent1.anchors(),
                                                SpaceTag::Agent1);
        const DataEmbedding psi = embed_data(sys.agent1, DataPoint{0.4, 0.0});
        const RkhsFunction out = apply_learning_operator(sys.agent1, zero, psi, 3.0);
        CHECK(out.coefficients.norm() <= 1e-14);
    }

    SUBCASE("agrees with the closed form on random instances") {
        std::uniform_real_distribution<double> xs(-5.0, 5.0);
        std::uniform_real_distribution<double> ys(-3.0, 3.0);
        for (int trial = 0; trial < 100; ++trial) {
            const AgentState agent = sys.agent1.with_downloaded(random_vector(engine, 5));
            const DataPoint d{xs(engine), ys(engine)};
            const double rho = 0.1 + trial;
            const RkhsFunction direct = local_estimate(agent, d, rho);
            const RkhsFunction via_map =
                apply_learning_operator(agent, agent.downloaded(), embed_data(agent, d), rho);
            CHECK((direct.coefficients - via_map.coefficients).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("affine split over the pair") {
        // exact coefficient superposition on a well-conditioned system
        const AgentState plane = AgentState(
            1,
            Kernel::from_features(FeatureSet({
                Feature("constant", [](double) { return 1.0; }),
                Feature("x", [](double x) { return x; }),
            })),
            AnchorSet{{0.0, 1.0}, SpaceTag::Agent1}, Domain({Interval{-1.0, 1.0}}));
        std::uniform_real_distribution<double> xs(-1.0, 1.0);
        for (int trial = 0; trial < 25; ++trial) {
            const double x = xs(engine);
            RkhsFunction f1 = zero_function(plane.kernel(), plane.anchors(), SpaceTag::Agent1);
            RkhsFunction f2 = f1;
            f1.coefficients = random_vector(engine, 2);
            f2.coefficients = random_vector(engine, 2);
            const DataEmbedding psi = embed_data(plane, DataPoint{x, 1.7});
            const DataEmbedding theta = embed_data(plane, DataPoint{x, 0.0});
            RkhsFunction sum = f1;
            sum.coefficients += f2.coefficients;
            const Eigen::VectorXd joint = apply_learning_operator(plane, sum, psi, 2.0).coefficients;
            const Eigen::VectorXd split =
                apply_learning_operator(plane, f1, psi, 2.0).coefficients +
                apply_learning_operator(plane, f2, theta, 2.0).coefficients;
            CHECK((joint - split).cwiseAbs().maxCoeff() <=
                  1e-12 * (1.0 + joint.cwiseAbs().maxCoeff()));
        }

        // on the singular-Gram example system the superposition holds as
        // functions: measure the difference in the agent seminorm
        std::uniform_real_distribution<double> xs4(-5.0, 5.0);
        const Eigen::MatrixXd& g1m = sys.agent1.gram_matrix();
        for (int trial = 0; trial < 25; ++trial) {
            const double x = xs4(engine);
            RkhsFunction f1 = zero_function(sys.agent1.kernel(), sys.agent1.anchors(),
                                            SpaceTag::Agent1);
            RkhsFunction f2 = f1;
            f1.coefficients = random_vector(engine, 5);
            f2.coefficients = random_vector(engine, 5);
            const DataEmbedding psi = embed_data(sys.agent1, DataPoint{x, 1.7});
            const DataEmbedding theta = embed_data(sys.agent1, DataPoint{x, 0.0});
            RkhsFunction sum = f1;
            sum.coefficients += f2.coefficients;
            const Eigen::VectorXd joint =
                apply_learning_operator(sys.agent1, sum, psi, 2.0).coefficients;
            const Eigen::VectorXd split =
                apply_learning_operator(sys.agent1, f1, psi, 2.0).coefficients +
                apply_learning_operator(sys.agent1, f2, theta, 2.0).coefficients;
            const Eigen::VectorXd d = joint - split;
            const double fn_gap = std::sqrt(std::max(d.dot(g1m * d), 0.0));
            const double scale = 1.0 + std::sqrt(std::max(joint.dot(g1m * joint), 0.0));
            CHECK(fn_gap <= 1e-9 * scale);
        }
    }
}

TEST_CASE("learning map norm estimates") {
    const ExampleSystem sys = example_system();
    const std::vector<double> grid1 = domain1().grid(256);
    const Domain second = domain2();
    std::vector<double> grid2;
    for (const auto& piece : second.pieces()) {
        const auto pts = Domain({piece}).grid(256);
        grid2.insert(grid2.end(), pts.begin(), pts.end());
    }

    SUBCASE("nonnegative and finite") {
        for (double rho : {1e-2, 1.0, 1e4}) {
            const AgentNormEstimate est = agent_operator_norm(sys.agent1, rho, grid1);
            CHECK(est.norm >= 0.0);
            CHECK(std::isfinite(est.norm));
        }
    }

    SUBCASE("close to one at heavy regularization") {
        const AgentNormEstimate e1 = agent_operator_norm(sys.agent1, 1e8, grid1);
        const AgentNormEstimate e2 = agent_operator_norm(sys.agent2, 1e8, grid2);
        CHECK(e1.norm >= 0.98);
        CHECK(e1.norm <= 1.02);
        CHECK(e2.norm >= 0.98);
        CHECK(e2.norm <= 1.02);
    }

    SUBCASE("grid refinement never lowers the estimate") {
        const std::vector<double> coarse = domain1().grid(32);
        std::vector<double> fine = coarse;
        const auto extra = domain1().grid(64);
        fine.insert(fine.end(), extra.begin(), extra.end());
        const double lo = agent_operator_norm(sys.agent1, 10.0, coarse).norm;
        const double hi = agent_operator_norm(sys.agent1, 10.0, fine).norm;
        CHECK(hi >= lo - 1e-12);
    }
}
