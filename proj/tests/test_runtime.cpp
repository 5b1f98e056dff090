#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "rkfusion/errors.hpp"
#include "rkfusion/runtime.hpp"

using namespace rkfusion;
using namespace rkfusion::testing;

TEST_CASE("schedules") {
    CHECK(schedule_value(Schedule::geometric(10.0, 2.0), 3) == doctest::Approx(80.0));
    CHECK(schedule_value(Schedule::constant(5.0), 17) == doctest::Approx(5.0));
    CHECK(schedule_value(Schedule::linear(2.0), 10) == doctest::Approx(20.0));
}

TEST_CASE("window statistic") {
    // two-anchor system with an easy Gram
    const Kernel line = Kernel::from_features(FeatureSet({
        Feature("constant", [](double) { return 1.0; }),
        Feature("x", [](double x) { return x; }),
    }));
    const Eigen::MatrixXd g1 = gram(line, AnchorSet{{0.0, 1.0}, SpaceTag::Agent1});
    const Eigen::MatrixXd g2 = g1;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);

    const auto record_with = [&](const Eigen::VectorXd& a1, const Eigen::VectorXd& a2) {
        IterationRecord rec;
        rec.alpha_down1 = a1;
        rec.alpha_down2 = a2;
        return rec;
    };

    SUBCASE("identical window vanishes") {
        std::vector<IterationRecord> records;
        Eigen::VectorXd v(2);
        v << 1.0, -2.0;
        for (int i = 0; i < 4; ++i) records.push_back(record_with(v, v));
        CHECK(window_statistic(records, v, v, g1, g2, 4, 3) == doctest::Approx(0.0));
    }

    SUBCASE("single jump in one space") {
        // ||delta||_{H1} = 0.3 with delta supported on the first anchor
        SymmetricEigen eig(g1);
        Eigen::VectorXd direction = Eigen::VectorXd::Zero(2);
        direction(0) = 1.0;
        const double unit = std::sqrt(direction.dot(g1 * direction));
        direction *= 0.3 / unit;

        std::vector<IterationRecord> records;
        records.push_back(record_with(zero, zero));
        records.push_back(record_with(direction, zero));
        CHECK(window_statistic(records, zero, zero, g1, g2, 2, 2) == doctest::Approx(0.3));
    }

    SUBCASE("records outside the window are ignored") {
        std::vector<IterationRecord> records;
        Eigen::VectorXd huge(2);
        huge << 100.0, 100.0;
        records.push_back(record_with(huge, huge));
        Eigen::VectorXd v(2);
        v << 1.0, 1.0;
        for (int i = 0; i < 3; ++i) records.push_back(record_with(v, v));
        CHECK(window_statistic(records, zero, zero, g1, g2, 4, 2) == doctest::Approx(0.0));
    }

    SUBCASE("window must be filled") {
        std::vector<IterationRecord> records;
        records.push_back(record_with(zero, zero));
        CHECK_THROWS_AS((void)window_statistic(records, zero, zero, g1, g2, 1, 5),
                        WindowNotFilledError);
    }
}

namespace {

RunConfig example_run_config() {
    RunConfig config;
    config.epsilon = 1e-3;
    config.k_max = 5;
    config.max_iterations = 10000;
    config.rho1 = Schedule::geometric(10.0, 2.0);
    config.rho2 = Schedule::geometric(10.0, 2.0);
    config.rho_fusion = Schedule::geometric(10.0, 2.0);
    config.seed = 7;
    return config;
}

DataSource example_source(double sigma, std::uint64_t seed) {
    return DataSource::generated([](double x) { return 2.0 + x - 0.5 * x * x; }, sigma, domain1(),
                                 domain2(), seed);
}

}  // namespace

TEST_CASE("run loop") {
    const ExampleSystem sys = example_system();

    SUBCASE("huge epsilon stops at the first window evaluation") {
        RunConfig config = example_run_config();
        config.epsilon = 1e9;
        config.k_max = 5;
        DataSource source = example_source(0.1, 3);
        const RunResult result = run(config, source, sys.space);
        CHECK(result.reason == StopReason::WindowCriterion);
        CHECK(result.records.size() == 5);
        CHECK(result.records.back().stop);
    }

    SUBCASE("same seed replays bit for bit") {
        RunConfig config = example_run_config();
        DataSource source_a = example_source(0.1, 11);
        DataSource source_b = example_source(0.1, 11);
        const RunResult a = run(config, source_a, sys.space);
        const RunResult b = run(config, source_b, sys.space);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].data1.x == b.records[i].data1.x);
            CHECK(a.records[i].data1.y == b.records[i].data1.y);
            CHECK((a.records[i].alpha_down1 - b.records[i].alpha_down1).norm() == 0.0);
            CHECK((a.records[i].alpha_down2 - b.records[i].alpha_down2).norm() == 0.0);
            const bool same_stat =
                a.records[i].window_stat == b.records[i].window_stat ||
                (std::isnan(a.records[i].window_stat) && std::isnan(b.records[i].window_stat));
            CHECK(same_stat);
        }
    }

    SUBCASE("noise-free run terminates through the window rule") {
        RunConfig config = example_run_config();
        DataSource source = example_source(0.0, 7);
        const RunResult result = run(config, source, sys.space);
        CHECK(result.reason == StopReason::WindowCriterion);
        CHECK(static_cast<int>(result.records.size()) <= config.max_iterations);

        // pairwise bound over the final window
        const int n = static_cast<int>(result.records.size());
        const Eigen::MatrixXd& g1 = sys.space.gram_agent(1);
        const Eigen::MatrixXd& g2 = sys.space.gram_agent(2);
        for (int i = n - config.k_max; i <= n; ++i) {
            for (int j = n - config.k_max; j <= n; ++j) {
                const auto coeffs = [&](int idx, int agent) -> Eigen::VectorXd {
                    if (idx == 0) return Eigen::VectorXd::Zero(5);
                    const auto& rec = result.records[static_cast<std::size_t>(idx - 1)];
                    return agent == 1 ? rec.alpha_down1 : rec.alpha_down2;
                };
                const Eigen::VectorXd d1 = coeffs(i, 1) - coeffs(j, 1);
                const Eigen::VectorXd d2 = coeffs(i, 2) - coeffs(j, 2);
                const double dist = std::sqrt(std::max(d1.dot(g1 * d1), 0.0)) +
                                    std::sqrt(std::max(d2.dot(g2 * d2), 0.0));
                CHECK(dist < 2.0 * config.epsilon);
            }
        }

        // where the frozen estimate landed, as a regression diagnostic:
        // the scheme stops near but not on the data-generating function
        const std::vector<double> grid = domain1().grid(101);
        RkhsFunction down1{sys.agent1.kernel(), sys.agent1.anchors(), result.final1,
                           SpaceTag::Agent1};
        double rmse = 0.0;
        for (double x : grid) {
            const double d = down1(x) - (2.0 + x - 0.5 * x * x);
            rmse += d * d;
        }
        rmse = std::sqrt(rmse / static_cast<double>(grid.size()));
        CHECK(std::isfinite(rmse));
        CHECK(rmse < 50.0);
    }

    SUBCASE("iteration cap reported") {
        RunConfig config = example_run_config();
        config.max_iterations = 3;
        config.epsilon = 1e-12;
        DataSource source = example_source(0.1, 5);
        const RunResult result = run(config, source, sys.space);
        CHECK(result.reason == StopReason::MaxIterations);
        CHECK(result.records.size() == 3);
    }

    SUBCASE("config validation") {
        RunConfig config = example_run_config();
        config.epsilon = -1.0;
        DataSource source = example_source(0.1, 5);
        CHECK_THROWS_AS((void)run(config, source, sys.space), ValidationError);
    }

    SUBCASE("replay from a mid-run state reproduces the suffix") {
        RunConfig config = example_run_config();
        config.epsilon = 1e-30;  // never stop
        config.max_iterations = 8;
        config.rho1 = config.rho2 = config.rho_fusion = Schedule::constant(3.0);
        DataSource source = example_source(0.2, 13);
        const RunResult full = run(config, source, sys.space);
        REQUIRE(full.records.size() == 8);

        // restart from iteration 4's downloaded estimates with the recorded
        // data suffix; constant schedules make the restart index-free
        RunConfig restart = config;
        restart.max_iterations = 4;
        restart.initial1 = full.records[3].alpha_down1;
        restart.initial2 = full.records[3].alpha_down2;
        std::vector<DataPoint> suffix1, suffix2;
        for (std::size_t i = 4; i < 8; ++i) {
            suffix1.push_back(full.records[i].data1);
            suffix2.push_back(full.records[i].data2);
        }
        DataSource recorded = DataSource::recorded(suffix1, suffix2);
        const RunResult tail = run(restart, recorded, sys.space);
        REQUIRE(tail.records.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK((tail.records[i].alpha_down1 - full.records[4 + i].alpha_down1).norm() == 0.0);
            CHECK((tail.records[i].alpha_down2 - full.records[4 + i].alpha_down2).norm() == 0.0);
        }
    }
}

TEST_CASE("data sources") {
    SUBCASE("recorded sources replay and exhaust") {
        DataSource source = DataSource::recorded({{0.0, 1.0}, {0.5, 2.0}}, {{6.0, 3.0}, {7.0, 4.0}});
        const auto [a, b] = source.next();
        CHECK(a.x == 0.0);
        CHECK(b.y == 3.0);
        (void)source.next();
        CHECK_THROWS_AS((void)source.next(), SingularSystemError);
        source.reset();
        CHECK(source.next().first.x == 0.0);
    }

    SUBCASE("generated sources respect the domains") {
        DataSource source = example_source(0.5, 21);
        for (int i = 0; i < 10000; ++i) {
            const auto [a, b] = source.next();
            CHECK(domain1().contains(a.x));
            CHECK(domain2().contains(b.x));
            CHECK((b.x <= -5.0 || b.x >= 5.0));
        }
    }

    SUBCASE("zero noise reproduces the function exactly") {
        DataSource source = example_source(0.0, 33);
        for (int i = 0; i < 100; ++i) {
            const auto [a, b] = source.next();
            CHECK(a.y == 2.0 + a.x - 0.5 * a.x * a.x);
            CHECK(b.y == 2.0 + b.x - 0.5 * b.x * b.x);
        }
    }
}
