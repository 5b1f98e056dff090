#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rkfusion/fusion.hpp"
#include "rkfusion/runtime_fwd.hpp"

namespace rkfusion {

struct RunConfig {
    double epsilon = 1e-3;
    int k_max = 5;
    int max_iterations = 10000;
    Schedule rho1 = Schedule::geometric(10.0, 2.0);
    Schedule rho2 = Schedule::geometric(10.0, 2.0);
    Schedule rho_fusion = Schedule::geometric(10.0, 2.0);
    bool normalize_download = true;
    bool reconstruct_with_fusion_rho = false;
    std::uint64_t seed = 0;
    Eigen::VectorXd initial1;  // empty means the null element
    Eigen::VectorXd initial2;

    void validate() const;  // throws ValidationError
};

struct IterationRecord {
    int n = 0;
    DataPoint data1, data2;
    Eigen::VectorXd alpha1_local, alpha2_local;
    Eigen::VectorXd y_hat;        // stacked reconstructed outputs (2m)
    Eigen::VectorXd alpha_fused;  // fused coefficients (2m)
    Eigen::VectorXd alpha_down1, alpha_down2;
    double delta_norm1 = 0.0, delta_norm2 = 0.0;
    double rho1 = 0.0, rho2 = 0.0, rho_fusion = 0.0;
    double window_stat = std::numeric_limits<double>::quiet_NaN();
    bool stop = false;
};

enum class StopReason { WindowCriterion, MaxIterations };

struct RunResult {
    std::vector<IterationRecord> records;
    StopReason reason = StopReason::MaxIterations;
    Eigen::VectorXd final1, final2;
};

/// Per-agent stream of data points, either replayed from recorded lists or
/// generated from a ground-truth function plus Gaussian noise, fully seeded.
class DataSource {
  public:
    static DataSource recorded(std::vector<DataPoint> agent1, std::vector<DataPoint> agent2);
    static DataSource generated(std::function<double(double)> truth, double sigma,
                                Domain domain1, Domain domain2, std::uint64_t seed);

    /// Data pair for the next iteration; recorded sources throw when
    /// exhausted.
    std::pair<DataPoint, DataPoint> next();
    void reset();

  private:
    DataSource() = default;
    bool generated_ = false;
    std::vector<DataPoint> recorded1_, recorded2_;
    std::size_t cursor_ = 0;
    std::function<double(double)> truth_;
    double sigma_ = 0.0;
    Domain domain1_, domain2_;
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine1_, engine2_;

    DataPoint draw(const Domain& domain, std::mt19937_64& engine);
};

/// Full iterative loop: local estimates, reconstruction, fusion, download,
/// and the windowed stopping rule. Records every iteration; stops when the
/// window statistic over the last k_max iterations falls below epsilon, or at
/// the iteration cap.
RunResult run(const RunConfig& config, DataSource& source, const FusionSpace& space);

/// max over j in [1, k_max] of the summed per-agent norms
/// ||f_{n-k_max+j} - f_{n-k_max}||; index 0 refers to the initial estimates.
/// Throws WindowNotFilledError when n < k_max.
double window_statistic(const std::vector<IterationRecord>& records,
                        const Eigen::VectorXd& initial1, const Eigen::VectorXd& initial2,
                        const Eigen::MatrixXd& gram1, const Eigen::MatrixXd& gram2, int n,
                        int k_max);

double schedule_value(const Schedule& schedule, int n);

}  // namespace rkfusion
