#include "rkfusion/runtime.hpp"

#include <cmath>
#include <sstream>

#include "rkfusion/errors.hpp"
#include "rkfusion/linalg.hpp"

namespace rkfusion {

double Schedule::value(int n) const {
    switch (kind) {
        case Kind::Constant: return base;
        case Kind::Linear: return base * n;
        case Kind::Geometric: return base * std::pow(ratio, n);
    }
    return base;
}

std::string Schedule::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Constant: os << "constant(" << base << ")"; break;
        case Kind::Linear: os << "linear(" << base << ")"; break;
        case Kind::Geometric: os << "geometric(" << base << ", " << ratio << ")"; break;
    }
    return os.str();
}

double schedule_value(const Schedule& schedule, int n) { return schedule.value(n); }

void RunConfig::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");
    if (k_max < 1) throw ValidationError("k_max", "must be at least 1");
    if (max_iterations < 1) throw ValidationError("max_iterations", "must be at least 1");
    for (const auto* s : {&rho1, &rho2, &rho_fusion}) {
        if (!(s->base > 0.0)) throw ValidationError("schedule", "base must be positive");
        if (s->kind == Schedule::Kind::Geometric && !(s->ratio > 0.0))
            throw ValidationError("schedule", "geometric ratio must be positive");
    }
}

DataSource DataSource::recorded(std::vector<DataPoint> agent1, std::vector<DataPoint> agent2) {
    DataSource src;
    src.generated_ = false;
    src.recorded1_ = std::move(agent1);
    src.recorded2_ = std::move(agent2);
    return src;
}

DataSource DataSource::generated(std::function<double(double)> truth, double sigma,
                                 Domain domain1, Domain domain2, std::uint64_t seed) {
    DataSource src;
    src.generated_ = true;
    src.truth_ = std::move(truth);
    src.sigma_ = sigma;
    src.domain1_ = std::move(domain1);
    src.domain2_ = std::move(domain2);
    src.seed_ = seed;
    src.reset();
    return src;
}

void DataSource::reset() {
    cursor_ = 0;
    if (generated_) {
        engine1_.seed(seed_ * 2 + 1);
        engine2_.seed(seed_ * 2 + 2);
    }
}

DataPoint DataSource::draw(const Domain& domain, std::mt19937_64& engine) {
    // piece chosen proportionally to its length, then uniform inside it
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double total = domain.total_length();
    double x = domain.pieces().front().lo;
    if (total > 0.0) {
        double target = unit(engine) * total;
        for (const auto& piece : domain.pieces()) {
            if (target <= piece.length() || &piece == &domain.pieces().back()) {
                x = piece.lo + std::min(target, piece.length());
                break;
            }
            target -= piece.length();
        }
    }
    double y = truth_(x);
    if (sigma_ > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma_);
        y += noise(engine);
    }
    return DataPoint{x, y};
}

std::pair<DataPoint, DataPoint> DataSource::next() {
    if (generated_) return {draw(domain1_, engine1_), draw(domain2_, engine2_)};
    if (cursor_ >= recorded1_.size() || cursor_ >= recorded2_.size())
        throw SingularSystemError("recorded data source exhausted");
    auto out = std::make_pair(recorded1_[cursor_], recorded2_[cursor_]);
    ++cursor_;
    return out;
}

namespace {

double seminorm(const Eigen::VectorXd& v, const Eigen::MatrixXd& gram) {
    return std::sqrt(std::max(v.dot(gram * v), 0.0));
}

}  // namespace

double window_statistic(const std::vector<IterationRecord>& records,
                        const Eigen::VectorXd& initial1, const Eigen::VectorXd& initial2,
                        const Eigen::MatrixXd& gram1, const Eigen::MatrixXd& gram2, int n,
                        int k_max) {
    if (n < k_max) throw WindowNotFilledError("window statistic needs n >= k_max");
    const int base_index = n - k_max;  // 0 refers to the initial estimates
    const auto coeffs1 = [&](int idx) -> const Eigen::VectorXd& {
        return idx == 0 ? initial1 : records[static_cast<std::size_t>(idx - 1)].alpha_down1;
    };
    const auto coeffs2 = [&](int idx) -> const Eigen::VectorXd& {
        return idx == 0 ? initial2 : records[static_cast<std::size_t>(idx - 1)].alpha_down2;
    };
    double stat = 0.0;
    for (int j = 1; j <= k_max; ++j) {
        const int idx = base_index + j;
        const Eigen::VectorXd d1 = coeffs1(idx) - coeffs1(base_index);
        const Eigen::VectorXd d2 = coeffs2(idx) - coeffs2(base_index);
        stat = std::max(stat, seminorm(d1, gram1) + seminorm(d2, gram2));
    }
    return stat;
}

RunResult run(const RunConfig& config, DataSource& source, const FusionSpace& space) {
    config.validate();
    const int m = space.dimension();
    Eigen::VectorXd init1 = config.initial1.size() ? config.initial1 : Eigen::VectorXd::Zero(m);
    Eigen::VectorXd init2 = config.initial2.size() ? config.initial2 : Eigen::VectorXd::Zero(m);
    if (init1.size() != m || init2.size() != m)
        throw ValidationError("initial", "initial coefficient length must match the anchor count");

    AgentState state1 = space.agent_state(1).with_downloaded(init1);
    AgentState state2 = space.agent_state(2).with_downloaded(init2);
    const Eigen::MatrixXd& g1 = space.gram_agent(1);
    const Eigen::MatrixXd& g2 = space.gram_agent(2);
    const double c_d = space.download_normalization();

    RunResult result;
    result.final1 = init1;
    result.final2 = init2;
    for (int n = 1; n <= config.max_iterations; ++n) {
        IterationRecord rec;
        rec.n = n;
        std::tie(rec.data1, rec.data2) = source.next();
        rec.rho1 = config.rho1.value(n);
        rec.rho2 = config.rho2.value(n);
        rec.rho_fusion = config.rho_fusion.value(n);

        const RkhsFunction f1 = local_estimate(state1, rec.data1, rec.rho1);
        const RkhsFunction f2 = local_estimate(state2, rec.data2, rec.rho2);
        rec.alpha1_local = f1.coefficients;
        rec.alpha2_local = f2.coefficients;

        const double rr1 = config.reconstruct_with_fusion_rho ? rec.rho_fusion : rec.rho1;
        const double rr2 = config.reconstruct_with_fusion_rho ? rec.rho_fusion : rec.rho2;
        const ReconstructedData d1 = reconstruct_data(f1, rr1, 1);
        const ReconstructedData d2 = reconstruct_data(f2, rr2, 2);
        rec.y_hat.resize(2 * m);
        rec.y_hat.head(m) = d1.outputs;
        rec.y_hat.tail(m) = d2.outputs;

        const RkhsFunction fused = space.fuse(d1, d2, rec.rho_fusion);
        rec.alpha_fused = fused.coefficients;

        RkhsFunction down1 = space.download(1, fused);
        RkhsFunction down2 = space.download(2, fused);
        if (config.normalize_download) {
            down1.coefficients /= c_d;
            down2.coefficients /= c_d;
        }
        if (down1.coefficients.size() != m || down2.coefficients.size() != m)
            throw SingularSystemError("downloaded coefficients left the agent anchor basis at n=" +
                                      std::to_string(n));
        if (!down1.coefficients.allFinite() || !down2.coefficients.allFinite())
            throw SingularSystemError("non-finite state at iteration " + std::to_string(n));
        rec.alpha_down1 = down1.coefficients;
        rec.alpha_down2 = down2.coefficients;
        rec.delta_norm1 = seminorm(down1.coefficients - state1.downloaded().coefficients, g1);
        rec.delta_norm2 = seminorm(down2.coefficients - state2.downloaded().coefficients, g2);

        state1 = state1.with_downloaded(down1.coefficients);
        state2 = state2.with_downloaded(down2.coefficients);
        result.records.push_back(std::move(rec));

        if (n >= config.k_max) {
            const double stat =
                window_statistic(result.records, init1, init2, g1, g2, n, config.k_max);
            result.records.back().window_stat = stat;
            if (stat < config.epsilon) {
                result.records.back().stop = true;
                result.reason = StopReason::WindowCriterion;
                result.final1 = state1.downloaded().coefficients;
                result.final2 = state2.downloaded().coefficients;
                return result;
            }
        }
    }
    result.reason = StopReason::MaxIterations;
    result.final1 = state1.downloaded().coefficients;
    result.final2 = state2.downloaded().coefficients;
    return result;
}

}  // namespace rkfusion
