#include "rkfusion/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rkfusion/errors.hpp"

namespace rkfusion {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    int depth = 0;
    for (char c : value) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(item));
            item.clear();
        } else {
            item.push_back(c);
        }
    }
    if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

double parse_number(const std::string& field, const std::string& token) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(field, "not a number: '" + token + "'");
    }
}

int parse_int(const std::string& field, const std::string& token) {
    const double v = parse_number(field, token);
    if (v != std::floor(v)) throw ValidationError(field, "not an integer: '" + token + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& field, const std::string& token) {
    if (token == "true" || token == "1" || token == "on") return true;
    if (token == "false" || token == "0" || token == "off") return false;
    throw ValidationError(field, "not a boolean: '" + token + "'");
}

Domain parse_domain(const std::string& field, const std::string& value) {
    std::vector<Interval> pieces;
    std::stringstream ss(value);
    std::string piece;
    while (std::getline(ss, piece, '|')) {
        piece = trim(piece);
        const std::size_t sep = piece.find("..");
        if (sep == std::string::npos)
            throw ValidationError(field, "interval must look like lo..hi: '" + piece + "'");
        const double lo = parse_number(field, trim(piece.substr(0, sep)));
        const double hi = parse_number(field, trim(piece.substr(sep + 2)));
        if (!(lo <= hi)) throw ValidationError(field, "interval with lo > hi: '" + piece + "'");
        pieces.push_back(Interval{lo, hi});
    }
    if (pieces.empty()) throw ValidationError(field, "empty domain");
    return Domain(pieces);
}

Schedule parse_schedule(const std::string& field, const std::string& value) {
    const std::size_t open = value.find('(');
    const std::size_t close = value.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ValidationError(field, "schedule must look like constant(c), linear(c) or "
                                     "geometric(c, r): '" + value + "'");
    const std::string name = trim(value.substr(0, open));
    const auto args = split_list(value.substr(open + 1, close - open - 1));
    Schedule sched;
    if (name == "constant" && args.size() == 1) {
        sched = Schedule::constant(parse_number(field, args[0]));
    } else if (name == "linear" && args.size() == 1) {
        sched = Schedule::linear(parse_number(field, args[0]));
    } else if (name == "geometric" && args.size() == 2) {
        sched = Schedule::geometric(parse_number(field, args[0]), parse_number(field, args[1]));
    } else {
        throw ValidationError(field, "unknown schedule '" + value + "'");
    }
    if (!(sched.base > 0.0)) throw ValidationError(field, "schedule base must be positive");
    if (sched.kind == Schedule::Kind::Geometric && !(sched.ratio > 0.0))
        throw ValidationError(field, "geometric ratio must be positive");
    return sched;
}

struct RawEntry {
    int line = 0;
    std::string value;
};

using SectionMap = std::map<std::string, std::map<std::string, RawEntry>>;

SectionMap tokenize(const std::string& text) {
    static const std::vector<std::string> kSections = {"agent1", "agent2", "fusion",
                                                       "run",    "data",   "output"};
    SectionMap sections;
    std::istringstream is(text);
    std::string line;
    std::string current;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(number, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), current) == kSections.end())
                throw ParseError(number, "unknown section [" + current + "]");
            sections[current];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(number, "expected key = value");
        if (current.empty()) throw ParseError(number, "key outside any section");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(number, "empty key");
        for (char c : key)
            if (!(std::islower(static_cast<unsigned char>(c)) || c == '_' ||
                  std::isdigit(static_cast<unsigned char>(c))))
                throw ParseError(number, "keys are lowercase snake_case: '" + key + "'");
        sections[current][key] = RawEntry{number, trim(line.substr(eq + 1))};
    }
    return sections;
}

class Extractor {
  public:
    explicit Extractor(SectionMap sections) : sections_(std::move(sections)) {}

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        auto sec = sections_.find(section);
        if (sec == sections_.end()) return std::nullopt;
        auto it = sec->second.find(key);
        if (it == sec->second.end()) return std::nullopt;
        used_.insert(section + "." + key);
        return it->second.value;
    }

    std::string require(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v) throw ValidationError(section + "." + key, "missing required key");
        return *v;
    }

    void check_unused() const {
        for (const auto& [section, entries] : sections_)
            for (const auto& [key, entry] : entries)
                if (!used_.count(section + "." + key))
                    throw ValidationError(section + "." + key,
                                          "unknown key (line " + std::to_string(entry.line) + ")");
    }

  private:
    SectionMap sections_;
    std::set<std::string> used_;
};

AgentConfig parse_agent(Extractor& ex, const std::string& section) {
    const auto features = ex.get(section, "features");
    const auto domain = ex.get(section, "domain");
    const auto anchors = ex.get(section, "anchors");
    const auto pool = ex.get(section, "anchor_pool");
    if (!features) throw ValidationError(section + ".features", "missing required key");
    if (!domain) throw ValidationError(section + ".domain", "missing required key");
    AgentConfig agent;
    for (const auto& token : split_list(*features))
        agent.features.push_back(FeatureSpec::parse(token));
    if (agent.features.empty()) throw ValidationError(section + ".features", "empty feature list");
    agent.domain = parse_domain(section + ".domain", *domain);
    if (anchors) {
        for (const auto& token : split_list(*anchors))
            agent.anchors.push_back(parse_number(section + ".anchors", token));
    }
    if (pool) agent.anchor_pool = parse_int(section + ".anchor_pool", *pool);
    if (agent.anchors.empty() && !agent.anchor_pool)
        throw ValidationError(section + ".anchors", "need an anchor list or anchor_pool size");
    return agent;
}

// Anchors live in the joint input space, not necessarily inside the agent's
// own sampling domain.
void check_anchor_membership(const ExperimentConfig& config) {
    const Interval hull =
        Domain::hull_of(config.agent1.domain, config.agent2.domain).hull();
    for (const auto& [section, agent] :
         {std::pair<const char*, const AgentConfig*>{"agent1", &config.agent1},
          {"agent2", &config.agent2}}) {
        for (double a : agent->anchors)
            if (!(a >= hull.lo && a <= hull.hi))
                throw ValidationError(std::string(section) + ".anchors",
                                      "anchor " + std::to_string(a) +
                                          " outside the joint input hull " +
                                          std::to_string(hull.lo) + ".." + std::to_string(hull.hi));
    }
}

void parse_fusion_section(Extractor& ex, ExperimentConfig& config) {
    const auto normalize = ex.get("fusion", "normalize_download");
    const auto recon = ex.get("fusion", "reconstruction_rho");
    const auto grid = ex.get("fusion", "feature_grid_points");
    if (normalize) config.normalize_download = parse_bool("fusion.normalize_download", *normalize);
    if (recon) {
        if (*recon == "agent") config.reconstruct_with_fusion_rho = false;
        else if (*recon == "fusion") config.reconstruct_with_fusion_rho = true;
        else throw ValidationError("fusion.reconstruction_rho", "expected agent or fusion");
    }
    if (grid) {
        config.feature_grid_points = parse_int("fusion.feature_grid_points", *grid);
        if (config.feature_grid_points < 2)
            throw ValidationError("fusion.feature_grid_points", "must be at least 2");
    }
}

// Each section parser reads every key before validating any of them, so one
// bad value cannot shadow the others as spurious unknown-key errors.
void parse_run_section(Extractor& ex, ExperimentConfig& config) {
    const auto epsilon = ex.get("run", "epsilon");
    const auto k_max = ex.get("run", "k_max");
    const auto max_iterations = ex.get("run", "max_iterations");
    const auto rho1 = ex.get("run", "rho1");
    const auto rho2 = ex.get("run", "rho2");
    const auto rho_fusion = ex.get("run", "rho_fusion");
    if (!epsilon) throw ValidationError("run.epsilon", "missing required key");
    config.epsilon = parse_number("run.epsilon", *epsilon);
    if (!(config.epsilon > 0.0)) throw ValidationError("run.epsilon", "must be positive");
    if (k_max) config.k_max = parse_int("run.k_max", *k_max);
    if (config.k_max < 1) throw ValidationError("run.k_max", "must be at least 1");
    if (max_iterations) config.max_iterations = parse_int("run.max_iterations", *max_iterations);
    if (config.max_iterations < 1) throw ValidationError("run.max_iterations", "must be >= 1");
    if (rho1) config.rho1 = parse_schedule("run.rho1", *rho1);
    if (rho2) config.rho2 = parse_schedule("run.rho2", *rho2);
    if (rho_fusion) config.rho_fusion = parse_schedule("run.rho_fusion", *rho_fusion);
}

void parse_data_section(Extractor& ex, ExperimentConfig& config) {
    const auto features = ex.get("data", "true_function_features");
    const auto coefficients = ex.get("data", "true_function_coefficients");
    const auto sigma = ex.get("data", "sigma");
    const auto seed = ex.get("data", "seed");
    if (!features) throw ValidationError("data.true_function_features", "missing required key");
    if (!coefficients)
        throw ValidationError("data.true_function_coefficients", "missing required key");
    for (const auto& token : split_list(*features))
        config.true_features.push_back(FeatureSpec::parse(token));
    for (const auto& token : split_list(*coefficients))
        config.true_coefficients.push_back(parse_number("data.true_function_coefficients", token));
    if (config.true_features.size() != config.true_coefficients.size())
        throw ValidationError("data.true_function_coefficients",
                              "coefficient count must match the feature count");
    if (config.true_features.empty()) throw ValidationError("data.true_function_features", "empty");
    if (sigma) config.sigma = parse_number("data.sigma", *sigma);
    if (config.sigma < 0.0) throw ValidationError("data.sigma", "must be nonnegative");
    if (seed) {
        const double s = parse_number("data.seed", *seed);
        if (s < 0 || s != std::floor(s))
            throw ValidationError("data.seed", "must be a nonnegative integer");
        config.seed = static_cast<std::uint64_t>(s);
    }
}

void parse_output_section(Extractor& ex, ExperimentConfig& config) {
    const auto directory = ex.get("output", "directory");
    const auto grid_points = ex.get("output", "grid_points");
    const auto svg = ex.get("output", "svg");
    if (directory) config.output_directory = *directory;
    if (grid_points) {
        config.grid_points = parse_int("output.grid_points", *grid_points);
        if (config.grid_points < 2) throw ValidationError("output.grid_points", "must be >= 2");
    }
    if (svg) config.write_svg = parse_bool("output.svg", *svg);
}

}  // namespace

FeatureSpec FeatureSpec::parse(const std::string& token) {
    const std::string t = trim(token);
    if (t == "constant") return FeatureSpec{Kind::Constant, 0};
    if (t.rfind("monomial(", 0) == 0 && t.back() == ')') {
        const int k = parse_int("features", trim(t.substr(9, t.size() - 10)));
        if (k < 0) throw ValidationError("features", "monomial degree must be >= 0");
        return FeatureSpec{Kind::Monomial, k};
    }
    if (t.rfind("exp(", 0) == 0 && t.back() == ')') {
        const std::string arg = trim(t.substr(4, t.size() - 5));
        if (arg == "+1" || arg == "1") return FeatureSpec{Kind::Exponential, +1};
        if (arg == "-1") return FeatureSpec{Kind::Exponential, -1};
        throw ValidationError("features", "exp takes +1 or -1, got '" + arg + "'");
    }
    throw ValidationError("features", "unknown feature '" + t + "'");
}

std::string FeatureSpec::to_string() const {
    switch (kind) {
        case Kind::Constant: return "constant";
        case Kind::Monomial: return "monomial(" + std::to_string(parameter) + ")";
        case Kind::Exponential: return parameter > 0 ? "exp(+1)" : "exp(-1)";
    }
    return "?";
}

Feature FeatureSpec::build() const {
    switch (kind) {
        case Kind::Constant:
            return Feature("constant", [](double) { return 1.0; });
        case Kind::Monomial: {
            const int k = parameter;
            return Feature(to_string(), [k](double x) { return std::pow(x, k); });
        }
        case Kind::Exponential: {
            const double sign = parameter > 0 ? 1.0 : -1.0;
            return Feature(to_string(), [sign](double x) { return std::exp(sign * x); });
        }
    }
    return Feature("constant", [](double) { return 1.0; });
}

ExperimentConfig parse_config(const std::string& text) {
    Extractor ex(tokenize(text));
    ExperimentConfig config;
    config.agent1 = parse_agent(ex, "agent1");
    config.agent2 = parse_agent(ex, "agent2");
    parse_fusion_section(ex, config);
    parse_run_section(ex, config);
    parse_data_section(ex, config);
    parse_output_section(ex, config);
    check_anchor_membership(config);
    ex.check_unused();
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::vector<std::string> validate_config_text(const std::string& text) {
    std::vector<std::string> problems;
    SectionMap sections;
    try {
        sections = tokenize(text);
    } catch (const ParseError& e) {
        problems.emplace_back(std::string("parse error: ") + e.what());
        return problems;
    }
    Extractor ex(std::move(sections));
    ExperimentConfig config;
    const auto attempt = [&problems](auto&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            problems.emplace_back(std::string("validation error: ") + e.what());
        }
    };
    attempt([&] { config.agent1 = parse_agent(ex, "agent1"); });
    attempt([&] { config.agent2 = parse_agent(ex, "agent2"); });
    attempt([&] { check_anchor_membership(config); });
    attempt([&] { parse_fusion_section(ex, config); });
    attempt([&] { parse_run_section(ex, config); });
    attempt([&] { parse_data_section(ex, config); });
    attempt([&] { parse_output_section(ex, config); });
    attempt([&] { ex.check_unused(); });
    return problems;
}

}  // namespace rkfusion
