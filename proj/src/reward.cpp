#include "owclass/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"

namespace owclass {

using json = nlohmann::json;

std::string_view reward_kind_name(RewardKind k) {
    switch (k) {
        case RewardKind::DynamicBoN: return "dynamic_bon";
        case RewardKind::StaticBinary: return "static_binary";
        case RewardKind::StaticGraded: return "static_graded";
    }
    return "dynamic_bon";
}

std::map<Category, double> graded_default_weights() {
    return {{Category::Wrong, 0.0},       {Category::Abstain, 0.25},
            {Category::Generic, 0.5},     {Category::LessSpecific, 0.75},
            {Category::Specific, 1.0},    {Category::MoreSpecific, 1.0}};
}

RewardScheme RewardScheme::static_graded(std::map<Category, double> weights) {
    RewardScheme s{RewardKind::StaticGraded, std::move(weights)};
    s.validate();
    return s;
}

void RewardScheme::validate() const {
    if (kind != RewardKind::StaticGraded) return;
    auto w = graded_weights.find(Category::Wrong);
    if (w != graded_weights.end() && w->second != 0.0)
        throw ContractViolation("graded weight for Wrong must be 0");
    double prev = -1.0;
    for (Category c : kAllCategories) {
        auto it = graded_weights.find(c);
        if (it == graded_weights.end()) continue;
        if (it->second < 0.0 || it->second > 1.0)
            throw ContractViolation("graded weights must lie in [0, 1]");
        if (it->second < prev)
            throw ContractViolation("graded weights must be non-decreasing in rank");
        prev = it->second;
    }
}

RewardScheme RewardScheme::from_json(const json& j) {
    RewardScheme s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dynamic_bon" || kind == "dynamic") {
        s.kind = RewardKind::DynamicBoN;
    } else if (kind == "static_binary" || kind == "binary") {
        s.kind = RewardKind::StaticBinary;
    } else if (kind == "static_graded" || kind == "graded") {
        s.kind = RewardKind::StaticGraded;
        s.graded_weights = graded_default_weights();
        if (j.contains("graded_weights")) {
            for (const auto& [name, value] : j.at("graded_weights").items()) {
                auto cat = parse_category(name);
                if (!cat) throw ConfigError("unknown category in graded_weights: " + name);
                s.graded_weights[*cat] = value.get<double>();
            }
        }
        s.validate();
    } else {
        throw ConfigError("unknown reward kind: " + kind);
    }
    return s;
}

json RewardScheme::to_json() const {
    json j{{"kind", std::string(reward_kind_name(kind))}};
    if (kind == RewardKind::StaticGraded) {
        json weights = json::object();
        for (const auto& [cat, w] : graded_weights)
            weights[std::string(category_name(cat))] = w;
        j["graded_weights"] = weights;
    }
    return j;
}

AdvantageMode AdvantageMode::from_json(const json& j) {
    AdvantageMode m;
    if (j.contains("mode")) {
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "group_mean_std" || mode == "mean_std") {
            m.mode = AdvantageNorm::GroupMeanStd;
        } else if (mode == "group_mean_only" || mode == "mean_only") {
            m.mode = AdvantageNorm::GroupMeanOnly;
        } else {
            throw ConfigError("unknown advantage mode: " + mode);
        }
    }
    if (j.contains("epsilon")) m.epsilon = j.at("epsilon").get<double>();
    if (m.epsilon <= 0.0) throw ConfigError("advantage epsilon must be positive");
    return m;
}

json AdvantageMode::to_json() const {
    return json{{"mode", mode == AdvantageNorm::GroupMeanStd ? "group_mean_std"
                                                             : "group_mean_only"},
                {"epsilon", epsilon}};
}

Category best_category(const RolloutGroup& group) {
    if (group.categories.empty()) throw EmptyGroup("rollout group is empty");
    return *std::max_element(group.categories.begin(), group.categories.end(),
                             [](Category a, Category b) { return rank(a) < rank(b); });
}

Category reference_category(Category c_best) {
    if (c_best == Category::MoreSpecific) return Category::Specific;
    if (c_best == Category::Wrong) return Category::Abstain;
    return c_best;
}

double dynamic_reward(Category c, Category c_star) {
    if (c_star == Category::Wrong || c_star == Category::MoreSpecific)
        throw ContractViolation(
            "reference category must be one of Abstain, Generic, Less Specific, "
            "Specific");
    return at_least(c, c_star) ? 1.0 : 0.0;
}

double static_binary_reward(Category c) {
    return (c == Category::Specific || c == Category::MoreSpecific) ? 1.0 : 0.0;
}

double graded_reward(Category c, const std::map<Category, double>& weights) {
    auto it = weights.find(c);
    if (it == weights.end())
        throw MissingWeight("no graded weight for category " +
                            std::string(category_name(c)));
    return it->second;
}

std::vector<double> group_rewards(const RolloutGroup& group, const RewardScheme& scheme) {
    if (group.categories.empty()) throw EmptyGroup("rollout group is empty");
    std::vector<double> rewards;
    rewards.reserve(group.categories.size());
    switch (scheme.kind) {
        case RewardKind::DynamicBoN: {
            const Category c_star = reference_category(best_category(group));
            for (Category c : group.categories) rewards.push_back(dynamic_reward(c, c_star));
            break;
        }
        case RewardKind::StaticBinary:
            for (Category c : group.categories) rewards.push_back(static_binary_reward(c));
            break;
        case RewardKind::StaticGraded:
            for (Category c : group.categories)
                rewards.push_back(graded_reward(c, scheme.graded_weights));
            break;
    }
    return rewards;
}

std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const AdvantageMode& mode) {
    if (rewards.empty()) throw EmptyGroup("no rewards to normalize");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    std::vector<double> adv(rewards.size());
    if (mode.mode == AdvantageNorm::GroupMeanOnly) {
        for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mean;
        return adv;
    }
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double stddev = std::sqrt(var / n);
    const double denom = stddev + mode.epsilon;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
    return adv;
}

Category perturb_category(Category c, double rho_e, std::mt19937_64& rng) {
    if (rho_e < 0.0 || rho_e > 1.0)
        throw ContractViolation("noise rate must lie in [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= rho_e) return c;
    const int r = rank(c);
    if (r == 0) return static_cast<Category>(1);
    if (r == 5) return static_cast<Category>(4);
    const int step = unit(rng) < 0.5 ? -1 : 1;
    return static_cast<Category>(r + step);
}

}  // namespace owclass
