#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "owclass/category.hpp"

namespace owclass {

/// One sample's N judged rollouts; the unit of reward computation.
struct RolloutGroup {
    std::string sample_id;
    std::string ground_truth;
    std::vector<Category> categories;
};

enum class RewardKind { DynamicBoN, StaticBinary, StaticGraded };

std::string_view reward_kind_name(RewardKind k);

/// Graded weights giving reward 1 to S+ and S, 0.75 to S-, 0.5 to G,
/// 0.25 to A and 0 to W — i.e. specificity_score/4 for non-Wrong categories.
std::map<Category, double> graded_default_weights();

struct RewardScheme {
    RewardKind kind = RewardKind::DynamicBoN;
    std::map<Category, double> graded_weights;  // used by StaticGraded only

    /// Checks graded weights: Wrong maps to 0 and weights are monotone
    /// non-decreasing in rank. Throws ContractViolation otherwise.
    void validate() const;

    static RewardScheme dynamic_bon() { return {RewardKind::DynamicBoN, {}}; }
    static RewardScheme static_binary() { return {RewardKind::StaticBinary, {}}; }
    static RewardScheme static_graded(std::map<Category, double> weights = graded_default_weights());

    static RewardScheme from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

enum class AdvantageNorm { GroupMeanStd, GroupMeanOnly };

struct AdvantageMode {
    AdvantageNorm mode = AdvantageNorm::GroupMeanStd;
    // Keeps zero-variance groups at all-zero advantages without division by
    // zero. Small enough that non-constant groups stay unit variance.
    double epsilon = 1e-9;

    static AdvantageMode from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Most informative category in the group (max under the rank order).
/// Throws EmptyGroup on an empty group.
Category best_category(const RolloutGroup& group);

/// Reference category c*: the minimal category a rollout must reach to earn
/// reward 1. Clamps the corner cases: S+ -> S and W -> A; identity otherwise.
Category reference_category(Category c_best);

/// 1 iff c is at least as informative as c_star. c_star must be one of
/// {A, G, S-, S} (the image of reference_category); anything else is a
/// caller bug and throws ContractViolation.
double dynamic_reward(Category c, Category c_star);

/// 1 iff c is Specific or MoreSpecific.
double static_binary_reward(Category c);

/// weights[c]; throws MissingWeight when the category is not in the map.
double graded_reward(Category c, const std::map<Category, double>& weights);

/// Applies the scheme elementwise. For DynamicBoN the reference category is
/// computed once from this group's own categories (online, no extra
/// generations). Throws EmptyGroup on an empty group.
std::vector<double> group_rewards(const RolloutGroup& group, const RewardScheme& scheme);

/// Group-relative advantages:
///   GroupMeanStd:  (r_i - mean) / (std + epsilon)
///   GroupMeanOnly:  r_i - mean
/// Both sum to 0 up to floating-point error. Throws EmptyGroup when empty.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const AdvantageMode& mode);

/// With probability rho_e moves the category one rank step up or down,
/// uniformly over the valid directions; rank endpoints move inward.
Category perturb_category(Category c, double rho_e, std::mt19937_64& rng);

}  // namespace owclass
