#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "owclass/hierarchy.hpp"
#include "owclass/metrics.hpp"
#include "owclass/reward.hpp"

namespace owclass {

/// Deterministic stream splitting: every consumer derives its own generator
/// from (seed, stream ids), so parallel evaluation order cannot change runs.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t a = 0, std::uint64_t b = 0);

struct SynthSample {
    std::string sample_id;
    std::string ground_truth;            // always a leaf
    Category capability_ceiling = Category::Specific;  // one of {G, S-, S}
};

/// Categorical policy: one learnable logit vector per sample over the shared
/// action set (hierarchy nodes plus the abstain token). A contextual bandit:
/// there is no shared network, which keeps the reward mechanism isolated from
/// representation learning.
struct ToyPolicy {
    std::vector<std::string> action_labels;   // nodes..., abstain last
    std::vector<std::vector<double>> logits;  // [sample][action]
    double temperature = 1.0;

    std::size_t n_actions() const { return action_labels.size(); }
    std::vector<double> probs(std::size_t sample_index) const;
    std::size_t greedy_action(std::size_t sample_index) const;
};

struct TrainConfig {
    int n_rollouts = 10;
    int batch_size = 32;
    double learning_rate = 0.5;
    int epochs = 30;
    double kl_coeff = 0.01;
    RewardScheme scheme = RewardScheme::dynamic_bon();
    AdvantageMode advantage{};
    double noise_rho = 0.0;
    long long seed = 7;
    double temperature = 1.0;

    void validate() const;
    static TrainConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct DatasetParams {
    int n_samples = 300;
    double p_ceiling_specific = 0.6;
    double p_ceiling_less_specific = 0.2;
    double p_ceiling_generic = 0.2;

    static DatasetParams from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Balanced depth-3 tree with branching factor 3: 27 leaves, 40 nodes.
LabelHierarchy make_default_hierarchy();

/// Leaves drawn uniformly, ceilings drawn from the configured mix.
std::vector<SynthSample> make_dataset(const LabelHierarchy& h, const DatasetParams& params,
                                      std::uint64_t seed);

/// Initial policy with the genericity bias: probability mass concentrated on
/// shallow ancestors of each ground truth, categories above the sample's
/// capability ceiling clamped near kCeilingFloorProb, and (for Generic-ceiling
/// samples) a confusable sibling leaf carrying the largest single mass so the
/// initial greedy prediction is wrong on those samples.
inline constexpr double kCeilingFloorProb = 1e-3;
ToyPolicy initial_policy(const std::vector<SynthSample>& dataset, const LabelHierarchy& h,
                         double temperature = 1.0);

/// Rollout group plus the sampled action ids (needed for the gradient).
struct SampledGroup {
    std::size_t sample_index = 0;
    std::vector<std::size_t> actions;
    RolloutGroup group;
};

/// Draws n actions i.i.d. from the policy softmax and judges each against the
/// sample's ground truth with the oracle judge. Deterministic given the rng
/// state.
SampledGroup sample_rollouts(const ToyPolicy& policy, std::size_t sample_index,
                             const SynthSample& sample, const LabelHierarchy& h, int n,
                             std::mt19937_64& rng);

struct StepStats {
    double mean_reward = 0.0;
    double mean_advantage = 0.0;
    double kl = 0.0;
};

/// Surrogate objective whose gradient is the policy-gradient update:
///   (1/B) sum_g (1/n_g) sum_i adv[g][i] * log pi(a_i | ctx_g)
///   - kl_coeff * (1/B) sum_g KL(pi_ctx || ref_ctx)
/// Advantages are treated as constants.
double policy_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                        const std::vector<SampledGroup>& batch,
                        const std::vector<std::vector<double>>& advantages,
                        double kl_coeff);

/// Analytic gradient of policy_objective with respect to every logit.
std::vector<std::vector<double>> policy_gradient(
    const ToyPolicy& policy, const ToyPolicy& reference,
    const std::vector<SampledGroup>& batch,
    const std::vector<std::vector<double>>& advantages, double kl_coeff);

/// One ascent step: judge-noise perturbation (train-time only), rewards via
/// config.scheme, group-relative advantages, then a gradient step on the
/// surrogate objective. Throws DegenerateGroup when a group has < 2 rollouts.
StepStats grpo_step(ToyPolicy& policy, const std::vector<SampledGroup>& batch,
                    const TrainConfig& config, const ToyPolicy& reference,
                    std::mt19937_64& noise_rng);

struct TrainResult {
    std::vector<EvalReport> trajectory;  // greedy report per epoch, incl. epoch 0
    std::vector<StepStats> steps;
    ToyPolicy policy;
};

/// Greedy (argmax) evaluation through the oracle judge.
EvalReport eval_greedy(const ToyPolicy& policy, const std::vector<SynthSample>& dataset,
                       const LabelHierarchy& h, const std::string& name);

/// Runs config.epochs of grpo_step over shuffled batches and evaluates the
/// greedy policy after each epoch. Deterministic given the config seed.
TrainResult train(const TrainConfig& config, const std::vector<SynthSample>& dataset,
                  const LabelHierarchy& h);

/// Best-of-n evaluation: per sample, the most informative category among n
/// sampled rollouts. Per-sample streams are derived from (seed, sample), so
/// smaller n evaluates a prefix of the same draws.
EvalReport bon_eval(const ToyPolicy& policy, const std::vector<SynthSample>& dataset,
                    const LabelHierarchy& h, int n, std::uint64_t seed);

}  // namespace owclass
