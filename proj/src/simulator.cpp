#include "owclass/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"

namespace owclass {

using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                        std::uint64_t b) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(stream));
    s = splitmix64(s ^ splitmix64(a));
    s = splitmix64(s ^ splitmix64(b));
    return std::mt19937_64(s);
}

// ---------------------------------------------------------------------------
// Policy

std::vector<double> ToyPolicy::probs(std::size_t sample_index) const {
    const auto& z = logits.at(sample_index);
    std::vector<double> p(z.size());
    const double invt = 1.0 / temperature;
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        p[k] = std::exp((z[k] - zmax) * invt);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::size_t ToyPolicy::greedy_action(std::size_t sample_index) const {
    const auto& z = logits.at(sample_index);
    return static_cast<std::size_t>(
        std::distance(z.begin(), std::max_element(z.begin(), z.end())));
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
    if (n_rollouts < 2)
        throw ConfigError("n_rollouts must be >= 2 for group-relative advantages");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (kl_coeff < 0.0) throw ConfigError("kl_coeff must be non-negative");
    if (noise_rho < 0.0 || noise_rho > 1.0)
        throw ConfigError("noise_rho must lie in [0, 1]");
    if (temperature <= 0.0) throw ConfigError("temperature must be positive");
    scheme.validate();
    if (advantage.epsilon <= 0.0) throw ConfigError("advantage epsilon must be positive");
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.n_rollouts = j.value("n_rollouts", c.n_rollouts);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.kl_coeff = j.value("kl_coeff", c.kl_coeff);
    c.noise_rho = j.value("noise_rho", c.noise_rho);
    c.seed = j.value("seed", c.seed);
    c.temperature = j.value("temperature", c.temperature);
    if (j.contains("scheme")) c.scheme = RewardScheme::from_json(j.at("scheme"));
    if (j.contains("advantage")) c.advantage = AdvantageMode::from_json(j.at("advantage"));
    c.validate();
    return c;
}

json TrainConfig::to_json() const {
    return json{{"n_rollouts", n_rollouts},
                {"batch_size", batch_size},
                {"learning_rate", learning_rate},
                {"epochs", epochs},
                {"kl_coeff", kl_coeff},
                {"noise_rho", noise_rho},
                {"seed", seed},
                {"temperature", temperature},
                {"scheme", scheme.to_json()},
                {"advantage", advantage.to_json()}};
}

DatasetParams DatasetParams::from_json(const json& j) {
    DatasetParams p;
    p.n_samples = j.value("n_samples", p.n_samples);
    p.p_ceiling_specific = j.value("p_ceiling_specific", p.p_ceiling_specific);
    p.p_ceiling_less_specific = j.value("p_ceiling_less_specific", p.p_ceiling_less_specific);
    p.p_ceiling_generic = j.value("p_ceiling_generic", p.p_ceiling_generic);
    if (p.n_samples < 1) throw ConfigError("dataset needs at least one sample");
    const double total =
        p.p_ceiling_specific + p.p_ceiling_less_specific + p.p_ceiling_generic;
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("ceiling probabilities must sum to 1");
    return p;
}

json DatasetParams::to_json() const {
    return json{{"n_samples", n_samples},
                {"p_ceiling_specific", p_ceiling_specific},
                {"p_ceiling_less_specific", p_ceiling_less_specific},
                {"p_ceiling_generic", p_ceiling_generic}};
}

// ---------------------------------------------------------------------------
// Synthetic world

LabelHierarchy make_default_hierarchy() {
    constexpr int kDepth = 3;
    constexpr int kBranch = 3;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::string> frontier{"entity"};
    for (int d = 0; d < kDepth; ++d) {
        std::vector<std::string> next;
        for (const auto& parent : frontier) {
            for (int b = 0; b < kBranch; ++b) {
                std::string child =
                    (parent == "entity" ? "c" : parent) + std::to_string(b);
                edges.emplace_back(parent, child);
                next.push_back(child);
            }
        }
        frontier = std::move(next);
    }
    return LabelHierarchy("entity", edges);
}

std::vector<SynthSample> make_dataset(const LabelHierarchy& h, const DatasetParams& params,
                                      std::uint64_t seed) {
    const auto leaves = h.leaves();
    if (leaves.empty()) throw HierarchyError("hierarchy has no leaves");
    auto rng = rng_for(seed, 0xDA7A);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);

    std::vector<SynthSample> out;
    out.reserve(static_cast<std::size_t>(params.n_samples));
    for (int i = 0; i < params.n_samples; ++i) {
        SynthSample s;
        s.sample_id = "synth-" + std::to_string(i);
        s.ground_truth = leaves[pick(rng)];
        const double u = unit(rng);
        if (u < params.p_ceiling_specific) {
            s.capability_ceiling = Category::Specific;
        } else if (u < params.p_ceiling_specific + params.p_ceiling_less_specific) {
            s.capability_ceiling = Category::LessSpecific;
        } else {
            s.capability_ceiling = Category::Generic;
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<std::string> ancestor_chain(const LabelHierarchy& h, const std::string& y) {
    std::vector<std::string> chain;  // parent first, root last
    auto cur = h.parent(y);
    while (cur) {
        chain.push_back(*cur);
        cur = h.parent(*cur);
    }
    return chain;
}

// A wrong leaf that shares the ground truth's parent (its confusable
// neighbor); falls back to any other leaf in degenerate trees.
std::optional<std::string> confusable_leaf(const LabelHierarchy& h, const std::string& y) {
    auto parent = h.parent(y);
    if (parent) {
        for (const auto& c : h.children(*parent))
            if (c != y && h.is_leaf(c)) return c;
    }
    for (const auto& leaf : h.leaves())
        if (leaf != y) return leaf;
    return std::nullopt;
}

}  // namespace

ToyPolicy initial_policy(const std::vector<SynthSample>& dataset, const LabelHierarchy& h,
                         double temperature) {
    ToyPolicy policy;
    policy.temperature = temperature;
    policy.action_labels = h.labels();
    policy.action_labels.push_back(kAbstainToken);
    const std::size_t n_act = policy.action_labels.size();
    const std::size_t abstain = n_act - 1;

    std::unordered_map<std::string, std::size_t> action_index;
    for (std::size_t k = 0; k < n_act; ++k) action_index[policy.action_labels[k]] = k;

    policy.logits.reserve(dataset.size());
    for (const auto& sample : dataset) {
        if (!h.is_leaf(sample.ground_truth))
            throw ContractViolation("synthetic ground truth must be a leaf: " +
                                    sample.ground_truth);
        std::vector<double> p(n_act, 0.0);
        const auto chain = ancestor_chain(h, sample.ground_truth);
        const std::size_t y = action_index.at(normalize_label(sample.ground_truth));
        const std::size_t root = action_index.at(h.root());
        const std::size_t parent =
            chain.empty() ? root : action_index.at(chain.front());
        const std::size_t grand =
            chain.size() >= 2 ? action_index.at(chain[1]) : root;

        switch (sample.capability_ceiling) {
            case Category::Specific:
                p[y] += 0.06;
                p[parent] += 0.22;
                p[grand] += 0.45;
                p[root] += 0.10;
                p[abstain] += 0.02;
                break;
            case Category::LessSpecific:
                p[y] += kCeilingFloorProb;
                p[parent] += 0.25;
                p[grand] += 0.45;
                p[root] += 0.12;
                p[abstain] += 0.03;
                break;
            case Category::Generic: {
                p[y] += kCeilingFloorProb;
                p[parent] += kCeilingFloorProb;
                p[grand] += 0.30;
                p[root] += 0.12;
                p[abstain] += 0.03;
                auto wrong = confusable_leaf(h, sample.ground_truth);
                if (wrong) p[action_index.at(*wrong)] += 0.35;
                break;
            }
            default:
                throw ContractViolation("capability ceiling must be G, S- or S");
        }
        // Spread the remaining mass over the untouched actions.
        double assigned = std::accumulate(p.begin(), p.end(), 0.0);
        std::size_t untouched = 0;
        for (double v : p)
            if (v == 0.0) ++untouched;
        const double rest = (1.0 - assigned) / static_cast<double>(untouched);
        for (double& v : p)
            if (v == 0.0) v = rest;

        std::vector<double> z(n_act);
        for (std::size_t k = 0; k < n_act; ++k) z[k] = std::log(p[k]);
        policy.logits.push_back(std::move(z));
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Rollouts and updates

SampledGroup sample_rollouts(const ToyPolicy& policy, std::size_t sample_index,
                             const SynthSample& sample, const LabelHierarchy& h, int n,
                             std::mt19937_64& rng) {
    if (n < 1) throw ContractViolation("rollout count must be >= 1");
    SampledGroup out;
    out.sample_index = sample_index;
    out.group.sample_id = sample.sample_id;
    out.group.ground_truth = sample.ground_truth;

    const auto p = policy.probs(sample_index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double u = unit(rng);
        double acc = 0.0;
        std::size_t action = p.size() - 1;
        for (std::size_t k = 0; k < p.size(); ++k) {
            acc += p[k];
            if (u < acc) {
                action = k;
                break;
            }
        }
        out.actions.push_back(action);
        out.group.categories.push_back(
            oracle_judge(h, sample.ground_truth, policy.action_labels[action]));
    }
    return out;
}

namespace {

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) kl += p[k] * (std::log(p[k]) - std::log(q[k]));
    return kl;
}

}  // namespace

double policy_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                        const std::vector<SampledGroup>& batch,
                        const std::vector<std::vector<double>>& advantages,
                        double kl_coeff) {
    // Summed over groups, not averaged: each context owns its logits, so a
    // batch-size divisor would only rescale the per-sample step.
    double obj = 0.0;
    for (std::size_t g = 0; g < batch.size(); ++g) {
        const auto& grp = batch[g];
        const auto p = policy.probs(grp.sample_index);
        const double inv_n = 1.0 / static_cast<double>(grp.actions.size());
        for (std::size_t i = 0; i < grp.actions.size(); ++i)
            obj += inv_n * advantages[g][i] * std::log(p[grp.actions[i]]);
        if (kl_coeff > 0.0) {
            const auto q = reference.probs(grp.sample_index);
            obj -= kl_coeff * kl_divergence(p, q);
        }
    }
    return obj;
}

std::vector<std::vector<double>> policy_gradient(
    const ToyPolicy& policy, const ToyPolicy& reference,
    const std::vector<SampledGroup>& batch,
    const std::vector<std::vector<double>>& advantages, double kl_coeff) {
    std::vector<std::vector<double>> grad(policy.logits.size());
    const double invt = 1.0 / policy.temperature;

    for (std::size_t g = 0; g < batch.size(); ++g) {
        const auto& grp = batch[g];
        auto& gslot = grad[grp.sample_index];
        if (gslot.empty()) gslot.assign(policy.n_actions(), 0.0);
        const auto p = policy.probs(grp.sample_index);
        const double inv_n = 1.0 / static_cast<double>(grp.actions.size());

        // d/dz_k of sum_i a_i log pi(act_i) = (1/T) sum_i a_i (1[act_i=k] - pi_k)
        double adv_sum = 0.0;
        for (std::size_t i = 0; i < grp.actions.size(); ++i) {
            gslot[grp.actions[i]] += inv_n * invt * advantages[g][i];
            adv_sum += advantages[g][i];
        }
        for (std::size_t k = 0; k < p.size(); ++k)
            gslot[k] -= inv_n * invt * adv_sum * p[k];

        if (kl_coeff > 0.0) {
            const auto q = reference.probs(grp.sample_index);
            const double kl = kl_divergence(p, q);
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double dkl = invt * p[k] * (std::log(p[k]) - std::log(q[k]) - kl);
                gslot[k] -= kl_coeff * dkl;
            }
        }
    }
    for (std::size_t s = 0; s < grad.size(); ++s)
        if (grad[s].empty()) grad[s].assign(policy.n_actions(), 0.0);
    return grad;
}

StepStats grpo_step(ToyPolicy& policy, const std::vector<SampledGroup>& batch,
                    const TrainConfig& config, const ToyPolicy& reference,
                    std::mt19937_64& noise_rng) {
    if (batch.empty()) throw EmptyGroup("empty batch");
    for (const auto& grp : batch)
        if (grp.actions.size() < 2)
            throw DegenerateGroup("grpo_step needs at least 2 rollouts per group");

    StepStats stats;
    std::size_t n_rollouts = 0;
    std::vector<std::vector<double>> advantages(batch.size());
    for (std::size_t g = 0; g < batch.size(); ++g) {
        RolloutGroup judged = batch[g].group;
        if (config.noise_rho > 0.0) {
            for (auto& c : judged.categories)
                c = perturb_category(c, config.noise_rho, noise_rng);
        }
        const auto rewards = group_rewards(judged, config.scheme);
        advantages[g] = group_advantages(rewards, config.advantage);
        for (std::size_t i = 0; i < rewards.size(); ++i) {
            stats.mean_reward += rewards[i];
            stats.mean_advantage += advantages[g][i];
            ++n_rollouts;
        }
    }
    stats.mean_reward /= static_cast<double>(n_rollouts);
    stats.mean_advantage /= static_cast<double>(n_rollouts);

    for (const auto& grp : batch) {
        const auto p = policy.probs(grp.sample_index);
        const auto q = reference.probs(grp.sample_index);
        stats.kl += kl_divergence(p, q);
    }
    stats.kl /= static_cast<double>(batch.size());

    const auto grad =
        policy_gradient(policy, reference, batch, advantages, config.kl_coeff);
    for (std::size_t s = 0; s < policy.logits.size(); ++s)
        for (std::size_t k = 0; k < policy.logits[s].size(); ++k)
            policy.logits[s][k] += config.learning_rate * grad[s][k];
    return stats;
}

// ---------------------------------------------------------------------------
// Training and evaluation

EvalReport eval_greedy(const ToyPolicy& policy, const std::vector<SynthSample>& dataset,
                       const LabelHierarchy& h, const std::string& name) {
    std::vector<EvalRecord> records;
    records.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const std::size_t action = policy.greedy_action(i);
        EvalRecord rec;
        rec.sample_id = dataset[i].sample_id;
        rec.ground_truth = dataset[i].ground_truth;
        rec.prediction = policy.action_labels[action];
        rec.category = oracle_judge(h, rec.ground_truth, rec.prediction);
        records.push_back(std::move(rec));
    }
    return compose_report(records, name);
}

TrainResult train(const TrainConfig& config, const std::vector<SynthSample>& dataset,
                  const LabelHierarchy& h) {
    config.validate();
    if (dataset.empty()) throw EmptyDataset("training dataset is empty");

    TrainResult result;
    result.policy = initial_policy(dataset, h, config.temperature);
    const ToyPolicy reference = result.policy;
    const std::uint64_t seed = static_cast<std::uint64_t>(config.seed);

    result.trajectory.push_back(eval_greedy(result.policy, dataset, h, "epoch-0"));

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        auto shuffle_rng = rng_for(seed, 0x5f1e, static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        auto noise_rng = rng_for(seed, 0x7015e, static_cast<std::uint64_t>(epoch));

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<SampledGroup> batch;
            batch.reserve(stop - start);
            for (std::size_t j = start; j < stop; ++j) {
                const std::size_t idx = order[j];
                auto rollout_rng =
                    rng_for(seed, 0x4011, static_cast<std::uint64_t>(epoch), idx);
                batch.push_back(sample_rollouts(result.policy, idx, dataset[idx], h,
                                                config.n_rollouts, rollout_rng));
            }
            result.steps.push_back(
                grpo_step(result.policy, batch, config, reference, noise_rng));
        }
        result.trajectory.push_back(
            eval_greedy(result.policy, dataset, h, "epoch-" + std::to_string(epoch)));
    }
    return result;
}

EvalReport bon_eval(const ToyPolicy& policy, const std::vector<SynthSample>& dataset,
                    const LabelHierarchy& h, int n, std::uint64_t seed) {
    if (n < 1) throw ContractViolation("bon_eval needs n >= 1");
    std::vector<EvalRecord> records;
    records.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto rng = rng_for(seed, 0xb07, i);
        const auto sampled = sample_rollouts(policy, i, dataset[i], h, n, rng);
        const Category best = best_category(sampled.group);
        std::size_t best_action = sampled.actions.front();
        for (std::size_t j = 0; j < sampled.group.categories.size(); ++j) {
            if (sampled.group.categories[j] == best) {
                best_action = sampled.actions[j];
                break;
            }
        }
        EvalRecord rec;
        rec.sample_id = dataset[i].sample_id;
        rec.ground_truth = dataset[i].ground_truth;
        rec.prediction = policy.action_labels[best_action];
        rec.category = best;
        records.push_back(std::move(rec));
    }
    return compose_report(records, "bon-" + std::to_string(n));
}

}  // namespace owclass
