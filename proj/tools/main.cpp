// owclass CLI: judge prediction files, compute evaluation reports, compute
// rewards for recorded rollout groups, run the training simulator, and
// inspect the judge cache.
//
// Exit codes: 0 success, 1 fatal, 2 partial failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"
#include "owclass/judge.hpp"
#include "owclass/manifest.hpp"
#include "owclass/metrics.hpp"
#include "owclass/reward.hpp"
#include "owclass/simulator.hpp"

using json = nlohmann::json;
using namespace owclass;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

void write_manifest(const std::string& command, const std::string& config_bytes,
                    long long seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::string& started_at, const std::string& manifest_path) {
    RunManifest m;
    m.command = command;
    m.config_hash = stable_hash_hex(config_bytes);
    m.seed = seed;
    m.started_at = started_at;
    m.finished_at = iso8601_utc_now();
    m.inputs = inputs;
    m.outputs = outputs;

    std::string path = manifest_path;
    if (path.empty())
        path = outputs.empty() ? "owclass-manifest.json" : outputs.front() + ".manifest.json";
    m.write(path);
}

// ---------------------------------------------------------------------------

struct JudgeArgs {
    std::string input, output, backend = "oracle", hierarchy, cache, manifest;
    std::string endpoint, model;
    int close_parent_depth = 1;
    int max_in_flight = 8;
    bool extract = false;
};

int run_judge(const JudgeArgs& args) {
    const std::string started = iso8601_utc_now();

    std::unique_ptr<LabelHierarchy> hierarchy;
    std::unique_ptr<JudgeBackend> backend;
    if (args.backend == "oracle") {
        if (args.hierarchy.empty()) {
            std::cerr << "oracle backend needs --hierarchy\n";
            return kExitFatal;
        }
        hierarchy = std::make_unique<LabelHierarchy>(LabelHierarchy::load(args.hierarchy));
        backend = std::make_unique<OracleBackend>(*hierarchy, args.close_parent_depth);
    } else if (args.backend == "remote") {
        RemoteSettings settings = RemoteSettings::from_env();
        if (!args.endpoint.empty()) settings.endpoint = args.endpoint;
        if (!args.model.empty()) settings.model = args.model;
        backend = std::make_unique<RemoteBackend>(settings);
    } else {
        std::cerr << "unknown backend: " << args.backend << "\n";
        return kExitFatal;
    }

    const auto lines = read_lines(args.input);
    JudgeCache cache = args.cache.empty() ? JudgeCache() : JudgeCache(args.cache);

    struct Slot {
        json record;
        std::string parse_error;
        std::ptrdiff_t pair_index = -1;  // into `pairs`
    };
    std::vector<Slot> slots;
    std::vector<JudgePair> pairs;
    for (const auto& line : lines) {
        if (is_blank(line)) continue;
        Slot slot;
        try {
            slot.record = json::parse(line);
            JudgePair pair;
            pair.ground_truth = slot.record.at("ground_truth").get<std::string>();
            if (args.extract && slot.record.contains("raw_output")) {
                pair.prediction =
                    extract_answer(slot.record.at("raw_output").get<std::string>());
            } else {
                pair.prediction = slot.record.at("prediction").get<std::string>();
                if (args.extract) pair.prediction = extract_answer(pair.prediction);
            }
            slot.pair_index = static_cast<std::ptrdiff_t>(pairs.size());
            pairs.push_back(std::move(pair));
        } catch (const json::exception& e) {
            slot.parse_error = e.what();
        }
        slots.push_back(std::move(slot));
    }

    const auto results = judge_batch(pairs, *backend, cache, args.max_in_flight);

    std::ofstream out(args.output);
    if (!out) {
        std::cerr << "cannot write output file: " << args.output << "\n";
        return kExitFatal;
    }
    std::size_t ok = 0, failed = 0, backend_failed = 0;
    for (auto& slot : slots) {
        json rec = slot.record.is_object() ? slot.record : json::object();
        rec["v"] = 1;
        if (!slot.parse_error.empty()) {
            rec["error"] = slot.parse_error;
            ++failed;
        } else {
            const auto& res = results[static_cast<std::size_t>(slot.pair_index)];
            if (res.ok()) {
                rec["prediction"] = res.judgment->pair.prediction;
                rec["category"] = std::string(category_name(res.judgment->category));
                rec["source"] =
                    std::string(judgment_source_name(res.judgment->source));
                ++ok;
            } else {
                rec["error"] = res.error;
                ++failed;
                ++backend_failed;
            }
        }
        out << rec.dump() << "\n";
    }

    std::cout << cache.stats_json().dump() << "\n";
    json cfg{{"backend", args.backend},         {"hierarchy", args.hierarchy},
             {"cache", args.cache},             {"close_parent_depth", args.close_parent_depth},
             {"max_in_flight", args.max_in_flight}, {"extract", args.extract}};
    write_manifest("judge", cfg.dump(), 0, {args.input}, {args.output}, started,
                   args.manifest);

    if (ok == 0 && backend_failed > 0) return kExitFatal;
    return failed == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------

int run_eval(const std::string& input, const std::string& dataset,
             const std::string& output, const std::string& manifest) {
    const std::string started = iso8601_utc_now();
    const auto lines = read_lines(input);

    std::vector<EvalRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i])) continue;
        json rec;
        try {
            rec = json::parse(lines[i]);
        } catch (const json::exception& e) {
            std::cerr << "line " << i + 1 << ": invalid json: " << e.what() << "\n";
            return kExitFatal;
        }
        if (!rec.contains("category")) {
            std::cerr << "line " << i + 1
                      << ": record has no category; run `owclass judge` first\n";
            return kExitFatal;
        }
        auto cat = parse_category(rec.at("category").get<std::string>());
        if (!cat) {
            std::cerr << "line " << i + 1 << ": unknown category '"
                      << rec.at("category").get<std::string>() << "'\n";
            return kExitFatal;
        }
        EvalRecord r;
        r.sample_id = rec.value("sample_id", std::string{});
        r.ground_truth = rec.value("ground_truth", std::string{});
        r.prediction = rec.value("prediction", std::string{});
        r.category = *cat;
        records.push_back(std::move(r));
    }
    if (records.empty()) {
        std::cerr << "empty dataset: no judged records in " << input << "\n";
        return kExitFatal;
    }

    const EvalReport report = compose_report(records, dataset);
    std::cout << render_table({report});

    std::vector<std::string> outputs;
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) {
            std::cerr << "cannot write report: " << output << "\n";
            return kExitFatal;
        }
        out << report.to_json().dump(2) << "\n";
        outputs.push_back(output);
    }
    json cfg{{"dataset", dataset}};
    write_manifest("eval", cfg.dump(), 0, {input}, outputs, started, manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run_reward(const std::string& input, const std::string& config_path,
               const std::string& output, const std::string& manifest) {
    const std::string started = iso8601_utc_now();

    RewardScheme scheme = RewardScheme::dynamic_bon();
    AdvantageMode advantage;
    std::string config_bytes = "{}";
    if (!config_path.empty()) {
        config_bytes = read_file(config_path);
        json cfg = json::parse(config_bytes);
        scheme = RewardScheme::from_json(cfg);
        if (cfg.contains("advantage")) advantage = AdvantageMode::from_json(cfg.at("advantage"));
    }

    const auto lines = read_lines(input);
    std::ofstream out(output);
    if (!out) {
        std::cerr << "cannot write output file: " << output << "\n";
        return kExitFatal;
    }

    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i])) continue;
        RolloutGroup group;
        try {
            json rec = json::parse(lines[i]);
            group.sample_id = rec.value("sample_id", std::string{});
            group.ground_truth = rec.value("ground_truth", std::string{});
            for (const auto& c : rec.at("categories")) {
                auto cat = parse_category(c.get<std::string>());
                if (!cat) throw ConfigError("unknown category '" + c.get<std::string>() + "'");
                group.categories.push_back(*cat);
            }
            if (group.categories.empty()) throw ConfigError("empty categories array");
        } catch (const std::exception& e) {
            std::cerr << "line " << i + 1 << ": " << e.what() << "\n";
            return kExitFatal;
        }

        const Category c_best = best_category(group);
        const Category c_star = reference_category(c_best);
        const auto rewards = group_rewards(group, scheme);
        const auto advantages = group_advantages(rewards, advantage);
        json rec{{"v", 1},
                 {"sample_id", group.sample_id},
                 {"c_best", std::string(category_name(c_best))},
                 {"c_star", std::string(category_name(c_star))},
                 {"rewards", rewards},
                 {"advantages", advantages}};
        out << rec.dump() << "\n";
    }

    write_manifest("reward", config_bytes, 0, {input}, {output}, started, manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_path, output, hierarchy, manifest;
    std::optional<long long> seed;
    bool compare = false;
};

json final_metrics_json(const EvalReport& r) {
    json j{{"correctness", round_to(r.correctness, 3)}};
    j["specificity"] = r.specificity ? json(round_to(*r.specificity, 3)) : json(nullptr);
    j["hm"] = r.hm ? json(round_to(*r.hm, 3)) : json(nullptr);
    return j;
}

int run_train(const TrainArgs& args) {
    const std::string started = iso8601_utc_now();

    TrainConfig config;
    DatasetParams dataset_params;
    std::string config_bytes;
    if (!args.config_path.empty()) {
        config_bytes = read_file(args.config_path);
        json cfg;
        try {
            cfg = json::parse(config_bytes);
            config = TrainConfig::from_json(cfg);
            if (cfg.contains("dataset"))
                dataset_params = DatasetParams::from_json(cfg.at("dataset"));
        } catch (const json::exception& e) {
            std::cerr << "invalid config: " << e.what() << "\n";
            return kExitFatal;
        }
    }
    if (args.seed) config.seed = *args.seed;  // flags override config values
    if (config_bytes.empty()) config_bytes = config.to_json().dump();

    const LabelHierarchy hierarchy =
        args.hierarchy.empty() ? make_default_hierarchy() : LabelHierarchy::load(args.hierarchy);
    const auto dataset = make_dataset(hierarchy, dataset_params,
                                      static_cast<std::uint64_t>(config.seed));

    auto write_trajectory = [](const std::string& path, const TrainResult& result) {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write trajectory: " + path);
        for (const auto& report : result.trajectory) out << report.to_json().dump() << "\n";
    };

    std::vector<std::string> outputs;
    if (!args.compare) {
        const TrainResult result = train(config, dataset, hierarchy);
        write_trajectory(args.output, result);
        outputs.push_back(args.output);
        std::cout << "final: " << final_metrics_json(result.trajectory.back()).dump()
                  << "\n";
    } else {
        const std::string stem = args.output.size() > 6 &&
                                         args.output.substr(args.output.size() - 6) == ".jsonl"
                                     ? args.output.substr(0, args.output.size() - 6)
                                     : args.output;
        json summary{{"v", 1}, {"seed", config.seed}, {"schemes", json::object()}};
        for (const auto& [name, scheme] :
             std::vector<std::pair<std::string, RewardScheme>>{
                 {"dynamic_bon", RewardScheme::dynamic_bon()},
                 {"static_binary", RewardScheme::static_binary()},
                 {"static_graded", RewardScheme::static_graded()}}) {
            TrainConfig cfg = config;
            cfg.scheme = scheme;
            const TrainResult result = train(cfg, dataset, hierarchy);
            const std::string traj_path = stem + "." + name + ".jsonl";
            write_trajectory(traj_path, result);
            outputs.push_back(traj_path);
            summary["schemes"][name] = json{
                {"initial", final_metrics_json(result.trajectory.front())},
                {"final", final_metrics_json(result.trajectory.back())},
                {"trajectory", traj_path}};
        }
        std::ofstream out(args.output);
        if (!out) {
            std::cerr << "cannot write summary: " << args.output << "\n";
            return kExitFatal;
        }
        out << summary.dump(2) << "\n";
        outputs.insert(outputs.begin(), args.output);
        std::cout << summary.dump(2) << "\n";
    }

    write_manifest("train", config_bytes, config.seed, {}, outputs, started, args.manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run_cache_stats(const std::string& cache_path) {
    JudgeCache cache(cache_path);
    std::cout << cache.stats_json().dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-world classification judging, metrics, rewards and a "
                 "group-relative policy-optimization simulator"};
    app.require_subcommand(1);

    JudgeArgs judge_args;
    auto* judge_cmd = app.add_subcommand("judge", "Categorize (prediction, ground_truth) records");
    judge_cmd->add_option("--input", judge_args.input, "Input JSONL")->required();
    judge_cmd->add_option("--output", judge_args.output, "Judged JSONL")->required();
    judge_cmd->add_option("--backend", judge_args.backend, "oracle or remote");
    judge_cmd->add_option("--hierarchy", judge_args.hierarchy, "Hierarchy JSON (oracle)");
    judge_cmd->add_option("--cache", judge_args.cache, "Persistent judge cache file");
    judge_cmd->add_option("--close-parent-depth", judge_args.close_parent_depth,
                          "Ancestor distance still judged Less Specific");
    judge_cmd->add_option("--max-in-flight", judge_args.max_in_flight,
                          "Max concurrent backend calls");
    judge_cmd->add_option("--endpoint", judge_args.endpoint,
                          "Remote endpoint (overrides JUDGE_ENDPOINT)");
    judge_cmd->add_option("--model", judge_args.model,
                          "Remote model (overrides JUDGE_MODEL)");
    judge_cmd->add_flag("--extract", judge_args.extract,
                        "Extract the final answer from think/answer output first");
    judge_cmd->add_option("--manifest", judge_args.manifest, "Manifest path");

    std::string eval_input, eval_dataset = "dataset", eval_output, eval_manifest;
    auto* eval_cmd = app.add_subcommand("eval", "Compute correctness/specificity/HM report");
    eval_cmd->add_option("--input", eval_input, "Judged JSONL")->required();
    eval_cmd->add_option("--dataset", eval_dataset, "Dataset name for the report");
    eval_cmd->add_option("--output", eval_output, "Report JSON path");
    eval_cmd->add_option("--manifest", eval_manifest, "Manifest path");

    std::string reward_input, reward_config, reward_output, reward_manifest;
    auto* reward_cmd = app.add_subcommand("reward", "Compute rewards for judged rollout groups");
    reward_cmd->add_option("--input", reward_input, "Rollout-group JSONL")->required();
    reward_cmd->add_option("--config", reward_config, "Reward scheme JSON");
    reward_cmd->add_option("--output", reward_output, "Rewards JSONL")->required();
    reward_cmd->add_option("--manifest", reward_manifest, "Manifest path");

    TrainArgs train_args;
    long long train_seed = 0;
    auto* train_cmd = app.add_subcommand("train", "Run the policy-optimization simulator");
    train_cmd->add_option("--config", train_args.config_path, "Train config JSON");
    train_cmd->add_option("--output", train_args.output, "Trajectory JSONL (or summary with --compare)")
        ->required();
    train_cmd->add_option("--hierarchy", train_args.hierarchy, "Hierarchy JSON (default: built-in)");
    auto* seed_opt = train_cmd->add_option("--seed", train_seed, "Seed override");
    train_cmd->add_flag("--compare", train_args.compare,
                        "Run dynamic vs static-binary vs graded on one seed");
    train_cmd->add_option("--manifest", train_args.manifest, "Manifest path");

    std::string stats_cache;
    auto* stats_cmd = app.add_subcommand("cache-stats", "Inspect a persisted judge cache");
    stats_cmd->add_option("--cache", stats_cache, "Cache file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitFatal;
    }

    try {
        if (judge_cmd->parsed()) return run_judge(judge_args);
        if (eval_cmd->parsed())
            return run_eval(eval_input, eval_dataset, eval_output, eval_manifest);
        if (reward_cmd->parsed())
            return run_reward(reward_input, reward_config, reward_output, reward_manifest);
        if (train_cmd->parsed()) {
            if (seed_opt->count() > 0) train_args.seed = train_seed;
            return run_train(train_args);
        }
        if (stats_cmd->parsed()) return run_cache_stats(stats_cache);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
