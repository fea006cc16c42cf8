#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "owclass/category.hpp"
#include "owclass/hierarchy.hpp"

namespace owclass {

/// Sentinel returned by extract_answer when the raw output has no well-formed
/// answer tags. Judged Wrong without consulting any backend.
inline constexpr const char* kFormatViolation = "__FORMAT_VIOLATION__";

inline bool is_format_violation(std::string_view s) { return s == kFormatViolation; }

/// Pulls the final prediction out of a raw think/answer-format model output.
/// Returns the content of the last well-formed <answer>...</answer> span,
/// trimmed; "None" (any case) maps to the abstain token; missing or malformed
/// tags yield kFormatViolation. Total: never throws.
std::string extract_answer(const std::string& raw_output);

struct JudgePair {
    std::string prediction;
    std::string ground_truth;

    bool operator==(const JudgePair&) const = default;
};

enum class JudgmentSource { Oracle, Remote, Cache };

std::string_view judgment_source_name(JudgmentSource s);

struct Judgment {
    JudgePair pair;
    Category category = Category::Wrong;
    JudgmentSource source = JudgmentSource::Oracle;
    double latency_ms = 0.0;
};

/// Persistent (prediction, ground_truth) -> Category map with hit/miss
/// accounting. Keys are normalized like taxonomy labels, so "Dog" and "dog"
/// share an entry. Persistence is append-only JSON lines; on load the last
/// write wins. Lookups and inserts are safe from multiple threads.
class JudgeCache {
  public:
    JudgeCache() = default;

    /// Loads existing entries from `path` (if present) and appends every
    /// subsequent insert to it.
    explicit JudgeCache(const std::string& path);

    static std::string key_of(const JudgePair& pair);

    /// Counted lookup: increments hits or misses.
    std::optional<Category> lookup(const JudgePair& pair);
    /// Uncounted peek, for batch planning.
    std::optional<Category> peek(const JudgePair& pair) const;

    void insert(const JudgePair& pair, Category category);

    std::size_t entries() const;
    std::size_t hits() const;
    std::size_t misses() const;
    double hit_rate() const;  // 0 when no lookups happened
    nlohmann::json stats_json() const;

    void count_hit();
    void count_miss();

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, Category> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
    std::string path_;  // empty: in-memory only
};

/// Categorization backend interface. Implementations must be safe to call
/// from multiple threads.
class JudgeBackend {
  public:
    virtual ~JudgeBackend() = default;
    virtual Category categorize(const JudgePair& pair) = 0;
    virtual JudgmentSource kind() const = 0;
};

/// Deterministic backend over a label hierarchy.
class OracleBackend : public JudgeBackend {
  public:
    explicit OracleBackend(const LabelHierarchy& hierarchy, int close_parent_depth = 1)
        : hierarchy_(hierarchy), close_parent_depth_(close_parent_depth) {}

    Category categorize(const JudgePair& pair) override;
    JudgmentSource kind() const override { return JudgmentSource::Oracle; }

  private:
    const LabelHierarchy& hierarchy_;
    int close_parent_depth_;
};

struct RemoteSettings {
    std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
    std::string model;
    std::string api_key;       // optional; sent as a bearer token when set
    int timeout_sec = 30;
    int max_retries = 3;
    int initial_backoff_ms = 250;

    /// Reads JUDGE_ENDPOINT, JUDGE_MODEL, JUDGE_API_KEY.
    static RemoteSettings from_env();
};

/// The categorization instructions sent to the remote judge. Verbatim
/// template; the input JSON object is appended after it.
const std::string& judge_prompt_template();

/// Chat-completions style request:
///   {model, messages:[{role, content}], guided_choice:[6 words], temperature: 0}
/// The pair is serialized as {"ground_truth": ..., "prediction": ...} at the
/// end of the message content, and guided_choice restricts generation to the
/// six category words.
nlohmann::json build_remote_request(const JudgePair& pair, const std::string& model);

/// Recovers the pair from a request payload (inverse of build_remote_request).
JudgePair parse_pair_from_request(const nlohmann::json& request);

/// Maps a constrained completion back to a category; throws InvalidJudgeOutput
/// for anything outside the six category words.
Category parse_judge_category(const std::string& content);

/// One HTTP POST per pair with retries and exponential backoff. Throws
/// RemoteUnavailable when the endpoint cannot be reached (after retries) and
/// InvalidJudgeOutput when a 2xx response carries an out-of-set word.
class RemoteBackend : public JudgeBackend {
  public:
    explicit RemoteBackend(RemoteSettings settings);

    Category categorize(const JudgePair& pair) override;
    JudgmentSource kind() const override { return JudgmentSource::Remote; }

    const RemoteSettings& settings() const { return settings_; }

  private:
    RemoteSettings settings_;
    std::string scheme_host_;  // scheme://host[:port]
    std::string path_;
};

/// Judges one pair. Empty predictions are coerced to the abstain token first;
/// format-violation markers are categorized Wrong without touching the
/// backend. The cache is consulted before the backend and filled on miss.
Judgment judge(const JudgePair& pair, JudgeBackend& backend, JudgeCache& cache);

struct JudgeResult {
    std::optional<Judgment> judgment;
    std::string error;  // non-empty when the slot failed

    bool ok() const { return judgment.has_value(); }
};

/// Batched judging. Output order matches input order; duplicate pairs within
/// the batch trigger at most one backend call; up to max_in_flight backend
/// calls run concurrently. Per-pair failures are reported in their slot
/// without aborting the rest. Counters see one lookup per input pair, so a
/// duplicate of an earlier in-batch pair counts as a hit.
std::vector<JudgeResult> judge_batch(const std::vector<JudgePair>& pairs,
                                     JudgeBackend& backend, JudgeCache& cache,
                                     int max_in_flight = 8);

}  // namespace owclass
