#include "owclass/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"

namespace owclass {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

constexpr const char* kOpenTag = "<answer>";
constexpr const char* kCloseTag = "</answer>";

}  // namespace

std::string extract_answer(const std::string& raw_output) {
    const std::size_t close = raw_output.rfind(kCloseTag);
    if (close == std::string::npos) return kFormatViolation;
    const std::size_t open = raw_output.rfind(kOpenTag, close);
    if (open == std::string::npos) return kFormatViolation;
    const std::size_t begin = open + std::char_traits<char>::length(kOpenTag);
    std::string content = trim(raw_output.substr(begin, close - begin));
    if (is_abstain(content)) return kAbstainToken;
    return content;
}

std::string_view judgment_source_name(JudgmentSource s) {
    switch (s) {
        case JudgmentSource::Oracle: return "oracle";
        case JudgmentSource::Remote: return "remote";
        case JudgmentSource::Cache: return "cache";
    }
    return "oracle";
}

// ---------------------------------------------------------------------------
// Cache

JudgeCache::JudgeCache(const std::string& path) : path_(path) {
    std::ifstream in(path_);
    if (!in) return;  // fresh file; created on first insert
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            auto cat = parse_category(j.at("category").get<std::string>());
            if (!cat) continue;  // never store anything outside the six values
            JudgePair pair{j.at("prediction").get<std::string>(),
                           j.at("ground_truth").get<std::string>()};
            entries_[key_of(pair)] = *cat;  // last write wins
        } catch (const json::exception&) {
            // tolerate partial trailing writes
        }
    }
}

std::string JudgeCache::key_of(const JudgePair& pair) {
    return normalize_label(pair.prediction) + '\x1f' + normalize_label(pair.ground_truth);
}

std::optional<Category> JudgeCache::lookup(const JudgePair& pair) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key_of(pair));
    if (it == entries_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

std::optional<Category> JudgeCache::peek(const JudgePair& pair) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key_of(pair));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void JudgeCache::insert(const JudgePair& pair, Category category) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key_of(pair)] = category;
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        json j{{"prediction", normalize_label(pair.prediction)},
               {"ground_truth", normalize_label(pair.ground_truth)},
               {"category", std::string(category_name(category))}};
        out << j.dump() << '\n';
    }
}

std::size_t JudgeCache::entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

std::size_t JudgeCache::hits() const {
    std::lock_guard<std::mutex> lock(mu_);
    return hits_;
}

std::size_t JudgeCache::misses() const {
    std::lock_guard<std::mutex> lock(mu_);
    return misses_;
}

double JudgeCache::hit_rate() const {
    std::lock_guard<std::mutex> lock(mu_);
    const std::size_t total = hits_ + misses_;
    return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
}

nlohmann::json JudgeCache::stats_json() const {
    std::lock_guard<std::mutex> lock(mu_);
    const std::size_t total = hits_ + misses_;
    return json{{"hits", hits_},
                {"misses", misses_},
                {"entries", entries_.size()},
                {"hit_rate", total == 0 ? 0.0
                                        : static_cast<double>(hits_) /
                                              static_cast<double>(total)}};
}

void JudgeCache::count_hit() {
    std::lock_guard<std::mutex> lock(mu_);
    ++hits_;
}

void JudgeCache::count_miss() {
    std::lock_guard<std::mutex> lock(mu_);
    ++misses_;
}

// ---------------------------------------------------------------------------
// Backends

Category OracleBackend::categorize(const JudgePair& pair) {
    return oracle_judge(hierarchy_, pair.ground_truth, pair.prediction,
                        close_parent_depth_);
}

RemoteSettings RemoteSettings::from_env() {
    RemoteSettings s;
    if (const char* v = std::getenv("JUDGE_ENDPOINT")) s.endpoint = v;
    if (const char* v = std::getenv("JUDGE_MODEL")) s.model = v;
    if (const char* v = std::getenv("JUDGE_API_KEY")) s.api_key = v;
    return s;
}

const std::string& judge_prompt_template() {
    static const std::string prompt = R"(Role: You are an expert AI classifier. Your goal is to classify a model's `prediction` against a `ground_truth` label.

Task: You will receive a single JSON object. Your output must be only the classification category and nothing else.

---

Classification Categories

- Specific: The prediction is an exact match or a direct synonym for the ground truth. This includes common name/scientific name equivalence.
    prediction: "Panthera leo"      ground_truth: "lion"
    prediction: "passiflora"        ground_truth: "passion flower"

- Less Specific: The prediction is a correct, but closely related parent category (e.g., family, genus, product line) of the ground truth.
    prediction: "Warbler"           ground_truth: "Golden-winged Warbler"
    prediction: "Boeing 707"        ground_truth: "707-320"

- Generic: The prediction is correct, but a significantly broader category than the ground truth.
    prediction: "dog"               ground_truth: "samoyed"
    prediction: "Commercial Airline" ground_truth: "757-200"

- More Specific: The prediction is a correct, but more specific subtype or instance of the ground truth.
    prediction: "samoyed"           ground_truth: "dog"
    prediction: "757-200"           ground_truth: "Commercial Airline"

- Wrong: The prediction is factually incorrect, contradictory, malformed, completely unrelated to the ground truth, or contains multiple options.
    prediction: "cat"               ground_truth: "dog"
    prediction: "Blue-winged Warbler" ground_truth: "Golden-winged Warbler"
    prediction: "b1rd"              ground_truth: "bird"
    prediction: "robin or cardinal" ground_truth: "bird"
    prediction: "_prototype"        ground_truth: "Boeing 717"

- Abstain: The prediction is a refusal to answer.
    prediction: "none"
    prediction: "I don't know"
    prediction: "Cannot tell"

Input Format:
You will receive a single JSON object with the following structure:
{"ground_truth": "<the_ground_truth_label>", "prediction": "<the_vlm_prediction>"}

Output Format:
Your response must be a single word representing the classification category.

Prompt:
Classify the prediction in the following JSON object based on the rules provided. Your output must be a single word.

INPUT:
)";
    return prompt;
}

nlohmann::json build_remote_request(const JudgePair& pair, const std::string& model) {
    json input{{"ground_truth", pair.ground_truth}, {"prediction", pair.prediction}};
    json choices = json::array();
    for (Category c : kAllCategories) choices.push_back(std::string(category_name(c)));
    return json{{"model", model},
                {"messages", json::array({json{
                                 {"role", "user"},
                                 {"content", judge_prompt_template() + input.dump()}}})},
                {"guided_choice", choices},
                {"temperature", 0}};
}

JudgePair parse_pair_from_request(const nlohmann::json& request) {
    const std::string content =
        request.at("messages").at(0).at("content").get<std::string>();
    const std::size_t brace = content.rfind('{');
    if (brace == std::string::npos)
        throw InvalidJudgeOutput("request content has no input object");
    json input = json::parse(content.substr(brace));
    return JudgePair{input.at("prediction").get<std::string>(),
                     input.at("ground_truth").get<std::string>()};
}

Category parse_judge_category(const std::string& content) {
    auto cat = parse_category(trim(content));
    if (!cat)
        throw InvalidJudgeOutput("judge returned a word outside the category set: '" +
                                 trim(content) + "'");
    return *cat;
}

RemoteBackend::RemoteBackend(RemoteSettings settings) : settings_(std::move(settings)) {
    if (settings_.endpoint.empty())
        throw ConfigError("remote judge endpoint is not configured");
    const std::string& url = settings_.endpoint;
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must be an http(s) URL: " + url);
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_ = url;
        path_ = "/v1/chat/completions";
    } else {
        scheme_host_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
}

Category RemoteBackend::categorize(const JudgePair& pair) {
    const json request = build_remote_request(pair, settings_.model);
    const std::string body = request.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
        if (attempt > 0) {
            const int backoff = settings_.initial_backoff_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }
        httplib::Client client(scheme_host_);
        client.set_connection_timeout(settings_.timeout_sec, 0);
        client.set_read_timeout(settings_.timeout_sec, 0);
        httplib::Headers headers;
        if (!settings_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + settings_.api_key);

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw RemoteUnavailable("judge endpoint rejected the request with status " +
                                    std::to_string(res->status));
        }
        try {
            json reply = json::parse(res->body);
            const std::string content =
                reply.at("choices").at(0).at("message").at("content").get<std::string>();
            return parse_judge_category(content);
        } catch (const json::exception& e) {
            throw InvalidJudgeOutput("unparseable judge response: " +
                                     std::string(e.what()));
        }
    }
    throw RemoteUnavailable("judge endpoint unreachable after " +
                            std::to_string(settings_.max_retries + 1) +
                            " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Judging

namespace {

JudgePair coerced(const JudgePair& pair) {
    JudgePair out = pair;
    if (normalize_label(out.prediction).empty()) out.prediction = kAbstainToken;
    return out;
}

}  // namespace

Judgment judge(const JudgePair& raw_pair, JudgeBackend& backend, JudgeCache& cache) {
    const auto start = std::chrono::steady_clock::now();
    const JudgePair pair = coerced(raw_pair);

    if (is_format_violation(pair.prediction)) {
        // P_j's malformed rule; no backend involved.
        return Judgment{pair, Category::Wrong, JudgmentSource::Oracle, elapsed_ms(start)};
    }
    if (auto hit = cache.lookup(pair)) {
        return Judgment{pair, *hit, JudgmentSource::Cache, elapsed_ms(start)};
    }
    const Category category = backend.categorize(pair);
    cache.insert(pair, category);
    return Judgment{pair, category, backend.kind(), elapsed_ms(start)};
}

std::vector<JudgeResult> judge_batch(const std::vector<JudgePair>& raw_pairs,
                                     JudgeBackend& backend, JudgeCache& cache,
                                     int max_in_flight) {
    if (max_in_flight < 1) throw ContractViolation("max_in_flight must be >= 1");

    std::vector<JudgeResult> results(raw_pairs.size());
    if (raw_pairs.empty()) return results;

    std::vector<JudgePair> pairs;
    pairs.reserve(raw_pairs.size());
    for (const auto& p : raw_pairs) pairs.push_back(coerced(p));

    // Plan: first in-batch occurrence of a key absent from the cache calls
    // the backend; every other occurrence resolves from the cache.
    struct Call {
        std::string key;
        JudgePair pair;
        std::optional<Category> category;
        std::string error;
    };
    std::vector<Call> calls;
    std::unordered_map<std::string, std::size_t> call_index;
    enum class Kind { Violation, CacheHit, First, Duplicate };
    std::vector<Kind> kinds(pairs.size());
    std::vector<std::size_t> call_of(pairs.size(), 0);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (is_format_violation(pairs[i].prediction)) {
            kinds[i] = Kind::Violation;
            continue;
        }
        const std::string key = JudgeCache::key_of(pairs[i]);
        if (cache.peek(pairs[i])) {
            kinds[i] = Kind::CacheHit;
            continue;
        }
        auto it = call_index.find(key);
        if (it == call_index.end()) {
            call_index.emplace(key, calls.size());
            call_of[i] = calls.size();
            calls.push_back(Call{key, pairs[i], std::nullopt, {}});
            kinds[i] = Kind::First;
        } else {
            call_of[i] = it->second;
            kinds[i] = Kind::Duplicate;
        }
    }

    // Run the distinct backend calls with bounded concurrency.
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= calls.size()) break;
            try {
                calls[idx].category = backend.categorize(calls[idx].pair);
            } catch (const std::exception& e) {
                calls[idx].error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), calls.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    // Assemble in input order, replaying counters as sequential judging would:
    // one lookup per pair; a duplicate of a successful first call is a hit.
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        switch (kinds[i]) {
            case Kind::Violation:
                results[i].judgment =
                    Judgment{pairs[i], Category::Wrong, JudgmentSource::Oracle, 0.0};
                break;
            case Kind::CacheHit:
                results[i].judgment = Judgment{pairs[i], *cache.lookup(pairs[i]),
                                               JudgmentSource::Cache, 0.0};
                break;
            case Kind::First: {
                Call& call = calls[call_of[i]];
                cache.count_miss();
                if (call.category) {
                    cache.insert(pairs[i], *call.category);
                    results[i].judgment =
                        Judgment{pairs[i], *call.category, backend.kind(), 0.0};
                } else {
                    results[i].error = call.error;
                }
                break;
            }
            case Kind::Duplicate: {
                const Call& call = calls[call_of[i]];
                if (call.category) {
                    cache.count_hit();
                    results[i].judgment =
                        Judgment{pairs[i], *call.category, JudgmentSource::Cache, 0.0};
                } else {
                    // Nothing was inserted, so this lookup would also miss.
                    cache.count_miss();
                    results[i].error = call.error;
                }
                break;
            }
        }
    }
    return results;
}

}  // namespace owclass
