#include "owclass/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"

namespace owclass {

using json = nlohmann::json;

namespace {

std::array<std::size_t, 6> count_categories(const std::vector<EvalRecord>& records) {
    std::array<std::size_t, 6> counts{};
    for (const auto& r : records) counts[static_cast<std::size_t>(rank(r.category))]++;
    return counts;
}

// Table 1 column order: S+, S, S-, G, A, W.
constexpr std::array<Category, 6> kTableOrder = {
    Category::MoreSpecific, Category::Specific, Category::LessSpecific,
    Category::Generic,      Category::Abstain,  Category::Wrong,
};

}  // namespace

double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

std::array<double, 6> EvalReport::distribution() const {
    std::array<double, 6> out{};
    if (n == 0) return out;
    for (std::size_t i = 0; i < 6; ++i)
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    return out;
}

json EvalReport::to_json() const {
    json jcounts = json::object();
    for (Category c : kAllCategories)
        jcounts[std::string(category_code(c))] = counts[static_cast<std::size_t>(rank(c))];
    json j{{"v", 1},
           {"dataset", dataset},
           {"n", n},
           {"counts", jcounts},
           {"correctness", round_to(correctness, 3)}};
    if (specificity) {
        j["specificity"] = round_to(*specificity, 3);
        j["hm"] = round_to(*hm, 3);
    } else {
        j["specificity"] = nullptr;
        j["hm"] = nullptr;
        j["reason"] = undefined_reason;
    }
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    for (Category c : kAllCategories) {
        r.counts[static_cast<std::size_t>(rank(c))] =
            j.at("counts").at(std::string(category_code(c))).get<std::size_t>();
    }
    r.correctness = j.at("correctness").get<double>();
    if (!j.at("specificity").is_null()) {
        r.specificity = j.at("specificity").get<double>();
        r.hm = j.at("hm").get<double>();
    } else {
        r.undefined_reason = j.value("reason", std::string{});
    }
    return r;
}

double correctness(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyDataset("no records to evaluate");
    std::size_t wrong = 0;
    for (const auto& r : records)
        if (r.category == Category::Wrong) ++wrong;
    return 1.0 - static_cast<double>(wrong) / static_cast<double>(records.size());
}

double specificity(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyDataset("no records to evaluate");
    double sum = 0.0;
    std::size_t non_wrong = 0;
    for (const auto& r : records) {
        if (r.category == Category::Wrong) continue;
        sum += specificity_score(r.category) / 4.0;
        ++non_wrong;
    }
    if (non_wrong == 0) throw AllWrong("specificity undefined: every record is Wrong");
    return sum / static_cast<double>(non_wrong);
}

double harmonic_mean(double specificity, double correctness) {
    if (specificity < 0.0 || specificity > 1.0 || correctness < 0.0 || correctness > 1.0)
        throw ContractViolation("harmonic mean inputs must lie in [0, 1]");
    if (specificity == 0.0 && correctness == 0.0)
        throw BothZero("harmonic mean undefined at (0, 0)");
    return 2.0 * specificity * correctness / (specificity + correctness);
}

std::array<double, 6> category_distribution(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyDataset("no records to evaluate");
    const auto counts = count_categories(records);
    std::array<double, 6> out{};
    for (std::size_t i = 0; i < 6; ++i)
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(records.size());
    return out;
}

EvalReport report_from_counts(const std::array<std::size_t, 6>& counts,
                              const std::string& dataset_name) {
    EvalReport r;
    r.dataset = dataset_name;
    r.counts = counts;
    for (std::size_t c : counts) r.n += c;
    if (r.n == 0) throw EmptyDataset("no records to evaluate");

    const std::size_t wrong = counts[static_cast<std::size_t>(rank(Category::Wrong))];
    r.correctness = 1.0 - static_cast<double>(wrong) / static_cast<double>(r.n);
    if (wrong == r.n) {
        r.undefined_reason = "specificity undefined: every record is Wrong";
        return r;
    }
    double sum = 0.0;
    for (Category c : kAllCategories) {
        if (c == Category::Wrong) continue;
        sum += counts[static_cast<std::size_t>(rank(c))] * (specificity_score(c) / 4.0);
    }
    // specificity >= 0.25 and correctness > 0 here, so the HM is defined.
    r.specificity = sum / static_cast<double>(r.n - wrong);
    r.hm = harmonic_mean(*r.specificity, r.correctness);
    return r;
}

EvalReport compose_report(const std::vector<EvalRecord>& records,
                          const std::string& dataset_name) {
    if (records.empty()) throw EmptyDataset("no records to evaluate");
    return report_from_counts(count_categories(records), dataset_name);
}

AggregateMetrics aggregate_reports(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw EmptyDataset("no reports to aggregate");
    AggregateMetrics agg;
    double spec_sum = 0.0, hm_sum = 0.0;
    bool all_defined = true;
    for (const auto& r : reports) {
        agg.correctness += r.correctness;
        if (r.specificity) {
            spec_sum += *r.specificity;
            hm_sum += *r.hm;
        } else {
            all_defined = false;
        }
        const auto dist = r.distribution();
        for (std::size_t i = 0; i < 6; ++i) agg.mean_distribution[i] += dist[i];
    }
    const double k = static_cast<double>(reports.size());
    agg.correctness /= k;
    for (auto& d : agg.mean_distribution) d /= k;
    if (all_defined) {
        agg.specificity = spec_sum / k;
        agg.hm = hm_sum / k;
    }
    return agg;
}

std::string render_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    char buf[64];

    std::size_t name_width = 7;  // "dataset"
    for (const auto& r : reports) name_width = std::max(name_width, r.dataset.size());

    out << std::string(name_width, ' ');
    for (Category c : kTableOrder) {
        std::snprintf(buf, sizeof(buf), "  %6s", std::string(category_code(c)).c_str());
        out << buf;
    }
    out << " |   spec   corr     HM\n";

    for (const auto& r : reports) {
        out << r.dataset << std::string(name_width - r.dataset.size(), ' ');
        const auto dist = r.distribution();
        for (Category c : kTableOrder) {
            std::snprintf(buf, sizeof(buf), "  %5.1f%%",
                          100.0 * dist[static_cast<std::size_t>(rank(c))]);
            out << buf;
        }
        auto cell = [&](const std::optional<double>& v) {
            if (v) {
                std::snprintf(buf, sizeof(buf), "  %.3f", *v);
            } else {
                std::snprintf(buf, sizeof(buf), "  %5s", "n/a");
            }
            out << buf;
        };
        out << " |";
        cell(r.specificity);
        cell(r.correctness);
        cell(r.hm);
        out << "\n";
    }
    return out.str();
}

}  // namespace owclass
