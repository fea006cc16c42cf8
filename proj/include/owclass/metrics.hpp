#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "owclass/category.hpp"

namespace owclass {

struct EvalRecord {
    std::string sample_id;
    std::string ground_truth;
    std::string prediction;
    Category category = Category::Wrong;
};

/// Per-dataset evaluation summary. Specificity is undefined over an all-Wrong
/// set (Eq-style denominator vanishes); it is reported as unset rather than 0
/// so aggregates cannot silently absorb it, and HM is then unset too.
struct EvalReport {
    std::string dataset;
    std::size_t n = 0;
    std::array<std::size_t, 6> counts{};  // indexed by rank
    double correctness = 0.0;
    std::optional<double> specificity;
    std::optional<double> hm;
    std::string undefined_reason;  // set when specificity/hm are unset

    std::array<double, 6> distribution() const;

    /// Metric fields carry full precision in memory; serialization rounds the
    /// metric values to 3 decimals and writes unset metrics as null plus a
    /// reason field.
    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

/// Fraction of non-Wrong predictions: 1 - n_W / n. Throws EmptyDataset.
double correctness(const std::vector<EvalRecord>& records);

/// Mean of specificity_score(c)/4 over the non-Wrong records.
/// Throws EmptyDataset when empty and AllWrong when no record survives.
double specificity(const std::vector<EvalRecord>& records);

/// 2sc/(s+c). Inputs must lie in [0,1]; throws BothZero when s = c = 0.
double harmonic_mean(double specificity, double correctness);

/// Per-category fractions; they sum to 1. Throws EmptyDataset.
std::array<double, 6> category_distribution(const std::vector<EvalRecord>& records);

/// Counts plus all three metrics; undefined metrics stay unset with a reason.
/// Throws EmptyDataset.
EvalReport compose_report(const std::vector<EvalRecord>& records,
                          const std::string& dataset_name);

/// Builds a report straight from category counts (used when only a published
/// or precomputed distribution is available).
EvalReport report_from_counts(const std::array<std::size_t, 6>& counts,
                              const std::string& dataset_name);

struct AggregateMetrics {
    double correctness = 0.0;
    std::optional<double> specificity;
    std::optional<double> hm;
    std::array<double, 6> mean_distribution{};
};

/// Unweighted average of per-dataset metrics (and of their category
/// distributions). Specificity/HM are unset if unset for any input.
AggregateMetrics aggregate_reports(const std::vector<EvalReport>& reports);

/// Plain-text table: one row per report, columns S+ S S- G A W then
/// spec / corr / HM. Byte-stable for identical inputs.
std::string render_table(const std::vector<EvalReport>& reports);

/// Rounds to `decimals` places, half away from zero. Serialization-time only.
double round_to(double value, int decimals);

}  // namespace owclass
