#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "owclass/category.hpp"

namespace owclass {

/// The literal answer that counts as a refusal.
inline constexpr const char* kAbstainToken = "None";

/// Label normalization used everywhere labels are compared or cached:
/// case-fold, trim, collapse internal whitespace runs to a single space.
std::string normalize_label(std::string_view label);

bool is_abstain(std::string_view label);

/// True if the prediction offers multiple alternatives (" or ", "/", ",").
/// Such predictions are judged Wrong.
bool is_multi_option(std::string_view normalized);

/// Rooted tree of concept labels with an optional synonym table.
/// Immutable after construction; safe for concurrent reads.
class LabelHierarchy {
  public:
    /// Builds and validates the tree. Edges are (parent, child) label pairs.
    /// Aliases map a canonical node label to its accepted synonyms.
    /// Throws HierarchyError on duplicate labels (after normalization),
    /// multiple parents, cycles, unreachable nodes, or dangling aliases.
    LabelHierarchy(const std::string& root,
                   const std::vector<std::pair<std::string, std::string>>& edges,
                   const std::unordered_map<std::string, std::vector<std::string>>& aliases = {});

    static LabelHierarchy from_json(const nlohmann::json& j);
    static LabelHierarchy load(const std::string& path);
    nlohmann::json to_json() const;

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& root() const { return labels_[0]; }

    bool contains(std::string_view label) const;
    /// Resolves a label or registered synonym to its canonical node label.
    std::optional<std::string> resolve(std::string_view label) const;

    int depth(std::string_view label) const;
    std::optional<std::string> parent(std::string_view label) const;
    bool is_leaf(std::string_view label) const;
    std::vector<std::string> leaves() const;
    std::vector<std::string> children(std::string_view label) const;

    /// Distance from `descendant` up to `ancestor`; nullopt if not an ancestor.
    /// Distance 0 means the same node.
    std::optional<int> ancestor_distance(std::string_view ancestor,
                                         std::string_view descendant) const;

  private:
    int id_of(std::string_view normalized) const;
    std::optional<int> resolve_id(std::string_view label) const;

    std::vector<std::string> labels_;   // index 0 is the root
    std::vector<int> parent_;           // -1 for the root
    std::vector<int> depth_;
    std::unordered_map<std::string, int> index_;  // normalized label -> id
    std::unordered_map<std::string, int> alias_;  // normalized synonym -> id
    std::unordered_map<int, std::vector<std::string>> alias_lists_;  // for round-trip
};

/// Deterministic judge over a known hierarchy.
///
/// normalized-equal or synonym        -> Specific
/// strict descendant of ground truth  -> MoreSpecific
/// ancestor within close_parent_depth -> LessSpecific
/// farther ancestor (incl. root)      -> Generic
/// the abstain token                  -> Abstain
/// anything else                      -> Wrong
///
/// Throws UnknownGroundTruth if the ground truth is not a node, and
/// ContractViolation if close_parent_depth < 1.
Category oracle_judge(const LabelHierarchy& h, const std::string& ground_truth,
                      const std::string& prediction, int close_parent_depth = 1);

}  // namespace owclass
