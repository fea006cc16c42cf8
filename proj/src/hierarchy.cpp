#include "owclass/hierarchy.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>

#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"

namespace owclass {

std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    bool in_space = true;  // leading whitespace is dropped
    for (char ch : label) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool is_abstain(std::string_view label) { return normalize_label(label) == "none"; }

bool is_multi_option(std::string_view normalized) {
    if (normalized.find('/') != std::string_view::npos) return true;
    if (normalized.find(',') != std::string_view::npos) return true;
    return normalized.find(" or ") != std::string_view::npos;
}

LabelHierarchy::LabelHierarchy(
    const std::string& root,
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::unordered_map<std::string, std::vector<std::string>>& aliases) {
    const std::string nroot = normalize_label(root);
    if (nroot.empty()) throw HierarchyError("root label is empty");

    auto add_node = [&](const std::string& normalized) -> int {
        auto it = index_.find(normalized);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(labels_.size());
        labels_.push_back(normalized);
        parent_.push_back(-1);
        depth_.push_back(-1);
        index_.emplace(normalized, id);
        return id;
    };

    add_node(nroot);
    for (const auto& [p, c] : edges) {
        const std::string np = normalize_label(p);
        const std::string nc = normalize_label(c);
        if (np.empty() || nc.empty()) throw HierarchyError("empty label in edge");
        if (np == nc) throw HierarchyError("self edge at '" + np + "'");
        int pid = add_node(np);
        int cid = add_node(nc);
        if (cid == 0) throw HierarchyError("root '" + nroot + "' cannot have a parent");
        if (parent_[cid] != -1)
            throw HierarchyError("node '" + nc + "' has more than one parent");
        parent_[cid] = pid;
    }

    // Depths via BFS from the root; anything unreached is disconnected or in a cycle.
    depth_[0] = 0;
    std::deque<int> queue{0};
    std::vector<std::vector<int>> kids(labels_.size());
    for (std::size_t i = 1; i < labels_.size(); ++i) {
        if (parent_[i] == -1)
            throw HierarchyError("node '" + labels_[i] + "' is not connected to the root");
        kids[static_cast<std::size_t>(parent_[i])].push_back(static_cast<int>(i));
    }
    std::size_t seen = 1;
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        for (int k : kids[static_cast<std::size_t>(cur)]) {
            depth_[static_cast<std::size_t>(k)] = depth_[static_cast<std::size_t>(cur)] + 1;
            queue.push_back(k);
            ++seen;
        }
    }
    if (seen != labels_.size())
        throw HierarchyError("hierarchy contains a cycle");

    for (const auto& [canonical, syns] : aliases) {
        const std::string ncan = normalize_label(canonical);
        auto it = index_.find(ncan);
        if (it == index_.end())
            throw HierarchyError("alias target '" + ncan + "' is not a node");
        for (const auto& syn : syns) {
            const std::string nsyn = normalize_label(syn);
            if (nsyn.empty()) throw HierarchyError("empty alias");
            if (index_.count(nsyn))
                throw HierarchyError("alias '" + nsyn + "' collides with a node label");
            auto [pos, inserted] = alias_.emplace(nsyn, it->second);
            if (!inserted && pos->second != it->second)
                throw HierarchyError("alias '" + nsyn + "' maps to two nodes");
            alias_lists_[it->second].push_back(nsyn);
        }
    }
}

LabelHierarchy LabelHierarchy::from_json(const nlohmann::json& j) {
    if (!j.contains("root") || !j.contains("edges"))
        throw ConfigError("hierarchy json needs 'root' and 'edges'");
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw ConfigError("each edge must be a [parent, child] pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    std::unordered_map<std::string, std::vector<std::string>> aliases;
    if (j.contains("aliases")) {
        for (const auto& [canonical, syns] : j.at("aliases").items())
            aliases[canonical] = syns.get<std::vector<std::string>>();
    }
    return LabelHierarchy(j.at("root").get<std::string>(), edges, aliases);
}

LabelHierarchy LabelHierarchy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hierarchy file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid hierarchy json: " + std::string(e.what()));
    }
    return from_json(j);
}

nlohmann::json LabelHierarchy::to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t i = 1; i < labels_.size(); ++i)
        edges.push_back({labels_[static_cast<std::size_t>(parent_[i])], labels_[i]});
    nlohmann::json aliases = nlohmann::json::object();
    for (const auto& [id, syns] : alias_lists_)
        aliases[labels_[static_cast<std::size_t>(id)]] = syns;
    return {{"root", labels_[0]}, {"edges", edges}, {"aliases", aliases}};
}

int LabelHierarchy::id_of(std::string_view normalized) const {
    auto it = index_.find(std::string(normalized));
    return it == index_.end() ? -1 : it->second;
}

std::optional<int> LabelHierarchy::resolve_id(std::string_view label) const {
    const std::string n = normalize_label(label);
    if (int id = id_of(n); id >= 0) return id;
    if (auto it = alias_.find(n); it != alias_.end()) return it->second;
    return std::nullopt;
}

bool LabelHierarchy::contains(std::string_view label) const {
    return id_of(normalize_label(label)) >= 0;
}

std::optional<std::string> LabelHierarchy::resolve(std::string_view label) const {
    if (auto id = resolve_id(label)) return labels_[static_cast<std::size_t>(*id)];
    return std::nullopt;
}

int LabelHierarchy::depth(std::string_view label) const {
    auto id = resolve_id(label);
    if (!id) throw HierarchyError("unknown label: " + std::string(label));
    return depth_[static_cast<std::size_t>(*id)];
}

std::optional<std::string> LabelHierarchy::parent(std::string_view label) const {
    auto id = resolve_id(label);
    if (!id) throw HierarchyError("unknown label: " + std::string(label));
    int p = parent_[static_cast<std::size_t>(*id)];
    if (p < 0) return std::nullopt;
    return labels_[static_cast<std::size_t>(p)];
}

bool LabelHierarchy::is_leaf(std::string_view label) const {
    auto id = resolve_id(label);
    if (!id) throw HierarchyError("unknown label: " + std::string(label));
    for (int p : parent_)
        if (p == *id) return false;
    return true;
}

std::vector<std::string> LabelHierarchy::leaves() const {
    std::vector<bool> has_child(labels_.size(), false);
    for (int p : parent_)
        if (p >= 0) has_child[static_cast<std::size_t>(p)] = true;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (!has_child[i]) out.push_back(labels_[i]);
    return out;
}

std::vector<std::string> LabelHierarchy::children(std::string_view label) const {
    auto id = resolve_id(label);
    if (!id) throw HierarchyError("unknown label: " + std::string(label));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (parent_[i] == *id) out.push_back(labels_[i]);
    return out;
}

std::optional<int> LabelHierarchy::ancestor_distance(std::string_view ancestor,
                                                     std::string_view descendant) const {
    auto aid = resolve_id(ancestor);
    auto did = resolve_id(descendant);
    if (!aid || !did) return std::nullopt;
    int cur = *did;
    int dist = 0;
    while (cur >= 0) {
        if (cur == *aid) return dist;
        cur = parent_[static_cast<std::size_t>(cur)];
        ++dist;
    }
    return std::nullopt;
}

Category oracle_judge(const LabelHierarchy& h, const std::string& ground_truth,
                      const std::string& prediction, int close_parent_depth) {
    if (close_parent_depth < 1)
        throw ContractViolation("close_parent_depth must be >= 1");
    auto gt = h.resolve(ground_truth);
    if (!gt)
        throw UnknownGroundTruth("ground truth not in hierarchy: " + ground_truth);

    const std::string pred = normalize_label(prediction);
    if (pred == "none") return Category::Abstain;
    if (is_multi_option(pred)) return Category::Wrong;

    auto node = h.resolve(pred);
    if (!node) return Category::Wrong;
    if (*node == *gt) return Category::Specific;
    if (auto up = h.ancestor_distance(*node, *gt)) {
        return *up <= close_parent_depth ? Category::LessSpecific : Category::Generic;
    }
    if (h.ancestor_distance(*gt, *node)) return Category::MoreSpecific;
    return Category::Wrong;
}

}  // namespace owclass
