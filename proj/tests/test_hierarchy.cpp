#include <doctest.h>

#include <nlohmann/json.hpp>

#include "owclass/errors.hpp"
#include "owclass/hierarchy.hpp"

using namespace owclass;
using json = nlohmann::json;

namespace {

// animal -> {bird -> {warbler -> {golden-winged warbler, blue-winged warbler}},
//            dog -> {samoyed}}
LabelHierarchy animal_tree() {
    return LabelHierarchy(
        "animal",
        {{"animal", "bird"},
         {"animal", "dog"},
         {"bird", "warbler"},
         {"warbler", "golden-winged warbler"},
         {"warbler", "blue-winged warbler"},
         {"dog", "samoyed"}},
        {{"dog", {"Canis lupus familiaris"}}, {"samoyed", {"Samoiedskaya Sobaka"}}});
}

}  // namespace

TEST_CASE("label normalization folds case and whitespace") {
    CHECK(normalize_label("  Golden-Winged   Warbler ") == "golden-winged warbler");
    CHECK(normalize_label("DOG") == "dog");
    CHECK(normalize_label("   ") == "");
}

TEST_CASE("hierarchy construction validates the tree") {
    CHECK_THROWS_AS(LabelHierarchy("a", {{"a", "b"}, {"c", "b"}}), HierarchyError);  // two parents
    CHECK_THROWS_AS(LabelHierarchy("a", {{"b", "c"}, {"c", "b"}}), HierarchyError);  // cycle/disconnected
    CHECK_THROWS_AS(LabelHierarchy("a", {{"a", "b"}, {"b", "a"}}), HierarchyError);  // root parented
    CHECK_THROWS_AS(LabelHierarchy("a", {{"a", "A"}}), HierarchyError);  // duplicate after normalization
    CHECK_THROWS_AS(LabelHierarchy("a", {{"a", "b"}}, {{"zebra", {"z"}}}), HierarchyError);
    CHECK_THROWS_AS(LabelHierarchy("a", {{"a", "b"}}, {{"a", {"b"}}}), HierarchyError);  // alias is a node

    const auto h = animal_tree();
    CHECK(h.size() == 7);
    CHECK(h.root() == "animal");
    CHECK(h.depth("animal") == 0);
    CHECK(h.depth("golden-winged warbler") == 3);
    CHECK(h.is_leaf("samoyed"));
    CHECK_FALSE(h.is_leaf("warbler"));
    CHECK(h.parent("warbler") == "bird");
    CHECK(h.resolve("CANIS LUPUS  Familiaris") == "dog");
    CHECK(h.ancestor_distance("bird", "golden-winged warbler") == 2);
    CHECK(h.ancestor_distance("samoyed", "dog") == std::nullopt);
}

TEST_CASE("oracle judge matches the category definitions") {
    const auto h = animal_tree();

    // immediate parent is Less Specific, the rest of the chain is Generic
    CHECK(oracle_judge(h, "golden-winged warbler", "warbler") == Category::LessSpecific);
    CHECK(oracle_judge(h, "golden-winged warbler", "bird") == Category::Generic);
    CHECK(oracle_judge(h, "golden-winged warbler", "animal") == Category::Generic);
    CHECK(oracle_judge(h, "samoyed", "dog") == Category::LessSpecific);
    CHECK(oracle_judge(h, "samoyed", "animal") == Category::Generic);

    CHECK(oracle_judge(h, "samoyed", "samoyed") == Category::Specific);
    CHECK(oracle_judge(h, "samoyed", "  SAMOYED ") == Category::Specific);
    CHECK(oracle_judge(h, "samoyed", "Samoiedskaya Sobaka") == Category::Specific);
    CHECK(oracle_judge(h, "dog", "Canis lupus familiaris") == Category::Specific);

    CHECK(oracle_judge(h, "dog", "samoyed") == Category::MoreSpecific);
    CHECK(oracle_judge(h, "animal", "golden-winged warbler") == Category::MoreSpecific);

    CHECK(oracle_judge(h, "samoyed", "None") == Category::Abstain);
    CHECK(oracle_judge(h, "samoyed", "none") == Category::Abstain);

    CHECK(oracle_judge(h, "golden-winged warbler", "blue-winged warbler") == Category::Wrong);
    CHECK(oracle_judge(h, "samoyed", "giraffe") == Category::Wrong);
    CHECK(oracle_judge(h, "samoyed", "") == Category::Wrong);

    // multiple alternatives are Wrong
    CHECK(oracle_judge(h, "bird", "robin or cardinal") == Category::Wrong);
    CHECK(oracle_judge(h, "bird", "warbler/bird") == Category::Wrong);
    CHECK(oracle_judge(h, "bird", "warbler, bird") == Category::Wrong);

    CHECK_THROWS_AS(oracle_judge(h, "giraffe", "animal"), UnknownGroundTruth);
    CHECK_THROWS_AS(oracle_judge(h, "samoyed", "dog", 0), ContractViolation);
}

TEST_CASE("oracle judge is total and exact-match holds for every node") {
    const auto h = animal_tree();
    for (const auto& node : h.labels()) {
        CHECK(oracle_judge(h, node, node) == Category::Specific);
        // total over arbitrary strings too
        CHECK_NOTHROW(oracle_judge(h, node, "utter nonsense &&&"));
    }
}

TEST_CASE("close_parent_depth moves the LessSpecific/Generic boundary") {
    const auto h = animal_tree();
    const std::string y = "golden-winged warbler";  // chain: warbler, bird, animal
    for (int depth = 1; depth <= 3; ++depth) {
        int less = 0, generic = 0;
        for (const std::string anc : {"warbler", "bird", "animal"}) {
            const Category c = oracle_judge(h, y, anc, depth);
            if (c == Category::LessSpecific) ++less;
            if (c == Category::Generic) ++generic;
        }
        CHECK(less == depth);
        CHECK(less + generic == 3);  // exactly one boundary on the chain
    }
}

TEST_CASE("hierarchy json round-trip preserves structure and aliases") {
    const auto h = animal_tree();
    const auto j = h.to_json();
    const auto h2 = LabelHierarchy::from_json(j);
    CHECK(h2.size() == h.size());
    CHECK(h2.root() == h.root());
    CHECK(h2.resolve("canis lupus familiaris") == "dog");
    CHECK(oracle_judge(h2, "golden-winged warbler", "warbler") == Category::LessSpecific);
    CHECK(h2.to_json() == j);
}
