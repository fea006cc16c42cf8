#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace owclass {

/// The six mutually exclusive relations between a prediction and its
/// ground-truth label, ordered from least to most informative:
///   Wrong < Abstain < Generic < LessSpecific < Specific < MoreSpecific
/// The enum value of each category is its rank.
enum class Category : int {
    Wrong = 0,
    Abstain = 1,
    Generic = 2,
    LessSpecific = 3,
    Specific = 4,
    MoreSpecific = 5,
};

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::Wrong,        Category::Abstain,  Category::Generic,
    Category::LessSpecific, Category::Specific, Category::MoreSpecific,
};

/// Rank under the informativeness order; a bijection onto {0,...,5}.
constexpr int rank(Category c) { return static_cast<int>(c); }

constexpr bool at_least(Category c, Category floor) { return rank(c) >= rank(floor); }

/// Single-word category name as used on the judge wire ("Less Specific", ...).
std::string_view category_name(Category c);

/// Short code used in report tables ("S+", "S", "S-", "G", "A", "W").
std::string_view category_code(Category c);

/// Parses either the full name (case-insensitive) or the short code.
std::optional<Category> parse_category(std::string_view text);

/// Specificity score per non-Wrong category:
///   s(A)=1, s(G)=2, s(S-)=3, s(S)=s(S+)=4.
/// Throws WrongHasNoScore for Wrong, which has no score by definition.
int specificity_score(Category c);

}  // namespace owclass
