#include "owclass/category.hpp"

#include <algorithm>
#include <cctype>

#include "owclass/errors.hpp"

namespace owclass {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view category_name(Category c) {
    switch (c) {
        case Category::Wrong: return "Wrong";
        case Category::Abstain: return "Abstain";
        case Category::Generic: return "Generic";
        case Category::LessSpecific: return "Less Specific";
        case Category::Specific: return "Specific";
        case Category::MoreSpecific: return "More Specific";
    }
    return "Wrong";
}

std::string_view category_code(Category c) {
    switch (c) {
        case Category::Wrong: return "W";
        case Category::Abstain: return "A";
        case Category::Generic: return "G";
        case Category::LessSpecific: return "S-";
        case Category::Specific: return "S";
        case Category::MoreSpecific: return "S+";
    }
    return "W";
}

std::optional<Category> parse_category(std::string_view text) {
    // Short codes are case-sensitive on purpose: "s" vs "S" ambiguity is not
    // worth guessing about.
    for (Category c : kAllCategories) {
        if (text == category_code(c)) return c;
    }
    const std::string t = lower(text);
    for (Category c : kAllCategories) {
        if (t == lower(category_name(c))) return c;
    }
    // Tolerate the underscore/compact spellings seen in config files.
    if (t == "less_specific" || t == "lessspecific") return Category::LessSpecific;
    if (t == "more_specific" || t == "morespecific") return Category::MoreSpecific;
    return std::nullopt;
}

int specificity_score(Category c) {
    switch (c) {
        case Category::Abstain: return 1;
        case Category::Generic: return 2;
        case Category::LessSpecific: return 3;
        case Category::Specific: return 4;
        case Category::MoreSpecific: return 4;
        case Category::Wrong:
            throw WrongHasNoScore("specificity score is undefined for Wrong");
    }
    throw WrongHasNoScore("specificity score is undefined");
}

}  // namespace owclass
