#include "mqmape/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace mqmape {

namespace {

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Lower-cases and folds whitespace/underscore runs to a single hyphen, so
// "Non translation", "non_translation" and "non-translation" all match.
std::string fold_label(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_sep = false;
    for (unsigned char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '_' || c == '-') {
            pending_sep = !out.empty();
            continue;
        }
        if (pending_sep) {
            out.push_back('-');
            pending_sep = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

constexpr std::array<std::pair<std::string_view, CategoryTop>, 7> kTops = {{
    {"accuracy", CategoryTop::Accuracy},
    {"fluency", CategoryTop::Fluency},
    {"style", CategoryTop::Style},
    {"terminology", CategoryTop::Terminology},
    {"non-translation", CategoryTop::NonTranslation},
    {"other", CategoryTop::Other},
    {"no-error", CategoryTop::NoError},
}};

bool allows_sub(CategoryTop top) {
    return top == CategoryTop::Accuracy || top == CategoryTop::Fluency ||
           top == CategoryTop::Style || top == CategoryTop::Terminology ||
           top == CategoryTop::Other;
}

}  // namespace

LanguagePair parse_language_pair(std::string_view text) {
    auto trimmed = trim(text);
    auto dash = trimmed.find('-');
    if (dash == std::string::npos)
        throw std::invalid_argument("language pair must look like \"src-tgt\": " + trimmed);
    LanguagePair lp{lower(trimmed.substr(0, dash)), lower(trimmed.substr(dash + 1))};
    if (lp.source_lang.empty() || lp.target_lang.empty())
        throw std::invalid_argument("language pair has an empty half: " + trimmed);
    if (lp.source_lang == lp.target_lang)
        throw std::invalid_argument("source and target language must differ: " + trimmed);
    return lp;
}

std::string_view severity_name(ErrorSeverity sev) {
    switch (sev) {
        case ErrorSeverity::Critical: return "critical";
        case ErrorSeverity::Major: return "major";
        case ErrorSeverity::Minor: return "minor";
    }
    return "minor";
}

std::optional<ErrorSeverity> parse_severity(std::string_view text) {
    auto folded = fold_label(text);
    if (folded == "critical") return ErrorSeverity::Critical;
    if (folded == "major") return ErrorSeverity::Major;
    if (folded == "minor") return ErrorSeverity::Minor;
    return std::nullopt;
}

std::string_view category_top_name(CategoryTop top) {
    for (const auto& [name, value] : kTops)
        if (value == top) return name;
    return "other";
}

std::string ErrorCategory::str() const {
    std::string out(category_top_name(top));
    if (!sub.empty()) {
        out += '/';
        out += sub;
    }
    return out;
}

ErrorCategory canonicalize_category(std::string_view raw) {
    auto trimmed = trim(raw);
    auto slash = trimmed.find('/');
    std::string top_part = slash == std::string::npos ? trimmed : trimmed.substr(0, slash);
    std::string sub_part = slash == std::string::npos ? "" : trimmed.substr(slash + 1);

    auto folded = fold_label(top_part);
    for (const auto& [name, top] : kTops) {
        if (folded == name) {
            ErrorCategory cat{top, {}};
            if (allows_sub(top)) cat.sub = lower(trim(sub_part));
            return cat;
        }
    }
    // Unknown label: degrade to other, keeping the whole raw string as sub.
    return ErrorCategory{CategoryTop::Other, lower(trimmed)};
}

ScoreBreakdown mqm_score(std::span<const WeightedError> errors) {
    ScoreBreakdown out;
    for (const auto& we : errors) {
        if (we.error.category.top == CategoryTop::NoError) continue;
        switch (we.error.severity) {
            case ErrorSeverity::Critical: out.n_critical += we.weight; break;
            case ErrorSeverity::Major: out.n_major += we.weight; break;
            case ErrorSeverity::Minor: out.n_minor += we.weight; break;
        }
    }
    out.score = std::max(-25.0, -25.0 * out.n_critical - 5.0 * out.n_major - out.n_minor);
    return out;
}

double system_score(std::span<const double> segment_scores) {
    if (segment_scores.empty()) throw std::invalid_argument("no segments for system");
    double sum = 0.0;
    for (double s : segment_scores) sum += s;
    return sum / static_cast<double>(segment_scores.size());
}

}  // namespace mqmape
