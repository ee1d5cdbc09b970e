#pragma once
// Domain types shared by every module: segments, the MQM error taxonomy,
// and the severity-weighted scoring function.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mqmape {

struct LanguagePair {
    std::string source_lang;  // BCP-47-style code, e.g. "en"
    std::string target_lang;

    bool operator==(const LanguagePair&) const = default;

    // "en-de" rendering used in corpus files and report keys.
    std::string str() const { return source_lang + "-" + target_lang; }
};

// Parses "src-tgt" (split at the first '-'); throws std::invalid_argument
// on empty halves or identical languages.
LanguagePair parse_language_pair(std::string_view text);

enum class ErrorSeverity { Critical, Major, Minor };

std::string_view severity_name(ErrorSeverity sev);
std::optional<ErrorSeverity> parse_severity(std::string_view text);  // case-insensitive

enum class CategoryTop {
    Accuracy,
    Fluency,
    Style,
    Terminology,
    NonTranslation,
    Other,
    NoError,
};

std::string_view category_top_name(CategoryTop top);

struct ErrorCategory {
    CategoryTop top = CategoryTop::Other;
    std::string sub;  // empty when absent; never set for non-translation / no-error

    bool operator==(const ErrorCategory&) const = default;

    // Canonical lower-case "top/sub" (or bare "top") rendering.
    std::string str() const;
};

// Normalizes an LLM-produced category label against the taxonomy:
// case-insensitive, whitespace/underscore/hyphen variants accepted,
// unknown labels degrade to other with the raw string kept as sub.
// Idempotent: canonicalize_category(c.str()) == c.
ErrorCategory canonicalize_category(std::string_view raw);

struct ErrorAnnotation {
    std::string span;  // text of the error span inside the translation
    ErrorCategory category;
    ErrorSeverity severity = ErrorSeverity::Minor;
    std::optional<std::size_t> char_start;  // [char_start, char_end) into the translation
    std::optional<std::size_t> char_end;

    bool operator==(const ErrorAnnotation&) const = default;
};

struct WeightedError {
    ErrorAnnotation error;
    double weight = 1.0;  // 0, 0.5 or 1; 0 means discarded

    bool operator==(const WeightedError&) const = default;
};

struct Segment {
    LanguagePair lp;
    std::string system_id;
    std::string doc_id;
    std::string seg_id;
    std::string source;
    std::string translation;
    std::optional<std::string> reference;
    std::optional<double> gold_score;
    std::optional<std::vector<ErrorAnnotation>> gold_errors;

    // (lp, system, doc, seg) — unique within a corpus.
    std::string key() const {
        return lp.str() + "\t" + system_id + "\t" + doc_id + "\t" + seg_id;
    }
};

struct ScoreBreakdown {
    double n_critical = 0.0;  // weighted counts
    double n_major = 0.0;
    double n_minor = 0.0;
    double score = 0.0;  // max(-25, -25*n_critical - 5*n_major - n_minor)

    bool operator==(const ScoreBreakdown&) const = default;
};

// Severity-weighted error score with the -25 clamp. no-error annotations
// contribute nothing; an empty list scores 0.
ScoreBreakdown mqm_score(std::span<const WeightedError> errors);

// Mean of per-segment scores. Throws std::invalid_argument on an empty list.
double system_score(std::span<const double> segment_scores);

}  // namespace mqmape
