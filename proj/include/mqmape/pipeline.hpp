#pragma once
// Per-segment orchestration: evaluate, post-edit each error, verify twice
// with swapped slots, filter, score. Also the random- and metric-filter
// variants and the concurrent corpus runner.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mqmape/backend.hpp"
#include "mqmape/core.hpp"
#include "mqmape/prompting.hpp"

namespace mqmape {

enum class VerdictOutcome { Improved, NotImproved, Contrastive };

std::string_view verdict_outcome_name(VerdictOutcome outcome);

// Resolved result of the double verifier pass. pass1 labels the original
// translation A and the post-edit B; pass2 swaps the labels.
struct VerifierVerdict {
    VerifierChoice pass1 = VerifierChoice::A;
    VerifierChoice pass2 = VerifierChoice::B;
    VerdictOutcome outcome = VerdictOutcome::NotImproved;
    double weight = 0.0;

    bool operator==(const VerifierVerdict&) const = default;
};

// (B, A) -> Improved at weight 1, (A, B) -> NotImproved at weight 0,
// disagreement -> Contrastive at half weight.
VerifierVerdict resolve_verdict(VerifierChoice pass1, VerifierChoice pass2);

enum class EvalMode { GembaMqm, MqmApe, RandomFilter, MetricFilter };

std::string_view eval_mode_name(EvalMode mode);
std::optional<EvalMode> parse_eval_mode(std::string_view text);

struct SegmentUsage {
    RoleUsage evaluator;
    RoleUsage editor;
    RoleUsage verifier;
};

// Full per-segment pipeline trace.
struct EvaluationRecord {
    LanguagePair lp;
    std::string system_id;
    std::string doc_id;
    std::string seg_id;
    std::string source;
    std::string translation;
    EvalMode mode = EvalMode::MqmApe;
    std::vector<ErrorAnnotation> errors;
    // Aligned to errors. An empty string / nullopt marks an error that never
    // went through APE or verification (gemba-mqm, metric-filter, minor-only).
    std::vector<std::string> ape_translations;
    std::vector<std::optional<VerifierVerdict>> verdicts;
    std::vector<WeightedError> retained;  // weight > 0 survivors, in error order
    ScoreBreakdown breakdown;
    SegmentUsage usage;
    bool failed = false;
    std::string failure;

    std::string key() const {
        return lp.str() + "\t" + system_id + "\t" + doc_id + "\t" + seg_id;
    }
};

// variant is "tgt" or "ape:<error index>".
using ScoreLookup =
    std::function<std::optional<double>(const Segment& segment, const std::string& variant)>;

struct RunConfig {
    EvalMode mode = EvalMode::MqmApe;
    std::uint64_t seed = 0;
    double keep_probability = 0.5;  // random-filter only
    int concurrency_limit = 1;
    RetryPolicy retry;
    bool minor_only_ape = false;  // non-minor errors bypass the filter, kept at weight 1
    int evaluator_max_tokens = 512;
    int editor_max_tokens = 512;
    int verifier_max_tokens = 8;
    ScoreLookup score_lookup;  // metric-filter only
};

// Uniform draw in [0,1) from raw engine output; std distributions are
// implementation-defined, this is not.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Engine seeded from (run seed, segment identity) so per-segment draws do not
// depend on evaluation order.
std::mt19937_64 segment_rng(std::uint64_t seed, const Segment& segment);

// Keeps each error independently with probability keep_probability, weight 1.
std::vector<WeightedError> random_filter(std::span<const ErrorAnnotation> errors,
                                         double keep_probability, std::mt19937_64& rng);

// Keeps error i iff ape_scores[i] > tgt_score (strict); no half weights.
// Throws std::invalid_argument when the arrays are not aligned.
std::vector<WeightedError> metric_filter(std::span<const ErrorAnnotation> errors,
                                         double tgt_score, std::span<const double> ape_scores);

// Runs the configured mode on one segment. Never throws: any failure marks
// the record failed with its cause.
EvaluationRecord evaluate_segment(const Segment& segment, const RunConfig& config,
                                  Provider& provider, UsageLedger& ledger,
                                  std::span<const FewShotExample> shots);

// Evaluates every segment with bounded concurrency; the result order matches
// the corpus order regardless of completion order. Throws on config errors.
std::vector<EvaluationRecord> run_corpus(std::span<const Segment> segments,
                                         const RunConfig& config, Provider& provider,
                                         UsageLedger& ledger,
                                         std::span<const FewShotExample> shots);

}  // namespace mqmape
