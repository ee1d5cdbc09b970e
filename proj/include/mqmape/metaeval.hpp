#pragma once
// Corpus-level meta-evaluation: pairwise accuracies, span precision against
// gold annotations, PERM-BOTH permutation significance, threshold alignment,
// verifier consistency and error distributions.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqmape/core.hpp"
#include "mqmape/pipeline.hpp"

namespace mqmape {

// Token indices (whitespace tokenization) covered by a set of error spans.
using PositionSet = std::set<int>;

// Locates each span in the translation (char offsets when present, else first
// case-sensitive, else first case-insensitive occurrence) and unions the
// indices of overlapped tokens. Unlocatable spans contribute nothing and bump
// the tally.
PositionSet span_positions(std::string_view translation,
                           std::span<const ErrorAnnotation> annotations,
                           int* unlocatable_tally = nullptr);

struct PrecisionCounts {
    std::int64_t overlap = 0;    // pooled |gold ∩ pred|
    std::int64_t predicted = 0;  // pooled |pred|

    // nullopt when nothing was predicted corpus-wide
    std::optional<double> value() const {
        if (predicted == 0) return std::nullopt;
        return static_cast<double>(overlap) / static_cast<double>(predicted);
    }
};

// Micro-aggregated span precision over aligned per-segment position sets.
// Major precision is this same pooling applied to sets built from the
// critical+major annotation subsets.
PrecisionCounts span_precision(std::span<const PositionSet> pred_sets,
                               std::span<const PositionSet> gold_sets);

// One system's (metric, gold) score for a grouped item.
struct ScoredSystem {
    double metric = 0.0;
    double gold = 0.0;
};

struct TieCalibrationResult {
    double epsilon = 0.0;
    double acc_eq_star = 0.0;
    std::int64_t pair_count = 0;
};

// Group-by-item pairwise accuracy with tie calibration (acc*_eq): pairs are
// formed within items only; epsilon is searched over {0} and all observed
// metric differences, maximizing accuracy with a smallest-epsilon tie-break.
TieCalibrationResult seg_acc_star_eq(std::span<const std::vector<ScoredSystem>> items);

struct PairwiseCounts {
    std::int64_t correct = 0;
    std::int64_t total = 0;  // gold-tied pairs excluded
};

PairwiseCounts system_pairwise_counts(const std::map<std::string, double>& metric_scores,
                                      const std::map<std::string, double>& gold_scores);

// Fraction of gold-distinguished system pairs ranked in the same direction by
// the metric; metric ties count as disagreement.
double system_pairwise_accuracy(const std::map<std::string, double>& metric_scores,
                                const std::map<std::string, double>& gold_scores);

struct SignificanceResult {
    double delta = 0.0;
    double p_value = 1.0;
    int n_resamples = 0;
    bool significant = false;  // p < 0.05
};

// Engine for resample r of a test seeded with seed; parallel-safe derivation.
std::mt19937_64 resample_rng(std::uint64_t seed, int resample_index);

// PERM-BOTH over arbitrary per-segment payloads: each resample independently
// swaps A's and B's payload per segment with probability 0.5 and recomputes
// the accuracy difference; one-sided p with +1 smoothing.
template <typename Item>
SignificanceResult perm_both_test_items(
    std::span<const Item> a, std::span<const Item> b,
    const std::function<double(const std::vector<Item>&)>& accuracy, int n_resamples = 1000,
    std::uint64_t seed = 0) {
    if (a.size() != b.size()) throw std::invalid_argument("mismatched segment sets");
    if (a.empty()) throw std::invalid_argument("significance test needs at least one segment");
    std::vector<Item> wa(a.begin(), a.end());
    std::vector<Item> wb(b.begin(), b.end());
    const double delta = accuracy(wa) - accuracy(wb);

    int at_least_as_large = 0;
    for (int r = 0; r < n_resamples; ++r) {
        auto rng = resample_rng(seed, r);
        for (std::size_t i = 0; i < wa.size(); ++i) {
            bool swap = uniform_unit(rng) < 0.5;
            wa[i] = swap ? b[i] : a[i];
            wb[i] = swap ? a[i] : b[i];
        }
        if (accuracy(wa) - accuracy(wb) >= delta) ++at_least_as_large;
    }
    SignificanceResult result;
    result.delta = delta;
    result.n_resamples = n_resamples;
    result.p_value = (1.0 + at_least_as_large) / (n_resamples + 1.0);
    result.significant = result.p_value < 0.05;
    return result;
}

using PairedAccuracyFn =
    std::function<double(std::span<const double> scores, std::span<const double> gold)>;

// PERM-BOTH for plain per-segment metric scores judged against fixed gold.
SignificanceResult perm_both_test(std::span<const double> metric_a,
                                  std::span<const double> metric_b,
                                  std::span<const double> gold,
                                  const PairedAccuracyFn& accuracy_fn, int n_resamples = 1000,
                                  std::uint64_t seed = 0);

struct WinTieLose {
    double win_pct = 0.0;
    double tie_pct = 0.0;
    double lose_pct = 0.0;
    std::optional<double> win_lose_ratio;  // nullopt when nothing lost
    std::int64_t count = 0;
};

// Win: both metric deltas positive; Lose: both negative; Tie: conflict or any
// zero.
WinTieLose win_tie_lose(std::span<const double> ck_deltas, std::span<const double> bleurt_deltas);

inline constexpr double kCometKiwiQeDelta = 1.18;
inline constexpr double kBleurt20Delta = 2.44;

// True iff the score improvement clears the >=95% human-agreement threshold
// for "cometkiwi_qe" or "bleurt20"; throws on unknown metric names.
bool threshold_alignment(std::string_view metric_name, double delta);

struct PrecisionRecallF1 {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::optional<double> precision() const;
    std::optional<double> recall() const;
    std::optional<double> f1() const;
};

// Verifier verdicts vs metric ground truth ("APE strictly better"). Improved
// counts as the positive prediction; contrastive verdicts count negative
// unless contrastive_positive is set.
PrecisionRecallF1 verifier_consistency(std::span<const VerifierVerdict> verdicts,
                                       const std::vector<bool>& metric_truth,
                                       bool contrastive_positive = false);

struct SeverityDistribution {
    std::int64_t origin_count = 0;
    std::int64_t remain_count = 0;
    double origin_mean = 0.0;  // errors per segment before filtering
    double remain_mean = 0.0;  // weight > 0 survivors per segment
};

struct CategoryDistribution {
    std::string category;
    std::int64_t origin = 0;
    std::int64_t retained = 0;
    std::int64_t discarded = 0;  // origin - retained, always
};

struct DistributionReport {
    std::int64_t segment_count = 0;
    SeverityDistribution by_severity[3];  // indexed by ErrorSeverity
    std::vector<CategoryDistribution> categories;  // sorted by origin desc, then name
    std::int64_t total_origin = 0;
    std::int64_t total_retained = 0;
    int top_k = 3;
};

// Severity and category distributions of one run's errors, retained vs
// discarded. Failed records are skipped; throws when no usable record exists.
DistributionReport error_distribution(std::span<const EvaluationRecord> records, int top_k = 3);

}  // namespace mqmape
