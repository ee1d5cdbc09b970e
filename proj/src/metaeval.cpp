#include "mqmape/metaeval.hpp"

#include <algorithm>
#include <cctype>

namespace mqmape {

namespace {

struct TokenRange {
    std::size_t begin;
    std::size_t end;
};

std::vector<TokenRange> tokenize(std::string_view text) {
    std::vector<TokenRange> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        tokens.push_back(TokenRange{begin, i});
    }
    return tokens;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int sign(double x) { return x < 0 ? -1 : (x > 0 ? 1 : 0); }

}  // namespace

PositionSet span_positions(std::string_view translation,
                           std::span<const ErrorAnnotation> annotations,
                           int* unlocatable_tally) {
    auto tokens = tokenize(translation);
    PositionSet positions;
    for (const auto& ann : annotations) {
        if (ann.category.top == CategoryTop::NoError) continue;

        std::size_t begin = 0;
        std::size_t end = 0;
        bool located = false;
        if (ann.char_start && ann.char_end && *ann.char_start <= *ann.char_end &&
            *ann.char_end <= translation.size()) {
            begin = *ann.char_start;
            end = *ann.char_end;
            located = true;
        } else if (!ann.span.empty()) {
            auto pos = translation.find(ann.span);
            if (pos == std::string_view::npos)
                pos = ascii_lower(translation).find(ascii_lower(ann.span));
            if (pos != std::string_view::npos) {
                begin = pos;
                end = pos + ann.span.size();
                located = true;
            }
        }
        if (!located) {
            if (unlocatable_tally) ++(*unlocatable_tally);
            continue;
        }
        for (std::size_t t = 0; t < tokens.size(); ++t)
            if (tokens[t].begin < end && begin < tokens[t].end)
                positions.insert(static_cast<int>(t));
    }
    return positions;
}

PrecisionCounts span_precision(std::span<const PositionSet> pred_sets,
                               std::span<const PositionSet> gold_sets) {
    if (pred_sets.size() != gold_sets.size())
        throw std::invalid_argument("span_precision: prediction and gold sets are not aligned");
    PrecisionCounts counts;
    for (std::size_t i = 0; i < pred_sets.size(); ++i) {
        counts.predicted += static_cast<std::int64_t>(pred_sets[i].size());
        for (int pos : pred_sets[i])
            if (gold_sets[i].count(pos)) ++counts.overlap;
    }
    return counts;
}

TieCalibrationResult seg_acc_star_eq(std::span<const std::vector<ScoredSystem>> items) {
    struct Pair {
        double metric_gap;  // |m_i - m_j|
        int metric_sign;
        int gold_sign;
    };
    std::vector<Pair> pairs;
    std::vector<double> candidates = {0.0};
    for (const auto& item : items) {
        for (std::size_t i = 0; i < item.size(); ++i) {
            for (std::size_t j = i + 1; j < item.size(); ++j) {
                double dm = item[i].metric - item[j].metric;
                double dg = item[i].gold - item[j].gold;
                pairs.push_back(Pair{std::abs(dm), sign(dm), sign(dg)});
                candidates.push_back(std::abs(dm));
            }
        }
    }
    if (pairs.empty()) throw std::invalid_argument("tie calibration found no scorable pairs");

    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    TieCalibrationResult best;
    best.pair_count = static_cast<std::int64_t>(pairs.size());
    best.acc_eq_star = -1.0;
    for (double eps : candidates) {  // ascending, so ties keep the smallest eps
        std::int64_t correct = 0;
        for (const auto& p : pairs) {
            bool metric_tied = p.metric_gap <= eps;
            bool gold_tied = p.gold_sign == 0;
            if (gold_tied ? metric_tied : (!metric_tied && p.metric_sign == p.gold_sign))
                ++correct;
        }
        double acc = static_cast<double>(correct) / static_cast<double>(pairs.size());
        if (acc > best.acc_eq_star) {
            best.acc_eq_star = acc;
            best.epsilon = eps;
        }
    }
    return best;
}

PairwiseCounts system_pairwise_counts(const std::map<std::string, double>& metric_scores,
                                      const std::map<std::string, double>& gold_scores) {
    if (metric_scores.size() < 2)
        throw std::invalid_argument("pairwise accuracy needs at least 2 systems");
    for (const auto& [system, score] : gold_scores)
        if (!metric_scores.count(system))
            throw std::invalid_argument("system \"" + system + "\" has no metric score");
    if (metric_scores.size() != gold_scores.size())
        throw std::invalid_argument("metric and gold cover different system sets");

    PairwiseCounts counts;
    for (auto i = gold_scores.begin(); i != gold_scores.end(); ++i) {
        for (auto j = std::next(i); j != gold_scores.end(); ++j) {
            double dg = i->second - j->second;
            if (dg == 0.0) continue;  // sign agreement undefined on gold ties
            ++counts.total;
            double dm = metric_scores.at(i->first) - metric_scores.at(j->first);
            if (sign(dm) == sign(dg)) ++counts.correct;
        }
    }
    return counts;
}

double system_pairwise_accuracy(const std::map<std::string, double>& metric_scores,
                                const std::map<std::string, double>& gold_scores) {
    auto counts = system_pairwise_counts(metric_scores, gold_scores);
    if (counts.total == 0)
        throw std::invalid_argument("all gold system scores are tied; accuracy undefined");
    return static_cast<double>(counts.correct) / static_cast<double>(counts.total);
}

std::mt19937_64 resample_rng(std::uint64_t seed, int resample_index) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(resample_index) + 1);
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return std::mt19937_64(x);
}

SignificanceResult perm_both_test(std::span<const double> metric_a,
                                  std::span<const double> metric_b,
                                  std::span<const double> gold,
                                  const PairedAccuracyFn& accuracy_fn, int n_resamples,
                                  std::uint64_t seed) {
    if (metric_a.size() != gold.size() || metric_b.size() != gold.size())
        throw std::invalid_argument("mismatched segment sets");
    std::vector<double> gold_copy(gold.begin(), gold.end());
    auto accuracy = [&accuracy_fn, &gold_copy](const std::vector<double>& scores) {
        return accuracy_fn(scores, gold_copy);
    };
    return perm_both_test_items<double>(metric_a, metric_b, accuracy, n_resamples, seed);
}

WinTieLose win_tie_lose(std::span<const double> ck_deltas,
                        std::span<const double> bleurt_deltas) {
    if (ck_deltas.size() != bleurt_deltas.size())
        throw std::invalid_argument("win/tie/lose deltas are not aligned");
    if (ck_deltas.empty()) throw std::invalid_argument("win/tie/lose on empty input");

    std::int64_t win = 0;
    std::int64_t lose = 0;
    for (std::size_t i = 0; i < ck_deltas.size(); ++i) {
        if (ck_deltas[i] > 0 && bleurt_deltas[i] > 0)
            ++win;
        else if (ck_deltas[i] < 0 && bleurt_deltas[i] < 0)
            ++lose;
    }
    WinTieLose out;
    out.count = static_cast<std::int64_t>(ck_deltas.size());
    out.win_pct = 100.0 * static_cast<double>(win) / static_cast<double>(out.count);
    out.lose_pct = 100.0 * static_cast<double>(lose) / static_cast<double>(out.count);
    out.tie_pct = 100.0 - out.win_pct - out.lose_pct;
    if (lose > 0) out.win_lose_ratio = out.win_pct / out.lose_pct;
    return out;
}

bool threshold_alignment(std::string_view metric_name, double delta) {
    if (metric_name == "cometkiwi_qe") return delta >= kCometKiwiQeDelta;
    if (metric_name == "bleurt20") return delta >= kBleurt20Delta;
    throw std::invalid_argument("no alignment threshold for metric \"" + std::string(metric_name) +
                                "\"");
}

std::optional<double> PrecisionRecallF1::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> PrecisionRecallF1::recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::optional<double> PrecisionRecallF1::f1() const {
    auto p = precision();
    auto r = recall();
    if (!p || !r || *p + *r == 0.0) return std::nullopt;
    return 2.0 * *p * *r / (*p + *r);
}

PrecisionRecallF1 verifier_consistency(std::span<const VerifierVerdict> verdicts,
                                       const std::vector<bool>& metric_truth,
                                       bool contrastive_positive) {
    if (verdicts.size() != metric_truth.size())
        throw std::invalid_argument("verdicts and metric truths are not aligned");
    if (verdicts.empty()) throw std::invalid_argument("verifier consistency on empty input");

    PrecisionRecallF1 out;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        bool predicted = verdicts[i].outcome == VerdictOutcome::Improved ||
                         (contrastive_positive && verdicts[i].outcome == VerdictOutcome::Contrastive);
        if (predicted && metric_truth[i]) ++out.tp;
        else if (predicted && !metric_truth[i]) ++out.fp;
        else if (!predicted && metric_truth[i]) ++out.fn;
        else ++out.tn;
    }
    return out;
}

DistributionReport error_distribution(std::span<const EvaluationRecord> records, int top_k) {
    DistributionReport report;
    report.top_k = top_k;
    std::map<std::string, CategoryDistribution> categories;

    for (const auto& rec : records) {
        if (rec.failed) continue;
        ++report.segment_count;
        for (const auto& error : rec.errors) {
            auto& sev = report.by_severity[static_cast<int>(error.severity)];
            ++sev.origin_count;
            auto& cat = categories[error.category.str()];
            ++cat.origin;
        }
        for (const auto& we : rec.retained) {
            auto& sev = report.by_severity[static_cast<int>(we.error.severity)];
            ++sev.remain_count;
            ++categories[we.error.category.str()].retained;
        }
    }
    if (report.segment_count == 0)
        throw std::invalid_argument("error distribution over an empty run");

    for (auto& sev : report.by_severity) {
        sev.origin_mean =
            static_cast<double>(sev.origin_count) / static_cast<double>(report.segment_count);
        sev.remain_mean =
            static_cast<double>(sev.remain_count) / static_cast<double>(report.segment_count);
    }
    for (auto& [name, cat] : categories) {
        cat.category = name;
        cat.discarded = cat.origin - cat.retained;
        report.total_origin += cat.origin;
        report.total_retained += cat.retained;
        report.categories.push_back(cat);
    }
    std::sort(report.categories.begin(), report.categories.end(),
              [](const CategoryDistribution& a, const CategoryDistribution& b) {
                  if (a.origin != b.origin) return a.origin > b.origin;
                  return a.category < b.category;
              });
    return report;
}

}  // namespace mqmape
