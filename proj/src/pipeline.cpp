#include "mqmape/pipeline.hpp"

#include <atomic>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mqmape {

std::string_view verdict_outcome_name(VerdictOutcome outcome) {
    switch (outcome) {
        case VerdictOutcome::Improved: return "improved";
        case VerdictOutcome::NotImproved: return "not-improved";
        case VerdictOutcome::Contrastive: return "contrastive";
    }
    return "contrastive";
}

VerifierVerdict resolve_verdict(VerifierChoice pass1, VerifierChoice pass2) {
    VerifierVerdict verdict{pass1, pass2, VerdictOutcome::Contrastive, 0.5};
    if (pass1 == VerifierChoice::B && pass2 == VerifierChoice::A) {
        verdict.outcome = VerdictOutcome::Improved;
        verdict.weight = 1.0;
    } else if (pass1 == VerifierChoice::A && pass2 == VerifierChoice::B) {
        verdict.outcome = VerdictOutcome::NotImproved;
        verdict.weight = 0.0;
    }
    return verdict;
}

std::string_view eval_mode_name(EvalMode mode) {
    switch (mode) {
        case EvalMode::GembaMqm: return "gemba-mqm";
        case EvalMode::MqmApe: return "mqm-ape";
        case EvalMode::RandomFilter: return "random-filter";
        case EvalMode::MetricFilter: return "metric-filter";
    }
    return "mqm-ape";
}

std::optional<EvalMode> parse_eval_mode(std::string_view text) {
    if (text == "gemba-mqm") return EvalMode::GembaMqm;
    if (text == "mqm-ape") return EvalMode::MqmApe;
    if (text == "random-filter") return EvalMode::RandomFilter;
    if (text == "metric-filter") return EvalMode::MetricFilter;
    return std::nullopt;
}

std::mt19937_64 segment_rng(std::uint64_t seed, const Segment& segment) {
    // FNV-1a over the segment key, mixed with the run seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : segment.key()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return std::mt19937_64(h ^ (seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
}

std::vector<WeightedError> random_filter(std::span<const ErrorAnnotation> errors,
                                         double keep_probability, std::mt19937_64& rng) {
    std::vector<WeightedError> retained;
    for (const auto& error : errors)
        if (uniform_unit(rng) < keep_probability) retained.push_back(WeightedError{error, 1.0});
    return retained;
}

std::vector<WeightedError> metric_filter(std::span<const ErrorAnnotation> errors,
                                         double tgt_score, std::span<const double> ape_scores) {
    if (errors.size() != ape_scores.size())
        throw std::invalid_argument("metric_filter: " + std::to_string(ape_scores.size()) +
                                    " scores for " + std::to_string(errors.size()) + " errors");
    std::vector<WeightedError> retained;
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (ape_scores[i] > tgt_score) retained.push_back(WeightedError{errors[i], 1.0});
    return retained;
}

namespace {

void add_usage(RoleUsage& row, int completions, std::int64_t prompt, std::int64_t completion) {
    row.requests += completions;
    row.prompt_tokens += prompt;
    row.completion_tokens += completion;
}

void run_ape_and_filter(const Segment& segment, const RunConfig& config, Provider& provider,
                        UsageLedger& ledger, EvaluationRecord& rec) {
    const auto n = rec.errors.size();
    rec.ape_translations.assign(n, "");
    rec.verdicts.assign(n, std::nullopt);

    // metric-filter: indices that go through the score comparison; bypassed
    // errors get a +inf stand-in so the strict > filter always keeps them.
    std::vector<double> ape_scores(n, std::numeric_limits<double>::infinity());
    std::optional<double> tgt_score;
    if (rec.mode == EvalMode::MetricFilter) {
        if (!config.score_lookup)
            throw std::runtime_error("metric-filter mode requires an external score source");
        tgt_score = config.score_lookup(segment, "tgt");
        if (!tgt_score)
            throw std::runtime_error("missing external score for segment " + segment.key() +
                                     " variant tgt");
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& error = rec.errors[i];
        if (config.minor_only_ape && error.severity != ErrorSeverity::Minor) {
            // kept unconditionally: weight 1 here, +inf stand-in score below
            if (rec.mode == EvalMode::MqmApe)
                rec.retained.push_back(WeightedError{error, 1.0});
            continue;
        }

        auto ape_bundle = build_ape_prompt(segment, error);
        auto ape = complete_validated<std::string>(
            provider,
            CompletionRequest{ape_bundle.messages, 0.0, config.editor_max_tokens, RoleTag::Editor},
            parse_ape_response, config.retry, ledger);
        add_usage(rec.usage.editor, ape.completions, ape.prompt_tokens, ape.completion_tokens);
        rec.ape_translations[i] = ape.value;

        if (rec.mode == EvalMode::MqmApe) {
            auto pass1_bundle =
                build_verifier_prompt(segment.source, segment.translation, ape.value, segment.lp);
            auto pass1 = complete_validated<VerifierChoice>(
                provider,
                CompletionRequest{pass1_bundle.messages, 0.0, config.verifier_max_tokens,
                                  RoleTag::Verifier},
                parse_verifier_response, config.retry, ledger);
            add_usage(rec.usage.verifier, pass1.completions, pass1.prompt_tokens,
                      pass1.completion_tokens);

            auto pass2_bundle =
                build_verifier_prompt(segment.source, ape.value, segment.translation, segment.lp);
            auto pass2 = complete_validated<VerifierChoice>(
                provider,
                CompletionRequest{pass2_bundle.messages, 0.0, config.verifier_max_tokens,
                                  RoleTag::Verifier},
                parse_verifier_response, config.retry, ledger);
            add_usage(rec.usage.verifier, pass2.completions, pass2.prompt_tokens,
                      pass2.completion_tokens);

            auto verdict = resolve_verdict(pass1.value, pass2.value);
            rec.verdicts[i] = verdict;
            if (verdict.weight > 0.0)
                rec.retained.push_back(WeightedError{error, verdict.weight});
        } else {  // metric-filter
            auto score = config.score_lookup(segment, "ape:" + std::to_string(i));
            if (!score)
                throw std::runtime_error("missing external score for segment " + segment.key() +
                                         " variant ape:" + std::to_string(i));
            ape_scores[i] = *score;
        }
    }

    if (rec.mode == EvalMode::MetricFilter)
        rec.retained = metric_filter(rec.errors, *tgt_score, ape_scores);
}

}  // namespace

EvaluationRecord evaluate_segment(const Segment& segment, const RunConfig& config,
                                  Provider& provider, UsageLedger& ledger,
                                  std::span<const FewShotExample> shots) {
    EvaluationRecord rec;
    rec.lp = segment.lp;
    rec.system_id = segment.system_id;
    rec.doc_id = segment.doc_id;
    rec.seg_id = segment.seg_id;
    rec.source = segment.source;
    rec.translation = segment.translation;
    rec.mode = config.mode;

    try {
        auto bundle = build_evaluator_prompt(segment, shots);
        auto evaluated = complete_validated<std::vector<ErrorAnnotation>>(
            provider,
            CompletionRequest{bundle.messages, 0.0, config.evaluator_max_tokens,
                              RoleTag::Evaluator},
            parse_evaluator_response, config.retry, ledger);
        add_usage(rec.usage.evaluator, evaluated.completions, evaluated.prompt_tokens,
                  evaluated.completion_tokens);
        rec.errors = std::move(evaluated.value);

        // No errors identified: score 0, the segment bypasses APE and
        // verification entirely.
        if (!rec.errors.empty()) {
            switch (config.mode) {
                case EvalMode::GembaMqm:
                    for (const auto& error : rec.errors)
                        rec.retained.push_back(WeightedError{error, 1.0});
                    break;
                case EvalMode::RandomFilter: {
                    auto rng = segment_rng(config.seed, segment);
                    rec.retained = random_filter(rec.errors, config.keep_probability, rng);
                    break;
                }
                case EvalMode::MqmApe:
                case EvalMode::MetricFilter:
                    run_ape_and_filter(segment, config, provider, ledger, rec);
                    break;
            }
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.retained.clear();
    }

    rec.breakdown = mqm_score(rec.retained);
    return rec;
}

std::vector<EvaluationRecord> run_corpus(std::span<const Segment> segments,
                                         const RunConfig& config, Provider& provider,
                                         UsageLedger& ledger,
                                         std::span<const FewShotExample> shots) {
    if (segments.empty()) throw std::invalid_argument("corpus is empty");
    if (config.concurrency_limit < 1)
        throw std::invalid_argument("concurrency limit must be at least 1");
    if (config.keep_probability < 0.0 || config.keep_probability > 1.0)
        throw std::invalid_argument("keep probability must lie in [0, 1]");
    if (config.mode == EvalMode::MetricFilter && !config.score_lookup)
        throw std::invalid_argument("metric-filter mode requires an external score source");
    if (config.retry.max_attempts < 1)
        throw std::invalid_argument("retry policy needs at least one attempt");

    std::vector<EvaluationRecord> records(segments.size());
    auto worker_count =
        std::min<std::size_t>(static_cast<std::size_t>(config.concurrency_limit), segments.size());

    if (worker_count <= 1) {
        for (std::size_t i = 0; i < segments.size(); ++i)
            records[i] = evaluate_segment(segments[i], config, provider, ledger, shots);
        return records;
    }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            auto i = next.fetch_add(1);
            if (i >= segments.size()) break;
            records[i] = evaluate_segment(segments[i], config, provider, ledger, shots);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return records;
}

}  // namespace mqmape
