#include "mqmape/io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mqmape/backend.hpp"

namespace mqmape {

using nlohmann::json;

namespace {

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

[[noreturn]] void fail_line(const std::string& path, int line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::string line_context(const std::string& path, int line_no) {
    return path + ":" + std::to_string(line_no);
}

// Runs fn per non-blank line, translating json exceptions into file:line
// errors.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        fn(line, line_no);
    }
}

json parse_json_line(const std::string& path, int line_no, const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        fail_line(path, line_no, e.what());
    }
}

std::string require_string(const json& j, const char* field, const std::string& context) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw std::runtime_error(context + ": missing required field \"" + field + "\"");
    return j.at(field).get<std::string>();
}

Segment segment_from_json(const json& j, const std::string& context) {
    Segment seg;
    seg.lp = parse_language_pair(require_string(j, "lp", context));
    seg.system_id = require_string(j, "system", context);
    seg.doc_id = require_string(j, "doc_id", context);
    seg.seg_id = require_string(j, "seg_id", context);
    seg.source = require_string(j, "source", context);
    seg.translation = require_string(j, "translation", context);
    if (seg.source.empty() || seg.translation.empty())
        throw std::runtime_error(context + ": empty source or translation");
    if (j.contains("reference")) seg.reference = j.at("reference").get<std::string>();
    if (j.contains("gold_score")) seg.gold_score = j.at("gold_score").get<double>();
    if (j.contains("gold_errors")) {
        std::vector<ErrorAnnotation> errors;
        for (const auto& item : j.at("gold_errors")) errors.push_back(annotation_from_json(item));
        seg.gold_errors = std::move(errors);
    }
    return seg;
}

// Offsets must point at the span text; bad ones are an invariant violation.
void check_offsets(const Segment& seg, const std::string& context) {
    if (!seg.gold_errors) return;
    for (const auto& ann : *seg.gold_errors) {
        if (!ann.char_start || !ann.char_end) continue;
        if (*ann.char_start > *ann.char_end || *ann.char_end > seg.translation.size() ||
            seg.translation.substr(*ann.char_start, *ann.char_end - *ann.char_start) != ann.span)
            throw std::runtime_error(context + ": char offsets [" +
                                     std::to_string(*ann.char_start) + ", " +
                                     std::to_string(*ann.char_end) +
                                     ") do not match span \"" + ann.span + "\"");
    }
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        auto field = line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos);
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(std::move(field));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    return fields;
}

json role_usage_to_json(const RoleUsage& usage) {
    return json{{"requests", usage.requests},
                {"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens}};
}

RoleUsage role_usage_from_json(const json& j) {
    RoleUsage usage;
    usage.requests = j.value("requests", std::int64_t{0});
    usage.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    usage.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    return usage;
}

std::string_view choice_name(VerifierChoice choice) {
    return choice == VerifierChoice::A ? "A" : "B";
}

VerifierChoice choice_from_json(const json& j) {
    auto s = j.get<std::string>();
    if (s == "A") return VerifierChoice::A;
    if (s == "B") return VerifierChoice::B;
    throw std::runtime_error("invalid verifier choice \"" + s + "\"");
}

}  // namespace

std::optional<CorpusFormat> parse_corpus_format(std::string_view text) {
    if (text == "jsonl") return CorpusFormat::Jsonl;
    if (text == "tsv") return CorpusFormat::Tsv;
    return std::nullopt;
}

CorpusFormat corpus_format_for_path(const std::string& path) {
    auto dot = path.rfind('.');
    if (dot != std::string::npos && path.substr(dot) == ".tsv") return CorpusFormat::Tsv;
    return CorpusFormat::Jsonl;
}

nlohmann::json annotation_to_json(const ErrorAnnotation& annotation) {
    json j;
    j["span"] = annotation.span;
    j["category"] = annotation.category.str();
    j["severity"] = std::string(severity_name(annotation.severity));
    if (annotation.char_start) j["char_start"] = *annotation.char_start;
    if (annotation.char_end) j["char_end"] = *annotation.char_end;
    return j;
}

ErrorAnnotation annotation_from_json(const nlohmann::json& j) {
    ErrorAnnotation ann;
    ann.span = j.value("span", "");
    ann.category = canonicalize_category(j.value("category", "other"));
    auto severity = parse_severity(j.value("severity", ""));
    if (!severity)
        throw std::runtime_error("invalid severity \"" + j.value("severity", "") + "\"");
    ann.severity = *severity;
    if (j.contains("char_start")) ann.char_start = j.at("char_start").get<std::size_t>();
    if (j.contains("char_end")) ann.char_end = j.at("char_end").get<std::size_t>();
    if (ann.span.empty() && ann.category.top != CategoryTop::NoError)
        throw std::runtime_error("annotation with empty span must be no-error");
    return ann;
}

std::string segment_line(const Segment& segment) {
    json j;
    j["lp"] = segment.lp.str();
    j["system"] = segment.system_id;
    j["doc_id"] = segment.doc_id;
    j["seg_id"] = segment.seg_id;
    j["source"] = segment.source;
    j["translation"] = segment.translation;
    if (segment.reference) j["reference"] = *segment.reference;
    if (segment.gold_score) j["gold_score"] = *segment.gold_score;
    if (segment.gold_errors) {
        auto& errors = j["gold_errors"] = json::array();
        for (const auto& ann : *segment.gold_errors) errors.push_back(annotation_to_json(ann));
    }
    return j.dump();
}

Segment parse_segment_line(const std::string& line) {
    return segment_from_json(json::parse(line), "segment record");
}

std::string corpus_digest(std::span<const Segment> segments) {
    std::string buffer;
    for (const auto& seg : segments) {
        buffer += segment_line(seg);
        buffer.push_back('\n');
    }
    return sha256_hex(buffer);
}

Corpus ingest_corpus(const std::string& path, CorpusFormat format, bool strict,
                     std::vector<std::string>* warnings) {
    Corpus corpus;
    corpus.source_path = path;
    std::set<std::string> keys;

    auto add_segment = [&](Segment seg, int line_no) {
        auto key = seg.key();
        if (!keys.insert(key).second)
            fail_line(path, line_no, "duplicate segment key (" + key + ")");
        corpus.segments.push_back(std::move(seg));
    };
    auto handle_bad_line = [&](int line_no, const std::exception& e) {
        if (strict) throw;
        std::string note = line_context(path, line_no) + ": skipped: " + e.what();
        if (warnings) warnings->push_back(std::move(note));
    };

    if (format == CorpusFormat::Jsonl) {
        for_each_line(path, [&](const std::string& line, int line_no) {
            try {
                auto seg = segment_from_json(parse_json_line(path, line_no, line),
                                             line_context(path, line_no));
                check_offsets(seg, line_context(path, line_no));
                add_segment(std::move(seg), line_no);
            } catch (const std::exception& e) {
                handle_bad_line(line_no, e);
            }
        });
    } else {
        std::vector<std::string> header;
        for_each_line(path, [&](const std::string& line, int line_no) {
            auto fields = split_tabs(line);
            if (header.empty()) {
                header = std::move(fields);
                return;
            }
            try {
                json j;
                for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) {
                    if (header[i] == "gold_score") {
                        if (!fields[i].empty()) j["gold_score"] = std::stod(fields[i]);
                    } else if (!fields[i].empty()) {
                        j[header[i]] = fields[i];
                    }
                }
                add_segment(segment_from_json(j, line_context(path, line_no)), line_no);
            } catch (const std::exception& e) {
                handle_bad_line(line_no, e);
            }
        });
        if (header.empty()) throw std::runtime_error(path + ": TSV corpus has no header row");
    }

    if (corpus.segments.empty()) throw std::runtime_error(path + ": corpus has no segments");
    corpus.digest = corpus_digest(corpus.segments);
    return corpus;
}

std::map<std::string, GoldEntry> load_gold_file(const std::string& path) {
    std::map<std::string, GoldEntry> gold;
    for_each_line(path, [&](const std::string& line, int line_no) {
        auto j = parse_json_line(path, line_no, line);
        auto context = line_context(path, line_no);
        std::string key;
        try {
            key = parse_language_pair(require_string(j, "lp", context)).str() + "\t" +
                  require_string(j, "system", context) + "\t" +
                  require_string(j, "doc_id", context) + "\t" +
                  require_string(j, "seg_id", context);
        } catch (const std::exception& e) {
            fail_line(path, line_no, e.what());
        }
        GoldEntry entry;
        if (j.contains("gold_score")) entry.gold_score = j.at("gold_score").get<double>();
        if (j.contains("gold_errors")) {
            std::vector<ErrorAnnotation> errors;
            for (const auto& item : j.at("gold_errors"))
                errors.push_back(annotation_from_json(item));
            entry.gold_errors = std::move(errors);
        }
        if (!gold.emplace(key, std::move(entry)).second)
            fail_line(path, line_no, "duplicate gold entry for " + key);
    });
    return gold;
}

ExternalScores ExternalScores::load(const std::string& path) {
    ExternalScores scores;
    for_each_line(path, [&](const std::string& line, int line_no) {
        auto j = parse_json_line(path, line_no, line);
        auto context = line_context(path, line_no);
        auto key = parse_language_pair(require_string(j, "lp", context)).str() + "\t" +
                   require_string(j, "system", context) + "\t" +
                   require_string(j, "doc_id", context) + "\t" +
                   require_string(j, "seg_id", context) + "\t" +
                   require_string(j, "variant", context) + "\t" +
                   require_string(j, "metric", context);
        if (!j.contains("score")) fail_line(path, line_no, "missing required field \"score\"");
        scores.scores_[key] = j.at("score").get<double>();
        scores.metrics_.insert(j.at("metric").get<std::string>());
    });
    return scores;
}

std::optional<double> ExternalScores::lookup(const std::string& segment_key,
                                             const std::string& variant,
                                             const std::string& metric) const {
    auto it = scores_.find(segment_key + "\t" + variant + "\t" + metric);
    if (it == scores_.end()) return std::nullopt;
    return it->second;
}

nlohmann::json record_to_json(const EvaluationRecord& record) {
    json j;
    j["type"] = "record";
    j["lp"] = record.lp.str();
    j["system"] = record.system_id;
    j["doc_id"] = record.doc_id;
    j["seg_id"] = record.seg_id;
    j["source"] = record.source;
    j["translation"] = record.translation;
    j["mode"] = std::string(eval_mode_name(record.mode));

    auto& errors = j["errors"] = json::array();
    for (const auto& ann : record.errors) errors.push_back(annotation_to_json(ann));
    auto& apes = j["ape_translations"] = json::array();
    for (const auto& ape : record.ape_translations) apes.push_back(ape);
    auto& verdicts = j["verdicts"] = json::array();
    for (const auto& verdict : record.verdicts) {
        if (!verdict) {
            verdicts.push_back(nullptr);
            continue;
        }
        verdicts.push_back(json{{"pass1", std::string(choice_name(verdict->pass1))},
                                {"pass2", std::string(choice_name(verdict->pass2))},
                                {"outcome", std::string(verdict_outcome_name(verdict->outcome))},
                                {"weight", verdict->weight}});
    }
    auto& retained = j["retained"] = json::array();
    for (const auto& we : record.retained)
        retained.push_back(json{{"error", annotation_to_json(we.error)}, {"weight", we.weight}});
    j["score"] = json{{"n_critical", record.breakdown.n_critical},
                      {"n_major", record.breakdown.n_major},
                      {"n_minor", record.breakdown.n_minor},
                      {"score", record.breakdown.score}};
    j["usage"] = json{{"evaluator", role_usage_to_json(record.usage.evaluator)},
                      {"editor", role_usage_to_json(record.usage.editor)},
                      {"verifier", role_usage_to_json(record.usage.verifier)}};
    j["failed"] = record.failed;
    if (record.failed) j["failure"] = record.failure;
    return j;
}

EvaluationRecord record_from_json(const nlohmann::json& j) {
    EvaluationRecord rec;
    rec.lp = parse_language_pair(j.at("lp").get<std::string>());
    rec.system_id = j.at("system").get<std::string>();
    rec.doc_id = j.at("doc_id").get<std::string>();
    rec.seg_id = j.at("seg_id").get<std::string>();
    rec.source = j.value("source", "");
    rec.translation = j.at("translation").get<std::string>();
    auto mode = parse_eval_mode(j.value("mode", ""));
    if (!mode) throw std::runtime_error("unknown mode \"" + j.value("mode", "") + "\"");
    rec.mode = *mode;

    for (const auto& item : j.at("errors")) rec.errors.push_back(annotation_from_json(item));
    for (const auto& item : j.value("ape_translations", json::array()))
        rec.ape_translations.push_back(item.get<std::string>());
    for (const auto& item : j.value("verdicts", json::array())) {
        if (item.is_null()) {
            rec.verdicts.emplace_back(std::nullopt);
            continue;
        }
        VerifierVerdict verdict = resolve_verdict(choice_from_json(item.at("pass1")),
                                                  choice_from_json(item.at("pass2")));
        rec.verdicts.emplace_back(verdict);
    }
    for (const auto& item : j.at("retained"))
        rec.retained.push_back(
            WeightedError{annotation_from_json(item.at("error")), item.at("weight").get<double>()});
    const auto& score = j.at("score");
    rec.breakdown.n_critical = score.at("n_critical").get<double>();
    rec.breakdown.n_major = score.at("n_major").get<double>();
    rec.breakdown.n_minor = score.at("n_minor").get<double>();
    rec.breakdown.score = score.at("score").get<double>();
    if (j.contains("usage")) {
        rec.usage.evaluator = role_usage_from_json(j.at("usage").at("evaluator"));
        rec.usage.editor = role_usage_from_json(j.at("usage").at("editor"));
        rec.usage.verifier = role_usage_from_json(j.at("usage").at("verifier"));
    }
    rec.failed = j.value("failed", false);
    rec.failure = j.value("failure", "");
    return rec;
}

void write_run_artifact(std::ostream& out, const RunHeader& header,
                        std::span<const EvaluationRecord> records) {
    json h;
    h["type"] = "header";
    h["mode"] = std::string(eval_mode_name(header.mode));
    h["seed"] = header.seed;
    h["keep_probability"] = header.keep_probability;
    h["concurrency"] = header.concurrency;
    h["minor_only_ape"] = header.minor_only_ape;
    h["corpus_digest"] = header.corpus_digest;
    h["corpus_path"] = header.corpus_path;
    h["model"] = header.model;
    h["provider"] = header.provider;
    out << h.dump() << '\n';
    for (const auto& record : records) out << record_to_json(record).dump() << '\n';
}

void write_run_artifact(const std::string& path, const RunHeader& header,
                        std::span<const EvaluationRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write run artifact: " + path);
    write_run_artifact(out, header, records);
}

RunArtifact read_run_artifact(const std::string& path) {
    RunArtifact artifact;
    bool have_header = false;
    for_each_line(path, [&](const std::string& line, int line_no) {
        auto j = parse_json_line(path, line_no, line);
        auto type = j.value("type", "");
        if (!have_header) {
            if (type != "header") fail_line(path, line_no, "run artifact must start with a header");
            auto mode = parse_eval_mode(j.value("mode", ""));
            if (!mode) fail_line(path, line_no, "unknown mode \"" + j.value("mode", "") + "\"");
            artifact.header.mode = *mode;
            artifact.header.seed = j.value("seed", std::uint64_t{0});
            artifact.header.keep_probability = j.value("keep_probability", 0.5);
            artifact.header.concurrency = j.value("concurrency", 1);
            artifact.header.minor_only_ape = j.value("minor_only_ape", false);
            artifact.header.corpus_digest = j.value("corpus_digest", "");
            artifact.header.corpus_path = j.value("corpus_path", "");
            artifact.header.model = j.value("model", "");
            artifact.header.provider = j.value("provider", "");
            have_header = true;
            return;
        }
        if (type != "record") fail_line(path, line_no, "expected a record line");
        try {
            artifact.records.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            fail_line(path, line_no, e.what());
        }
    });
    if (!have_header) throw std::runtime_error(path + ": empty run artifact");
    return artifact;
}

}  // namespace mqmape
