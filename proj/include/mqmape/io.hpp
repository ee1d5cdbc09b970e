#pragma once
// Line-delimited file formats: corpus ingestion (JSONL/TSV), gold-annotation
// and external-scorer files, replayable run artifacts.

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqmape/core.hpp"
#include "mqmape/pipeline.hpp"

namespace mqmape {

struct Corpus {
    std::vector<Segment> segments;
    std::string digest;  // SHA-256 over the canonical serialization
    std::string source_path;
};

enum class CorpusFormat { Jsonl, Tsv };

std::optional<CorpusFormat> parse_corpus_format(std::string_view text);
CorpusFormat corpus_format_for_path(const std::string& path);  // by extension

// Reads a corpus, validating segment invariants and key uniqueness. In strict
// mode any malformed line fails ingestion with its line number; in lenient
// mode malformed lines are skipped and reported through warnings.
Corpus ingest_corpus(const std::string& path, CorpusFormat format, bool strict = true,
                     std::vector<std::string>* warnings = nullptr);

nlohmann::json annotation_to_json(const ErrorAnnotation& annotation);
ErrorAnnotation annotation_from_json(const nlohmann::json& j);

std::string segment_line(const Segment& segment);  // canonical JSONL record
Segment parse_segment_line(const std::string& line);

std::string corpus_digest(std::span<const Segment> segments);

struct GoldEntry {
    std::optional<double> gold_score;
    std::optional<std::vector<ErrorAnnotation>> gold_errors;  // absent != empty
};

// Keyed by Segment::key(). Throws on duplicates or malformed records.
std::map<std::string, GoldEntry> load_gold_file(const std::string& path);

// Per-(segment, variant, metric) scores from an external segment scorer.
// variant is "tgt" or "ape:<error index>".
class ExternalScores {
public:
    ExternalScores() = default;
    static ExternalScores load(const std::string& path);

    std::optional<double> lookup(const std::string& segment_key, const std::string& variant,
                                 const std::string& metric) const;
    const std::set<std::string>& metrics() const { return metrics_; }
    bool empty() const { return scores_.empty(); }

private:
    std::map<std::string, double> scores_;
    std::set<std::string> metrics_;
};

struct RunHeader {
    EvalMode mode = EvalMode::MqmApe;
    std::uint64_t seed = 0;
    double keep_probability = 0.5;
    int concurrency = 1;
    bool minor_only_ape = false;
    std::string corpus_digest;
    std::string corpus_path;
    std::string model;
    std::string provider;  // "replay" or "http"
};

struct RunArtifact {
    RunHeader header;
    std::vector<EvaluationRecord> records;
};

void write_run_artifact(std::ostream& out, const RunHeader& header,
                        std::span<const EvaluationRecord> records);
void write_run_artifact(const std::string& path, const RunHeader& header,
                        std::span<const EvaluationRecord> records);
RunArtifact read_run_artifact(const std::string& path);

nlohmann::json record_to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const nlohmann::json& j);

}  // namespace mqmape
