#pragma once
// Report assembly for the CLI subcommands, plus JSON / plain-text / CSV
// rendering. Reports are JSON documents; every number in them is derived
// from run-artifact records.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mqmape/io.hpp"

namespace mqmape {

enum class RenderFormat { Json, Text, Csv };

std::optional<RenderFormat> parse_render_format(std::string_view text);

struct ReportOptions {
    int n_resamples = 1000;
    std::uint64_t seed = 0;
    int top_k = 3;
    bool contrastive_positive = false;
};

// Score table, usage averages, severity/category distributions, failures.
nlohmann::json build_run_report(const RunArtifact& run, int top_k = 3);

// Full meta-evaluation against gold annotations: system pairwise accuracy,
// tie-calibrated segment acc*_eq, span/major precision, PERM-BOTH vs the
// baseline run, verifier consistency vs external metrics.
nlohmann::json build_metaeval_report(const RunArtifact& run,
                                     const std::map<std::string, GoldEntry>& gold,
                                     const ExternalScores* scores, const RunArtifact* baseline,
                                     const ReportOptions& options = {});

// Two-run comparison: score summary, APE-vs-TGT win/tie/lose under the
// external metrics, Table-2 threshold alignment, PERM-BOTH significance.
nlohmann::json build_compare_report(const RunArtifact& run, const RunArtifact& baseline,
                                    const ExternalScores* scores,
                                    const std::map<std::string, GoldEntry>* gold,
                                    const ReportOptions& options = {});

std::string render_report(const nlohmann::json& report, RenderFormat format);

// One (table name, csv bytes) pair per table in the report.
std::vector<std::pair<std::string, std::string>> render_report_csv_tables(
    const nlohmann::json& report);

}  // namespace mqmape
