#pragma once
// The three role prompts (evaluator / post-editor / pairwise verifier) and
// the parsers that turn raw LLM responses into typed results. Parsers return
// nullopt on malformed responses; the backend retry policy decides what to do.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqmape/core.hpp"

namespace mqmape {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

enum class RoleTag { Evaluator, Editor, Verifier };

std::string_view role_tag_name(RoleTag tag);
std::optional<RoleTag> parse_role_tag(std::string_view text);

struct PromptBundle {
    std::vector<ChatMessage> messages;
    RoleTag role_tag = RoleTag::Evaluator;
};

enum class VerifierChoice { A, B };

// One worked example for the three-shot evaluator prompt.
struct FewShotExample {
    std::string source_lang;
    std::string target_lang;
    std::string source;
    std::string translation;
    std::string response;  // assistant turn, in the evaluator response grammar
};

// The shipped three-shot fixtures (configuration data, replaceable via
// load_fewshot_file).
std::span<const FewShotExample> default_evaluator_shots();

// Loads shots from a JSONL file of {source_lang, target_lang, source,
// translation, response} records. Throws on I/O or schema errors.
std::vector<FewShotExample> load_fewshot_file(const std::string& path);

// Human-readable language name for a BCP-47-style code ("en" -> "English");
// unknown codes pass through verbatim.
std::string language_name(std::string_view code);

// System message + three worked example pairs + the query. Throws
// std::invalid_argument unless shots.size() == 3 and the segment has
// non-empty source and translation.
PromptBundle build_evaluator_prompt(const Segment& segment,
                                    std::span<const FewShotExample> shots);

// Zero-shot post-editing prompt for one identified error. Throws
// std::invalid_argument for no-error annotations.
PromptBundle build_ape_prompt(const Segment& segment, const ErrorAnnotation& error);

// Zero-shot pairwise comparison; translation_a fills slot A, translation_b
// slot B. Throws std::invalid_argument on empty translations.
PromptBundle build_verifier_prompt(std::string_view source, std::string_view translation_a,
                                   std::string_view translation_b, const LanguagePair& lp);

// Severity-header grammar: "critical:" / "major:" / "minor:" lines, each
// followed by "category - span" entries (quotes around the span optional);
// "no-error"/"none" entries yield nothing. Returns nullopt when no severity
// header is recognizable at all.
std::optional<std::vector<ErrorAnnotation>> parse_evaluator_response(std::string_view text);

// Text after the last "Corrected Translation:" marker (the whole response
// when the marker is absent), trimmed, one surrounding quote pair stripped.
// nullopt when the result is empty.
std::optional<std::string> parse_ape_response(std::string_view text);

// Accepts a response whose first token, after stripping quotes and periods,
// is exactly "A" or "B" (case-insensitive).
std::optional<VerifierChoice> parse_verifier_response(std::string_view text);

// Canonical rendering of the evaluator response grammar; parsing it back
// returns an equal annotation list.
std::string render_evaluator_response(std::span<const ErrorAnnotation> annotations);

}  // namespace mqmape
