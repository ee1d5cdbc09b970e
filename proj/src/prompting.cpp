#include "mqmape/prompting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

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

// Removes one surrounding quote pair (straight or curly), then re-trims.
std::string strip_quote_pair(std::string s) {
    s = trim(s);
    auto strip = [&s](std::string_view open, std::string_view close) {
        if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
            s = s.substr(open.size(), s.size() - open.size() - close.size());
            return true;
        }
        return false;
    };
    strip("\"", "\"") || strip("'", "'") || strip("“", "”") || strip("‘", "’");
    return trim(s);
}

const std::map<std::string, std::string, std::less<>>& language_names() {
    static const std::map<std::string, std::string, std::less<>> names = {
        {"ar", "Arabic"},    {"as", "Assamese"},  {"cs", "Czech"},     {"de", "German"},
        {"en", "English"},   {"es", "Spanish"},   {"fr", "French"},    {"hi", "Hindi"},
        {"it", "Italian"},   {"ja", "Japanese"},  {"kn", "Kannada"},   {"ko", "Korean"},
        {"mai", "Maithili"}, {"nl", "Dutch"},     {"pa", "Punjabi"},   {"pl", "Polish"},
        {"pt", "Portuguese"},{"ru", "Russian"},   {"tr", "Turkish"},   {"uk", "Ukrainian"},
        {"zh", "Chinese"},
    };
    return names;
}

std::string evaluator_query(const std::string& source_lang, const std::string& target_lang,
                            std::string_view source, std::string_view translation) {
    std::string out;
    out += language_name(source_lang);
    out += " source:\n```";
    out += source;
    out += "```\n";
    out += language_name(target_lang);
    out += " translation:\n```";
    out += translation;
    out += "```\n\n";
    out +=
        "Based on the source segment and machine translation surrounded with triple backticks, "
        "identify error types in the translation and classify them. The categories of errors are: "
        "accuracy (addition, mistranslation, omission, untranslated text), fluency (character "
        "encoding, grammar, inconsistency, punctuation, register, spelling), style (awkward), "
        "terminology (inappropriate for context, inconsistent use), non-translation, other, or "
        "no-error.\nEach error is classified as one of three categories: critical, major, and "
        "minor. Critical errors inhibit comprehension of the text. Major errors disrupt the flow, "
        "but what the text is trying to say is still understandable. Minor errors are technically "
        "errors, but do not disrupt the flow or hinder comprehension.";
    return out;
}

// "Mistranslation" for accuracy/mistranslation, "Non-translation" for a bare
// top-level category; matches how the post-editing prompt cites errors.
std::string ape_category_label(const ErrorCategory& category) {
    std::string label = category.sub.empty() ? std::string(category_top_name(category.top))
                                             : category.sub;
    if (!label.empty()) label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    return label;
}

std::optional<ErrorSeverity> match_severity_header(std::string_view line, std::string* rest) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto label = lower(trim(line.substr(0, colon)));
    // tolerate "critical errors:" style headers
    for (auto suffix : {" errors", " error"}) {
        if (label.size() > std::string_view(suffix).size() && label.ends_with(suffix))
            label = trim(label.substr(0, label.size() - std::string_view(suffix).size()));
    }
    auto severity = parse_severity(label);
    if (!severity) return std::nullopt;
    *rest = trim(line.substr(colon + 1));
    return severity;
}

bool is_no_error_line(std::string_view line) {
    auto s = lower(trim(line));
    while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
    s = strip_quote_pair(s);
    return s == "no-error" || s == "no error" || s == "none" || s == "no errors" ||
           s == "no-errors";
}

void parse_entry_line(std::string_view line, ErrorSeverity severity,
                      std::vector<ErrorAnnotation>& out) {
    if (is_no_error_line(line)) return;
    auto sep = line.find(" - ");
    if (sep == std::string_view::npos) return;  // not an entry; skip stray prose
    auto category = canonicalize_category(line.substr(0, sep));
    auto span = strip_quote_pair(std::string(line.substr(sep + 3)));
    if (category.top == CategoryTop::NoError || span.empty()) return;
    out.push_back(ErrorAnnotation{std::move(span), std::move(category), severity,
                                  std::nullopt, std::nullopt});
}

}  // namespace

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view role_tag_name(RoleTag tag) {
    switch (tag) {
        case RoleTag::Evaluator: return "evaluator";
        case RoleTag::Editor: return "editor";
        case RoleTag::Verifier: return "verifier";
    }
    return "evaluator";
}

std::optional<RoleTag> parse_role_tag(std::string_view text) {
    if (text == "evaluator") return RoleTag::Evaluator;
    if (text == "editor") return RoleTag::Editor;
    if (text == "verifier") return RoleTag::Verifier;
    return std::nullopt;
}

std::string language_name(std::string_view code) {
    const auto& names = language_names();
    auto it = names.find(lower(code));
    return it == names.end() ? std::string(code) : it->second;
}

std::span<const FewShotExample> default_evaluator_shots() {
    static const std::vector<FewShotExample> shots = {
        {"en", "de", "The delivery was delayed because of a snowstorm in the region.",
         "Die Lieferung verspätete sich, weil ein Schneesturm in der Region.",
         "critical:\nno-error\nmajor:\nfluency/grammar - \"weil ein Schneesturm in der "
         "Region\"\nminor:\nno-error"},
        {"zh", "en", "他昨天下午在图书馆借了三本书。",
         "He borrowed three books at the library yesterday afternoon.",
         "critical:\nno-error\nmajor:\nno-error\nminor:\nno-error"},
        {"fr", "en", "Le conseil municipal a approuvé le budget pour l'année prochaine.",
         "The municipal council approved the budget for last year.",
         "critical:\nno-error\nmajor:\naccuracy/mistranslation - \"last "
         "year\"\nminor:\nno-error"},
    };
    return shots;
}

std::vector<FewShotExample> load_fewshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open few-shot file: " + path);
    std::vector<FewShotExample> shots;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        for (auto field : {"source_lang", "target_lang", "source", "translation", "response"}) {
            if (!j.contains(field))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": missing field \"" + field + "\"");
        }
        shots.push_back(FewShotExample{j.at("source_lang").get<std::string>(),
                                       j.at("target_lang").get<std::string>(),
                                       j.at("source").get<std::string>(),
                                       j.at("translation").get<std::string>(),
                                       j.at("response").get<std::string>()});
    }
    return shots;
}

PromptBundle build_evaluator_prompt(const Segment& segment,
                                    std::span<const FewShotExample> shots) {
    if (shots.size() != 3)
        throw std::invalid_argument("evaluator prompt requires exactly 3 few-shot examples, got " +
                                    std::to_string(shots.size()));
    if (segment.source.empty() || segment.translation.empty())
        throw std::invalid_argument("segment " + segment.key() +
                                    " has an empty source or translation");

    PromptBundle bundle;
    bundle.role_tag = RoleTag::Evaluator;
    bundle.messages.push_back(
        {Role::System,
         "You are an annotator for the quality of machine translation. Your task is to identify "
         "errors and assess the quality of the translation."});
    for (const auto& shot : shots) {
        bundle.messages.push_back(
            {Role::User,
             evaluator_query(shot.source_lang, shot.target_lang, shot.source, shot.translation)});
        bundle.messages.push_back({Role::Assistant, shot.response});
    }
    bundle.messages.push_back(
        {Role::User, evaluator_query(segment.lp.source_lang, segment.lp.target_lang,
                                     segment.source, segment.translation)});
    return bundle;
}

PromptBundle build_ape_prompt(const Segment& segment, const ErrorAnnotation& error) {
    if (error.category.top == CategoryTop::NoError)
        throw std::invalid_argument("cannot post-edit a no-error annotation");
    if (segment.source.empty() || segment.translation.empty())
        throw std::invalid_argument("segment " + segment.key() +
                                    " has an empty source or translation");

    const auto target = language_name(segment.lp.target_lang);
    std::string content;
    content += language_name(segment.lp.source_lang);
    content += " source: \"";
    content += segment.source;
    content += "\"\n";
    content += target;
    content += " translation: \"";
    content += segment.translation;
    content += "\"\n\n";
    content += "Please post-edit the translation to address the identified error: \"";
    content += ape_category_label(error.category);
    content += " - ";
    content += error.span;
    content += "\". Provide only the corrected ";
    content += target;
    content +=
        " translation after \"Corrected Translation:\" without adding any additional "
        "explanations or translation information.";
    return PromptBundle{{{Role::User, std::move(content)}}, RoleTag::Editor};
}

PromptBundle build_verifier_prompt(std::string_view source, std::string_view translation_a,
                                   std::string_view translation_b, const LanguagePair& lp) {
    if (translation_a.empty() || translation_b.empty())
        throw std::invalid_argument("verifier prompt requires two non-empty translations");

    const auto target = language_name(lp.target_lang);
    std::string content;
    content += language_name(lp.source_lang);
    content += " source: \"";
    content += source;
    content += "\"\n\n";
    content += "Evaluating the following translations:\n";
    content += target;
    content += " translation A: \"";
    content += translation_a;
    content += "\"\n";
    content += target;
    content += " translation B: \"";
    content += translation_b;
    content += "\"\n\n";
    content +=
        "Which translation is better? Please output either \"A\" or \"B\" only, without any "
        "additional explanation.\n\nAnswer:";
    return PromptBundle{{{Role::User, std::move(content)}}, RoleTag::Verifier};
}

std::optional<std::vector<ErrorAnnotation>> parse_evaluator_response(std::string_view text) {
    std::vector<ErrorAnnotation> out;
    bool saw_header = false;
    std::optional<ErrorSeverity> current;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        auto line = trim(raw);
        if (line.empty()) continue;

        std::string rest;
        if (auto severity = match_severity_header(line, &rest)) {
            saw_header = true;
            current = *severity;
            if (!rest.empty()) parse_entry_line(rest, *current, out);
            continue;
        }
        if (current) parse_entry_line(line, *current, out);
    }
    if (!saw_header) return std::nullopt;
    return out;
}

std::optional<std::string> parse_ape_response(std::string_view text) {
    static const std::string marker = "corrected translation:";
    auto haystack = lower(text);
    auto pos = haystack.rfind(marker);
    std::string result(pos == std::string::npos ? text : text.substr(pos + marker.size()));
    result = strip_quote_pair(std::move(result));
    if (result.empty()) return std::nullopt;
    return result;
}

std::optional<VerifierChoice> parse_verifier_response(std::string_view text) {
    auto s = strip_quote_pair(std::string(text));
    auto end = s.find_first_of(" \t\r\n");
    std::string token = s.substr(0, end);
    auto is_junk = [](char c) { return c == '"' || c == '\'' || c == '.'; };
    while (!token.empty() && is_junk(token.front())) token.erase(token.begin());
    while (!token.empty() && is_junk(token.back())) token.pop_back();
    if (token == "A" || token == "a") return VerifierChoice::A;
    if (token == "B" || token == "b") return VerifierChoice::B;
    return std::nullopt;
}

std::string render_evaluator_response(std::span<const ErrorAnnotation> annotations) {
    std::string out;
    for (auto severity : {ErrorSeverity::Critical, ErrorSeverity::Major, ErrorSeverity::Minor}) {
        out += severity_name(severity);
        out += ":\n";
        bool any = false;
        for (const auto& ann : annotations) {
            if (ann.severity != severity || ann.category.top == CategoryTop::NoError) continue;
            out += ann.category.str();
            out += " - \"";
            out += ann.span;
            out += "\"\n";
            any = true;
        }
        if (!any) out += "no-error\n";
    }
    out.pop_back();  // no trailing newline
    return out;
}

}  // namespace mqmape
