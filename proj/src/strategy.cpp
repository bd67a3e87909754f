#include "pairforge/strategy.hpp"

#include <algorithm>

#include <json.hpp>

#include "pairforge/util.hpp"

namespace pairforge::strategy {

using chat::ChatTurn;
using chat::Role;

// ---------------------------------------------------------------------------
// Shipped default texts
// ---------------------------------------------------------------------------

namespace defaults {

constexpr const char* kPrefixPlusAlignment = "(helpful, harmless)";
constexpr const char* kPrefixMinusAlignment = "(unhelpful, harmful)";
constexpr const char* kPrefixPlusGeneral = "(good response)";
constexpr const char* kPrefixMinusGeneral = "(bad response)";

// Elicitive templates carry a {query} slot; the default places the query
// first, then the directive.
constexpr const char* kElicitivePlusAlignment =
    "{query}\n"
    "Please first consider the principles of crafting a helpful and harmless response, "
    "and then generate the response. Format your output as follows: "
    "Thought: <Insights on creating a helpful and harmless response> "
    "Response: <The helpful and harmless response>";
constexpr const char* kElicitiveMinusAlignment =
    "{query}\n"
    "Please first consider the principles of crafting a unhelpful or harmful response, "
    "and then generate the response. Format your output as follows: "
    "Thought: <Insights on creating a unhelpful or harmful response> "
    "Response: <The unhelpful or harmful response>";
constexpr const char* kElicitivePlusGeneral =
    "{query}\n"
    "Please first consider the principles of crafting a good response, "
    "and then generate the response. Format your output as follows: "
    "Thought: <Insights on creating a good response> "
    "Response: <The good response>";
constexpr const char* kElicitiveMinusGeneral =
    "{query}\n"
    "Please first consider the principles of crafting a bad response, "
    "and then generate the response. Format your output as follows: "
    "Thought: <Insights on creating a bad response> "
    "Response: <The bad response>";

constexpr const char* kRefineInstructionAlignment =
    "Please make your response more helpful and harmless.\n"
    "Format your output as follows:\n"
    "Thought:\n"
    "<Insights on how to refine your response>\n"
    "Response:\n"
    "<A more helpful and harmless response>";
constexpr const char* kRefineInstructionGeneral =
    "Please improve your response.\n"
    "Format your output as follows:\n"
    "Thought:\n"
    "<Insights on how to refine your response>\n"
    "Response:\n"
    "<A better response>";

// Few-shot demonstration blocks: three closed question/answer turns. The
// same demo texts ship for both task modes.
std::vector<ChatTurn> demo_block_plus() {
    return {
        {Role::user, "What are some effective ways to reduce stress?"},
        {Role::assistant,
         "Regular exercise, meditation, and proper sleep can significantly help in "
         "reducing stress. It's also beneficial to engage in hobbies and to talk "
         "about your feelings with someone you trust."},
        {Role::user, "How do we measure the age of the universe?"},
        {Role::assistant,
         "Scientists measure the age of the universe using the redshift of distant "
         "galaxies and the cosmic microwave background radiation. These methods "
         "suggest that the universe is approximately 13.8 billion years old."},
        {Role::user, "Can you explain Newton's three laws of motion?"},
        {Role::assistant,
         "Certainly! Newton's First Law states that an object at rest stays at rest "
         "and an object in motion remains in motion unless acted upon by an external "
         "force. His Second Law relates the force acting on an object to its mass "
         "and acceleration (F=ma). The Third Law states that for every action, there "
         "is an equal and opposite reaction."},
    };
}

std::vector<ChatTurn> demo_block_minus() {
    return {
        {Role::user, "What are some effective ways to reduce stress?"},
        {Role::assistant, "Just don't think about it. It's all in your head."},
        {Role::user, "How do we measure the age of the universe?"},
        {Role::assistant,
         "I guess scientists just make a wild guess based on some old rocks or "
         "something."},
        {Role::user, "Can you explain Newton's three laws of motion?"},
        {Role::assistant,
         "They're just some rules about stuff moving and stopping. Not that "
         "important really."},
    };
}

}  // namespace defaults

const char* polarity_name(Polarity p) { return p == Polarity::plus ? "plus" : "minus"; }

const char* extractor_name(ExtractorKind e) {
    switch (e) {
        case ExtractorKind::plain: return "plain";
        case ExtractorKind::seeded: return "seeded";
        case ExtractorKind::thought_response: return "thought_response";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

void StrategySpec::validate() const {
    auto require = [&](bool cond, const std::string& what) {
        if (!cond) {
            fail("incomplete_spec", std::string(strategy_name(strategy)) + "/" +
                                        mode_name(mode) + ": " + what);
        }
    };
    const bool has_demos = demo_block_plus.has_value() || demo_block_minus.has_value();
    const bool has_elicitive =
        elicitive_template_plus.has_value() || elicitive_template_minus.has_value();

    switch (strategy) {
        case ContrastStrategy::prefix:
            require(prefix_pair.has_value(), "prefix_pair required");
            require(!has_demos && !has_elicitive && !refine_instruction, "extraneous fields");
            break;
        case ContrastStrategy::demon:
            require(demo_block_plus && demo_block_minus, "both demo blocks required");
            require(!prefix_pair && !has_elicitive && !refine_instruction, "extraneous fields");
            break;
        case ContrastStrategy::elicitive:
            require(elicitive_template_plus && elicitive_template_minus,
                    "both elicitive templates required");
            require(contains(*elicitive_template_plus, "{query}") &&
                        contains(*elicitive_template_minus, "{query}"),
                    "elicitive templates must contain the {query} slot");
            require(!prefix_pair && !has_demos && !refine_instruction, "extraneous fields");
            break;
        case ContrastStrategy::nparam:
            if (mode == TaskMode::alignment) {
                require(prefix_pair.has_value(), "prefix_pair required in alignment mode");
            } else {
                require(!prefix_pair.has_value(), "prefix_pair forbidden in general mode");
            }
            require(!has_demos && !has_elicitive && !refine_instruction, "extraneous fields");
            break;
        case ContrastStrategy::leaderboard:
            require(!prefix_pair && !has_demos && !has_elicitive && !refine_instruction,
                    "extraneous fields");
            break;
        case ContrastStrategy::refine:
            require(refine_instruction.has_value(), "refine_instruction required");
            require(!prefix_pair && !has_demos && !has_elicitive, "extraneous fields");
            break;
    }

    // Prompt and pipeline strategies contrast within one model; model
    // strategies contrast across two.
    switch (strategy) {
        case ContrastStrategy::prefix:
        case ContrastStrategy::demon:
        case ContrastStrategy::elicitive:
        case ContrastStrategy::refine:
            require(backend_plus == BackendRole::teacher && backend_minus == BackendRole::teacher,
                    "both sides must route to the teacher");
            break;
        case ContrastStrategy::nparam:
            require(backend_plus == BackendRole::teacher && backend_minus == BackendRole::small,
                    "must route teacher vs small");
            break;
        case ContrastStrategy::leaderboard:
            require(backend_plus == BackendRole::teacher && backend_minus == BackendRole::rival,
                    "must route teacher vs rival");
            break;
    }
}

// ---------------------------------------------------------------------------
// Plan building
// ---------------------------------------------------------------------------

std::string apply_query_template(const std::string& tmpl, const std::string& query) {
    static const std::string slot = "{query}";
    std::string out;
    out.reserve(tmpl.size() + query.size());
    std::size_t pos = 0;
    for (;;) {
        std::size_t hit = tmpl.find(slot, pos);
        if (hit == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            return out;
        }
        out.append(tmpl, pos, hit - pos);
        out += query;
        pos = hit + slot.size();
    }
}

GenerationPlan build_plan(const StrategySpec& spec, const std::string& instruction,
                          std::size_t base_input_chars) {
    spec.validate();
    const std::string q = instruction;
    if (trim(q).empty()) fail("empty_instruction", "instruction is empty after trimming");

    GenerationPlan plan;
    plan.strategy = spec.strategy;
    plan.mode = spec.mode;

    auto step = [&](std::string id, BackendRole backend, std::vector<ChatTurn> turns,
                    std::optional<std::string> seed = std::nullopt) {
        PlanStep s;
        s.id = std::move(id);
        s.backend = backend;
        s.turns = std::move(turns);
        s.assistant_seed = std::move(seed);
        s.max_input_budget = base_input_chars;
        plan.steps.push_back(std::move(s));
    };

    switch (spec.strategy) {
        case ContrastStrategy::prefix:
            step("plus", spec.backend_plus, {{Role::user, q}}, spec.prefix_pair->plus);
            step("minus", spec.backend_minus, {{Role::user, q}}, spec.prefix_pair->minus);
            plan.chosen_from = {"plus", ExtractorKind::seeded};
            plan.rejected_from = {"minus", ExtractorKind::seeded};
            break;
        case ContrastStrategy::demon: {
            auto plus_turns = *spec.demo_block_plus;
            plus_turns.push_back({Role::user, q});
            auto minus_turns = *spec.demo_block_minus;
            minus_turns.push_back({Role::user, q});
            step("plus", spec.backend_plus, std::move(plus_turns));
            step("minus", spec.backend_minus, std::move(minus_turns));
            plan.chosen_from = {"plus", ExtractorKind::plain};
            plan.rejected_from = {"minus", ExtractorKind::plain};
            break;
        }
        case ContrastStrategy::elicitive:
            step("plus", spec.backend_plus,
                 {{Role::user, apply_query_template(*spec.elicitive_template_plus, q)}});
            step("minus", spec.backend_minus,
                 {{Role::user, apply_query_template(*spec.elicitive_template_minus, q)}});
            plan.chosen_from = {"plus", ExtractorKind::thought_response};
            plan.rejected_from = {"minus", ExtractorKind::thought_response};
            break;
        case ContrastStrategy::nparam:
            if (spec.mode == TaskMode::alignment) {
                step("plus", spec.backend_plus, {{Role::user, q}}, spec.prefix_pair->plus);
                step("minus", spec.backend_minus, {{Role::user, q}}, spec.prefix_pair->minus);
                plan.chosen_from = {"plus", ExtractorKind::seeded};
                plan.rejected_from = {"minus", ExtractorKind::seeded};
            } else {
                step("plus", spec.backend_plus, {{Role::user, q}});
                step("minus", spec.backend_minus, {{Role::user, q}});
                plan.chosen_from = {"plus", ExtractorKind::plain};
                plan.rejected_from = {"minus", ExtractorKind::plain};
            }
            break;
        case ContrastStrategy::leaderboard:
            step("plus", spec.backend_plus, {{Role::user, q}});
            step("minus", spec.backend_minus, {{Role::user, q}});
            plan.chosen_from = {"plus", ExtractorKind::plain};
            plan.rejected_from = {"minus", ExtractorKind::plain};
            break;
        case ContrastStrategy::refine: {
            step("initial", spec.backend_minus, {{Role::user, q}});
            PlanStep refined;
            refined.id = "refined";
            refined.backend = spec.backend_plus;
            refined.turns = {{Role::user, q},
                             {Role::assistant, ""},  // spliced from "initial"
                             {Role::user, *spec.refine_instruction}};
            refined.depends_on = "initial";
            refined.splice_turn = 1;
            refined.max_input_budget = base_input_chars * 2;  // room for the echoed turn
            plan.steps.push_back(std::move(refined));
            plan.chosen_from = {"refined", ExtractorKind::thought_response};
            plan.rejected_from = {"initial", ExtractorKind::plain};
            break;
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

ExtractorKind extractor_for(const StrategySpec& spec, Polarity polarity) {
    switch (spec.strategy) {
        case ContrastStrategy::prefix: return ExtractorKind::seeded;
        case ContrastStrategy::demon: return ExtractorKind::plain;
        case ContrastStrategy::elicitive: return ExtractorKind::thought_response;
        case ContrastStrategy::nparam:
            return spec.mode == TaskMode::alignment ? ExtractorKind::seeded
                                                    : ExtractorKind::plain;
        case ContrastStrategy::leaderboard: return ExtractorKind::plain;
        case ContrastStrategy::refine:
            return polarity == Polarity::plus ? ExtractorKind::thought_response
                                              : ExtractorKind::plain;
    }
    return ExtractorKind::plain;
}

namespace {

// Cut at the first occurrence of any template delimiter; the continuation
// beyond it belongs to the next (phantom) turn.
std::string truncate_at_delimiters(const std::string& raw, const chat::ChatTemplate& tmpl) {
    std::size_t cut = raw.size();
    for (const std::string& d : tmpl.delimiters()) {
        std::size_t hit = raw.find(d);
        if (hit != std::string::npos) cut = std::min(cut, hit);
    }
    return raw.substr(0, cut);
}

// Matches a line of the form [ws] [*]* WORD [*]* ':' [*]* tail, case-
// insensitively. Returns the tail when the line is such a marker.
std::optional<std::string> match_marker_line(const std::string& line, std::string_view word) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    while (i < line.size() && line[i] == '*') ++i;
    if (line.size() - i < word.size()) return std::nullopt;
    for (std::size_t k = 0; k < word.size(); ++k) {
        char a = line[i + k], b = word[k];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
        if (a != b) return std::nullopt;
    }
    i += word.size();
    while (i < line.size() && line[i] == '*') ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    ++i;
    while (i < line.size() && line[i] == '*') ++i;
    return line.substr(i);
}

std::string join_from(const std::vector<std::string>& lines, std::size_t first,
                      const std::string& head) {
    std::string out = head;
    for (std::size_t i = first; i < lines.size(); ++i) {
        out += '\n';
        out += lines[i];
    }
    return out;
}

}  // namespace

GenerationTrace extract(const StrategySpec& spec, Polarity polarity, const std::string& raw,
                        const chat::ChatTemplate& tmpl) {
    GenerationTrace trace;
    trace.raw_text = raw;
    const std::string body = truncate_at_delimiters(raw, tmpl);
    const ExtractorKind kind = extractor_for(spec, polarity);

    switch (kind) {
        case ExtractorKind::plain: {
            trace.extracted_response = trim(body);
            break;
        }
        case ExtractorKind::seeded: {
            const std::string& seed =
                polarity == Polarity::plus ? spec.prefix_pair->plus : spec.prefix_pair->minus;
            std::string s = trim_left(body);
            // The seed is prompt-side, not part of the continuation; some
            // backends echo it anyway.
            if (starts_with(s, seed)) s = trim_left(s.substr(seed.size()));
            trace.extracted_response = trim_right(s);
            break;
        }
        case ExtractorKind::thought_response: {
            const std::vector<std::string> lines = split_lines(body);
            std::optional<std::size_t> thought_at, response_at;
            std::string thought_head, response_head;
            for (std::size_t i = 0; i < lines.size(); ++i) {
                if (!thought_at) {
                    if (auto tail = match_marker_line(lines[i], "thought")) {
                        thought_at = i;
                        thought_head = *tail;
                        continue;
                    }
                }
                if (auto tail = match_marker_line(lines[i], "response")) {
                    response_at = i;
                    response_head = *tail;
                    break;
                }
            }
            if (!response_at) {
                fail("missing_response_marker",
                     "no line-anchored \"Response:\" marker in output");
            }
            std::string thought;
            if (thought_at) {
                std::string t = thought_head;
                for (std::size_t i = *thought_at + 1; i < *response_at; ++i) {
                    t += '\n';
                    t += lines[i];
                }
                thought = trim(t);
            } else {
                std::string t;
                for (std::size_t i = 0; i < *response_at; ++i) {
                    if (i) t += '\n';
                    t += lines[i];
                }
                thought = trim(t);
            }
            trace.thought = thought;
            trace.extracted_response = trim(join_from(lines, *response_at + 1, response_head));
            break;
        }
    }

    if (trace.extracted_response.empty()) {
        fail("empty_extraction", "extracted response is empty");
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Pair assembly
// ---------------------------------------------------------------------------

dataset::ContrastPair assemble_pair(const GenerationPlan& plan,
                                    const std::map<std::string, GenerationTrace>& traces,
                                    const dataset::Instruction& q, const StrategySpec& spec) {
    for (const PlanStep& s : plan.steps) {
        if (!traces.count(s.id)) fail("missing_trace", "no trace for step " + s.id);
    }
    const GenerationTrace& chosen_trace = traces.at(plan.chosen_from.step_id);
    const GenerationTrace& rejected_trace = traces.at(plan.rejected_from.step_id);

    if (normalize_for_compare(chosen_trace.extracted_response) ==
        normalize_for_compare(rejected_trace.extracted_response)) {
        fail("degenerate_pair", "chosen equals rejected after whitespace normalization");
    }

    dataset::ContrastPair pair;
    pair.instruction_id = q.id;
    pair.instruction_text = q.text;
    pair.chosen = chosen_trace.extracted_response;
    pair.rejected = rejected_trace.extracted_response;
    pair.strategy = plan.strategy;
    pair.mode = plan.mode;
    pair.meta["backend_plus"] = role_name(spec.backend_plus);
    pair.meta["backend_minus"] = role_name(spec.backend_minus);
    for (const PlanStep& s : plan.steps) {
        pair.meta["raw_sha_" + s.id] = sha256_hex(traces.at(s.id).raw_text);
    }
    if (chosen_trace.thought) pair.meta["thought_chosen"] = *chosen_trace.thought;
    if (rejected_trace.thought) pair.meta["thought_rejected"] = *rejected_trace.thought;
    return pair;
}

// ---------------------------------------------------------------------------
// Defaults and (de)serialization
// ---------------------------------------------------------------------------

StrategySpec default_spec(ContrastStrategy s, TaskMode mode) {
    using namespace defaults;
    const bool alignment = mode == TaskMode::alignment;
    StrategySpec spec;
    spec.strategy = s;
    spec.mode = mode;
    switch (s) {
        case ContrastStrategy::prefix:
            spec.prefix_pair = alignment
                                   ? PrefixPair{kPrefixPlusAlignment, kPrefixMinusAlignment}
                                   : PrefixPair{kPrefixPlusGeneral, kPrefixMinusGeneral};
            break;
        case ContrastStrategy::demon:
            spec.demo_block_plus = demo_block_plus();
            spec.demo_block_minus = demo_block_minus();
            break;
        case ContrastStrategy::elicitive:
            spec.elicitive_template_plus =
                alignment ? kElicitivePlusAlignment : kElicitivePlusGeneral;
            spec.elicitive_template_minus =
                alignment ? kElicitiveMinusAlignment : kElicitiveMinusGeneral;
            break;
        case ContrastStrategy::nparam:
            if (alignment) {
                spec.prefix_pair = PrefixPair{kPrefixPlusAlignment, kPrefixMinusAlignment};
            }
            spec.backend_minus = BackendRole::small;
            break;
        case ContrastStrategy::leaderboard:
            spec.backend_minus = BackendRole::rival;
            break;
        case ContrastStrategy::refine:
            spec.refine_instruction =
                alignment ? kRefineInstructionAlignment : kRefineInstructionGeneral;
            break;
    }
    spec.validate();
    return spec;
}

std::vector<StrategySpec> default_specs(TaskMode mode) {
    std::vector<StrategySpec> out;
    for (ContrastStrategy s : kAllStrategies) out.push_back(default_spec(s, mode));
    return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json turns_to_json(const std::vector<ChatTurn>& turns) {
    ordered_json arr = ordered_json::array();
    for (const ChatTurn& t : turns) {
        arr.push_back({{"role", chat::role_name(t.role)}, {"content", t.content}});
    }
    return arr;
}

std::vector<ChatTurn> turns_from_json(const ordered_json& arr) {
    std::vector<ChatTurn> out;
    for (const auto& t : arr) {
        Role r = t.at("role").get<std::string>() == "assistant" ? Role::assistant : Role::user;
        out.push_back({r, t.at("content").get<std::string>()});
    }
    return out;
}

ordered_json spec_to_json(const StrategySpec& s) {
    ordered_json j;
    j["strategy"] = strategy_name(s.strategy);
    j["mode"] = mode_name(s.mode);
    if (s.prefix_pair) {
        j["prefix_pair"] = {{"plus", s.prefix_pair->plus}, {"minus", s.prefix_pair->minus}};
    }
    if (s.demo_block_plus) j["demo_block_plus"] = turns_to_json(*s.demo_block_plus);
    if (s.demo_block_minus) j["demo_block_minus"] = turns_to_json(*s.demo_block_minus);
    if (s.elicitive_template_plus) j["elicitive_template_plus"] = *s.elicitive_template_plus;
    if (s.elicitive_template_minus) j["elicitive_template_minus"] = *s.elicitive_template_minus;
    if (s.refine_instruction) j["refine_instruction"] = *s.refine_instruction;
    j["backend_plus"] = role_name(s.backend_plus);
    j["backend_minus"] = role_name(s.backend_minus);
    return j;
}

StrategySpec spec_from_json(const ordered_json& j) {
    StrategySpec s;
    s.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    s.mode = mode_from_name(j.at("mode").get<std::string>());
    if (j.contains("prefix_pair")) {
        s.prefix_pair = PrefixPair{j["prefix_pair"].at("plus").get<std::string>(),
                                   j["prefix_pair"].at("minus").get<std::string>()};
    }
    if (j.contains("demo_block_plus")) s.demo_block_plus = turns_from_json(j["demo_block_plus"]);
    if (j.contains("demo_block_minus")) s.demo_block_minus = turns_from_json(j["demo_block_minus"]);
    if (j.contains("elicitive_template_plus")) {
        s.elicitive_template_plus = j["elicitive_template_plus"].get<std::string>();
    }
    if (j.contains("elicitive_template_minus")) {
        s.elicitive_template_minus = j["elicitive_template_minus"].get<std::string>();
    }
    if (j.contains("refine_instruction")) {
        s.refine_instruction = j["refine_instruction"].get<std::string>();
    }
    s.backend_plus = role_from_name(j.at("backend_plus").get<std::string>());
    s.backend_minus = role_from_name(j.at("backend_minus").get<std::string>());
    s.validate();
    return s;
}

}  // namespace

std::string specs_to_json(const std::vector<StrategySpec>& alignment,
                          const std::vector<StrategySpec>& general) {
    ordered_json root;
    root["alignment"] = ordered_json::array();
    for (const auto& s : alignment) root["alignment"].push_back(spec_to_json(s));
    root["general"] = ordered_json::array();
    for (const auto& s : general) root["general"].push_back(spec_to_json(s));
    return root.dump(2) + "\n";
}

std::vector<StrategySpec> specs_from_json(const std::string& json_text, TaskMode mode) {
    ordered_json root = ordered_json::parse(json_text);
    const char* key = mode_name(mode);
    if (!root.contains(key)) fail("incomplete_spec", std::string("missing key: ") + key);
    std::vector<StrategySpec> out;
    for (const auto& j : root[key]) out.push_back(spec_from_json(j));
    return out;
}

}  // namespace pairforge::strategy

// ---------------------------------------------------------------------------
// Validation rules tied to the shipped defaults (declared in dataset.hpp)
// ---------------------------------------------------------------------------

namespace pairforge::dataset {

ValidationRules default_validation_rules(TaskMode mode) {
    ValidationRules rules;
    for (const auto& spec : strategy::default_specs(mode)) {
        if (spec.prefix_pair) {
            rules.forbidden_prefixes.push_back(spec.prefix_pair->plus);
            rules.forbidden_prefixes.push_back(spec.prefix_pair->minus);
        }
    }
    std::sort(rules.forbidden_prefixes.begin(), rules.forbidden_prefixes.end());
    rules.forbidden_prefixes.erase(
        std::unique(rules.forbidden_prefixes.begin(), rules.forbidden_prefixes.end()),
        rules.forbidden_prefixes.end());
    rules.forbidden_delimiters = chat::default_template().delimiters();
    return rules;
}

}  // namespace pairforge::dataset
