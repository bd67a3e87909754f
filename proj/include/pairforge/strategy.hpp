#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/chat_template.hpp"
#include "pairforge/dataset.hpp"
#include "pairforge/types.hpp"

namespace pairforge::strategy {

// Default character budget for model inputs: 1024 tokens at the 4-chars-per-
// token convention. Refine's second turn doubles it.
inline constexpr std::size_t kDefaultMaxInputChars = 4096;

struct PrefixPair {
    std::string plus;
    std::string minus;
};

// A contrasting strategy plus everything its plan builder needs: templates,
// prefixes, demos, and backend routing. Fields the strategy does not use
// stay empty; validate() enforces that.
struct StrategySpec {
    ContrastStrategy strategy = ContrastStrategy::prefix;
    TaskMode mode = TaskMode::alignment;

    std::optional<PrefixPair> prefix_pair;  // prefix always; nparam in alignment mode
    std::optional<std::vector<chat::ChatTurn>> demo_block_plus;
    std::optional<std::vector<chat::ChatTurn>> demo_block_minus;
    std::optional<std::string> elicitive_template_plus;   // must contain {query}
    std::optional<std::string> elicitive_template_minus;  // must contain {query}
    std::optional<std::string> refine_instruction;

    BackendRole backend_plus = BackendRole::teacher;
    BackendRole backend_minus = BackendRole::teacher;

    // Throws incomplete_spec when required fields are missing, extraneous
    // fields are set, or backend routing is wrong for the strategy.
    void validate() const;
};

enum class Polarity { plus, minus };

const char* polarity_name(Polarity p);

enum class ExtractorKind { plain, seeded, thought_response };

const char* extractor_name(ExtractorKind e);

struct PlanStep {
    std::string id;  // "plus"/"minus", or "initial"/"refined" for refine
    BackendRole backend = BackendRole::teacher;
    std::vector<chat::ChatTurn> turns;
    std::optional<std::string> assistant_seed;  // prefix steps, nparam-alignment steps
    std::optional<std::string> depends_on;      // refine step 2 only
    // Index of the turn whose content is replaced by the dependency's
    // extracted output before rendering. Only meaningful with depends_on.
    std::size_t splice_turn = 0;
    std::size_t max_input_budget = kDefaultMaxInputChars;  // characters
};

struct PairingSide {
    std::string step_id;
    ExtractorKind extractor = ExtractorKind::plain;
};

// The ordered generation calls one strategy needs for one instruction.
// Always exactly two steps; only refine's are dependent.
struct GenerationPlan {
    ContrastStrategy strategy = ContrastStrategy::prefix;
    TaskMode mode = TaskMode::alignment;
    std::vector<PlanStep> steps;
    PairingSide chosen_from;
    PairingSide rejected_from;
};

// Deterministic plan construction. Errors: incomplete_spec, empty_instruction.
GenerationPlan build_plan(const StrategySpec& spec, const std::string& instruction,
                          std::size_t base_input_chars = kDefaultMaxInputChars);

struct GenerationTrace {
    std::string raw_text;
    std::string extracted_response;
    std::optional<std::string> thought;  // set iff the extractor is thought/response
};

// Recovers the clean response from a backend continuation. Strips template
// close-delimiters everywhere; strips a leading seed echo for seeded steps
// (some chat backends return the prefill as part of the message); splits at
// the first line-anchored, case-insensitive "Response:" marker for
// thought/response output, tolerating **bold** markers.
// Errors: missing_response_marker, empty_extraction.
GenerationTrace extract(const StrategySpec& spec, Polarity polarity, const std::string& raw,
                        const chat::ChatTemplate& tmpl = chat::default_template());

ExtractorKind extractor_for(const StrategySpec& spec, Polarity polarity);

// Pairs the extracted sides into a ContrastPair with provenance metadata.
// Errors: missing_trace, degenerate_pair (chosen equals rejected after
// whitespace normalization).
dataset::ContrastPair assemble_pair(const GenerationPlan& plan,
                                    const std::map<std::string, GenerationTrace>& traces,
                                    const dataset::Instruction& q, const StrategySpec& spec);

// Shipped defaults reproducing the published template strings for both task
// modes. The same texts ship as data/strategy_defaults.json; a unit test
// pins the two byte-for-byte.
StrategySpec default_spec(ContrastStrategy s, TaskMode mode);
std::vector<StrategySpec> default_specs(TaskMode mode);

// JSON (de)serialization for spec data files.
std::string specs_to_json(const std::vector<StrategySpec>& alignment,
                          const std::vector<StrategySpec>& general);
std::vector<StrategySpec> specs_from_json(const std::string& json_text, TaskMode mode);

// Elicitive user turn: the template with every "{query}" slot substituted.
std::string apply_query_template(const std::string& tmpl, const std::string& query);

}  // namespace pairforge::strategy
