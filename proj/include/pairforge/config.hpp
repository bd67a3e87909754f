#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/backend.hpp"
#include "pairforge/chat_template.hpp"
#include "pairforge/dataset.hpp"
#include "pairforge/judge.hpp"
#include "pairforge/strategy.hpp"
#include "pairforge/types.hpp"

namespace pairforge::config {

struct EndpointSection {
    backend::EndpointConfig endpoint;
    chat::ChatTemplate chat_template = chat::default_template();
};

struct Limits {
    int workers = 4;
    int max_instructions = 0;     // 0 = whole corpus
    int max_input_tokens = 1024;  // doubled for the refine second turn
    int chars_per_token = 4;      // token budgets convert to characters through this
    int max_new_tokens = 1024;
    double temperature = 1.0;
    int retries = 3;
    int retry_base_ms = 1000;
    double retry_factor = 2.0;
    double retry_jitter = 0.2;

    std::size_t max_input_chars() const {
        return static_cast<std::size_t>(max_input_tokens) *
               static_cast<std::size_t>(chars_per_token);
    }
};

struct Output {
    std::string dataset_path = "dataset.jsonl";
    dataset::ExportFormat format = dataset::ExportFormat::pairs_jsonl;
    std::string journal_path = "journal.jsonl";
    std::string report_path;  // empty = next to the dataset
    std::size_t export_side_cap = 8192;
};

struct JudgeSection {
    std::int64_t sample_n = 200;
    std::uint64_t seed = 0;
    bool debias = true;
    judge::RubricKind rubric = judge::RubricKind::contrast_3way;
};

struct RunConfig {
    std::string corpus_path;
    dataset::CorpusFormat corpus_format = dataset::CorpusFormat::jsonl_prompt_field;
    TaskMode mode = TaskMode::alignment;
    std::vector<ContrastStrategy> active_strategies{kAllStrategies.begin(),
                                                    kAllStrategies.end()};
    std::string specs_path;  // optional strategy-spec data file; empty = built-ins
    std::map<BackendRole, EndpointSection> endpoints;
    Limits limits;
    Output output;
    JudgeSection judge;

    // Throws bad_config when strategies are empty, a referenced backend has
    // no endpoint, or endpoint settings are incoherent.
    void validate_for_synthesis() const;

    // Active strategy specs with the run's mode applied (built-ins or the
    // configured data file).
    std::vector<strategy::StrategySpec> active_specs() const;

    dataset::ValidationRules validation_rules() const;
};

// Digest over everything that shapes synthesized bytes: corpus content,
// mode, active specs, endpoint identities (incl. mock rules content and
// template literals), and generation limits. Operational knobs (workers,
// rps, caps, retries) stay out so a run can be resumed after tuning them.
std::string config_digest(const RunConfig& cfg);

// Effective-config dump for logging; contains env-var *names* only, never
// key material.
std::string describe(const RunConfig& cfg);

backend::RetryPolicy retry_policy(const Limits& limits);

}  // namespace pairforge::config
