#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/types.hpp"

namespace pairforge::dataset {

// One source prompt from the instruction corpus.
struct Instruction {
    std::string id;      // 64-hex SHA-256 of the normalized text
    std::string text;    // stored verbatim
    std::string source;  // corpus identifier
};

// id = SHA-256 over the trimmed UTF-8 text. Inputs are expected in NFC;
// trimming plus byte digesting keeps ids stable across platforms.
std::string instruction_id(std::string_view text);

enum class CorpusFormat { jsonl_prompt_field, plain_lines };

const char* corpus_format_name(CorpusFormat f);
CorpusFormat corpus_format_from_name(std::string_view name);

// Deduplicates by id, keeping first occurrences in input order. Blank lines
// are skipped. Errors: malformed_record (with line number), empty_corpus.
std::vector<Instruction> load_instructions(const std::string& path, CorpusFormat format);

// The unit of the synthesized preference dataset: one instruction plus a
// (chosen, rejected) response pair from one strategy.
struct ContrastPair {
    std::string instruction_id;
    std::string instruction_text;
    std::string chosen;
    std::string rejected;
    ContrastStrategy strategy = ContrastStrategy::prefix;
    TaskMode mode = TaskMode::alignment;
    // Backend identities, raw-output digests, thought texts. String-keyed so
    // it round-trips through JSONL untouched. Deliberately carries nothing
    // non-deterministic: exported bytes are a pure function of the run inputs.
    std::map<std::string, std::string> meta;
};

struct Manifest {
    std::string config_digest;
    std::map<std::string, std::int64_t> counts_per_strategy;
    std::map<std::string, std::int64_t> failure_counts;  // failed/degenerate per strategy
    std::string created_at;  // RFC3339; manifest only, never in the dataset file
};

struct PreferenceDataset {
    std::vector<ContrastPair> pairs;
    Manifest manifest;
};

// Recomputes manifest counts from pairs (keeps the counts-equal invariant).
void refresh_manifest_counts(PreferenceDataset& ds);

struct Violation {
    std::string kind;   // empty_side | equal_sides | leaked_marker | leaked_prefix
                        // | leaked_delimiter | over_length_cap
    std::string field;  // chosen | rejected | pair
    std::string detail;
};

struct ValidationRules {
    std::vector<std::string> forbidden_markers = {"Thought:"};
    std::vector<std::string> forbidden_prefixes;    // configured contrast prefixes
    std::vector<std::string> forbidden_delimiters;  // chat template delimiters
    std::size_t max_side_chars = 8192;
};

// Rules derived from the active strategy specs and chat template for a mode.
// Declared here, defined with the strategy defaults (strategy.cpp) to keep
// dataset free of a strategy dependency.
ValidationRules default_validation_rules(TaskMode mode);

// Returns all violations; an empty list means the pair is exportable.
// Violations are data, not failures.
std::vector<Violation> validate_pair(const ContrastPair& pair, const ValidationRules& rules);

// One-line JSON record with keys (prompt, chosen, rejected, strategy, mode,
// meta); the journal and the pairs_jsonl exporter share this shape.
std::string pair_to_json_line(const ContrastPair& pair);
ContrastPair pair_from_json_line(const std::string& line);

enum class ExportFormat { pairs_jsonl, binarized_messages_jsonl };

const char* export_format_name(ExportFormat f);
ExportFormat export_format_from_name(std::string_view name);

// Writes one newline-terminated JSON object per pair, atomically, plus a
// sibling "<path>.manifest.json". Re-export of an identical dataset is
// byte-identical. Errors: validation_failed (lists offending pair ids),
// io_failure.
Manifest export_dataset(const PreferenceDataset& ds, const std::string& path,
                        ExportFormat format, const ValidationRules& rules);

// Inverse of export for pairs_jsonl; export-then-import is the identity.
PreferenceDataset import_pairs_jsonl(const std::string& path);

struct SideLengthStats {
    std::int64_t count = 0;
    double mean_chosen = 0.0;
    double median_chosen = 0.0;
    double mean_rejected = 0.0;
    double median_rejected = 0.0;
    double mean_delta = 0.0;  // chosen minus rejected, character counts
};

struct StatsReport {
    std::map<std::string, SideLengthStats> per_strategy;
    SideLengthStats overall;
    std::map<std::string, std::int64_t> failure_counts;
};

StatsReport stats(const PreferenceDataset& ds);

std::string stats_to_json(const StatsReport& report);
std::string stats_to_text(const StatsReport& report);

}  // namespace pairforge::dataset
