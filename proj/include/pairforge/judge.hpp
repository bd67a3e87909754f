#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/backend.hpp"
#include "pairforge/dataset.hpp"

namespace pairforge::judge {

enum class RubricKind { hh_pairwise_5way, contrast_3way };

const char* rubric_name(RubricKind k);
RubricKind rubric_from_name(std::string_view name);

// Judge prompt pair; shipped texts are pinned by golden files. The user
// template's slots are substituted verbatim ({instruction}/{question_1},
// {response_a}/{answer_1}, {response_b}/{answer_2}).
struct JudgeRubric {
    RubricKind kind = RubricKind::contrast_3way;
    std::string system_prompt;
    std::string user_template;
};

const JudgeRubric& default_rubric(RubricKind kind);

enum class Verdict { a_strong_win, a_win, tie, b_win, b_strong_win };

const char* verdict_name(Verdict v);

// The bracketed label a judge emits for this verdict ("[[A>>B]]" etc).
const char* verdict_label(Verdict v);

bool verdict_admissible(RubricKind kind, Verdict v);

// Errors: slot_overflow when the combined text exceeds max_input_chars.
std::vector<backend::ChatMessage> build_judge_prompt(const JudgeRubric& rubric,
                                                     const std::string& instruction,
                                                     const std::string& response_a,
                                                     const std::string& response_b,
                                                     std::size_t max_input_chars = 32768);

// Scans every [[...]] occurrence and takes the LAST one carrying a known
// verdict label; judges enumerate the options before stating the final
// verdict, so first-match would be wrong. Errors: no_verdict_found,
// inadmissible_verdict (a 5-way label under the 3-way rubric).
Verdict parse_verdict(const std::string& raw, RubricKind kind);

enum class Orientation { chosen_as_a, chosen_as_b };

struct JudgedComparison {
    std::string pair_key;
    Orientation orientation = Orientation::chosen_as_a;
    Verdict verdict = Verdict::tie;
    std::string raw_digest;
};

struct TallyLine {
    std::int64_t n = 0;  // judged pairs (errors excluded)
    std::int64_t wins = 0;
    std::int64_t ties = 0;
    std::int64_t losses = 0;
    std::int64_t errors = 0;

    // The metric in half-points: 2*wins + ties. Exact-integer backing for
    // identities like rate(X,Y) + rate(Y,X) = 100.
    std::int64_t half_points() const { return 2 * wins + ties; }
    double percent() const {
        return n == 0 ? 0.0 : (100.0 * static_cast<double>(half_points())) /
                                  (2.0 * static_cast<double>(n));
    }
};

struct AccuracyReport {
    std::map<std::string, TallyLine> per_strategy;
    TallyLine overall;
    std::int64_t sample_n = 0;
    std::uint64_t seed = 0;
    bool debias = true;
    RubricKind rubric = RubricKind::contrast_3way;
    std::vector<JudgedComparison> comparisons;
};

struct JudgeOptions {
    std::int64_t sample_n = 200;
    std::uint64_t seed = 0;
    bool debias = true;
    int max_new_tokens = 1024;
    std::size_t max_input_chars = 32768;
};

// Fraction of sampled pairs whose chosen side the oracle prefers, ties worth
// half. Sampling is seeded and permutation-invariant (pairs are keyed and
// ordered before shuffling). With debias on, each pair is judged in both
// A/B orientations and only agreement counts as a win or loss.
// Judge transport errors are counted and excluded from n.
AccuracyReport contrast_accuracy(const std::vector<dataset::ContrastPair>& pairs,
                                 backend::Endpoint& judge_endpoint, const JudgeRubric& rubric,
                                 const JudgeOptions& options);

struct WinRateReport {
    TallyLine tally;
    bool debias = true;
    RubricKind rubric = RubricKind::hh_pairwise_5way;
    std::vector<JudgedComparison> comparisons;
};

// Pairwise system-vs-system win rate over instruction-keyed response maps;
// strong and weak wins count the same. Identical responses tie by
// construction (no judge call), which realizes the self-comparison-is-50.0
// convention. Without debias each pair is judged once, in an orientation
// derived from the content digests, so swapping the arguments reproduces
// the same judge calls and rates sum to exactly 100 for any deterministic
// judge. Errors: key_mismatch.
WinRateReport win_rate(const std::map<std::string, std::string>& ours,
                       const std::map<std::string, std::string>& theirs,
                       backend::Endpoint& judge_endpoint, const JudgeRubric& rubric,
                       const JudgeOptions& options);

std::string accuracy_report_to_json(const AccuracyReport& report);
std::string accuracy_report_to_text(const AccuracyReport& report);
std::string win_rate_report_to_json(const WinRateReport& report);
std::string win_rate_report_to_text(const WinRateReport& report);

}  // namespace pairforge::judge
