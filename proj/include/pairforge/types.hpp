#pragma once

#include <array>
#include <string>
#include <string_view>

namespace pairforge {

// The six contrasting strategies. prefix/demon/elicitive vary the prompt,
// nparam/leaderboard vary the model, refine varies the pipeline.
enum class ContrastStrategy { prefix, demon, elicitive, nparam, leaderboard, refine };

inline constexpr std::array<ContrastStrategy, 6> kAllStrategies = {
    ContrastStrategy::prefix,      ContrastStrategy::demon,
    ContrastStrategy::elicitive,   ContrastStrategy::nparam,
    ContrastStrategy::leaderboard, ContrastStrategy::refine,
};

// alignment contrasts helpful+harmless vs harmful+unhelpful;
// general contrasts good vs bad.
enum class TaskMode { alignment, general };

enum class BackendRole { teacher, small, rival, judge };

const char* strategy_name(ContrastStrategy s);
ContrastStrategy strategy_from_name(std::string_view name);

const char* mode_name(TaskMode m);
TaskMode mode_from_name(std::string_view name);

const char* role_name(BackendRole r);
BackendRole role_from_name(std::string_view name);

}  // namespace pairforge
