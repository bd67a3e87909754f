#include "pairforge/types.hpp"

#include "pairforge/util.hpp"

namespace pairforge {

const char* strategy_name(ContrastStrategy s) {
    switch (s) {
        case ContrastStrategy::prefix: return "prefix";
        case ContrastStrategy::demon: return "demon";
        case ContrastStrategy::elicitive: return "elicitive";
        case ContrastStrategy::nparam: return "nparam";
        case ContrastStrategy::leaderboard: return "leaderboard";
        case ContrastStrategy::refine: return "refine";
    }
    return "?";
}

ContrastStrategy strategy_from_name(std::string_view name) {
    for (ContrastStrategy s : kAllStrategies) {
        if (name == strategy_name(s)) return s;
    }
    fail("unknown_strategy", "no such strategy: " + std::string(name));
}

const char* mode_name(TaskMode m) {
    return m == TaskMode::alignment ? "alignment" : "general";
}

TaskMode mode_from_name(std::string_view name) {
    if (name == "alignment") return TaskMode::alignment;
    if (name == "general") return TaskMode::general;
    fail("unknown_mode", "no such task mode: " + std::string(name));
}

const char* role_name(BackendRole r) {
    switch (r) {
        case BackendRole::teacher: return "teacher";
        case BackendRole::small: return "small";
        case BackendRole::rival: return "rival";
        case BackendRole::judge: return "judge";
    }
    return "?";
}

BackendRole role_from_name(std::string_view name) {
    if (name == "teacher") return BackendRole::teacher;
    if (name == "small") return BackendRole::small;
    if (name == "rival") return BackendRole::rival;
    if (name == "judge") return BackendRole::judge;
    fail("unknown_role", "no such backend role: " + std::string(name));
}

}  // namespace pairforge
