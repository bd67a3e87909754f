#include "pairforge/render_debug.hpp"

#include <sstream>

#include "pairforge/util.hpp"

namespace pairforge::cli {

std::string render_debug_text(const strategy::StrategySpec& spec,
                              const std::string& instruction,
                              const chat::ChatTemplate& tmpl,
                              std::size_t base_input_chars) {
    const strategy::GenerationPlan plan =
        strategy::build_plan(spec, instruction, base_input_chars);

    auto extractor_of = [&](const std::string& step_id) {
        if (plan.chosen_from.step_id == step_id) return plan.chosen_from.extractor;
        return plan.rejected_from.extractor;
    };

    std::ostringstream out;
    out << "strategy: " << strategy_name(plan.strategy) << "\n";
    out << "mode: " << mode_name(plan.mode) << "\n";
    for (const strategy::PlanStep& step : plan.steps) {
        out << "\n";
        out << "step: " << step.id << "\n";
        out << "backend: " << role_name(step.backend) << "\n";
        out << "extractor: " << strategy::extractor_name(extractor_of(step.id)) << "\n";
        if (step.depends_on) out << "depends_on: " << *step.depends_on << "\n";
        if (step.assistant_seed) out << "seed: " << *step.assistant_seed << "\n";
        out << "max_input_chars: " << step.max_input_budget << "\n";

        std::vector<chat::ChatTurn> turns = step.turns;
        if (step.depends_on) {
            turns[step.splice_turn].content = "{{step:" + *step.depends_on + "}}";
        }
        const chat::RenderedPrompt prompt = chat::render(tmpl, turns, step.assistant_seed);
        out << "prompt:\n-----\n" << prompt.text << "\n-----\n";
    }
    out << "\npairing: chosen=" << plan.chosen_from.step_id
        << " rejected=" << plan.rejected_from.step_id << "\n";
    return out.str();
}

}  // namespace pairforge::cli
