#pragma once

#include <string>

#include "pairforge/chat_template.hpp"
#include "pairforge/strategy.hpp"

namespace pairforge::cli {

// Full plan dump for one strategy and one instruction: every step's backend
// role, extractor, seed, budget, and fully rendered prompt. Dependent steps
// render with a "{{step:<id>}}" placeholder where the upstream output will
// be spliced. The output is byte-stable; golden files pin it.
std::string render_debug_text(const strategy::StrategySpec& spec,
                              const std::string& instruction,
                              const chat::ChatTemplate& tmpl = chat::default_template(),
                              std::size_t base_input_chars = strategy::kDefaultMaxInputChars);

}  // namespace pairforge::cli
