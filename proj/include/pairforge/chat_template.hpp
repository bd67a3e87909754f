#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pairforge::chat {

enum class Role { user, assistant };

const char* role_name(Role r);

struct ChatTurn {
    Role role;
    std::string content;
};

// Fixed-literal delimiters. Rendering is a pure function of
// (template, turns, seed).
struct ChatTemplate {
    std::string name;
    std::string user_open;
    std::string user_close;
    std::string assistant_open;
    std::string assistant_close;
    std::string turn_separator;

    std::vector<std::string> delimiters() const;
};

// The im-delimited template, spelled exactly as our fixtures expect:
//   <im_start> user\n{content} <im_end>\n<im_start> assistant\n
// One "\n" after each role tag, one space before each close tag.
// Deployed models use piped variants; those are configured per endpoint.
const ChatTemplate& default_template();

struct RenderedPrompt {
    std::string text;
    // True when the prompt ends inside an unclosed assistant turn awaiting
    // model continuation.
    bool open_assistant = false;
};

// Renders a conversation. Roles must alternate starting with user. When the
// last turn is a user turn, the output ends with assistant_open (+ seed when
// given) and open_assistant is true. When the last turn is an assistant
// turn the transcript renders fully closed; seeding it is an error.
//
// Content containing any delimiter literal is rejected, not escaped:
// escaping is undefined for token-like delimiters, and rejection keeps
// rendering injective over (turns, seed).
//
// Errors: empty_turns, non_alternating_roles, seed_on_closed_transcript,
// delimiter_in_content.
RenderedPrompt render(const ChatTemplate& tmpl, const std::vector<ChatTurn>& turns,
                      const std::optional<std::string>& assistant_seed = std::nullopt);

}  // namespace pairforge::chat
