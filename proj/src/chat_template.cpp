#include "pairforge/chat_template.hpp"

#include <algorithm>

#include "pairforge/util.hpp"

namespace pairforge::chat {

const char* role_name(Role r) {
    switch (r) {
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::vector<std::string> ChatTemplate::delimiters() const {
    std::vector<std::string> out;
    for (const std::string& d : {user_open, user_close, assistant_open,
                                 assistant_close}) {
        // Close tags are often the same literal; report each once.
        if (!d.empty() && std::find(out.begin(), out.end(), d) == out.end()) {
            out.push_back(d);
        }
    }
    return out;
}

const ChatTemplate& default_template() {
    static const ChatTemplate t = {
        "im-default",
        "<im_start> user\n",
        " <im_end>",
        "<im_start> assistant\n",
        " <im_end>",
        "\n",
    };
    return t;
}

RenderedPrompt render(const ChatTemplate& tmpl, const std::vector<ChatTurn>& turns,
                      const std::optional<std::string>& assistant_seed) {
    if (turns.empty()) fail("empty_turns", "cannot render an empty conversation");

    for (std::size_t i = 0; i < turns.size(); ++i) {
        Role expected = (i % 2 == 0) ? Role::user : Role::assistant;
        if (turns[i].role != expected) {
            fail("non_alternating_roles",
                 "turn " + std::to_string(i) + " has role " +
                     role_name(turns[i].role) + ", expected " + role_name(expected));
        }
        for (const std::string& d : tmpl.delimiters()) {
            if (contains(turns[i].content, d)) {
                fail("delimiter_in_content",
                     "turn " + std::to_string(i) + " contains delimiter \"" + d + "\"");
            }
        }
    }

    const bool ends_with_user = turns.back().role == Role::user;
    if (assistant_seed && !ends_with_user) {
        fail("seed_on_closed_transcript",
             "assistant seed requires the last turn to be a user turn");
    }
    if (assistant_seed) {
        for (const std::string& d : tmpl.delimiters()) {
            if (contains(*assistant_seed, d)) {
                fail("delimiter_in_content", "seed contains delimiter \"" + d + "\"");
            }
        }
    }

    RenderedPrompt out;
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (i > 0) out.text += tmpl.turn_separator;
        if (turns[i].role == Role::user) {
            out.text += tmpl.user_open;
            out.text += turns[i].content;
            out.text += tmpl.user_close;
        } else {
            out.text += tmpl.assistant_open;
            out.text += turns[i].content;
            out.text += tmpl.assistant_close;
        }
    }
    if (ends_with_user) {
        out.text += tmpl.turn_separator;
        out.text += tmpl.assistant_open;
        if (assistant_seed) out.text += *assistant_seed;
        out.open_assistant = true;
    }
    return out;
}

}  // namespace pairforge::chat
