#include "pairforge/toml_lite.hpp"

#include "pairforge/util.hpp"

namespace pairforge::toml_lite {

namespace {

[[noreturn]] void bad(const std::string& origin, std::size_t line_no, const std::string& what) {
    fail("bad_config", origin + ":" + std::to_string(line_no) + ": " + what);
}

std::string parse_basic_string(const std::string& origin, std::size_t line_no,
                               const std::string& line, std::size_t& i) {
    std::string out;
    ++i;  // opening quote
    while (i < line.size() && line[i] != '"') {
        char c = line[i];
        if (c == '\\') {
            if (i + 1 >= line.size()) bad(origin, line_no, "dangling escape");
            char n = line[i + 1];
            switch (n) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: bad(origin, line_no, std::string("unsupported escape \\") + n);
            }
            i += 2;
            continue;
        }
        out += c;
        ++i;
    }
    if (i >= line.size()) bad(origin, line_no, "unterminated string");
    ++i;  // closing quote
    return out;
}

std::string parse_literal_string(const std::string& origin, std::size_t line_no,
                                 const std::string& line, std::size_t& i) {
    std::string out;
    ++i;
    while (i < line.size() && line[i] != '\'') {
        out += line[i];
        ++i;
    }
    if (i >= line.size()) bad(origin, line_no, "unterminated literal string");
    ++i;
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_text(const std::string& text,
                                              const std::string& origin) {
    std::map<std::string, std::string> out;
    std::string section;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size() && pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;

        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        if (stripped[0] == '[') {
            std::size_t close = stripped.find(']');
            if (close == std::string::npos) bad(origin, line_no, "unterminated section header");
            section = trim(stripped.substr(1, close - 1));
            if (section.empty()) bad(origin, line_no, "empty section name");
            if (!trim(stripped.substr(close + 1)).empty() &&
                trim(stripped.substr(close + 1))[0] != '#') {
                bad(origin, line_no, "trailing content after section header");
            }
            continue;
        }

        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) bad(origin, line_no, "expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        if (key.empty()) bad(origin, line_no, "empty key");
        std::string rest = trim(stripped.substr(eq + 1));
        if (rest.empty()) bad(origin, line_no, "empty value");

        std::string value;
        std::size_t i = 0;
        if (rest[0] == '"') {
            value = parse_basic_string(origin, line_no, rest, i);
        } else if (rest[0] == '\'') {
            value = parse_literal_string(origin, line_no, rest, i);
        } else {
            // Bare value: number, boolean, or unquoted token up to a comment.
            std::size_t comment = rest.find('#');
            value = trim(rest.substr(0, comment));
            i = rest.size();
        }
        if (i < rest.size()) {
            std::string tail = trim(rest.substr(i));
            if (!tail.empty() && tail[0] != '#') {
                bad(origin, line_no, "trailing content after value");
            }
        }
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

std::map<std::string, std::string> parse_file(const std::string& path) {
    return parse_text(read_file(path), path);
}

}  // namespace pairforge::toml_lite
