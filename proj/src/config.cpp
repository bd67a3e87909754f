#include "pairforge/config.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "pairforge/util.hpp"

namespace pairforge::config {

using nlohmann::ordered_json;

void RunConfig::validate_for_synthesis() const {
    if (corpus_path.empty()) fail("bad_config", "corpus.path is required");
    if (active_strategies.empty()) fail("bad_config", "strategies.active must be nonempty");
    std::set<ContrastStrategy> seen;
    for (ContrastStrategy s : active_strategies) {
        if (!seen.insert(s).second) {
            fail("bad_config", std::string("strategy listed twice: ") + strategy_name(s));
        }
    }
    for (const auto& spec : active_specs()) {
        for (BackendRole role : {spec.backend_plus, spec.backend_minus}) {
            if (!endpoints.count(role)) {
                fail("bad_config", std::string("strategy ") + strategy_name(spec.strategy) +
                                       " needs an [endpoints." + role_name(role) +
                                       "] section");
            }
        }
    }
    for (const auto& [role, section] : endpoints) {
        const auto& ep = section.endpoint;
        if (ep.kind != "mock" && ep.kind != "http") {
            fail("bad_config", std::string("endpoints.") + role_name(role) +
                                   ".kind must be http or mock");
        }
        if (ep.kind == "http" && ep.base_url.empty()) {
            fail("bad_config", std::string("endpoints.") + role_name(role) +
                                   ".base_url is required for http endpoints");
        }
        if (ep.kind == "mock" && ep.rules_path.empty()) {
            fail("bad_config", std::string("endpoints.") + role_name(role) +
                                   ".rules is required for mock endpoints");
        }
    }
}

std::vector<strategy::StrategySpec> RunConfig::active_specs() const {
    std::vector<strategy::StrategySpec> all;
    if (specs_path.empty()) {
        all = strategy::default_specs(mode);
    } else {
        all = strategy::specs_from_json(read_file(specs_path), mode);
    }
    std::vector<strategy::StrategySpec> out;
    for (ContrastStrategy s : active_strategies) {
        bool found = false;
        for (const auto& spec : all) {
            if (spec.strategy == s) {
                out.push_back(spec);
                found = true;
                break;
            }
        }
        if (!found) {
            fail("bad_config", std::string("no spec for strategy ") + strategy_name(s) +
                                   " in " + (specs_path.empty() ? "built-ins" : specs_path));
        }
    }
    return out;
}

dataset::ValidationRules RunConfig::validation_rules() const {
    dataset::ValidationRules rules;
    rules.max_side_chars = output.export_side_cap;
    for (const auto& spec : active_specs()) {
        if (spec.prefix_pair) {
            rules.forbidden_prefixes.push_back(spec.prefix_pair->plus);
            rules.forbidden_prefixes.push_back(spec.prefix_pair->minus);
        }
    }
    std::set<std::string> delims;
    for (const auto& [role, section] : endpoints) {
        for (const std::string& d : section.chat_template.delimiters()) delims.insert(d);
    }
    if (delims.empty()) {
        for (const std::string& d : chat::default_template().delimiters()) delims.insert(d);
    }
    rules.forbidden_delimiters.assign(delims.begin(), delims.end());
    return rules;
}

namespace {

ordered_json template_json(const chat::ChatTemplate& t) {
    return ordered_json{{"name", t.name},
                        {"user_open", t.user_open},
                        {"user_close", t.user_close},
                        {"assistant_open", t.assistant_open},
                        {"assistant_close", t.assistant_close},
                        {"turn_separator", t.turn_separator}};
}

}  // namespace

std::string config_digest(const RunConfig& cfg) {
    ordered_json j;
    j["corpus_sha"] = sha256_hex(read_file(cfg.corpus_path));
    j["corpus_format"] = dataset::corpus_format_name(cfg.corpus_format);
    j["mode"] = mode_name(cfg.mode);
    j["max_instructions"] = cfg.limits.max_instructions;

    ordered_json strategies = ordered_json::array();
    for (ContrastStrategy s : cfg.active_strategies) strategies.push_back(strategy_name(s));
    j["active_strategies"] = strategies;
    // The spec texts themselves, so swapping the data file invalidates the
    // journal even at the same path.
    std::vector<strategy::StrategySpec> specs = cfg.active_specs();
    j["specs_sha"] = sha256_hex(strategy::specs_to_json(
        cfg.mode == TaskMode::alignment ? specs : std::vector<strategy::StrategySpec>{},
        cfg.mode == TaskMode::general ? specs : std::vector<strategy::StrategySpec>{}));

    ordered_json eps = ordered_json::object();
    for (const auto& [role, section] : cfg.endpoints) {
        const auto& ep = section.endpoint;
        ordered_json e;
        e["kind"] = ep.kind;
        e["model"] = ep.model;
        e["base_url"] = ep.base_url;
        e["api_schema"] = ep.api_schema;
        if (ep.kind == "mock") e["rules_sha"] = sha256_hex(read_file(ep.rules_path));
        e["template"] = template_json(section.chat_template);
        eps[role_name(role)] = e;
    }
    j["endpoints"] = eps;

    j["max_input_tokens"] = cfg.limits.max_input_tokens;
    j["chars_per_token"] = cfg.limits.chars_per_token;
    j["max_new_tokens"] = cfg.limits.max_new_tokens;
    j["temperature"] = cfg.limits.temperature;
    j["export_format"] = dataset::export_format_name(cfg.output.format);
    j["export_side_cap"] = cfg.output.export_side_cap;
    return sha256_hex(j.dump());
}

std::string describe(const RunConfig& cfg) {
    std::ostringstream out;
    out << "corpus: " << cfg.corpus_path << " (" << dataset::corpus_format_name(cfg.corpus_format)
        << ")\n";
    out << "mode: " << mode_name(cfg.mode) << "\n";
    out << "strategies:";
    for (ContrastStrategy s : cfg.active_strategies) out << " " << strategy_name(s);
    out << "\n";
    for (const auto& [role, section] : cfg.endpoints) {
        const auto& ep = section.endpoint;
        out << "endpoint." << role_name(role) << ": kind=" << ep.kind;
        if (!ep.model.empty()) out << " model=" << ep.model;
        if (!ep.base_url.empty()) out << " base_url=" << ep.base_url;
        if (ep.kind == "mock") out << " rules=" << ep.rules_path;
        if (!ep.api_key_env.empty()) out << " api_key_env=" << ep.api_key_env;
        out << " schema=" << ep.api_schema << " rps=" << ep.rps
            << " max_concurrency=" << ep.max_concurrency << "\n";
    }
    out << "limits: workers=" << cfg.limits.workers
        << " max_instructions=" << cfg.limits.max_instructions
        << " max_input_tokens=" << cfg.limits.max_input_tokens
        << " chars_per_token=" << cfg.limits.chars_per_token
        << " max_new_tokens=" << cfg.limits.max_new_tokens
        << " temperature=" << cfg.limits.temperature << " retries=" << cfg.limits.retries
        << "\n";
    out << "output: dataset=" << cfg.output.dataset_path << " format="
        << dataset::export_format_name(cfg.output.format)
        << " journal=" << cfg.output.journal_path << "\n";
    return out.str();
}

backend::RetryPolicy retry_policy(const Limits& limits) {
    backend::RetryPolicy policy;
    policy.max_retries = limits.retries;
    policy.base_ms = limits.retry_base_ms;
    policy.factor = limits.retry_factor;
    policy.jitter_frac = limits.retry_jitter;
    return policy;
}

}  // namespace pairforge::config
