#include <atomic>
#include <csignal>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairforge/config.hpp"
#include "pairforge/render_debug.hpp"
#include "pairforge/synth.hpp"
#include "pairforge/toml_lite.hpp"
#include "pairforge/util.hpp"

namespace pf = pairforge;

namespace {

std::atomic<bool> g_cancel{false};

void handle_sigint(int) { g_cancel.store(true); }

// Raw option values as read from flags/config; resolved into a RunConfig
// after parsing. Template literals may use "\n"/"\t"/"\\" escapes.
struct RawEndpoint {
    std::string kind = "http";
    std::string base_url;
    std::string model;
    std::string api_key_env;
    std::string api_schema = "completions";
    double rps = 0.0;
    int max_concurrency = 4;
    int timeout_ms = 120000;
    std::string rules;
    std::string template_name;
    std::string template_user_open;
    std::string template_user_close;
    std::string template_assistant_open;
    std::string template_assistant_close;
    std::string template_turn_separator;
    bool template_set = false;
};

struct RawConfig {
    std::string corpus_path;
    std::string corpus_format = "jsonl_prompt_field";
    std::string mode = "alignment";
    std::string strategies = "prefix,demon,elicitive,nparam,leaderboard,refine";
    std::string specs_path;
    std::map<std::string, RawEndpoint> endpoints;  // by role name
    pf::config::Limits limits;
    std::string dataset_path = "dataset.jsonl";
    std::string export_format = "pairs_jsonl";
    std::string journal_path = "journal.jsonl";
    std::string report_path;
    std::size_t export_side_cap = 8192;
    std::int64_t judge_sample_n = 200;
    std::uint64_t judge_seed = 0;
    bool judge_debias = true;
    std::string judge_rubric = "contrast_3way";
};

// Applies a parsed config file onto the raw options. Flags parse afterwards
// and override key for key. Unknown keys are rejected so typos surface.
void apply_config_map(const std::map<std::string, std::string>& kv, RawConfig& raw) {
    auto as_int = [](const std::string& k, const std::string& v) -> long long {
        try {
            return std::stoll(v);
        } catch (const std::exception&) {
            pf::fail("bad_config", "key " + k + " expects an integer, got \"" + v + "\"");
        }
    };
    auto as_double = [](const std::string& k, const std::string& v) -> double {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            pf::fail("bad_config", "key " + k + " expects a number, got \"" + v + "\"");
        }
    };
    auto as_bool = [](const std::string& k, const std::string& v) -> bool {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        pf::fail("bad_config", "key " + k + " expects true or false, got \"" + v + "\"");
    };

    for (const auto& [key, value] : kv) {
        if (key == "corpus.path") raw.corpus_path = value;
        else if (key == "corpus.format") raw.corpus_format = value;
        else if (key == "mode.task") raw.mode = value;
        else if (key == "strategies.active") raw.strategies = value;
        else if (key == "strategies.specs") raw.specs_path = value;
        else if (key == "limits.workers") raw.limits.workers = static_cast<int>(as_int(key, value));
        else if (key == "limits.max_instructions") raw.limits.max_instructions = static_cast<int>(as_int(key, value));
        else if (key == "limits.max_input_tokens") raw.limits.max_input_tokens = static_cast<int>(as_int(key, value));
        else if (key == "limits.chars_per_token") raw.limits.chars_per_token = static_cast<int>(as_int(key, value));
        else if (key == "limits.max_new_tokens") raw.limits.max_new_tokens = static_cast<int>(as_int(key, value));
        else if (key == "limits.temperature") raw.limits.temperature = as_double(key, value);
        else if (key == "limits.retries") raw.limits.retries = static_cast<int>(as_int(key, value));
        else if (key == "limits.retry_base_ms") raw.limits.retry_base_ms = static_cast<int>(as_int(key, value));
        else if (key == "limits.retry_factor") raw.limits.retry_factor = as_double(key, value);
        else if (key == "limits.retry_jitter") raw.limits.retry_jitter = as_double(key, value);
        else if (key == "output.dataset") raw.dataset_path = value;
        else if (key == "output.format") raw.export_format = value;
        else if (key == "output.journal") raw.journal_path = value;
        else if (key == "output.report") raw.report_path = value;
        else if (key == "output.export_side_cap") raw.export_side_cap = static_cast<std::size_t>(as_int(key, value));
        else if (key == "judge.sample_n") raw.judge_sample_n = as_int(key, value);
        else if (key == "judge.seed") raw.judge_seed = static_cast<std::uint64_t>(as_int(key, value));
        else if (key == "judge.debias") raw.judge_debias = as_bool(key, value);
        else if (key == "judge.rubric") raw.judge_rubric = value;
        else if (pf::starts_with(key, "endpoints.")) {
            std::string rest = key.substr(std::string("endpoints.").size());
            std::size_t dot = rest.find('.');
            if (dot == std::string::npos) {
                pf::fail("bad_config", "expected endpoints.<role>.<key>, got " + key);
            }
            std::string role = rest.substr(0, dot);
            std::string field = rest.substr(dot + 1);
            auto it = raw.endpoints.find(role);
            if (it == raw.endpoints.end()) {
                pf::fail("bad_config", "unknown endpoint role in key " + key);
            }
            RawEndpoint& ep = it->second;
            if (field == "kind") ep.kind = value;
            else if (field == "base_url") ep.base_url = value;
            else if (field == "model") ep.model = value;
            else if (field == "api_key_env") ep.api_key_env = value;
            else if (field == "api_schema") ep.api_schema = value;
            else if (field == "rps") ep.rps = as_double(key, value);
            else if (field == "max_concurrency") ep.max_concurrency = static_cast<int>(as_int(key, value));
            else if (field == "timeout_ms") ep.timeout_ms = static_cast<int>(as_int(key, value));
            else if (field == "rules") ep.rules = value;
            else if (field == "template_name") ep.template_name = value;
            else if (field == "template_user_open") ep.template_user_open = value;
            else if (field == "template_user_close") ep.template_user_close = value;
            else if (field == "template_assistant_open") ep.template_assistant_open = value;
            else if (field == "template_assistant_close") ep.template_assistant_close = value;
            else if (field == "template_turn_separator") ep.template_turn_separator = value;
            else pf::fail("bad_config", "unknown endpoint key: " + key);
        } else {
            pf::fail("bad_config", "unknown config key: " + key);
        }
    }
}

std::string decode_escapes(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char n = s[i + 1];
            if (n == 'n') { out += '\n'; ++i; continue; }
            if (n == 't') { out += '\t'; ++i; continue; }
            if (n == '\\') { out += '\\'; ++i; continue; }
        }
        out += s[i];
    }
    return out;
}

void add_config_options(CLI::App& app, RawConfig& raw) {
    app.add_option("--corpus.path", raw.corpus_path, "instruction corpus file");
    app.add_option("--corpus.format", raw.corpus_format,
                   "jsonl_prompt_field or plain_lines");
    app.add_option("--mode.task", raw.mode, "alignment or general");
    app.add_option("--strategies.active", raw.strategies,
                   "comma-separated strategy subset");
    app.add_option("--strategies.specs", raw.specs_path,
                   "strategy-spec data file (default: built-ins)");

    for (const char* role : {"teacher", "small", "rival", "judge"}) {
        RawEndpoint& ep = raw.endpoints[role];
        const std::string p = std::string("--endpoints.") + role + ".";
        app.add_option(p + "kind", ep.kind, "http or mock");
        app.add_option(p + "base_url", ep.base_url);
        app.add_option(p + "model", ep.model);
        app.add_option(p + "api_key_env", ep.api_key_env,
                       "name of the environment variable holding the key");
        app.add_option(p + "api_schema", ep.api_schema, "completions or chat");
        app.add_option(p + "rps", ep.rps, "requests per second, 0 = unlimited");
        app.add_option(p + "max_concurrency", ep.max_concurrency);
        app.add_option(p + "timeout_ms", ep.timeout_ms);
        app.add_option(p + "rules", ep.rules, "mock rules file");
        app.add_option(p + "template_name", ep.template_name);
        app.add_option(p + "template_user_open", ep.template_user_open);
        app.add_option(p + "template_user_close", ep.template_user_close);
        app.add_option(p + "template_assistant_open", ep.template_assistant_open);
        app.add_option(p + "template_assistant_close", ep.template_assistant_close);
        app.add_option(p + "template_turn_separator", ep.template_turn_separator);
    }

    app.add_option("--limits.workers", raw.limits.workers);
    app.add_option("--limits.max_instructions", raw.limits.max_instructions,
                   "0 = whole corpus");
    app.add_option("--limits.max_input_tokens", raw.limits.max_input_tokens);
    app.add_option("--limits.chars_per_token", raw.limits.chars_per_token);
    app.add_option("--limits.max_new_tokens", raw.limits.max_new_tokens);
    app.add_option("--limits.temperature", raw.limits.temperature);
    app.add_option("--limits.retries", raw.limits.retries);
    app.add_option("--limits.retry_base_ms", raw.limits.retry_base_ms);
    app.add_option("--limits.retry_factor", raw.limits.retry_factor);
    app.add_option("--limits.retry_jitter", raw.limits.retry_jitter);

    app.add_option("--output.dataset", raw.dataset_path);
    app.add_option("--output.format", raw.export_format,
                   "pairs_jsonl or binarized_messages_jsonl");
    app.add_option("--output.journal", raw.journal_path);
    app.add_option("--output.report", raw.report_path);
    app.add_option("--output.export_side_cap", raw.export_side_cap);

    app.add_option("--judge.sample_n", raw.judge_sample_n);
    app.add_option("--judge.seed", raw.judge_seed);
    app.add_option("--judge.debias", raw.judge_debias);
    app.add_option("--judge.rubric", raw.judge_rubric,
                   "contrast_3way or hh_pairwise_5way");
}

pf::config::RunConfig resolve(const RawConfig& raw) {
    pf::config::RunConfig cfg;
    cfg.corpus_path = raw.corpus_path;
    cfg.corpus_format = pf::dataset::corpus_format_from_name(raw.corpus_format);
    cfg.mode = pf::mode_from_name(raw.mode);

    cfg.active_strategies.clear();
    std::string rest = raw.strategies;
    while (!rest.empty()) {
        std::size_t comma = rest.find(',');
        std::string token = pf::trim(rest.substr(0, comma));
        rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
        if (!token.empty()) cfg.active_strategies.push_back(pf::strategy_from_name(token));
    }
    cfg.specs_path = raw.specs_path;

    for (const auto& [role_name_str, rep] : raw.endpoints) {
        // Only sections that were actually configured become endpoints.
        if (rep.base_url.empty() && rep.rules.empty()) continue;
        pf::config::EndpointSection section;
        section.endpoint.name = role_name_str;
        section.endpoint.kind = rep.rules.empty() ? rep.kind : "mock";
        section.endpoint.base_url = rep.base_url;
        section.endpoint.model = rep.model;
        section.endpoint.api_key_env = rep.api_key_env;
        section.endpoint.api_schema = rep.api_schema;
        section.endpoint.rps = rep.rps;
        section.endpoint.max_concurrency = rep.max_concurrency;
        section.endpoint.timeout_ms = rep.timeout_ms;
        section.endpoint.rules_path = rep.rules;
        if (!rep.template_user_open.empty() || !rep.template_assistant_open.empty()) {
            section.chat_template.name =
                rep.template_name.empty() ? "custom" : rep.template_name;
            section.chat_template.user_open = decode_escapes(rep.template_user_open);
            section.chat_template.user_close = decode_escapes(rep.template_user_close);
            section.chat_template.assistant_open = decode_escapes(rep.template_assistant_open);
            section.chat_template.assistant_close =
                decode_escapes(rep.template_assistant_close);
            section.chat_template.turn_separator =
                decode_escapes(rep.template_turn_separator);
        }
        cfg.endpoints[pf::role_from_name(role_name_str)] = std::move(section);
    }

    cfg.limits = raw.limits;
    cfg.output.dataset_path = raw.dataset_path;
    cfg.output.format = pf::dataset::export_format_from_name(raw.export_format);
    cfg.output.journal_path = raw.journal_path;
    cfg.output.report_path = raw.report_path;
    cfg.output.export_side_cap = raw.export_side_cap;
    cfg.judge.sample_n = raw.judge_sample_n;
    cfg.judge.seed = raw.judge_seed;
    cfg.judge.debias = raw.judge_debias;
    cfg.judge.rubric = pf::judge::rubric_from_name(raw.judge_rubric);
    return cfg;
}

pf::backend::EndpointPtr judge_endpoint(const pf::config::RunConfig& cfg) {
    auto it = cfg.endpoints.find(pf::BackendRole::judge);
    if (it == cfg.endpoints.end()) {
        pf::fail("bad_config", "an [endpoints.judge] section is required for judging");
    }
    pf::backend::EndpointConfig ep = it->second.endpoint;
    if (ep.name.empty()) ep.name = "judge";
    ep.retry = pf::config::retry_policy(cfg.limits);
    if (ep.kind == "http" && ep.api_schema != "chat") {
        pf::fail("bad_config",
                 "judge endpoints use the chat schema; set endpoints.judge.api_schema=chat");
    }
    return pf::backend::make_endpoint(ep);
}

// Response files for win-rate judging: JSONL records with "prompt" and
// "response" fields, joined on the instruction digest.
std::map<std::string, std::pair<std::string, std::string>> load_responses(
    const std::string& path) {
    std::map<std::string, std::pair<std::string, std::string>> out;
    const std::string content = pf::read_file(path);
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        std::string line = content.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? content.size() : nl + 1;
        ++line_no;
        if (pf::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            pf::fail("malformed_record", path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("prompt") || !j.contains("response")) {
            pf::fail("malformed_record",
                     path + ":" + std::to_string(line_no) + ": need prompt and response");
        }
        const std::string prompt = j["prompt"].get<std::string>();
        out[pf::dataset::instruction_id(prompt)] = {prompt, j["response"].get<std::string>()};
    }
    if (out.empty()) pf::fail("empty_corpus", "no responses in " + path);
    return out;
}

int run_synth(const pf::config::RunConfig& cfg) {
    std::cerr << "effective config:\n" << pf::config::describe(cfg);
    std::signal(SIGINT, handle_sigint);
    pf::synth::Runtime runtime = pf::synth::make_runtime(cfg);
    pf::synth::RunResult result = pf::synth::run(cfg, runtime, &g_cancel);

    pf::dataset::export_dataset(result.dataset, cfg.output.dataset_path, cfg.output.format,
                                cfg.validation_rules());
    const std::string report_path = cfg.output.report_path.empty()
                                        ? cfg.output.dataset_path + ".report.json"
                                        : cfg.output.report_path;
    pf::atomic_write_file(report_path, pf::synth::report_to_json(result.report));
    std::cout << pf::synth::report_to_text(result.report);
    std::cout << "dataset: " << cfg.output.dataset_path << "\n";
    std::cout << "report: " << report_path << "\n";
    if (g_cancel.load()) {
        std::cerr << "interrupted; journal is valid, rerun to resume\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"preference-pair synthesis and judging pipeline"};
    app.require_subcommand(0, 1);

    RawConfig raw;
    for (const char* role : {"teacher", "small", "rival", "judge"}) raw.endpoints[role];

    // The config file loads before flag parsing so flags override its keys.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (pf::starts_with(arg, "--config=")) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            apply_config_map(pf::toml_lite::parse_file(config_path), raw);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    app.add_option("--config", config_path, "TOML run configuration");
    add_config_options(app, raw);

    std::string arg_dataset, arg_out, arg_format = "pairs_jsonl", arg_render_format = "text";
    std::string arg_ours, arg_theirs, arg_strategy, arg_instruction = "Hi";

    CLI::App* cmd_synth = app.add_subcommand("synth", "synthesize a preference dataset");
    cmd_synth->add_option("--limit", raw.limits.max_instructions,
                          "shorthand for --limits.max_instructions");
    CLI::App* cmd_jc = app.add_subcommand("judge-contrast",
                                          "judge chosen-vs-rejected contrast accuracy");
    cmd_jc->add_option("--dataset", arg_dataset, "pairs_jsonl dataset")->required();
    cmd_jc->add_option("--sample", raw.judge_sample_n, "sample size");
    cmd_jc->add_option("--seed", raw.judge_seed, "sampling seed");
    cmd_jc->add_option("--debias", raw.judge_debias, "judge both orientations");
    cmd_jc->add_option("--rubric", raw.judge_rubric);
    cmd_jc->add_option("--out", arg_out, "report JSON path");
    CLI::App* cmd_jw = app.add_subcommand("judge-winrate",
                                          "pairwise win rate between two response sets");
    cmd_jw->add_option("--ours", arg_ours, "JSONL with prompt+response")->required();
    cmd_jw->add_option("--theirs", arg_theirs, "JSONL with prompt+response")->required();
    cmd_jw->add_option("--debias", raw.judge_debias);
    cmd_jw->add_option("--rubric", raw.judge_rubric);
    cmd_jw->add_option("--out", arg_out, "report JSON path");
    CLI::App* cmd_validate = app.add_subcommand("dataset-validate", "validate exported pairs");
    cmd_validate->add_option("--dataset", arg_dataset)->required();
    CLI::App* cmd_stats = app.add_subcommand("dataset-stats", "length/count statistics");
    cmd_stats->add_option("--dataset", arg_dataset)->required();
    cmd_stats->add_option("--out", arg_out, "stats JSON path");
    CLI::App* cmd_export = app.add_subcommand("dataset-export",
                                              "re-export a dataset in another format");
    cmd_export->add_option("--dataset", arg_dataset)->required();
    cmd_export->add_option("--out", arg_out)->required();
    cmd_export->add_option("--format", arg_format,
                           "pairs_jsonl or binarized_messages_jsonl");
    CLI::App* cmd_render = app.add_subcommand("render-debug",
                                              "show every rendered prompt for one strategy");
    cmd_render->add_option("--strategy", arg_strategy)->required();
    cmd_render->add_option("--instruction", arg_instruction);
    CLI::App* cmd_dump = app.add_subcommand("dump-specs",
                                            "write the built-in strategy specs as JSON");
    cmd_dump->add_option("--out", arg_out)->required();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_synth->parsed()) {
            return run_synth(resolve(raw));
        }
        if (cmd_jc->parsed()) {
            pf::config::RunConfig cfg = resolve(raw);
            std::cerr << "effective config:\n" << pf::config::describe(cfg);
            pf::dataset::PreferenceDataset ds = pf::dataset::import_pairs_jsonl(arg_dataset);
            pf::judge::JudgeOptions options;
            options.sample_n = cfg.judge.sample_n;
            options.seed = cfg.judge.seed;
            options.debias = cfg.judge.debias;
            auto endpoint = judge_endpoint(cfg);
            const auto& rubric = pf::judge::default_rubric(cfg.judge.rubric);
            pf::judge::AccuracyReport report =
                pf::judge::contrast_accuracy(ds.pairs, *endpoint, rubric, options);
            std::cout << pf::judge::accuracy_report_to_text(report);
            if (!arg_out.empty()) {
                pf::atomic_write_file(arg_out, pf::judge::accuracy_report_to_json(report));
            }
            return 0;
        }
        if (cmd_jw->parsed()) {
            pf::config::RunConfig cfg = resolve(raw);
            std::cerr << "effective config:\n" << pf::config::describe(cfg);
            auto ours_raw = load_responses(arg_ours);
            auto theirs_raw = load_responses(arg_theirs);
            std::map<std::string, std::string> ours, theirs;
            for (const auto& [id, entry] : ours_raw) {
                auto it = theirs_raw.find(id);
                if (it == theirs_raw.end()) {
                    pf::fail("key_mismatch", "instruction only in --ours: " + id);
                }
                ours[entry.first] = entry.second;
                theirs[it->second.first] = it->second.second;
            }
            if (theirs_raw.size() != ours_raw.size()) {
                pf::fail("key_mismatch", "response sets differ in size");
            }
            pf::judge::JudgeOptions options;
            options.debias = cfg.judge.debias;
            auto endpoint = judge_endpoint(cfg);
            const auto& rubric = pf::judge::default_rubric(cfg.judge.rubric);
            pf::judge::WinRateReport report =
                pf::judge::win_rate(ours, theirs, *endpoint, rubric, options);
            std::cout << pf::judge::win_rate_report_to_text(report);
            if (!arg_out.empty()) {
                pf::atomic_write_file(arg_out, pf::judge::win_rate_report_to_json(report));
            }
            return 0;
        }
        if (cmd_validate->parsed()) {
            pf::config::RunConfig cfg = resolve(raw);
            pf::dataset::PreferenceDataset ds = pf::dataset::import_pairs_jsonl(arg_dataset);
            pf::dataset::ValidationRules rules = pf::dataset::default_validation_rules(cfg.mode);
            rules.max_side_chars = cfg.output.export_side_cap;
            std::int64_t bad = 0;
            for (const auto& pair : ds.pairs) {
                for (const auto& v : pf::dataset::validate_pair(pair, rules)) {
                    ++bad;
                    std::cout << pair.instruction_id << "/" << pf::strategy_name(pair.strategy)
                              << ": " << v.kind << " (" << v.field << ": " << v.detail
                              << ")\n";
                }
            }
            std::cout << ds.pairs.size() << " pairs, " << bad << " violation(s)\n";
            return bad == 0 ? 0 : 1;
        }
        if (cmd_stats->parsed()) {
            pf::dataset::PreferenceDataset ds = pf::dataset::import_pairs_jsonl(arg_dataset);
            pf::dataset::StatsReport report = pf::dataset::stats(ds);
            std::cout << pf::dataset::stats_to_text(report);
            if (!arg_out.empty()) {
                pf::atomic_write_file(arg_out, pf::dataset::stats_to_json(report));
            }
            return 0;
        }
        if (cmd_export->parsed()) {
            pf::config::RunConfig cfg = resolve(raw);
            pf::dataset::PreferenceDataset ds = pf::dataset::import_pairs_jsonl(arg_dataset);
            pf::dataset::ValidationRules rules = pf::dataset::default_validation_rules(cfg.mode);
            rules.max_side_chars = cfg.output.export_side_cap;
            pf::dataset::export_dataset(ds, arg_out,
                                        pf::dataset::export_format_from_name(arg_format), rules);
            std::cout << "exported " << ds.pairs.size() << " pairs to " << arg_out << "\n";
            return 0;
        }
        if (cmd_render->parsed()) {
            pf::config::RunConfig cfg = resolve(raw);
            std::cerr << "mode: " << pf::mode_name(cfg.mode) << "\n";
            pf::ContrastStrategy s = pf::strategy_from_name(arg_strategy);
            pf::strategy::StrategySpec spec;
            if (cfg.specs_path.empty()) {
                spec = pf::strategy::default_spec(s, cfg.mode);
            } else {
                bool found = false;
                for (const auto& candidate : cfg.active_specs()) {
                    if (candidate.strategy == s) {
                        spec = candidate;
                        found = true;
                        break;
                    }
                }
                if (!found) pf::fail("unknown_strategy", arg_strategy);
            }
            pf::chat::ChatTemplate tmpl = pf::chat::default_template();
            auto teacher = cfg.endpoints.find(pf::BackendRole::teacher);
            if (teacher != cfg.endpoints.end()) tmpl = teacher->second.chat_template;
            std::cout << pf::cli::render_debug_text(spec, arg_instruction, tmpl,
                                                    cfg.limits.max_input_chars());
            return 0;
        }
        if (cmd_dump->parsed()) {
            pf::atomic_write_file(
                arg_out, pf::strategy::specs_to_json(
                             pf::strategy::default_specs(pf::TaskMode::alignment),
                             pf::strategy::default_specs(pf::TaskMode::general)));
            std::cout << "wrote " << arg_out << "\n";
            return 0;
        }
        std::cerr << app.help();
        return 2;
    } catch (const pf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
