#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "pairforge/config.hpp"
#include "pairforge/render_debug.hpp"
#include "pairforge/synth.hpp"
#include "pairforge/toml_lite.hpp"
#include "pairforge/util.hpp"

using namespace pairforge;

namespace {

const std::string kRoot = PF_SOURCE_DIR;
const std::string kCli = PF_CLI_BIN;

config::RunConfig base_config() {
    config::RunConfig cfg;
    cfg.corpus_path = kRoot + "/fixtures/corpus20.jsonl";
    config::EndpointSection teacher;
    teacher.endpoint.name = "teacher";
    teacher.endpoint.kind = "mock";
    teacher.endpoint.rules_path = kRoot + "/fixtures/mock_teacher.json";
    cfg.endpoints[BackendRole::teacher] = teacher;
    config::EndpointSection small = teacher;
    small.endpoint.name = "small";
    small.endpoint.rules_path = kRoot + "/fixtures/mock_small.json";
    cfg.endpoints[BackendRole::small] = small;
    config::EndpointSection rival = teacher;
    rival.endpoint.name = "rival";
    rival.endpoint.rules_path = kRoot + "/fixtures/mock_rival.json";
    cfg.endpoints[BackendRole::rival] = rival;
    return cfg;
}

struct CliResult {
    int code = -1;
    std::string output;  // stdout only
};

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string out_path = "cli_out_" + std::to_string(counter++) + ".txt";
    const std::string command = kCli + " " + args + " > " + out_path + " 2>/dev/null";
    int status = std::system(command.c_str());
    CliResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = read_file_if_exists(out_path).value_or("");
    std::remove(out_path.c_str());
    return result;
}

std::string write_cli_config(const std::string& name, int max_instructions) {
    const std::string path = name;
    std::ofstream out(path, std::ios::trunc);
    out << "[corpus]\npath = \"" << kRoot << "/fixtures/corpus20.jsonl\"\n"
        << "format = \"jsonl_prompt_field\"\n\n"
        << "[mode]\ntask = \"alignment\"\n\n"
        << "[strategies]\nactive = \"prefix,demon,elicitive,nparam,leaderboard,refine\"\n\n"
        << "[endpoints.teacher]\nkind = \"mock\"\nrules = \"" << kRoot
        << "/fixtures/mock_teacher.json\"\nmodel = \"mock-large\"\n\n"
        << "[endpoints.small]\nkind = \"mock\"\nrules = \"" << kRoot
        << "/fixtures/mock_small.json\"\nmodel = \"mock-small\"\n\n"
        << "[endpoints.rival]\nkind = \"mock\"\nrules = \"" << kRoot
        << "/fixtures/mock_rival.json\"\nmodel = \"mock-rival\"\n\n"
        << "[endpoints.judge]\nkind = \"mock\"\nrules = \"" << kRoot
        << "/fixtures/mock_judge.json\"\n\n"
        << "[limits]\nworkers = 4\nmax_instructions = " << max_instructions << "\n\n"
        << "[output]\ndataset = \"" << name << ".dataset.jsonl\"\n"
        << "journal = \"" << name << ".journal.jsonl\"\n";
    return path;
}

void cleanup_cli_config(const std::string& name) {
    for (const std::string& suffix :
         {"", ".dataset.jsonl", ".dataset.jsonl.manifest.json", ".dataset.jsonl.report.json",
          ".journal.jsonl"}) {
        std::remove((name + suffix).c_str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

TEST_CASE("toml subset: sections, quoting, escapes, comments") {
    auto kv = toml_lite::parse_text(
        "# run configuration\n"
        "top = 1\n"
        "[corpus]\n"
        "path = \"a/b.jsonl\"  # trailing comment\n"
        "format = \"plain_lines\"\n"
        "\n"
        "[endpoints.teacher]\n"
        "template_user_open = \"<u>\\n\"\n"
        "rules = 'C:\\mocks\\r.json'\n"
        "rps = 2.5\n"
        "debias = true\n");
    CHECK(kv.at("top") == "1");
    CHECK(kv.at("corpus.path") == "a/b.jsonl");
    CHECK(kv.at("corpus.format") == "plain_lines");
    CHECK(kv.at("endpoints.teacher.template_user_open") == "<u>\n");  // escape decoded
    CHECK(kv.at("endpoints.teacher.rules") == "C:\\mocks\\r.json");   // literal string
    CHECK(kv.at("endpoints.teacher.rps") == "2.5");
    CHECK(kv.at("endpoints.teacher.debias") == "true");
}

TEST_CASE("toml subset: malformed input names the line") {
    auto expect_bad = [](const std::string& text, const char* fragment) {
        try {
            toml_lite::parse_text(text, "cfg");
            FAIL("unreachable");
        } catch (const Error& e) {
            CHECK(e.code() == "bad_config");
            CHECK(contains(e.what(), fragment));
        }
    };
    expect_bad("[never closed\n", "cfg:1");
    expect_bad("key"
               "\n",
               "expected key = value");
    expect_bad("k = \"open string\n", "unterminated");
    expect_bad("k = \"bad \\q escape\"\n", "unsupported escape");
    expect_bad("[s]\nk = \"v\" trailing\n", "trailing content");
}

// ---------------------------------------------------------------------------
// Config digests
// ---------------------------------------------------------------------------

TEST_CASE("config digest is stable and content-sensitive") {
    config::RunConfig cfg = base_config();
    const std::string d1 = config::config_digest(cfg);
    CHECK(d1 == config::config_digest(cfg));
    CHECK(d1.size() == 64);

    config::RunConfig operational = cfg;
    operational.limits.workers = 99;
    operational.limits.retries = 9;
    operational.endpoints[BackendRole::teacher].endpoint.rps = 5.0;
    operational.endpoints[BackendRole::teacher].endpoint.max_concurrency = 1;
    CHECK(config::config_digest(operational) == d1);

    config::RunConfig different = cfg;
    different.active_strategies = {ContrastStrategy::prefix};
    CHECK(config::config_digest(different) != d1);

    different = cfg;
    different.mode = TaskMode::general;
    CHECK(config::config_digest(different) != d1);

    different = cfg;
    different.limits.max_new_tokens = 2048;
    CHECK(config::config_digest(different) != d1);

    different = cfg;
    different.endpoints[BackendRole::teacher].chat_template.assistant_open = "<|a|>";
    CHECK(config::config_digest(different) != d1);

    different = cfg;
    different.endpoints[BackendRole::teacher].endpoint.rules_path =
        kRoot + "/fixtures/mock_rival.json";
    CHECK(config::config_digest(different) != d1);
}

TEST_CASE("describe lists env-var names but never key material") {
    setenv("PF_TEST_SECRET_ENV", "super-secret-value", 1);
    config::RunConfig cfg = base_config();
    cfg.endpoints[BackendRole::teacher].endpoint.api_key_env = "PF_TEST_SECRET_ENV";
    const std::string text = config::describe(cfg);
    CHECK(contains(text, "PF_TEST_SECRET_ENV"));
    CHECK(!contains(text, "super-secret-value"));
    unsetenv("PF_TEST_SECRET_ENV");
}

TEST_CASE("validation rules aggregate prefixes and template delimiters") {
    config::RunConfig cfg = base_config();
    auto rules = cfg.validation_rules();
    bool has_plus = false, has_minus = false;
    for (const auto& p : rules.forbidden_prefixes) {
        has_plus |= p == "(helpful, harmless)";
        has_minus |= p == "(unhelpful, harmful)";
    }
    CHECK(has_plus);
    CHECK(has_minus);
    CHECK(!rules.forbidden_delimiters.empty());
}

// ---------------------------------------------------------------------------
// render-debug text
// ---------------------------------------------------------------------------

TEST_CASE("render-debug shows both prefix prompts with their seeds") {
    auto text = cli::render_debug_text(
        strategy::default_spec(ContrastStrategy::prefix, TaskMode::alignment), "Hi");
    CHECK(contains(text, "seed: (helpful, harmless)"));
    CHECK(contains(text, "seed: (unhelpful, harmful)"));
    CHECK(contains(text, "<im_start> assistant\n(helpful, harmless)"));
    CHECK(contains(text, "pairing: chosen=plus rejected=minus"));
}

TEST_CASE("render-debug marks the refine dependency with a placeholder") {
    auto text = cli::render_debug_text(
        strategy::default_spec(ContrastStrategy::refine, TaskMode::alignment), "Hi");
    CHECK(contains(text, "depends_on: initial"));
    CHECK(contains(text, "{{step:initial}}"));
    CHECK(contains(text, "pairing: chosen=refined rejected=initial"));
}

// ---------------------------------------------------------------------------
// CLI end-to-end (subprocess)
// ---------------------------------------------------------------------------

TEST_CASE("cli: usage errors exit 2, help exits 0") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("--definitely-not-a-flag").code == 2);
    CHECK(run_cli("synth --bogus-flag").code == 2);
    CHECK(run_cli("dataset-stats").code == 2);  // missing required --dataset
}

TEST_CASE("cli: synth smoke run over the mock writes dataset and report") {
    const std::string name = "cli_smoke.toml";
    write_cli_config(name, 3);
    auto result = run_cli("synth --config " + name);
    CHECK(result.code == 0);
    const std::string dataset = read_file(name + ".dataset.jsonl");
    std::size_t lines = 0;
    for (char c : dataset) lines += c == '\n';
    CHECK(lines == 18);  // 3 instructions x 6 strategies
    CHECK(read_file_if_exists(name + ".dataset.jsonl.report.json").has_value());
    CHECK(contains(result.output, "backend_calls"));

    // Second invocation resumes and is byte-stable.
    auto again = run_cli("synth --config " + name);
    CHECK(again.code == 0);
    CHECK(read_file(name + ".dataset.jsonl") == dataset);
    cleanup_cli_config(name);
}

TEST_CASE("cli: render-debug matches the library output") {
    const std::string name = "cli_render.toml";
    write_cli_config(name, 1);
    auto result = run_cli("render-debug --strategy prefix --instruction Hi --config " + name);
    CHECK(result.code == 0);
    CHECK(result.output ==
          cli::render_debug_text(
              strategy::default_spec(ContrastStrategy::prefix, TaskMode::alignment), "Hi"));
    auto general = run_cli("render-debug --strategy elicitive --instruction Hi --config " +
                           name + " --mode.task general");
    CHECK(general.code == 0);
    CHECK(contains(general.output, "principles of crafting a good response"));
    auto unknown = run_cli("render-debug --strategy bogus --config " + name);
    CHECK(unknown.code == 1);
    cleanup_cli_config(name);
}

TEST_CASE("cli: judge-contrast over the mock judge") {
    const std::string name = "cli_judge.toml";
    write_cli_config(name, 4);
    REQUIRE(run_cli("synth --config " + name).code == 0);
    auto result = run_cli("judge-contrast --dataset " + name +
                          ".dataset.jsonl --sample 10 --seed 7 --config " + name +
                          " --out cli_judge_report.json");
    CHECK(result.code == 0);
    CHECK(contains(result.output, "n=10"));
    // The scripted judge always prefers slot A; debias turns that into ties.
    CHECK(contains(result.output, "accuracy=50"));
    const std::string report = read_file("cli_judge_report.json");
    CHECK(contains(report, "\"sample_n\": 10"));
    CHECK(contains(report, "\"seed\": 7"));
    std::remove("cli_judge_report.json");
    cleanup_cli_config(name);
}

TEST_CASE("cli: judge-winrate self-comparison reports 50.0") {
    const std::string name = "cli_winrate.toml";
    write_cli_config(name, 2);
    const std::string responses = "cli_winrate_responses.jsonl";
    atomic_write_file(responses,
                      "{\"prompt\": \"Q one?\", \"response\": \"Answer one.\"}\n"
                      "{\"prompt\": \"Q two?\", \"response\": \"Answer two.\"}\n");
    auto result = run_cli("judge-winrate --ours " + responses + " --theirs " + responses +
                          " --config " + name);
    CHECK(result.code == 0);
    CHECK(contains(result.output, "rate=50"));
    CHECK(contains(result.output, "ties=2"));
    std::remove(responses.c_str());
    cleanup_cli_config(name);
}

TEST_CASE("cli: dataset validate, stats, and export subcommands") {
    const std::string name = "cli_data.toml";
    write_cli_config(name, 2);
    REQUIRE(run_cli("synth --config " + name).code == 0);
    const std::string dataset = name + ".dataset.jsonl";

    CHECK(run_cli("dataset-validate --dataset " + dataset).code == 0);
    auto stats = run_cli("dataset-stats --dataset " + dataset);
    CHECK(stats.code == 0);
    CHECK(contains(stats.output, "overall"));

    auto exported = run_cli("dataset-export --dataset " + dataset +
                            " --out cli_binarized.jsonl --format binarized_messages_jsonl");
    CHECK(exported.code == 0);
    CHECK(contains(read_file("cli_binarized.jsonl"), "\"role\":\"assistant\""));
    std::remove("cli_binarized.jsonl");
    std::remove("cli_binarized.jsonl.manifest.json");

    // A corrupted pair fails validation with exit 1.
    std::string content = read_file(dataset);
    std::size_t at = content.find("\"chosen\":\"");
    REQUIRE(at != std::string::npos);
    content.insert(at + 10, "Thought: ");
    atomic_write_file(dataset, content);
    CHECK(run_cli("dataset-validate --dataset " + dataset).code == 1);
    cleanup_cli_config(name);
}

TEST_CASE("cli: per-endpoint template overrides reach the renderer") {
    const std::string name = "cli_template.toml";
    write_cli_config(name, 1);
    std::string extra =
        "\n[endpoints.teacher]\n"
        "template_name = \"piped\"\n"
        "template_user_open = \"<|user|>\\n\"\n"
        "template_user_close = \"<|end|>\"\n"
        "template_assistant_open = \"<|assistant|>\\n\"\n"
        "template_assistant_close = \"<|end|>\"\n"
        "template_turn_separator = \"\\n\"\n";
    {
        std::ofstream out(name, std::ios::app);
        out << extra;
    }
    auto result = run_cli("render-debug --strategy prefix --instruction Hi --config " + name);
    CHECK(result.code == 0);
    CHECK(contains(result.output, "<|user|>\nHi<|end|>"));
    CHECK(contains(result.output, "<|assistant|>\n(helpful, harmless)"));
    CHECK(!contains(result.output, "<im_start>"));

    // The same override typed as a flag (escapes decoded from the shell form).
    auto flagged = run_cli(
        "render-debug --strategy prefix --instruction Hi --config " + name +
        " '--endpoints.teacher.template_assistant_open=<|bot|>\\n'");
    CHECK(flagged.code == 0);
    CHECK(contains(flagged.output, "<|bot|>\n(helpful, harmless)"));
    cleanup_cli_config(name);
}

TEST_CASE("cli: dump-specs matches the shipped data file") {
    auto result = run_cli("dump-specs --out cli_specs.json");
    CHECK(result.code == 0);
    CHECK(read_file("cli_specs.json") == read_file(kRoot + "/data/strategy_defaults.json"));
    std::remove("cli_specs.json");
}
