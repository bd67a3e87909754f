#include "pairforge/synth.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pairforge/strategy.hpp"
#include "pairforge/util.hpp"

namespace pairforge::synth {

using nlohmann::ordered_json;

std::string pair_key(const std::string& instruction_id, ContrastStrategy strategy) {
    return instruction_id + "|" + strategy_name(strategy);
}

std::string step_key(const std::string& instruction_id, ContrastStrategy strategy,
                     const std::string& step_id) {
    return pair_key(instruction_id, strategy) + "|" + step_id;
}

// ---------------------------------------------------------------------------
// Journal
// ---------------------------------------------------------------------------

namespace {

// Serialized appender; one line per record, written in a single append so
// an interrupt can only ever tear the final line.
class Journal {
public:
    Journal(std::string path, std::string config_digest)
        : path_(std::move(path)), config_digest_(std::move(config_digest)) {}

    void step_done(const std::string& instruction_id, ContrastStrategy strategy,
                   const std::string& step_id, const std::string& raw) {
        ordered_json j;
        j["kind"] = "step_done";
        j["config_digest"] = config_digest_;
        j["instruction_id"] = instruction_id;
        j["strategy"] = strategy_name(strategy);
        j["step"] = step_id;
        j["raw"] = raw;
        j["raw_sha"] = sha256_hex(raw);
        append(j);
    }

    void pair_done(const std::string& instruction_id, ContrastStrategy strategy,
                   const dataset::ContrastPair& pair) {
        ordered_json j;
        j["kind"] = "pair_done";
        j["config_digest"] = config_digest_;
        j["instruction_id"] = instruction_id;
        j["strategy"] = strategy_name(strategy);
        j["pair"] = ordered_json::parse(dataset::pair_to_json_line(pair));
        append(j);
    }

    void pair_failed(const std::string& instruction_id, ContrastStrategy strategy,
                     const std::string& reason) {
        ordered_json j;
        j["kind"] = "pair_failed";
        j["config_digest"] = config_digest_;
        j["instruction_id"] = instruction_id;
        j["strategy"] = strategy_name(strategy);
        j["reason"] = reason;
        append(j);
    }

private:
    void append(const ordered_json& j) {
        std::lock_guard<std::mutex> lock(mu_);
        append_line(path_, j.dump());
    }

    std::string path_;
    std::string config_digest_;
    std::mutex mu_;
};

}  // namespace

ResumeState resume_scan(const std::string& journal_path, const std::string& config_digest) {
    ResumeState state;
    auto content = read_file_if_exists(journal_path);
    if (!content || content->empty()) return state;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content->size()) {
        std::size_t nl = content->find('\n', pos);
        const bool torn = nl == std::string::npos;  // no terminator: interrupted append
        std::string line = content->substr(pos, torn ? nl : nl - pos);
        pos = torn ? content->size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;

        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::exception& e) {
            if (torn) break;  // tolerated; the record never fully landed
            fail("journal_corrupt",
                 journal_path + ":" + std::to_string(line_no) + ": " + e.what());
        }

        std::string digest = j.value("config_digest", "");
        if (digest != config_digest) {
            fail("journal_config_mismatch",
                 journal_path + ":" + std::to_string(line_no) +
                     ": journal was written by a different config (" + digest + ")");
        }

        const std::string kind = j.value("kind", "");
        const std::string instruction_id = j.value("instruction_id", "");
        const ContrastStrategy strategy = strategy_from_name(j.value("strategy", "prefix"));
        const std::string key = pair_key(instruction_id, strategy);
        if (kind == "step_done") {
            state.step_raw[step_key(instruction_id, strategy, j.value("step", ""))] =
                j.value("raw", "");
        } else if (kind == "pair_done") {
            state.done_keys.insert(key);
            state.pairs[key] = dataset::pair_from_json_line(j.at("pair").dump());
        } else if (kind == "pair_failed") {
            state.done_keys.insert(key);
            state.failure_reasons[key] = j.value("reason", "unknown");
        } else {
            fail("journal_corrupt",
                 journal_path + ":" + std::to_string(line_no) + ": unknown kind " + kind);
        }
    }
    return state;
}

// ---------------------------------------------------------------------------
// Runtime
// ---------------------------------------------------------------------------

Runtime make_runtime(const config::RunConfig& cfg) {
    Runtime rt;
    for (const auto& [role, section] : cfg.endpoints) {
        backend::EndpointConfig ep = section.endpoint;
        if (ep.name.empty()) ep.name = role_name(role);
        ep.retry = config::retry_policy(cfg.limits);
        rt.endpoints[role] = backend::make_endpoint(ep);
    }
    return rt;
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

namespace {

struct WorkItem {
    dataset::Instruction instruction;
    strategy::StrategySpec spec;
};

struct WorkOutcome {
    bool completed = false;
    std::string failure_reason;  // when not completed
    dataset::ContrastPair pair;  // when completed
};

strategy::Polarity polarity_of_step(const strategy::GenerationPlan& plan,
                                    const std::string& step_id) {
    return plan.chosen_from.step_id == step_id ? strategy::Polarity::plus
                                               : strategy::Polarity::minus;
}

WorkOutcome execute_pair(const config::RunConfig& cfg, Runtime& rt, Journal& journal,
                         const ResumeState& resume, const WorkItem& item) {
    WorkOutcome outcome;
    const strategy::GenerationPlan plan =
        strategy::build_plan(item.spec, item.instruction.text, cfg.limits.max_input_chars());

    std::map<std::string, strategy::GenerationTrace> traces;
    for (const strategy::PlanStep& step : plan.steps) {
        const auto& section = cfg.endpoints.at(step.backend);

        std::vector<chat::ChatTurn> turns = step.turns;
        if (step.depends_on) {
            auto dep = traces.find(*step.depends_on);
            if (dep == traces.end()) {
                outcome.failure_reason = "internal:missing_dependency:" + *step.depends_on;
                return outcome;
            }
            turns[step.splice_turn].content = dep->second.extracted_response;
        }

        std::string raw;
        const std::string skey = step_key(item.instruction.id, item.spec.strategy, step.id);
        auto prior = resume.step_raw.find(skey);
        if (prior != resume.step_raw.end()) {
            raw = prior->second;
        } else {
            backend::GenRequest req;
            try {
                req = backend::make_completion_request(section.chat_template, turns,
                                                       step.assistant_seed,
                                                       cfg.limits.max_new_tokens,
                                                       step.max_input_budget);
            } catch (const Error& e) {
                outcome.failure_reason = "render:" + std::string(e.code()) + ":" + step.id;
                return outcome;
            }
            req.temperature = cfg.limits.temperature;
            backend::GenResult res = rt.endpoints.at(step.backend)->generate(req);
            if (res.finish_reason == backend::FinishReason::error) {
                outcome.failure_reason = "backend:" + res.error + ":" + step.id;
                return outcome;
            }
            raw = res.text;
            // Journaled before any dependent step is issued; resuming from
            // here never re-runs this call.
            journal.step_done(item.instruction.id, item.spec.strategy, step.id, raw);
        }

        try {
            traces[step.id] = strategy::extract(item.spec, polarity_of_step(plan, step.id),
                                                raw, section.chat_template);
        } catch (const Error& e) {
            outcome.failure_reason = "extract:" + std::string(e.code()) + ":" + step.id;
            return outcome;
        }
    }

    dataset::ContrastPair pair;
    try {
        pair = strategy::assemble_pair(plan, traces, item.instruction, item.spec);
    } catch (const Error& e) {
        outcome.failure_reason = e.code() == "degenerate_pair" ? "degenerate"
                                                               : "assemble:" + std::string(e.code());
        return outcome;
    }
    const auto& plus_ep = cfg.endpoints.at(item.spec.backend_plus).endpoint;
    const auto& minus_ep = cfg.endpoints.at(item.spec.backend_minus).endpoint;
    if (!plus_ep.model.empty()) pair.meta["model_plus"] = plus_ep.model;
    if (!minus_ep.model.empty()) pair.meta["model_minus"] = minus_ep.model;

    const auto violations = dataset::validate_pair(pair, cfg.validation_rules());
    if (!violations.empty()) {
        outcome.failure_reason = "validation:" + violations.front().kind;
        return outcome;
    }

    outcome.completed = true;
    outcome.pair = std::move(pair);
    return outcome;
}

}  // namespace

RunResult run(const config::RunConfig& cfg, Runtime& rt, const std::atomic<bool>* cancel) {
    const auto started = std::chrono::steady_clock::now();
    cfg.validate_for_synthesis();

    const std::string digest = config_digest(cfg);
    ResumeState resume = resume_scan(cfg.output.journal_path, digest);
    Journal journal(cfg.output.journal_path, digest);

    std::vector<dataset::Instruction> instructions =
        dataset::load_instructions(cfg.corpus_path, cfg.corpus_format);
    if (cfg.limits.max_instructions > 0 &&
        static_cast<int>(instructions.size()) > cfg.limits.max_instructions) {
        instructions.resize(static_cast<std::size_t>(cfg.limits.max_instructions));
    }
    const std::vector<strategy::StrategySpec> specs = cfg.active_specs();

    // Instruction-major order spreads simultaneous work across backends.
    std::vector<WorkItem> items;
    for (const auto& instruction : instructions) {
        for (const auto& spec : specs) {
            items.push_back({instruction, spec});
        }
    }

    std::vector<WorkOutcome> outcomes(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            if (cancel && cancel->load()) return;
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            const WorkItem& item = items[i];
            const std::string key = pair_key(item.instruction.id, item.spec.strategy);

            if (resume.done_keys.count(key)) {
                auto done = resume.pairs.find(key);
                if (done != resume.pairs.end()) {
                    outcomes[i].completed = true;
                    outcomes[i].pair = done->second;
                } else {
                    outcomes[i].failure_reason = resume.failure_reasons.at(key);
                }
                continue;
            }

            WorkOutcome outcome;
            try {
                outcome = execute_pair(cfg, rt, journal, resume, item);
            } catch (const std::exception& e) {
                outcome.completed = false;
                outcome.failure_reason = std::string("internal:") + e.what();
            }
            try {
                if (outcome.completed) {
                    journal.pair_done(item.instruction.id, item.spec.strategy, outcome.pair);
                } else {
                    journal.pair_failed(item.instruction.id, item.spec.strategy,
                                        outcome.failure_reason);
                }
            } catch (const std::exception& e) {
                // The result still counts for this run; only resumability of
                // this unit is lost.
                std::fprintf(stderr, "journal append failed: %s\n", e.what());
            }
            outcomes[i] = std::move(outcome);
        }
    };

    const int worker_count = std::max(1, cfg.limits.workers);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    RunResult result;
    result.report.config_digest = digest;
    for (const auto& spec : specs) {
        result.report.per_strategy[strategy_name(spec.strategy)] = {};
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (cancel && cancel->load() && !outcomes[i].completed &&
            outcomes[i].failure_reason.empty()) {
            continue;  // never started; not requested in this run's accounting
        }
        StrategyCounts& counts =
            result.report.per_strategy[strategy_name(items[i].spec.strategy)];
        ++counts.requested;
        if (outcomes[i].completed) {
            ++counts.completed;
            result.dataset.pairs.push_back(std::move(outcomes[i].pair));
        } else if (outcomes[i].failure_reason == "degenerate") {
            ++counts.degenerate;
        } else {
            ++counts.failed;
        }
    }

    result.dataset.manifest.config_digest = digest;
    for (const auto& [name, counts] : result.report.per_strategy) {
        if (counts.failed) result.dataset.manifest.failure_counts[name + ".failed"] = counts.failed;
        if (counts.degenerate) {
            result.dataset.manifest.failure_counts[name + ".degenerate"] = counts.degenerate;
        }
    }
    dataset::refresh_manifest_counts(result.dataset);

    for (const auto& [role, endpoint] : rt.endpoints) {
        result.report.retry_total += endpoint->total_retries();
        if (auto* mock = endpoint->mock()) result.report.backend_calls += mock->total_calls();
    }
    result.report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - started)
                                .count();
    return result;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

std::string report_to_json(const SynthesisReport& report) {
    ordered_json j;
    j["config_digest"] = report.config_digest;
    ordered_json per = ordered_json::object();
    for (const auto& [name, c] : report.per_strategy) {
        per[name] = ordered_json{{"requested", c.requested},
                                 {"completed", c.completed},
                                 {"failed", c.failed},
                                 {"degenerate", c.degenerate}};
    }
    j["per_strategy"] = per;
    j["wall_ms"] = report.wall_ms;
    j["retry_total"] = report.retry_total;
    j["backend_calls"] = report.backend_calls;
    return j.dump(2) + "\n";
}

std::string report_to_text(const SynthesisReport& report) {
    std::ostringstream out;
    auto row = [&](const std::string& name, const StrategyCounts& c) {
        out << name;
        for (std::size_t i = name.size(); i < 14; ++i) out << ' ';
        out << std::setw(9) << c.requested << std::setw(11) << c.completed << std::setw(8)
            << c.failed << std::setw(12) << c.degenerate << "\n";
    };
    out << "strategy      requested  completed  failed  degenerate\n";
    StrategyCounts total;
    for (const auto& [name, c] : report.per_strategy) {
        row(name, c);
        total.requested += c.requested;
        total.completed += c.completed;
        total.failed += c.failed;
        total.degenerate += c.degenerate;
    }
    row("total", total);
    out << "wall_ms=" << report.wall_ms << " retry_total=" << report.retry_total
        << " backend_calls=" << report.backend_calls << "\n";
    return out.str();
}

}  // namespace pairforge::synth
