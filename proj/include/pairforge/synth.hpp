#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pairforge/backend.hpp"
#include "pairforge/config.hpp"
#include "pairforge/dataset.hpp"

namespace pairforge::synth {

// Journal key for one work unit: "<instruction_id>|<strategy>".
std::string pair_key(const std::string& instruction_id, ContrastStrategy strategy);
std::string step_key(const std::string& instruction_id, ContrastStrategy strategy,
                     const std::string& step_id);

// What a journal scan recovers: keys to skip, finished pairs, failure
// reasons, and raw step outputs for pairs that were cut short mid-plan.
// Stored step texts are reused verbatim so resuming never re-queries a
// backend for journaled work.
struct ResumeState {
    std::set<std::string> done_keys;                       // pair_done or pair_failed
    std::map<std::string, dataset::ContrastPair> pairs;    // by pair key
    std::map<std::string, std::string> failure_reasons;    // by pair key
    std::map<std::string, std::string> step_raw;           // by step key
};

// Scans a journal line by line. A torn trailing line (interrupted append)
// is tolerated and ignored; corruption anywhere else is an error. Records
// from a different config digest raise journal_config_mismatch.
ResumeState resume_scan(const std::string& journal_path, const std::string& config_digest);

struct StrategyCounts {
    std::int64_t requested = 0;
    std::int64_t completed = 0;
    std::int64_t failed = 0;
    std::int64_t degenerate = 0;
};

struct SynthesisReport {
    std::map<std::string, StrategyCounts> per_strategy;
    std::int64_t wall_ms = 0;
    std::int64_t retry_total = 0;
    std::int64_t backend_calls = 0;  // mock endpoints only; 0 for http
    std::string config_digest;
};

std::string report_to_json(const SynthesisReport& report);
std::string report_to_text(const SynthesisReport& report);

struct Runtime {
    std::map<BackendRole, backend::EndpointPtr> endpoints;

    backend::MockTransport* mock(BackendRole role) {
        auto it = endpoints.find(role);
        return it == endpoints.end() ? nullptr : it->second->mock();
    }
};

// Builds one endpoint per configured role, applying the run's retry policy.
Runtime make_runtime(const config::RunConfig& cfg);

struct RunResult {
    dataset::PreferenceDataset dataset;
    SynthesisReport report;
};

// End-to-end synthesis over (instruction x active strategy). Every work
// unit not already journaled executes its plan, extracts, validates, and
// journals; failures never abort the run. The assembled dataset is ordered
// corpus-order x strategy-order, so its bytes do not depend on scheduling.
// `cancel`, when set, stops new work while keeping the journal valid.
RunResult run(const config::RunConfig& cfg, Runtime& runtime,
              const std::atomic<bool>* cancel = nullptr);

}  // namespace pairforge::synth
