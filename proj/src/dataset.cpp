#include "pairforge/dataset.hpp"

#include <algorithm>
#include <set>
#include <chrono>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "pairforge/util.hpp"

namespace pairforge::dataset {

using nlohmann::ordered_json;

std::string instruction_id(std::string_view text) {
    return sha256_hex(trim(text));
}

const char* corpus_format_name(CorpusFormat f) {
    return f == CorpusFormat::jsonl_prompt_field ? "jsonl_prompt_field" : "plain_lines";
}

CorpusFormat corpus_format_from_name(std::string_view name) {
    if (name == "jsonl_prompt_field") return CorpusFormat::jsonl_prompt_field;
    if (name == "plain_lines") return CorpusFormat::plain_lines;
    fail("unknown_corpus_format", "no such corpus format: " + std::string(name));
}

std::vector<Instruction> load_instructions(const std::string& path, CorpusFormat format) {
    const std::string content = read_file(path);
    std::vector<Instruction> out;
    std::vector<std::string> seen_ids;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        std::string line = content.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? content.size() : nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        std::string text;
        if (format == CorpusFormat::jsonl_prompt_field) {
            ordered_json j;
            try {
                j = ordered_json::parse(line);
            } catch (const ordered_json::exception& e) {
                fail("malformed_record",
                     path + ":" + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string()) {
                fail("malformed_record", path + ":" + std::to_string(line_no) +
                                             ": expected an object with a string "
                                             "\"prompt\" field");
            }
            text = j["prompt"].get<std::string>();
        } else {
            text = line;
        }
        if (trim(text).empty()) {
            fail("malformed_record",
                 path + ":" + std::to_string(line_no) + ": empty prompt");
        }

        Instruction ins;
        ins.id = instruction_id(text);
        ins.text = text;
        ins.source = path;
        if (std::find(seen_ids.begin(), seen_ids.end(), ins.id) == seen_ids.end()) {
            seen_ids.push_back(ins.id);
            out.push_back(std::move(ins));
        }
    }
    if (out.empty()) fail("empty_corpus", "no instructions in " + path);
    return out;
}

void refresh_manifest_counts(PreferenceDataset& ds) {
    ds.manifest.counts_per_strategy.clear();
    for (const ContrastPair& p : ds.pairs) {
        ++ds.manifest.counts_per_strategy[strategy_name(p.strategy)];
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Violation> validate_pair(const ContrastPair& pair, const ValidationRules& rules) {
    std::vector<Violation> out;
    auto check_side = [&](const std::string& field, const std::string& text) {
        if (trim(text).empty()) {
            out.push_back({"empty_side", field, "side is empty"});
            return;
        }
        for (const std::string& m : rules.forbidden_markers) {
            if (contains(text, m)) {
                out.push_back({"leaked_marker", field, m});
            }
        }
        for (const std::string& p : rules.forbidden_prefixes) {
            if (contains(text, p)) {
                out.push_back({"leaked_prefix", field, p});
            }
        }
        for (const std::string& d : rules.forbidden_delimiters) {
            if (contains(text, d)) {
                out.push_back({"leaked_delimiter", field, d});
            }
        }
        if (text.size() > rules.max_side_chars) {
            out.push_back({"over_length_cap", field,
                           std::to_string(text.size()) + " > " +
                               std::to_string(rules.max_side_chars)});
        }
    };
    check_side("chosen", pair.chosen);
    check_side("rejected", pair.rejected);
    if (!trim(pair.chosen).empty() &&
        normalize_for_compare(pair.chosen) == normalize_for_compare(pair.rejected)) {
        out.push_back({"equal_sides", "pair", "chosen equals rejected after normalization"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

const char* export_format_name(ExportFormat f) {
    return f == ExportFormat::pairs_jsonl ? "pairs_jsonl" : "binarized_messages_jsonl";
}

ExportFormat export_format_from_name(std::string_view name) {
    if (name == "pairs_jsonl") return ExportFormat::pairs_jsonl;
    if (name == "binarized_messages_jsonl") return ExportFormat::binarized_messages_jsonl;
    fail("unknown_export_format", "no such export format: " + std::string(name));
}

namespace {

std::string rfc3339_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json meta_to_json(const std::map<std::string, std::string>& meta) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : meta) j[k] = v;  // std::map iterates sorted
    return j;
}

ordered_json pair_to_pairs_record(const ContrastPair& p) {
    ordered_json j;
    j["prompt"] = p.instruction_text;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["strategy"] = strategy_name(p.strategy);
    j["mode"] = mode_name(p.mode);
    j["meta"] = meta_to_json(p.meta);
    return j;
}

ordered_json pair_to_binarized_record(const ContrastPair& p) {
    auto turns = [&](const std::string& response) {
        return ordered_json::array({
            ordered_json{{"role", "user"}, {"content", p.instruction_text}},
            ordered_json{{"role", "assistant"}, {"content", response}},
        });
    };
    ordered_json j;
    j["prompt"] = p.instruction_text;
    j["chosen"] = turns(p.chosen);
    j["rejected"] = turns(p.rejected);
    j["strategy"] = strategy_name(p.strategy);
    j["mode"] = mode_name(p.mode);
    j["meta"] = meta_to_json(p.meta);
    return j;
}

}  // namespace

std::string pair_to_json_line(const ContrastPair& pair) {
    return pair_to_pairs_record(pair).dump();
}

ContrastPair pair_from_json_line(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    ContrastPair p;
    p.instruction_text = j.at("prompt").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    p.mode = mode_from_name(j.at("mode").get<std::string>());
    const ordered_json meta = j.value("meta", ordered_json::object());
    for (const auto& [k, v] : meta.items()) {
        p.meta[k] = v.get<std::string>();
    }
    p.instruction_id = instruction_id(p.instruction_text);
    return p;
}

namespace {

std::string manifest_to_json(const Manifest& m) {
    ordered_json j;
    j["config_digest"] = m.config_digest;
    ordered_json counts = ordered_json::object();
    for (const auto& [k, v] : m.counts_per_strategy) counts[k] = v;
    j["counts_per_strategy"] = counts;
    ordered_json failures = ordered_json::object();
    for (const auto& [k, v] : m.failure_counts) failures[k] = v;
    j["failure_counts"] = failures;
    j["created_at"] = m.created_at;
    return j.dump(2) + "\n";
}

}  // namespace

Manifest export_dataset(const PreferenceDataset& ds, const std::string& path,
                        ExportFormat format, const ValidationRules& rules) {
    std::vector<std::string> offenders;
    std::set<std::string> seen;
    for (const ContrastPair& p : ds.pairs) {
        const std::string key = p.instruction_id + "/" + std::string(strategy_name(p.strategy)) +
                                "/" + mode_name(p.mode);
        if (!seen.insert(key).second) {
            offenders.push_back(key + " (duplicate)");
            continue;
        }
        if (!validate_pair(p, rules).empty()) {
            offenders.push_back(p.instruction_id + "/" + strategy_name(p.strategy));
        }
    }
    if (!offenders.empty()) {
        std::string list;
        for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) {
            if (i) list += ", ";
            list += offenders[i];
        }
        if (offenders.size() > 10) list += ", ...";
        fail("validation_failed",
             std::to_string(offenders.size()) + " pair(s) fail validation: " + list);
    }

    std::string body;
    for (const ContrastPair& p : ds.pairs) {
        ordered_json j = format == ExportFormat::pairs_jsonl ? pair_to_pairs_record(p)
                                                             : pair_to_binarized_record(p);
        body += j.dump();
        body += '\n';
    }
    atomic_write_file(path, body);

    Manifest manifest = ds.manifest;
    manifest.counts_per_strategy.clear();
    for (const ContrastPair& p : ds.pairs) {
        ++manifest.counts_per_strategy[strategy_name(p.strategy)];
    }
    if (manifest.created_at.empty()) manifest.created_at = rfc3339_now();
    atomic_write_file(path + ".manifest.json", manifest_to_json(manifest));
    return manifest;
}

PreferenceDataset import_pairs_jsonl(const std::string& path) {
    const std::string content = read_file(path);
    PreferenceDataset ds;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        std::string line = content.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? content.size() : nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        try {
            ds.pairs.push_back(pair_from_json_line(line));
        } catch (const ordered_json::exception& e) {
            fail("malformed_record", path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    auto manifest = read_file_if_exists(path + ".manifest.json");
    if (manifest) {
        ordered_json j = ordered_json::parse(*manifest);
        ds.manifest.config_digest = j.value("config_digest", "");
        ds.manifest.created_at = j.value("created_at", "");
        const ordered_json counts = j.value("counts_per_strategy", ordered_json::object());
        for (const auto& [k, v] : counts.items()) {
            ds.manifest.counts_per_strategy[k] = v.get<std::int64_t>();
        }
        const ordered_json failures = j.value("failure_counts", ordered_json::object());
        for (const auto& [k, v] : failures.items()) {
            ds.manifest.failure_counts[k] = v.get<std::int64_t>();
        }
    } else {
        refresh_manifest_counts(ds);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

SideLengthStats stats_over(const std::vector<const ContrastPair*>& pairs) {
    SideLengthStats s;
    s.count = static_cast<std::int64_t>(pairs.size());
    if (pairs.empty()) return s;
    std::vector<double> chosen, rejected;
    double sum_c = 0, sum_r = 0;
    for (const ContrastPair* p : pairs) {
        chosen.push_back(static_cast<double>(p->chosen.size()));
        rejected.push_back(static_cast<double>(p->rejected.size()));
        sum_c += chosen.back();
        sum_r += rejected.back();
    }
    s.mean_chosen = sum_c / static_cast<double>(pairs.size());
    s.mean_rejected = sum_r / static_cast<double>(pairs.size());
    s.median_chosen = median_of(chosen);
    s.median_rejected = median_of(rejected);
    s.mean_delta = s.mean_chosen - s.mean_rejected;
    return s;
}

}  // namespace

StatsReport stats(const PreferenceDataset& ds) {
    if (ds.pairs.empty()) fail("empty_dataset", "dataset has no pairs");
    StatsReport report;
    std::map<std::string, std::vector<const ContrastPair*>> by_strategy;
    std::vector<const ContrastPair*> all;
    for (const ContrastPair& p : ds.pairs) {
        by_strategy[strategy_name(p.strategy)].push_back(&p);
        all.push_back(&p);
    }
    for (const auto& [name, pairs] : by_strategy) {
        report.per_strategy[name] = stats_over(pairs);
    }
    report.overall = stats_over(all);
    report.failure_counts = ds.manifest.failure_counts;
    return report;
}

namespace {

ordered_json side_stats_json(const SideLengthStats& s) {
    return ordered_json{{"count", s.count},
                        {"mean_chosen", s.mean_chosen},
                        {"median_chosen", s.median_chosen},
                        {"mean_rejected", s.mean_rejected},
                        {"median_rejected", s.median_rejected},
                        {"mean_delta", s.mean_delta}};
}

}  // namespace

std::string stats_to_json(const StatsReport& report) {
    ordered_json j;
    j["overall"] = side_stats_json(report.overall);
    ordered_json per = ordered_json::object();
    for (const auto& [name, s] : report.per_strategy) per[name] = side_stats_json(s);
    j["per_strategy"] = per;
    ordered_json failures = ordered_json::object();
    for (const auto& [k, v] : report.failure_counts) failures[k] = v;
    j["failure_counts"] = failures;
    return j.dump(2) + "\n";
}

std::string stats_to_text(const StatsReport& report) {
    std::ostringstream out;
    auto row = [&](const std::string& name, const SideLengthStats& s) {
        out << name << ": n=" << s.count << " mean_chosen=" << s.mean_chosen
            << " median_chosen=" << s.median_chosen << " mean_rejected=" << s.mean_rejected
            << " median_rejected=" << s.median_rejected << " mean_delta=" << s.mean_delta
            << "\n";
    };
    row("overall", report.overall);
    for (const auto& [name, s] : report.per_strategy) row(name, s);
    for (const auto& [k, v] : report.failure_counts) {
        out << "failures." << k << "=" << v << "\n";
    }
    return out.str();
}

}  // namespace pairforge::dataset
