#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/judge.hpp"

namespace pairforge::report {

enum class TableKind { contrast_accuracy, win_rate_grid, length_stats, ablation_curve };

const char* table_kind_name(TableKind k);

// A rendered-table description: labeled grid of optional cells. Every cell
// comes from a report artifact; the renderer never synthesizes values.
struct TableSpec {
    TableKind kind = TableKind::contrast_accuracy;
    std::string title;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<std::optional<double>>> cells;  // [row][col]

    // Throws incomplete_table unless the grid is rectangular and matches
    // the labels.
    void validate() const;
};

enum class RenderFormat { text, csv, json };

RenderFormat render_format_from_name(std::string_view name);

// One decimal place, rounded half away from zero; missing cells render as
// "-" (text) or empty (csv/json null).
std::string format_cell(double value);

// Deterministic rendering; csv follows RFC-4180 quoting and round-trips
// numerically at one decimal place. Errors: incomplete_table.
std::string render_table(const TableSpec& spec, RenderFormat format);

// Inverse of render_table(csv) for round-trip checks and re-rendering.
TableSpec parse_csv_table(const std::string& csv_text);

struct AblationPoint {
    std::vector<ContrastStrategy> strategies;  // cumulative subset
    std::map<std::string, double> metrics;     // metric name -> value
};

// One row per cumulative configuration. Subsets must grow monotonically
// (each configuration contains every earlier one); otherwise
// non_monotone_subsets.
TableSpec ablation_series(const std::vector<AblationPoint>& points);

// Table with one row per strategy and one column per oracle report.
TableSpec accuracy_table(const std::vector<std::string>& oracle_names,
                         const std::vector<judge::AccuracyReport>& reports);

// Companion gnuplot script for a csv emitted by render_table; plotting
// stays out of the core.
std::string gnuplot_script(const TableSpec& spec, const std::string& csv_path);

}  // namespace pairforge::report
