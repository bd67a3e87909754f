#include "pairforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pairforge/util.hpp"

namespace pairforge::report {

using nlohmann::ordered_json;

const char* table_kind_name(TableKind k) {
    switch (k) {
        case TableKind::contrast_accuracy: return "contrast_accuracy";
        case TableKind::win_rate_grid: return "win_rate_grid";
        case TableKind::length_stats: return "length_stats";
        case TableKind::ablation_curve: return "ablation_curve";
    }
    return "?";
}

void TableSpec::validate() const {
    if (cells.size() != row_labels.size()) {
        fail("incomplete_table", "row count does not match row labels");
    }
    for (const auto& row : cells) {
        if (row.size() != col_labels.size()) {
            fail("incomplete_table", "column count does not match column labels");
        }
    }
}

RenderFormat render_format_from_name(std::string_view name) {
    if (name == "text") return RenderFormat::text;
    if (name == "csv") return RenderFormat::csv;
    if (name == "json") return RenderFormat::json;
    fail("unknown_render_format", "no such render format: " + std::string(name));
}

std::string format_cell(double value) {
    // Half away from zero at one decimal.
    double scaled = std::floor(std::abs(value) * 10.0 + 0.5);
    double rounded = scaled / 10.0;
    std::ostringstream out;
    if (std::signbit(value) && rounded != 0.0) out << '-';
    std::int64_t whole = static_cast<std::int64_t>(rounded);
    std::int64_t tenth =
        static_cast<std::int64_t>(std::llround(rounded * 10.0)) - whole * 10;
    out << whole << '.' << tenth;
    return out.str();
}

namespace {

std::string csv_quote(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string render_text(const TableSpec& spec) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header;
    header.push_back(spec.title.empty() ? table_kind_name(spec.kind) : spec.title);
    for (const auto& c : spec.col_labels) header.push_back(c);
    grid.push_back(header);
    for (std::size_t r = 0; r < spec.row_labels.size(); ++r) {
        std::vector<std::string> row;
        row.push_back(spec.row_labels[r]);
        for (const auto& cell : spec.cells[r]) {
            row.push_back(cell ? format_cell(*cell) : "-");
        }
        grid.push_back(row);
    }

    std::vector<std::size_t> widths(grid[0].size(), 0);
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::ostringstream out;
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c];
            for (std::size_t pad = row[c].size(); pad < widths[c]; ++pad) out << ' ';
        }
        out << '\n';
    }
    return out.str();
}

std::string render_csv(const TableSpec& spec) {
    std::ostringstream out;
    out << csv_quote(spec.title.empty() ? table_kind_name(spec.kind) : spec.title);
    for (const auto& c : spec.col_labels) out << ',' << csv_quote(c);
    out << "\r\n";
    for (std::size_t r = 0; r < spec.row_labels.size(); ++r) {
        out << csv_quote(spec.row_labels[r]);
        for (const auto& cell : spec.cells[r]) {
            out << ',';
            if (cell) out << format_cell(*cell);
        }
        out << "\r\n";
    }
    return out.str();
}

std::string render_json(const TableSpec& spec) {
    ordered_json j;
    j["kind"] = table_kind_name(spec.kind);
    j["title"] = spec.title;
    j["columns"] = spec.col_labels;
    ordered_json rows = ordered_json::array();
    for (std::size_t r = 0; r < spec.row_labels.size(); ++r) {
        ordered_json row;
        row["label"] = spec.row_labels[r];
        ordered_json values = ordered_json::array();
        for (const auto& cell : spec.cells[r]) {
            if (cell) {
                // One-decimal quantization keeps json/csv renderings in
                // numeric agreement.
                values.push_back(std::stod(format_cell(*cell)));
            } else {
                values.push_back(nullptr);
            }
        }
        row["values"] = values;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

std::vector<std::string> parse_csv_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        if (c == '"') {
            quoted = true;
            ++i;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++i;
            continue;
        }
        field += c;
        ++i;
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

std::string render_table(const TableSpec& spec, RenderFormat format) {
    spec.validate();
    switch (format) {
        case RenderFormat::text: return render_text(spec);
        case RenderFormat::csv: return render_csv(spec);
        case RenderFormat::json: return render_json(spec);
    }
    return "";
}

TableSpec parse_csv_table(const std::string& csv_text) {
    TableSpec spec;
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < csv_text.size()) {
        std::size_t nl = csv_text.find('\n', pos);
        std::string line =
            csv_text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? csv_text.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) fail("incomplete_table", "empty csv");

    std::vector<std::string> header = parse_csv_record(lines[0]);
    if (header.empty()) fail("incomplete_table", "empty header");
    spec.title = header[0];
    spec.col_labels.assign(header.begin() + 1, header.end());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        std::vector<std::string> fields = parse_csv_record(lines[r]);
        if (fields.size() != header.size()) {
            fail("incomplete_table", "ragged csv row " + std::to_string(r + 1));
        }
        spec.row_labels.push_back(fields[0]);
        std::vector<std::optional<double>> row;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) {
                row.push_back(std::nullopt);
            } else {
                row.push_back(std::stod(fields[c]));
            }
        }
        spec.cells.push_back(std::move(row));
    }
    spec.validate();
    return spec;
}

TableSpec ablation_series(const std::vector<AblationPoint>& points) {
    if (points.empty()) fail("incomplete_table", "no ablation points");

    std::set<std::string> metric_names;
    for (const auto& p : points) {
        for (const auto& [name, _] : p.metrics) metric_names.insert(name);
    }

    TableSpec spec;
    spec.kind = TableKind::ablation_curve;
    spec.title = "configuration";
    spec.col_labels.assign(metric_names.begin(), metric_names.end());

    std::set<ContrastStrategy> running;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::set<ContrastStrategy> current(points[i].strategies.begin(),
                                           points[i].strategies.end());
        for (ContrastStrategy s : running) {
            if (!current.count(s)) {
                fail("non_monotone_subsets",
                     "configuration " + std::to_string(i + 1) + " drops strategy " +
                         strategy_name(s));
            }
        }
        running = current;

        std::string label;
        for (ContrastStrategy s : kAllStrategies) {
            if (current.count(s)) {
                if (!label.empty()) label += "+";
                label += strategy_name(s);
            }
        }
        spec.row_labels.push_back(label);
        std::vector<std::optional<double>> row;
        for (const auto& name : spec.col_labels) {
            auto it = points[i].metrics.find(name);
            row.push_back(it == points[i].metrics.end()
                              ? std::optional<double>{}
                              : std::optional<double>{it->second});
        }
        spec.cells.push_back(std::move(row));
    }
    return spec;
}

TableSpec accuracy_table(const std::vector<std::string>& oracle_names,
                         const std::vector<judge::AccuracyReport>& reports) {
    if (oracle_names.size() != reports.size()) {
        fail("incomplete_table", "one report per oracle required");
    }
    std::set<std::string> strategies;
    for (const auto& r : reports) {
        for (const auto& [name, _] : r.per_strategy) strategies.insert(name);
    }

    TableSpec spec;
    spec.kind = TableKind::contrast_accuracy;
    spec.title = "strategy";
    spec.col_labels = oracle_names;
    for (ContrastStrategy s : kAllStrategies) {
        if (!strategies.count(strategy_name(s))) continue;
        spec.row_labels.push_back(strategy_name(s));
        std::vector<std::optional<double>> row;
        for (const auto& r : reports) {
            auto it = r.per_strategy.find(strategy_name(s));
            row.push_back(it == r.per_strategy.end() ? std::optional<double>{}
                                                     : std::optional<double>{it->second.percent()});
        }
        spec.cells.push_back(std::move(row));
    }
    return spec;
}

std::string gnuplot_script(const TableSpec& spec, const std::string& csv_path) {
    std::ostringstream out;
    out << "set datafile separator ','\n";
    out << "set key outside\n";
    out << "set style data linespoints\n";
    out << "set xtics rotate by -30\n";
    out << "set yrange [0:100]\n";
    out << "plot";
    for (std::size_t c = 0; c < spec.col_labels.size(); ++c) {
        if (c) out << ",";
        out << " '" << csv_path << "' using " << (c + 2) << ":xtic(1) skip 1 title '"
            << spec.col_labels[c] << "'";
    }
    out << "\n";
    return out.str();
}

}  // namespace pairforge::report
