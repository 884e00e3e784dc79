#include "adafamily/table.hpp"

#include "adafamily/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace adafam {

TableFormat parse_table_format(std::string_view text) {
    if (text == "md" || text == "markdown") return TableFormat::Markdown;
    if (text == "csv") return TableFormat::Csv;
    throw ConfigError("unknown table format '" + std::string(text) + "' (expected md or csv)");
}

namespace {

std::string fixed2(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string metric_caption(Metric metric) {
    return metric == Metric::Top1Error ? "mean top-1 test error in percent"
                                       : "mean final loss";
}

std::string emit_markdown(const ResultTable& t) {
    std::ostringstream out;
    out << "Results: " << metric_caption(t.metric)
        << " (lower is better). Best per column in **bold**, second best in *italics*.\n\n";
    out << "| Algorithm |";
    for (const auto& c : t.columns) out << ' ' << c << " |";
    out << "\n|:---|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << "---:|";
    out << '\n';

    std::vector<std::string> notes;
    for (const auto& row : t.rows) {
        out << "| " << row.label << " |";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const auto& cell = row.cells[c];
            std::string text = std::isnan(cell.mean) ? "diverged" : fixed2(cell.mean);
            if (!std::isnan(cell.mean) && cell.rank == 1) text = "**" + text + "**";
            if (!std::isnan(cell.mean) && cell.rank == 2) text = "*" + text + "*";
            if (cell.divergent > 0) {
                notes.push_back(row.label + " / " + t.columns[c] + ": " +
                                std::to_string(cell.divergent) + " of " +
                                std::to_string(cell.runs) +
                                " runs diverged and are excluded from the mean.");
                text += " [" + std::to_string(notes.size()) + "]";
            }
            out << ' ' << text << " |";
        }
        out << '\n';
    }
    if (!notes.empty()) {
        out << '\n';
        for (std::size_t i = 0; i < notes.size(); ++i) out << '[' << i + 1 << "] " << notes[i] << '\n';
    }
    return out.str();
}

std::string emit_csv(const ResultTable& t) {
    std::ostringstream out;
    out << "algorithm";
    for (const auto& c : t.columns) {
        out << ',' << csv_field(c) << ',' << csv_field(c + "_rank") << ','
            << csv_field(c + "_diverged");
    }
    out << '\n';
    for (const auto& row : t.rows) {
        out << csv_field(row.label);
        for (const auto& cell : row.cells) {
            out << ',' << fixed2(cell.mean) << ',' << cell.rank << ',' << cell.divergent;
        }
        out << '\n';
    }
    return out.str();
}

std::vector<std::string> parse_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (quoted) throw ParseError("table csv", line_no, "unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

template <class T>
T parse_field(const std::string& s, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("table csv", line_no, "bad number '" + s + "'");
    }
    return value;
}

} // namespace

std::string emit_table(const ResultTable& table, TableFormat format) {
    if (table.rows.empty() || table.columns.empty()) throw ConfigError("cannot emit an empty table");
    for (const auto& row : table.rows) {
        if (row.cells.size() != table.columns.size()) {
            throw ShapeError("row '" + row.label + "' has the wrong number of cells");
        }
    }
    return format == TableFormat::Markdown ? emit_markdown(table) : emit_csv(table);
}

ResultTable parse_csv_table(std::string_view text) {
    ResultTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;

        auto fields = parse_csv_line(line, line_no);
        if (t.columns.empty() && line_no == 1) {
            if (fields.size() < 4 || (fields.size() - 1) % 3 != 0 || fields[0] != "algorithm") {
                throw ParseError("table csv", line_no, "unexpected header");
            }
            for (std::size_t i = 1; i < fields.size(); i += 3) t.columns.push_back(fields[i]);
            continue;
        }
        if (fields.size() != 1 + 3 * t.columns.size()) {
            throw ParseError("table csv", line_no, "expected " + std::to_string(1 + 3 * t.columns.size()) +
                                                     " fields");
        }
        AggregateResult row{fields[0], {}};
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            CellSummary cell;
            const auto& mean = fields[1 + 3 * c];
            cell.mean = mean == "nan" ? std::nan("") : parse_field<double>(mean, line_no);
            cell.rank = parse_field<std::size_t>(fields[2 + 3 * c], line_no);
            cell.divergent = parse_field<std::size_t>(fields[3 + 3 * c], line_no);
            row.cells.push_back(cell);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ParseError("table csv", 0, "missing header");
    return t;
}

} // namespace adafam
