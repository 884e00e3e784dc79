#pragma once

#include "adafamily/harness.hpp"

#include <string>
#include <string_view>

namespace adafam {

enum class TableFormat { Markdown, Csv };

TableFormat parse_table_format(std::string_view text);  // "md" | "markdown" | "csv"

// One row per algorithm, one column per problem, means with two decimals.
// Markdown marks the best cell of each column in bold and the second best in
// italics, and footnotes cells with divergent runs. CSV carries, per
// problem, the mean plus `<problem>_rank` and `<problem>_diverged` columns.
// Ranking is read from the table (see assign_ranks). Throws ConfigError
// for a table without rows or columns.
std::string emit_table(const ResultTable& table, TableFormat format);

// Reads the CSV produced by emit_table. Means come back rounded to two
// decimals; run counts are not part of the format and read as 0.
ResultTable parse_csv_table(std::string_view text);

} // namespace adafam
