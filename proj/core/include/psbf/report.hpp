#pragma once

#include <string>
#include <vector>

#include "psbf/dbn.hpp"

namespace psbf {

enum class OutputFormat { csv, table };
std::string to_string(OutputFormat format);
OutputFormat parse_output_format(const std::string& text);

// RFC-4180 quoting, applied only when the field needs it.
std::string csv_escape(const std::string& field);
std::string csv_line(const std::vector<std::string>& fields);

// Shortest stable decimal rendering (up to 12 significant digits).
std::string format_number(double v);

// Header + rows as aligned plain text, one dash rule under the header.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

std::string render_rows(OutputFormat format, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows);

// Passivity report: one row per (action, state variable) with columns
// action, variable, verdict, phi (space-joined variable names), reachable.
std::vector<std::string> passivity_header();
std::vector<std::vector<std::string>> passivity_rows(const Process& process);

// Clustering report: one row per cluster with columns cluster, variables,
// plus per-action A1 status ("ok" or the violating variable count).
std::vector<std::string> cluster_header();
std::vector<std::vector<std::string>> cluster_rows(
    const Process& process, const std::vector<std::vector<int>>& clusters);

}  // namespace psbf
