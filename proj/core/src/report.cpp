#include "psbf/report.hpp"

#include <cstdio>
#include <stdexcept>

#include "psbf/clustering.hpp"
#include "psbf/passivity.hpp"

namespace psbf {

std::string to_string(OutputFormat format) {
  return format == OutputFormat::csv ? "csv" : "table";
}

OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "table") return OutputFormat::table;
  throw std::invalid_argument("unknown output format: " + text);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      out += cell;
      if (c + 1 < width.size()) out.append(width[c] - cell.size() + 2, ' ');
    }
    out += '\n';
  };
  std::string out;
  emit(out, header);
  for (std::size_t c = 0; c < width.size(); ++c) {
    out.append(width[c], '-');
    if (c + 1 < width.size()) out.append(2, ' ');
  }
  out += '\n';
  for (const auto& row : rows) emit(out, row);
  return out;
}

std::string render_rows(OutputFormat format, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  if (format == OutputFormat::table) return format_table(header, rows);
  std::string out = csv_line(header);
  for (const auto& row : rows) out += csv_line(row);
  return out;
}

std::vector<std::string> passivity_header() {
  return {"action", "variable", "verdict", "phi", "reachable"};
}

std::vector<std::vector<std::string>> passivity_rows(const Process& process) {
  std::vector<std::vector<std::string>> rows;
  for (const ActionDbn& dbn : process.actions) {
    const PassivityReport report = detect_all(dbn);
    for (int i = 0; i < dbn.n(); ++i) {
      const PassivityVerdict& v = report.verdicts[static_cast<std::size_t>(i)];
      std::string phi;
      for (std::size_t p = 0; p < v.phi.size(); ++p) {
        if (p) phi += ' ';
        phi += dbn.state_vars[static_cast<std::size_t>(v.phi[p])].name;
      }
      rows.push_back({dbn.name, dbn.state_vars[static_cast<std::size_t>(i)].name,
                      v.passive() ? "passive" : "active", phi,
                      report.reachable[static_cast<std::size_t>(i)] ? "1" : "0"});
    }
  }
  return rows;
}

std::vector<std::string> cluster_header() {
  return {"cluster", "variables", "a1", "a2"};
}

std::vector<std::vector<std::string>> cluster_rows(
    const Process& process, const std::vector<std::vector<int>>& clusters) {
  const Clustering clustering =
      Clustering::from_clusters(clusters, process.n());
  const std::vector<A1Violation> violations = check_a1(process, clustering);
  const bool a2 = check_a2(clustering, process.n());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < clustering.clusters.size(); ++k) {
    std::string names;
    int cluster_violations = 0;
    for (std::size_t i = 0; i < clustering.clusters[k].size(); ++i) {
      if (i) names += ' ';
      names += process
                   .state_vars[static_cast<std::size_t>(clustering.clusters[k][i])]
                   .name;
    }
    for (const A1Violation& v : violations) {
      if (clustering.owner[static_cast<std::size_t>(v.var)] == static_cast<int>(k))
        ++cluster_violations;
    }
    rows.push_back({std::to_string(k), names,
                    cluster_violations == 0
                        ? "ok"
                        : std::to_string(cluster_violations) + " violations",
                    a2 ? "ok" : "overlap"});
  }
  return rows;
}

}  // namespace psbf
