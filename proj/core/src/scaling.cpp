#include "latwalk/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "latwalk/error.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

void ScalingTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].estimate > 0.0))
      fail(ErrorCode::InvalidArgument, "scaling table '" + label + "': estimate at n=" + std::to_string(rows[i].n) +
                                           " is not positive");
    if (i > 0 && rows[i].n <= rows[i - 1].n)
      fail(ErrorCode::InvalidArgument, "scaling table '" + label + "': n must be strictly increasing");
  }
}

PowerFit fit_power(const ScalingTable& table, double target_exponent) {
  if (table.rows.size() < 2)
    fail(ErrorCode::InsufficientSamples, "a power fit needs at least two rows, got " + std::to_string(table.rows.size()));
  table.validate();
  std::vector<double> x, y;
  for (const auto& r : table.rows) {
    x.push_back(std::log(static_cast<double>(r.n)));
    y.push_back(std::log(r.estimate));
  }
  const auto line = least_squares(x, y);
  PowerFit fit;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.slope_stderr = line.slope_stderr;
  fit.ratio_min = INFINITY;
  fit.ratio_max = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residuals.push_back(y[i] - (line.slope * x[i] + line.intercept));
    const double ratio = table.rows[i].estimate * std::exp(-target_exponent * x[i]);
    fit.ratio_min = std::min(fit.ratio_min, ratio);
    fit.ratio_max = std::max(fit.ratio_max, ratio);
  }
  fit.spread = fit.ratio_max / fit.ratio_min;
  return fit;
}

ScalingTable read_scaling_csv(const std::string& path, const std::string& label) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string line;
  std::vector<std::string> header;
  ScalingTable table;
  table.label = label;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    return out;
  };
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::ParseError, path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t c_n = 0, c_k = 0, c_label = 0, c_p = 0, c_se = 0, c_hash = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      c_n = column("param_n");
      c_k = column("param_k");
      c_label = column("label");
      c_p = column("p_hat");
      c_se = column("stderr");
      c_hash = column("model_hash");
      continue;
    }
    const auto cols = split(line);
    if (cols.size() != header.size())
      fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " columns");
    if (table.label.empty()) table.label = cols[c_label];
    if (cols[c_label] != table.label) continue;
    try {
      table.rows.push_back({std::stoll(cols[c_n]), std::stoll(cols[c_k]), std::stod(cols[c_p]), std::stod(cols[c_se])});
    } catch (const std::logic_error&) {
      fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": malformed number");
    }
    table.model_hash = cols[c_hash];
  }
  if (header.empty()) fail(ErrorCode::ParseError, path + ": no header row");
  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  return table;
}

}  // namespace latwalk
