#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "degradekit/victim.hpp"

namespace degradekit::victim {

double slowdown_factor(double strategy_cycles, double baseline_cycles, bool subtract_baseline,
                       std::optional<double> reference_cycles) {
  if (!subtract_baseline) {
    require(baseline_cycles > 0, ErrorKind::Domain, "baseline cycles must be positive");
    return strategy_cycles / baseline_cycles;
  }
  require(reference_cycles.has_value(), ErrorKind::Validation,
          "baseline subtraction needs reference cycles");
  const double denom = *reference_cycles - baseline_cycles;
  require(denom > 0, ErrorKind::Domain, "reference minus baseline must be positive");
  return (strategy_cycles - baseline_cycles) / denom;
}

Aggregate aggregate_stats(std::vector<double> rows) {
  require(!rows.empty(), ErrorKind::Validation, "aggregate_stats needs at least one row");
  std::sort(rows.begin(), rows.end());
  const std::size_t n = rows.size();
  Aggregate a;
  a.min = rows.front();
  a.max = rows.back();
  a.median = n % 2 ? rows[n / 2] : (rows[n / 2 - 1] + rows[n / 2]) / 2.0;
  a.mean = std::accumulate(rows.begin(), rows.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0;
    for (double r : rows) ss += (r - a.mean) * (r - a.mean);
    a.stdev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return a;
}

SlowdownReport SlowdownReport::from_rows(std::vector<SlowdownRow> rows) {
  std::map<std::string, double> baseline;
  for (const auto& r : rows)
    if (r.strategy == DegradeStrategy::NoDegrade) baseline[r.benchmark] = r.cycles_mean;
  SlowdownReport rep;
  std::map<DegradeStrategy, std::vector<double>> ratios;
  for (auto& r : rows) {
    auto it = baseline.find(r.benchmark);
    require(it != baseline.end(), ErrorKind::Validation,
            "benchmark '" + r.benchmark + "' has no nodegrade baseline");
    r.ratio = r.strategy == DegradeStrategy::NoDegrade ? 1.0 : slowdown_factor(r.cycles_mean, it->second);
    ratios[r.strategy].push_back(r.ratio);
  }
  for (auto& [s, v] : ratios) rep.aggregates[s] = aggregate_stats(v);
  rep.rows = std::move(rows);
  return rep;
}

std::string SlowdownReport::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "benchmark,strategy,cycles_mean,cycles_rsd,ratio\n";
  for (const auto& r : rows)
    os << r.benchmark << ',' << to_string(r.strategy) << ',' << r.cycles_mean << ',' << r.cycles_rsd
       << ',' << r.ratio << '\n';
  return os.str();
}

std::map<std::pair<std::string, DegradeStrategy>, std::vector<double>> load_ratio_fixture(
    const std::string& csv_path) {
  std::ifstream f(csv_path);
  require(f.is_open(), ErrorKind::Io, "cannot open '" + csv_path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), ErrorKind::Format, "empty ratio fixture");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto col = [&](const std::string& name) {
    auto it = std::find(cols.begin(), cols.end(), name);
    require(it != cols.end(), ErrorKind::Format, "ratio fixture lacks column '" + name + "'");
    return static_cast<std::size_t>(it - cols.begin());
  };
  const auto fam = col("family"), dr = col("degrade_ratio"), hr = col("hyperdegrade_ratio");
  std::map<std::pair<std::string, DegradeStrategy>, std::vector<double>> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> v;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) v.push_back(c);
    require(v.size() == cols.size(), ErrorKind::Format, "ragged row in ratio fixture: " + line);
    out[{v[fam], DegradeStrategy::Degrade}].push_back(std::stod(v[dr]));
    out[{v[fam], DegradeStrategy::HyperDegrade}].push_back(std::stod(v[hr]));
  }
  return out;
}

}  // namespace degradekit::victim
