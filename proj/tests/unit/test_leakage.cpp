#include <random>

#include "degradekit/leakage.hpp"
#include "helpers.hpp"

using namespace degradekit;
using namespace degradekit::leakage;

namespace {

trace::Trace labelled(std::vector<trace::Latency> s, int label) {
  trace::Trace t;
  t.samples = std::move(s);
  t.meta.class_label = label;
  return t;
}

trace::TraceSet random_two_class(std::uint64_t seed, std::size_t len, std::size_t per_class,
                                 bool leaky = true) {
  std::mt19937_64 g(seed);
  trace::TraceSet set;
  for (int label : {0, 1})
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<trace::Latency> s(len);
      for (std::size_t j = 0; j < len; ++j) {
        const bool shifted = leaky && label == 1 && j % 7 == 0;
        s[j] = 100 + static_cast<trace::Latency>(g() % 200) + (shifted ? 60 : 0);
      }
      set.add(labelled(std::move(s), label));
    }
  return set;
}

// Var over all of Y of E[Y | class] divided by Var[Y], straight from the definition.
std::vector<long double> nicv_by_definition(const trace::TraceSet& set) {
  const auto& tr = set.traces();
  const std::size_t len = tr.front().size();
  std::vector<long double> out(len);
  for (std::size_t j = 0; j < len; ++j) {
    std::map<int, std::pair<long double, std::size_t>> cls;
    long double total = 0;
    for (const auto& t : tr) {
      cls[*t.meta.class_label].first += t.samples[j];
      cls[*t.meta.class_label].second += 1;
      total += t.samples[j];
    }
    const long double n = tr.size(), mu = total / n;
    long double var = 0, between = 0;
    for (const auto& t : tr) {
      var += (t.samples[j] - mu) * (t.samples[j] - mu);
      const auto& [sum, cnt] = cls[*t.meta.class_label];
      const long double cm = sum / cnt;
      between += (cm - mu) * (cm - mu);
    }
    out[j] = var == 0 ? 0 : between / var;
  }
  return out;
}

}  // namespace

TEST_SUITE("leakage") {

TEST_CASE("identical traces give a zero curve flagged degenerate") {
  trace::TraceSet set;
  for (int label : {0, 1})
    for (int i = 0; i < 4; ++i) set.add(labelled({50, 50, 50}, label));
  const auto c = nicv(set);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(c.values[j] == 0);
    CHECK(c.degenerate[j]);
  }
  CHECK(count_pois(c, 0.1) == 0);
}

TEST_CASE("constant classes a != b give NICV 1") {
  trace::TraceSet set;
  for (int i = 0; i < 5; ++i) set.add(labelled({10, 7}, 0));
  for (int i = 0; i < 5; ++i) set.add(labelled({30, 7}, 1));
  const auto c = nicv(set);
  CHECK(c.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.degenerate[1]);
  CHECK(c.class_sizes.at(0) == 5);
}

TEST_CASE("nicv equals the definition on random sets") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto set = random_two_class(seed, 60, 25);
    const auto c = nicv(set);
    const auto ref = nicv_by_definition(set);
    for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::fabs(c.values[j] - (double)ref[j]) <= 1e-12);
  }
}

TEST_CASE("three unbalanced classes follow the definition") {
  std::mt19937_64 g(4);
  trace::TraceSet set;
  for (int label : {0, 1, 2})
    for (int i = 0; i < 5 + label * 7; ++i) {
      std::vector<trace::Latency> s(20);
      for (auto& v : s) v = 1 + static_cast<trace::Latency>(g() % 50) + label * 10;
      set.add(labelled(s, label));
    }
  const auto c = nicv(set);
  const auto ref = nicv_by_definition(set);
  for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::fabs(c.values[j] - (double)ref[j]) <= 1e-12);
}

TEST_CASE("two-class shortcut examples") {
  trace::TraceSet eq;
  for (int i = 0; i < 3; ++i) {
    eq.add(labelled({5, 1 + static_cast<trace::Latency>(i)}, 0));
    eq.add(labelled({5, 3 - static_cast<trace::Latency>(i)}, 1));
  }
  CHECK(nicv_two_class(eq).values[1] == 0);  // equal class means

  // Classes constant at 1 and 3 (a shifted 0/2 pair), total variance 1.
  trace::TraceSet ab;
  for (int i = 0; i < 4; ++i) {
    ab.add(labelled({1}, 0));
    ab.add(labelled({3}, 1));
  }
  CHECK(nicv_two_class(ab).values[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-class shortcut restricted to balanced {0,1}") {
  trace::TraceSet unbalanced;
  unbalanced.add(labelled({1}, 0));
  unbalanced.add(labelled({2}, 1));
  unbalanced.add(labelled({3}, 1));
  CHECK_KIND(nicv_two_class(unbalanced), ErrorKind::Validation);
  trace::TraceSet wrong;
  wrong.add(labelled({1}, 0));
  wrong.add(labelled({2}, 2));
  CHECK_KIND(nicv_two_class(wrong), ErrorKind::Validation);
}

TEST_CASE("balanced sets: both formulas agree") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const auto set = random_two_class(seed, 80, 30);
    const auto a = nicv(set), b = nicv_two_class(set);
    for (std::size_t j = 0; j < a.n_points(); ++j) CHECK(std::fabs(a.values[j] - b.values[j]) <= 1e-12);
  }
}

TEST_CASE("NICV stays in [0,1] and is affine invariant") {
  const auto set = random_two_class(3, 50, 20);
  const auto c = nicv(set);
  trace::TraceSet scaled;
  for (const auto& t : set.traces()) {
    auto u = t;
    for (auto& v : u.samples) v = 3 * v + 11;
    scaled.add(u);
  }
  const auto s = nicv(scaled);
  for (std::size_t j = 0; j < c.n_points(); ++j) {
    CHECK(c.values[j] >= -1e-12);
    CHECK(c.values[j] <= 1 + 1e-12);
    CHECK(std::fabs(c.values[j] - s.values[j]) <= 1e-10);
  }
}

TEST_CASE("squared correlation with the class never exceeds NICV") {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const auto set = random_two_class(seed, 40, 25);
    const auto c = nicv(set);
    std::vector<double> cls;
    for (const auto& t : set.traces()) cls.push_back(*t.meta.class_label);
    for (std::size_t j = 0; j < c.n_points(); ++j) {
      std::vector<double> y;
      for (const auto& t : set.traces()) y.push_back(t.samples[j]);
      const double r = pearson(cls, y);
      CHECK(r * r <= c.values[j] + 1e-12);
    }
  }
}

TEST_CASE("max correlation is the square root") {
  const double v[] = {0, 1, 0.25};
  const auto m = max_correlation(v);
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);
  CHECK(m[2] == 0.5);
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> r(500);
  for (auto& x : r) x = u(g);
  const auto mr = max_correlation(r);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::fabs(mr[i] * mr[i] - r[i]) <= 1e-12);
}

TEST_CASE("POI counting") {
  const double v[] = {0.05, 0.3, 0.6};
  CHECK(count_pois(v, 0.2) == 2);
  CHECK(count_pois(v, 1.0) == 0);
  CHECK_KIND(count_pois(v, 0.0), ErrorKind::Validation);
  CHECK_KIND(count_pois(v, 1.5), ErrorKind::Validation);
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> r(300);
  for (auto& x : r) x = u(g);
  std::size_t prev = SIZE_MAX;
  for (double th = 0.05; th <= 1.0; th += 0.05) {
    const auto n = count_pois(r, th);
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("metric names") {
  CHECK(parse_metric("nicv") == PoiMetric::Nicv);
  CHECK(parse_metric("maxcorr") == PoiMetric::MaxCorr);
  CHECK_KIND(parse_metric("snr"), ErrorKind::Validation);
}

TEST_CASE("stretched fixture orders the strategies at every threshold") {
  auto base = hit_pattern(200, 12, 60, 280, 3);
  std::map<DegradeStrategy, NicvCurve> curves;
  const std::pair<DegradeStrategy, std::uint32_t> f[] = {
      {DegradeStrategy::NoDegrade, 1}, {DegradeStrategy::Degrade, 4}, {DegradeStrategy::HyperDegrade, 16}};
  for (auto [s, k] : f) {
    base.strategy = s;
    curves[s] = nicv(simulate_stretched_traces(base, k, 25, 17));
  }
  for (double th : kPoiThresholds) {
    const auto n0 = count_pois(curves[DegradeStrategy::NoDegrade], th);
    const auto n1 = count_pois(curves[DegradeStrategy::Degrade], th);
    const auto n2 = count_pois(curves[DegradeStrategy::HyperDegrade], th);
    CHECK(n2 > n1);
    CHECK(n1 > n0);
    CHECK(n0 > 0);
  }
  const auto table = poi_table(curves, kPoiThresholds);
  CHECK(table.size() == 15);
  for (const auto& r : table)
    if (r.strategy == DegradeStrategy::HyperDegrade) CHECK(r.ratios.at("nodegrade") > 10);
  const auto js = poi_json(table);
  CHECK(js.find("\"threshold\"") != std::string::npos);
  CHECK(js.find("\"ratios\"") != std::string::npos);
}

TEST_CASE("max-correlation metric counts against the root") {
  std::map<DegradeStrategy, NicvCurve> curves;
  NicvCurve c;
  c.values = {0.04, 0.09, 0.36};
  c.degenerate = {false, false, false};
  curves[DegradeStrategy::NoDegrade] = c;
  CHECK(poi_table(curves, std::vector<double>{0.25}, PoiMetric::MaxCorr)[0].count == 2);
  CHECK(poi_table(curves, std::vector<double>{0.25}, PoiMetric::Nicv)[0].count == 1);
  CHECK(poi_table(curves, std::vector<double>{0.1}, PoiMetric::MaxCorr)[0].count == 3);
  CHECK(poi_table(curves, std::vector<double>{0.1}, PoiMetric::Nicv)[0].count == 1);
}

TEST_CASE("NICV CSV layout") {
  NicvCurve c;
  c.values = {0.25};
  c.degenerate = {false};
  const auto csv = nicv_csv(c);
  CHECK(csv.rfind("point_index,nicv,max_corr\n", 0) == 0);
  CHECK(csv.find("0,0.25,0.5") != std::string::npos);
}

TEST_CASE("pearson") {
  const double a[] = {1, 2, 4, 8}, neg[] = {-1, -2, -4, -8};
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  std::mt19937_64 g(12);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(1000), y(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    x[i] = n(g);
    y[i] = 0.3 * x[i] + n(g);
  }
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < 1000; ++i) mx += x[i], my += y[i];
  mx /= 1000, my /= 1000;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(std::fabs(pearson(x, y) - (double)(sxy / std::sqrt(sxx * syy))) <= 1e-12);
  const double flat[] = {2, 2, 2, 2};
  CHECK_KIND(pearson(a, flat), ErrorKind::Degeneracy);
}

TEST_CASE("welch t-test") {
  const double a[] = {1, 2, 3, 4, 5};
  CHECK(welch_t(a, a).t == 0);
  double prev = 0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double x[] = {0, eps}, y[] = {1, 1 + eps};
    const double t = std::fabs(welch_t(x, y).t);
    CHECK(t > prev);
    prev = t;
  }
  std::mt19937_64 g(3);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(40), y(60);
  for (auto& v : x) v = n(g);
  for (auto& v : y) v = 0.5 + 2 * n(g);
  auto stats = [](const std::vector<double>& v) {
    long double m = 0;
    for (double e : v) m += e;
    m /= v.size();
    long double s = 0;
    for (double e : v) s += (e - m) * (e - m);
    return std::pair<long double, long double>{m, s / (v.size() - 1)};
  };
  const auto [mx, vx] = stats(x);
  const auto [my, vy] = stats(y);
  const long double qx = vx / 40, qy = vy / 60;
  const long double t = (mx - my) / std::sqrt(qx + qy);
  const long double dof = (qx + qy) * (qx + qy) / (qx * qx / 39 + qy * qy / 59);
  const auto r = welch_t(x, y);
  CHECK(std::fabs(r.t - (double)t) <= 1e-10);
  CHECK(std::fabs(r.dof - (double)dof) <= 1e-10 * (double)dof);
}

TEST_CASE("stretch 1 without noise reproduces the pattern") {
  auto base = hit_pattern(30, 4);
  base.traces_per_class = 3;
  const auto set = simulate_stretched_traces(base, 1, 0, 1);
  for (const auto& t : set.traces())
    CHECK(t.samples == (*t.meta.class_label ? base.class1 : base.class0));
}

TEST_CASE("stretch 10 multiplies the POI count by about ten") {
  const auto base = hit_pattern(100, 8, 60, 280, 5);
  const auto c1 = count_pois(nicv(simulate_stretched_traces(base, 1, 10, 2)), 0.5);
  const auto c10 = count_pois(nicv(simulate_stretched_traces(base, 10, 10, 2)), 0.5);
  REQUIRE(c1 > 0);
  const double ratio = static_cast<double>(c10) / static_cast<double>(c1);
  CHECK(ratio >= 9.0);
  CHECK(ratio <= 11.0);
}

TEST_CASE("same seed twice gives the same traces") {
  const auto base = hit_pattern(50, 5);
  CHECK(simulate_stretched_traces(base, 3, 20, 99) == simulate_stretched_traces(base, 3, 20, 99));
  CHECK_FALSE(simulate_stretched_traces(base, 3, 20, 99) == simulate_stretched_traces(base, 3, 20, 98));
}

}  // TEST_SUITE
