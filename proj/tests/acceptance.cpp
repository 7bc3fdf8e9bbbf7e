// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "tmatch/cli.hpp"
#include "tmatch/error.hpp"
#include "tmatch/estimators.hpp"
#include "tmatch/null_distribution.hpp"
#include "tmatch/parallel.hpp"
#include "tmatch/report.hpp"
#include "tmatch/simulation.hpp"
#include "tmatch/trimmed_match.hpp"

using namespace tmatch;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close_rel(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

unsigned all_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

constexpr std::uint64_t kStudySeed = 20240101;

// 1. Sweep roots against the per-interval brute force.
Verdict oracle_equivalence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(101);
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  for (std::size_t n = 3; n <= 12; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      const auto shape = static_cast<oracle::Shape>(rep % 3);
      const auto d = oracle::random_diffs(n, gen, shape);
      const TrimmedMatchSolver solver(d);
      for (std::size_t m = 0; 2 * m < n; ++m) {
        const auto got = solver.roots(m).roots;
        const auto want = oracle::brute_force_roots(d, m);
        bool same = got.size() == want.size();
        for (std::size_t k = 0; same && k < got.size(); ++k) {
          same = std::abs(got[k] - want[k]) <= 1e-9 * std::max(1.0, std::abs(want[k]));
        }
        ++compared;
        mismatches += !same;
      }
    }
  }
  const double secs = seconds_since(t0);
  v.check(mismatches == 0, std::to_string(mismatches) + " root sets differ");
  v.check(secs < 60.0, "runtime " + fmt(secs) + " s");
  v.note(std::to_string(compared) + " (dataset, m) root sets, " + fmt(secs, 3) + " s");
  return v;
}

// 2. No trimming gives the ratio of sums.
Verdict lambda_zero_reduction() {
  Verdict v;
  std::mt19937_64 gen(202);
  std::uniform_int_distribution<std::size_t> size(2, 60);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto d = oracle::random_diffs(size(gen), gen, static_cast<oracle::Shape>(rep % 3));
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : d) {
      sx += p.x;
      sy += p.y;
    }
    try {
      const double got = point_estimate(d, TrimSpec::from_rate(d.size(), 0.0)).point;
      worst = std::max(worst, std::abs(got - sy / sx) / std::max(1.0, std::abs(sy / sx)));
    } catch (const Error& e) {
      v.check(false, std::string("dataset ") + std::to_string(rep) + ": " + e.what());
    }
  }
  v.check(worst <= 1e-12, "largest relative gap " + fmt(worst));
  v.note("1000 datasets, largest relative gap " + fmt(worst));
  return v;
}

// 3. A root exists whenever the middle x order statistics do not sum to zero.
Verdict existence() {
  Verdict v;
  std::mt19937_64 gen(303);
  std::uniform_int_distribution<std::size_t> size(3, 40);
  int tested = 0;
  int failures = 0;
  while (tested < 1000) {
    const std::size_t n = size(gen);
    const auto d = oracle::random_diffs(n, gen, static_cast<oracle::Shape>(tested % 3));
    const std::size_t m = std::uniform_int_distribution<std::size_t>(0, (n - 1) / 2)(gen);
    std::vector<double> xs;
    for (const auto& p : d) xs.push_back(p.x);
    std::sort(xs.begin(), xs.end());
    const double middle = std::accumulate(xs.begin() + static_cast<long>(m),
                                          xs.end() - static_cast<long>(m), 0.0);
    if (middle == 0.0) continue;
    ++tested;
    try {
      failures += solve_trimmed_mean_equation(d, TrimSpec::from_count(n, m)).roots.empty();
    } catch (const Error&) {
      ++failures;
    }
  }
  v.check(failures == 0, std::to_string(failures) + " datasets without a root");
  v.note("1000 datasets, " + std::to_string(failures) + " without a root");
  return v;
}

// 4. Shift, scale and joint-scale laws for all four estimators.
Verdict equivariance() {
  Verdict v;
  const Method methods[] = {Method::kEmpirical, Method::kSign, Method::kRank, Method::kTrimmedMatch};
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  std::uniform_real_distribution<double> factor(0.2, 5.0);
  std::map<std::string, int> violations;
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = oracle::random_diffs(25, gen, rep % 2 ? oracle::Shape::kHeavy : oracle::Shape::kNormal);
    const double c = shift(gen);
    const double k = factor(gen);
    auto shifted = d;
    auto scaled = d;
    auto joint = d;
    for (auto& p : shifted) p.y += c * p.x;
    for (auto& p : scaled) p.y *= k;
    for (auto& p : joint) p = {k * p.x, k * p.y};
    for (auto method : methods) {
      const auto name = std::string(to_string(method));
      try {
        const auto base = estimate_report(d, method, 0.1);
        const auto s = estimate_report(shifted, method, 0.1);
        const auto y = estimate_report(scaled, method, 0.1);
        const auto j = estimate_report(joint, method, 0.1);
        const bool ok =
            close_rel(s.point, base.point + c, 1e-9) &&
            close_rel(s.interval.lower, base.interval.lower + c, 1e-9) &&
            close_rel(s.interval.upper, base.interval.upper + c, 1e-9) &&
            close_rel(y.point, k * base.point, 1e-9) &&
            close_rel(y.interval.lower, k * base.interval.lower, 1e-9) &&
            close_rel(y.interval.upper, k * base.interval.upper, 1e-9) &&
            close_rel(j.point, base.point, 1e-9) &&
            close_rel(j.interval.lower, base.interval.lower, 1e-9) &&
            close_rel(j.interval.upper, base.interval.upper, 1e-9);
        violations[name] += !ok;
      } catch (const Error& e) {
        ++violations[name];
      }
      ++checked;
    }
  }
  for (const auto& [name, count] : violations) {
    v.check(count == 0, name + ": " + std::to_string(count) + " of 100 datasets");
  }
  v.note(std::to_string(checked) + " (dataset, estimator) checks of shift, scale and joint scale");
  return v;
}

// Hull of accepted grid points; the range ends must be rejected so the hull
// cannot be cut off by the range.
struct GridHull {
  bool found = false;
  bool clipped = false;
  double lower = 0.0;
  double upper = 0.0;
};

GridHull grid_hull(double from, double to, double step, const std::function<bool(double)>& accept) {
  GridHull h;
  const auto count = static_cast<long>(std::floor((to - from) / step));
  for (long i = 0; i <= count; ++i) {
    const double theta = from + static_cast<double>(i) * step;
    if (!accept(theta)) continue;
    if (!h.found) h.lower = theta;
    h.upper = theta;
    h.found = true;
    if (i == 0 || i == count) h.clipped = true;
  }
  return h;
}

// 5. Interval endpoints against dense grid inversion.
Verdict ci_inversion() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const double step = 1e-5;
  const double alpha = 0.1;
  std::mt19937_64 gen(505);
  double worst_tm = 0.0;
  double worst_sign = 0.0;
  double worst_rank = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = oracle::random_diffs(20, gen, rep % 2 ? oracle::Shape::kHeavy : oracle::Shape::kNormal);

    const std::size_t m = 1 + static_cast<std::size_t>(rep % 4);
    const double c = null_dist::student_t_quantile(1.0 - alpha / 2, static_cast<double>(20 - 2 * m - 1));
    const auto tm = confidence_interval(d, TrimSpec::from_count(20, m), alpha);
    if (!tm.bounded()) {
      v.check(false, "dataset " + std::to_string(rep) + ": unbounded trimmed match interval");
      continue;
    }
    const double margin = 0.05 * tm.width() + 100 * step;
    const auto g = oracle::grid_interval(d, m, c, tm.lower - margin, tm.upper + margin, step);
    if (!g) {
      v.check(false, "dataset " + std::to_string(rep) + ": grid accepts nothing");
      continue;
    }
    worst_tm = std::max({worst_tm, std::abs(g->first - tm.lower), std::abs(g->second - tm.upper)});

    for (bool rank : {false, true}) {
      const auto kind = rank ? TestStatisticKind::kRank : TestStatisticKind::kSign;
      const double q = rank ? null_dist::rank_statistic_quantile(20, alpha)
                            : null_dist::sign_statistic_quantile(20, alpha);
      const auto ci = test_based_ci(d, kind, alpha);
      if (!ci.bounded()) {
        v.check(false, "dataset " + std::to_string(rep) + ": unbounded " + std::string(to_string(kind)) + " interval");
        continue;
      }
      const double pad = 0.05 * ci.width() + 100 * step;
      const auto h = grid_hull(ci.lower - pad, ci.upper + pad, step, [&](double theta) {
        return std::abs(oracle::brute_force_test_statistic(d, theta, rank)) <= q;
      });
      if (!h.found || h.clipped) {
        v.check(false, "dataset " + std::to_string(rep) + ": " + std::string(to_string(kind)) +
                           " grid hull missing or clipped");
        continue;
      }
      double& worst = rank ? worst_rank : worst_sign;
      worst = std::max({worst, std::abs(h.lower - ci.lower), std::abs(h.upper - ci.upper)});
    }
  }
  const double secs = seconds_since(t0);
  v.check(worst_tm <= 2 * step, "trimmed match endpoint error " + fmt(worst_tm));
  v.check(worst_sign <= 2 * step, "sign endpoint error " + fmt(worst_sign));
  v.check(worst_rank <= 2 * step, "rank endpoint error " + fmt(worst_rank));
  v.check(secs < 300.0, "runtime " + fmt(secs) + " s");
  v.note("50 datasets; largest endpoint errors: trimmed " + fmt(worst_tm) + ", sign " +
         fmt(worst_sign) + ", rank " + fmt(worst_rank) + " (step 1e-5), " + fmt(secs, 3) + " s");
  return v;
}

struct Grid {
  std::map<std::pair<Distribution, double>, ScenarioSummary> cells;
  double seconds = 0.0;

  [[nodiscard]] const EstimatorSummary& at(Distribution d, double r, const std::string& name) const {
    for (const auto& e : cells.at({d, r}).estimators) {
      if (e.name == name) return e;
    }
    throw std::runtime_error("no estimator " + name);
  }
};

constexpr Distribution kDistributions[] = {Distribution::kHalfNormal, Distribution::kLogNormal,
                                           Distribution::kHalfCauchy};
constexpr double kIntensities[] = {0.5, 1.0, 2.0};

Grid run_grid() {
  Grid g;
  RunOptions options;
  options.workers = all_workers();
  const auto t0 = std::chrono::steady_clock::now();
  for (auto d : kDistributions) {
    for (double r : kIntensities) {
      ScenarioConfig c;
      c.distribution = d;
      c.r = r;
      c.seed = kStudySeed;
      g.cells.emplace(std::make_pair(d, r), run_scenario(c, options));
    }
  }
  g.seconds = seconds_since(t0);
  std::cout << "# 9-scenario grid, K = 10000, " << fmt(g.seconds, 3) << " s\n";
  std::ostringstream table;
  std::vector<ScenarioSummary> rows;
  for (const auto& [key, s] : g.cells) rows.push_back(s);
  write_summary_table(table, rows);
  std::istringstream lines(table.str());
  for (std::string line; std::getline(lines, line);) std::cout << "#   " << line << '\n';
  return g;
}

std::string label(Distribution d, double r) {
  return std::string(to_string(d)) + " r=" + fmt(r);
}

// 6. Operating characteristics at desk scale.
Verdict table2(const Grid& g) {
  Verdict v;
  const auto& emp = g.at(Distribution::kHalfNormal, 2.0, "empirical");
  const auto& rank = g.at(Distribution::kHalfNormal, 2.0, "rank");
  const auto& tm = g.at(Distribution::kHalfNormal, 1.0, "trimmed_auto");
  v.check(emp.rmse >= 0.13 && emp.rmse <= 0.19, "empirical RMSE " + fmt(emp.rmse) + " outside [0.13, 0.19]");
  v.check(std::abs(emp.bias) <= 0.03, "empirical |bias| " + fmt(std::abs(emp.bias)) + " > 0.03");
  v.check(rank.rmse >= 0.19 && rank.rmse <= 0.29, "rank RMSE " + fmt(rank.rmse) + " outside [0.19, 0.29]");
  v.check(tm.rmse >= 0.30 && tm.rmse <= 0.46, "trimmed (auto) RMSE at r=1 " + fmt(tm.rmse) + " outside [0.30, 0.46]");
  v.check(g.seconds < 600.0, "grid runtime " + fmt(g.seconds) + " s");
  v.note("HalfNormal: empirical r=2 " + fmt(emp.rmse) + " (" + fmt(emp.bias, 2) + "), rank r=2 " +
         fmt(rank.rmse) + ", trimmed auto r=1 " + fmt(tm.rmse) + "; grid " + fmt(g.seconds, 3) + " s");
  return v;
}

// 7. Trimmed match (auto) power and coverage.
Verdict table3(const Grid& g) {
  Verdict v;
  // Published power (coverage) in percent, rows by distribution, columns by r.
  const double power[3][3] = {{88, 100, 100}, {60, 99, 100}, {13, 94, 100}};
  const double coverage[3][3] = {{92, 87, 86}, {92, 88, 87}, {92, 92, 89}};
  std::string got;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto d = kDistributions[i];
      const double r = kIntensities[j];
      const auto& e = g.at(d, r, "trimmed_auto");
      const double p = 100.0 * e.power;
      const double c = 100.0 * e.coverage;
      const auto where = label(d, r);
      v.check(std::abs(c - coverage[i][j]) <= 3.0,
              where + " coverage " + fmt(c, 3) + " vs " + fmt(coverage[i][j], 3));
      v.check(std::abs(p - power[i][j]) <= 5.0, where + " power " + fmt(p, 3) + " vs " + fmt(power[i][j], 3));
      v.check(c >= 85.0, where + " coverage " + fmt(c, 3) + " below 85");
      got += (got.empty() ? "" : ", ") + where + " " + fmt(p, 3) + "(" + fmt(c, 3) + ")";
    }
  }
  v.note("power(coverage): " + got);
  return v;
}

// 8. Robustness ordering of RMSE.
Verdict ordering(const Grid& g) {
  Verdict v;
  for (auto d : kDistributions) {
    for (double r : kIntensities) {
      const auto& tm = g.at(d, r, "trimmed_auto");
      const auto& sign = g.at(d, r, "sign");
      const auto& emp = g.at(d, r, "empirical");
      v.check(tm.rmse < sign.rmse, label(d, r) + ": trimmed " + fmt(tm.rmse) + " vs sign " + fmt(sign.rmse));
      if (d != Distribution::kHalfNormal) {
        v.check(tm.rmse < emp.rmse, label(d, r) + ": trimmed " + fmt(tm.rmse) + " vs empirical " + fmt(emp.rmse));
      }
    }
  }
  v.note("trimmed (auto) vs sign in 9 scenarios, vs empirical in 6 heavy-tailed scenarios");
  return v;
}

// 9. Sensitivity sweep at r = 1.
Verdict sweep(const Grid& g) {
  Verdict v;
  RunOptions options;
  options.workers = all_workers();
  const std::vector<double> deltas{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::string summary;
  for (auto d : {Distribution::kLogNormal, Distribution::kHalfCauchy}) {
    ScenarioConfig base;
    base.distribution = d;
    base.r = 1.0;
    base.seed = kStudySeed + 1;
    const auto rows = sensitivity_sweep(base, deltas, options);
    v.check(rows.size() == deltas.size(), "row count");
    for (const auto& row : rows) {
      double tm = NAN;
      double sign = NAN;
      for (const auto& e : row.estimators) {
        if (e.name == "trimmed_auto") tm = e.rmse;
        if (e.name == "sign") sign = e.rmse;
      }
      const auto where = std::string(to_string(d)) + " delta=" + fmt(row.config.delta);
      v.check(std::isfinite(tm), where + ": trimmed RMSE not finite");
      v.check(tm < sign, where + ": trimmed " + fmt(tm) + " vs sign " + fmt(sign));
      summary += (summary.empty() ? "" : ", ") + where + " " + fmt(tm, 3) + "/" + fmt(sign, 3);
    }
  }
  // Independent stream for the delta = 0 scenario of criterion 6.
  ScenarioConfig c;
  c.r = 1.0;
  c.seed = kStudySeed + 1;
  const auto again = run_scenario(c, options);
  const auto& a = g.at(Distribution::kHalfNormal, 1.0, "trimmed_auto");
  const EstimatorSummary* b = nullptr;
  for (const auto& e : again.estimators) {
    if (e.name == "trimmed_auto") b = &e;
  }
  const double noise = 3.0 * std::hypot(a.rmse_se, b->rmse_se);
  v.check(std::abs(a.rmse - b->rmse) <= noise, "HalfNormal r=1 delta=0 trimmed RMSE " + fmt(b->rmse) +
                                                   " vs " + fmt(a.rmse) + " (3 se = " + fmt(noise) + ")");
  v.note("trimmed/sign RMSE: " + summary + "; HalfNormal delta=0 rerun " + fmt(b->rmse) + " vs " +
         fmt(a.rmse) + " (3 se " + fmt(noise, 2) + "); " + fmt(seconds_since(t0), 3) + " s");
  return v;
}

// 10. Residuals at the true ratio are symmetric under common iROAS.
Verdict symmetry() {
  Verdict v;
  std::string summary;
  for (auto d : kDistributions) {
    ScenarioConfig c;
    c.distribution = d;
    c.r = 1.0;
    c.seed = kStudySeed + 2;
    const auto pop = generate_population(c);
    const auto pairs = make_pairs(pop);
    const double theta = true_theta(pop, c);
    int passed = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
      std::mt19937_64 rng(stream_seed(c.seed, k));
      const auto rep = run_replicate(pop, pairs, rng);
      passed += residual_symmetry_test(residuals(rep.diffs, theta)) >= 0.01;
    }
    v.check(passed >= 980, std::string(to_string(d)) + ": " + std::to_string(passed) + " of 1000");
    summary += (summary.empty() ? "" : ", ") + std::string(to_string(d)) + " " + std::to_string(passed);
  }
  v.note("replicates passing at the 1% level (of 1000): " + summary);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliRun {
  int code = 0;
  std::string out;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tmatch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str()};
}

// 11. Byte-identical outputs across reruns and worker counts.
Verdict determinism() {
  Verdict v;
  const auto dir = fs::temp_directory_path() / ("tmatch_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  std::mt19937_64 gen(1111);
  const auto d = oracle::random_diffs(30, gen, oracle::Shape::kHeavy);
  {
    std::ofstream f(dir / "data.csv");
    f.precision(17);
    f << "pair,x,y\n";
    for (std::size_t i = 0; i < d.size(); ++i) f << "p" << i << ',' << d[i].x << ',' << d[i].y << '\n';
  }
  const auto input = (dir / "data.csv").string();
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"analyze", "--input", input, "--format", "json", "--seed", "5"},
           {"analyze", "--input", input, "--seed", "5"},
           {"band", "--input", input, "--seed", "5"}}) {
    const auto a = cli(args);
    const auto b = cli(args);
    v.check(a.code == 0 && a.out == b.out && !a.out.empty(), args[0] + " rerun differs");
  }

  {
    std::ofstream f(dir / "study.conf");
    f << "n = 30\nK = 300\ndistributions = HalfNormal, HalfCauchy\nr = 0.5, 1\n";
  }
  const auto config = (dir / "study.conf").string();
  for (const char* mode : {"grid", "sweep"}) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "8"}) {
      const auto out = dir / (std::string(mode) + "_" + workers);
      std::vector<std::string> args{"simulate", "--config", config, "--out-dir", out.string(),
                                    "--workers", workers, "--seed", "77"};
      if (std::string(mode) == "sweep") {
        args.insert(args.end(), {"--sweep-delta", "0,0.5,1"});
      }
      const auto r = cli(args);
      v.check(r.code == 0, std::string(mode) + " simulate exit code");
      const std::string stem = std::string(mode) == "grid" ? "summary" : "sweep";
      outputs.push_back(slurp(out / (stem + ".csv")) + slurp(out / (stem + ".json")) + r.out);
    }
    v.check(!outputs[0].empty() && outputs[0] == outputs[1], std::string(mode) + ": 1 vs 8 workers differ");
  }

  IntervalOptions one;
  one.method = ThresholdMethod::kRandomization;
  one.resamples = 4000;
  one.seed = 9;
  auto eight = one;
  eight.workers = 8;
  const auto spec = TrimSpec::from_rate(d.size(), 0.1);
  const auto a = confidence_interval(d, spec, 0.1, one);
  const auto b = confidence_interval(d, spec, 0.1, eight);
  v.check(a.lower == b.lower && a.upper == b.upper, "randomization interval depends on workers");

  fs::remove_all(dir);
  v.note("analyze/band reruns, simulate grid and sweep at 1 vs 8 workers, randomization interval");
  return v;
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int id, const std::string& name, const Verdict& v) {
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name;
    for (const auto& n : v.notes) std::cout << "\n        " << n;
    std::cout << std::endl;
  };
  auto guarded = [&](int id, const std::string& name, const std::function<Verdict()>& fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      Verdict v;
      v.check(false, std::string("exception: ") + e.what());
      report(id, name, v);
    }
  };

  guarded(1, "root sets match brute force", oracle_equivalence);
  guarded(2, "no trimming gives the ratio of sums", lambda_zero_reduction);
  guarded(3, "a root exists", existence);
  guarded(4, "equivariance of all estimators", equivariance);
  guarded(5, "intervals match grid inversion", ci_inversion);
  const auto grid = run_grid();
  guarded(6, "RMSE and bias at desk scale", [&] { return table2(grid); });
  guarded(7, "trimmed match power and coverage", [&] { return table3(grid); });
  guarded(8, "RMSE ordering", [&] { return ordering(grid); });
  guarded(9, "sensitivity sweep", [&] { return sweep(grid); });
  guarded(10, "residual symmetry at the true ratio", symmetry);
  guarded(11, "determinism", determinism);
  return all ? 0 : 1;
}
