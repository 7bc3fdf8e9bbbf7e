#include "tmatch/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmatch/csv.hpp"
#include "tmatch/error.hpp"
#include "tmatch/format.hpp"
#include "tmatch/paired_data.hpp"
#include "tmatch/report.hpp"
#include "tmatch/simulation.hpp"
#include "tmatch/trim_rate.hpp"
#include "tmatch/trimmed_match.hpp"

namespace tmatch {
namespace {

using nlohmann::json;

struct AnalyzeArgs {
  std::string input;
  std::string schema = "auto";
  std::string method = "auto";
  std::string trim = "auto";
  double lambda_max = kDefaultLambdaMax;
  double confidence = 0.9;
  std::string format = "table";
  std::uint64_t seed = 0;
  bool rescale = false;
};

struct BandArgs {
  std::string input;
  std::string schema = "auto";
  double lambda_max = kDefaultLambdaMax;
  double confidence = 0.9;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::vector<double> sweep_delta;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
};

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

struct Diagnostics {
  double kurtosis_x = NAN;
  double kurtosis_y = NAN;
  double kurtosis_residual = NAN;
  double symmetry_p = NAN;
};

template <class Fn>
double or_nan(Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    return NAN;
  }
}

Diagnostics diagnose(std::span<const PairedDifference> diffs, double point) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& d : diffs) {
    xs.push_back(d.x);
    ys.push_back(d.y);
  }
  Diagnostics out;
  out.kurtosis_x = or_nan([&] { return sample_kurtosis(xs); });
  out.kurtosis_y = or_nan([&] { return sample_kurtosis(ys); });
  if (std::isfinite(point)) {
    const auto res = residuals(diffs, point);
    out.kurtosis_residual = or_nan([&] { return sample_kurtosis(res.values); });
    out.symmetry_p = or_nan([&] { return residual_symmetry_test(res.values); });
  }
  return out;
}

// One analyze row: a report, or the error that replaced it.
struct AnalyzeRow {
  Method method = Method::kEmpirical;
  std::optional<EstimateReport> report;
  std::optional<Error> error;
  Diagnostics diagnostics;
};

void rescale_by_point(EstimateReport& r) {
  if (!std::isfinite(r.point) || r.point == 0.0) {
    throw Error(ErrorKind::kUnidentifiedRatio, "cannot rescale by a zero or infinite point estimate");
  }
  const double p = r.point;
  double lo = r.interval.lower / p;
  double hi = r.interval.upper / p;
  if (p < 0.0) std::swap(lo, hi);
  r.interval = {lo, hi};
  r.point = 1.0;
}

json row_json(const AnalyzeRow& row, double confidence) {
  json j;
  j["method"] = std::string(to_string(row.method));
  if (row.report) {
    const auto& r = *row.report;
    j["point"] = number_or_null(r.point);
    j["ci_lower"] = number_or_null(r.interval.lower);
    j["ci_upper"] = number_or_null(r.interval.upper);
    j["confidence"] = r.confidence;
    j["trim_rate"] = r.trim_rate ? json(*r.trim_rate) : json(nullptr);
    j["untrimmed_indices"] = r.trim_rate ? json(r.untrimmed) : json(nullptr);
  } else {
    j["point"] = nullptr;
    j["ci_lower"] = nullptr;
    j["ci_upper"] = nullptr;
    j["confidence"] = confidence;
    j["trim_rate"] = nullptr;
    j["untrimmed_indices"] = nullptr;
    j["error"] = row.error->what();
  }
  const auto& d = row.diagnostics;
  j["diagnostics"] = {{"kurtosis_x", number_or_null(d.kurtosis_x)},
                      {"kurtosis_y", number_or_null(d.kurtosis_y)},
                      {"kurtosis_residual", number_or_null(d.kurtosis_residual)},
                      {"symmetry_p", number_or_null(d.symmetry_p)}};
  return j;
}

void write_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c] + std::string(width[c] - row[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
}

std::string short_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "-" : format_number(v);
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void check_confidence(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "--confidence must lie in (0, 1)");
  }
}

TrimOption parse_trim(const AnalyzeArgs& a) {
  TrimOption trim;
  trim.lambda_max = a.lambda_max;
  trim.seed = a.seed;
  if (a.trim != "auto") {
    trim.automatic = false;
    try {
      std::size_t used = 0;
      trim.lambda = std::stod(a.trim, &used);
      if (used != a.trim.size()) throw std::invalid_argument(a.trim);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidInput, "--trim must be 'auto' or a rate, got '" + a.trim + "'");
    }
    if (!(trim.lambda >= 0.0 && trim.lambda < 0.5)) {
      throw Error(ErrorKind::kInvalidInput, "--trim rate must lie in [0, 0.5)");
    }
  }
  if (!(trim.lambda_max >= 0.0 && trim.lambda_max < 0.5)) {
    throw Error(ErrorKind::kInvalidInput, "--lambda-max must lie in [0, 0.5)");
  }
  return trim;
}

std::vector<Method> parse_methods(const std::string& name) {
  if (name == "auto") return {Method::kEmpirical, Method::kSign, Method::kRank, Method::kTrimmedMatch};
  if (name == "empirical") return {Method::kEmpirical};
  if (name == "sign") return {Method::kSign};
  if (name == "rank") return {Method::kRank};
  if (name == "trimmed") return {Method::kTrimmedMatch};
  throw Error(ErrorKind::kInvalidInput, "unknown --method '" + name + "'");
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  check_confidence(a.confidence);
  const auto methods = parse_methods(a.method);
  const auto trim = parse_trim(a);
  if (a.format != "table" && a.format != "json") {
    throw Error(ErrorKind::kInvalidInput, "--format must be 'table' or 'json'");
  }
  const auto data = load_paired_csv(a.input, parse_schema(a.schema));
  const double alpha = 1.0 - a.confidence;

  std::vector<AnalyzeRow> rows;
  for (auto method : methods) {
    AnalyzeRow row;
    row.method = method;
    try {
      auto report = estimate_report(data.diffs, method, alpha, trim);
      row.diagnostics = diagnose(data.diffs, report.point);
      if (a.rescale) rescale_by_point(report);
      row.report = std::move(report);
    } catch (const Error& e) {
      // A single requested method reports its error directly.
      if (methods.size() == 1 || e.is_data_error()) throw;
      row.error = e;
      row.diagnostics = diagnose(data.diffs, NAN);
    }
    rows.push_back(std::move(row));
  }

  int code = kExitOk;
  for (const auto& row : rows) {
    if (row.error) {
      err << "error: " << to_string(row.method) << ": " << row.error->what() << '\n';
      code = kExitEstimationFailure;
    }
  }

  if (a.format == "json") {
    if (rows.size() == 1) {
      out << row_json(rows[0], a.confidence).dump(2) << '\n';
    } else {
      json all = json::array();
      for (const auto& row : rows) all.push_back(row_json(row, a.confidence));
      out << all.dump(2) << '\n';
    }
    return code;
  }

  std::vector<std::vector<std::string>> table{{"method", "point", "ci_lower", "ci_upper",
                                               "confidence", "trim_rate", "kurt_x", "kurt_y",
                                               "kurt_residual", "symmetry_p"}};
  for (const auto& row : rows) {
    const auto& d = row.diagnostics;
    std::vector<std::string> cells{std::string(to_string(row.method))};
    if (row.report) {
      const auto& r = *row.report;
      cells.push_back(short_number(r.point));
      cells.push_back(short_number(r.interval.lower));
      cells.push_back(short_number(r.interval.upper));
      cells.push_back(short_number(r.confidence));
      cells.push_back(r.trim_rate ? short_number(*r.trim_rate) : "-");
    } else {
      cells.insert(cells.end(), {"failed", "-", "-", short_number(a.confidence), "-"});
    }
    for (double v : {d.kurtosis_x, d.kurtosis_y, d.kurtosis_residual, d.symmetry_p}) {
      cells.push_back(short_number(v));
    }
    table.push_back(std::move(cells));
  }
  write_table(out, table);
  for (const auto& row : rows) {
    if (row.report && row.report->trim_rate && !row.report->untrimmed.empty() &&
        row.report->untrimmed.size() < data.diffs.size()) {
      out << "trimmed pairs:";
      std::size_t next = 0;
      const auto& kept = row.report->untrimmed;
      for (std::size_t i = 0; i < data.diffs.size(); ++i) {
        if (next < kept.size() && kept[next] == i) {
          ++next;
        } else {
          out << ' ' << data.pair_ids[i];
        }
      }
      out << '\n';
    }
  }
  return code;
}

int cmd_band(const BandArgs& a, std::ostream& out, std::ostream& err) {
  check_confidence(a.confidence);
  if (!(a.lambda_max >= 0.0 && a.lambda_max < 0.5)) {
    throw Error(ErrorKind::kInvalidInput, "--lambda-max must lie in [0, 0.5)");
  }
  const auto data = load_paired_csv(a.input, parse_schema(a.schema));
  const std::size_t n = data.diffs.size();
  if (n < 3) throw Error(ErrorKind::kInvalidInput, "band needs at least 3 pairs");
  const double alpha = 1.0 - a.confidence;
  const TrimmedMatchSolver solver(data.diffs, a.seed);

  std::optional<std::size_t> selected;
  int code = kExitOk;
  try {
    selected = select_trim_rate(solver, kDefaultAlpha0, a.lambda_max).m_hat;
  } catch (const Error& e) {
    if (e.is_data_error()) throw;
    err << "error: trim selection: " << e.what() << '\n';
    code = kExitEstimationFailure;
  }

  auto cell = [](std::optional<double> v) { return v ? format_number(*v) : std::string(); };
  out << "lambda,m,point,ci_lower,ci_upper,selected\n";
  const std::size_t m_max = max_trim_count(n, a.lambda_max);
  for (std::size_t m = 0; m <= m_max; ++m) {
    std::optional<double> point;
    std::optional<double> lower;
    std::optional<double> upper;
    try {
      point = solver.estimate(m).point;
    } catch (const Error&) {
    }
    try {
      const auto ci = solver.interval(m, solver.t_threshold(m, alpha));
      lower = ci.lower;
      upper = ci.upper;
    } catch (const Error&) {
    }
    out << format_number(static_cast<double>(m) / static_cast<double>(n)) << ',' << m << ','
        << cell(point) << ',' << cell(lower) << ',' << cell(upper) << ','
        << (selected == m ? 1 : 0) << '\n';
  }
  return code;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kInvalidInput, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::kInvalidInput, "cannot write " + path.string());
}

void write_outputs(const std::filesystem::path& dir, const std::string& stem,
                   const std::vector<ScenarioSummary>& summaries, std::ostream& out) {
  std::ostringstream csv;
  std::ostringstream js;
  std::ostringstream table;
  write_summary_csv(csv, summaries);
  write_summary_json(js, summaries);
  write_summary_table(table, summaries);
  write_file(dir / (stem + ".csv"), csv.str());
  write_file(dir / (stem + ".json"), js.str());
  write_file(dir / (stem + ".txt"), table.str());
  out << table.str();
}

void warn_failures(const std::vector<ScenarioSummary>& summaries, std::ostream& err) {
  for (const auto& s : summaries) {
    for (const auto& e : s.estimators) {
      const double rate = static_cast<double>(e.failed) / static_cast<double>(e.used + e.failed);
      if (rate > 0.01) {
        err << "warning: " << to_string(s.config.distribution) << " r=" << format_number(s.config.r)
            << " delta=" << format_number(s.config.delta) << ": " << e.name << " failed on "
            << e.failed << " of " << (e.used + e.failed) << " replicates\n";
      }
    }
  }
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream in(a.config);
  if (!in) throw Error(ErrorKind::kInvalidInput, "cannot open config " + a.config);
  auto study = parse_study_config(in);
  if (a.workers) study.options.workers = *a.workers;
  if (a.seed) {
    for (auto& s : study.scenarios) s.seed = *a.seed;
  }
  if (!a.sweep_delta.empty()) study.sweep_deltas = a.sweep_delta;
  for (double d : study.sweep_deltas) {
    if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorKind::kInvalidInput, "--sweep-delta values must lie in [0, 1]");
  }

  const std::filesystem::path dir(a.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kInvalidInput, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<ScenarioSummary> summaries;
  if (study.sweep_deltas.empty()) {
    for (const auto& s : study.scenarios) summaries.push_back(run_scenario(s, study.options));
    write_outputs(dir, "summary", summaries, out);
  } else {
    // One sweep per (distribution, r); the config's delta list is ignored.
    std::vector<ScenarioConfig> bases;
    for (const auto& s : study.scenarios) {
      const bool seen = std::any_of(bases.begin(), bases.end(), [&](const ScenarioConfig& b) {
        return b.distribution == s.distribution && b.r == s.r;
      });
      if (!seen) bases.push_back(s);
    }
    for (const auto& b : bases) {
      auto rows = sensitivity_sweep(b, study.sweep_deltas, study.options);
      summaries.insert(summaries.end(), rows.begin(), rows.end());
    }
    write_outputs(dir, "sweep", summaries, out);
  }
  warn_failures(summaries, err);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trimmed Match estimation of incremental return on ad spend"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Point estimates and confidence intervals");
  an->add_option("--input", analyze.input, "CSV file (paired or geo-level)")->required();
  an->add_option("--schema", analyze.schema, "auto, paired or geo")->capture_default_str();
  an->add_option("--method", analyze.method, "auto, empirical, sign, rank or trimmed")
      ->capture_default_str();
  an->add_option("--trim", analyze.trim, "auto or a fixed trim rate")->capture_default_str();
  an->add_option("--lambda-max", analyze.lambda_max, "largest trim rate searched")
      ->capture_default_str();
  an->add_option("--confidence", analyze.confidence, "interval level")->capture_default_str();
  an->add_option("--format", analyze.format, "table or json")->capture_default_str();
  an->add_option("--seed", analyze.seed, "seed for tie-breaking jitter")->capture_default_str();
  an->add_flag("--rescale-by-point", analyze.rescale, "divide reported ratios by the point estimate");

  BandArgs band;
  auto* bd = app.add_subcommand("band", "Trimmed Match estimate and interval for each trim rate");
  bd->add_option("--input", band.input, "CSV file (paired or geo-level)")->required();
  bd->add_option("--schema", band.schema, "auto, paired or geo")->capture_default_str();
  bd->add_option("--lambda-max", band.lambda_max, "largest trim rate")->capture_default_str();
  bd->add_option("--confidence", band.confidence, "interval level")->capture_default_str();
  bd->add_option("--seed", band.seed, "seed for tie-breaking jitter")->capture_default_str();

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Monte Carlo study from a key-value config");
  sm->add_option("--config", sim.config, "study config file")->required();
  sm->add_option("--out-dir", sim.out_dir, "directory for CSV, JSON and table output")->required();
  sm->add_option("--sweep-delta", sim.sweep_delta, "delta grid for the sensitivity sweep")
      ->delimiter(',');
  sm->add_option("--workers", sim.workers, "worker threads (0 = all cores)");
  sm->add_option("--seed", sim.seed, "master seed, overrides the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitDataError;
  }

  try {
    if (*an) return cmd_analyze(analyze, out, err);
    if (*bd) return cmd_band(band, out, err);
    return cmd_simulate(sim, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_data_error() ? kExitDataError : kExitEstimationFailure;
  }
}

}  // namespace tmatch
