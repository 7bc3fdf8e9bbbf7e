#include "tmatch/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tmatch/error.hpp"
#include "tmatch/estimators.hpp"
#include "tmatch/format.hpp"
#include "tmatch/null_distribution.hpp"
#include "tmatch/parallel.hpp"
#include "tmatch/trim_rate.hpp"
#include "tmatch/trimmed_match.hpp"

namespace tmatch {
namespace {

std::string lowercase_alnum(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string trim_copy(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    auto item = trim_copy(s.substr(start, end - start));
    if (!item.empty()) items.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

Error config_error(const std::string& key, const std::string& detail) {
  return Error(ErrorKind::kInvalidInput, "config field '" + key + "': " + detail);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw config_error(key, "expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw config_error(key, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

Estimator parse_estimator(const std::string& key, const std::string& text) {
  const auto name = lowercase_alnum(text);
  if (name == "empirical" || name == "emp") return Estimator::kEmpirical;
  if (name == "sign") return Estimator::kSign;
  if (name == "rank") return Estimator::kRank;
  if (name == "trimmedfixed" || name == "trimmed") return Estimator::kTrimmedFixed;
  if (name == "trimmedauto") return Estimator::kTrimmedAuto;
  throw config_error(key, "unknown estimator '" + text + "'");
}

struct Accumulator {
  double sum_error = 0.0;
  double sum_squared = 0.0;
  double sum_fourth = 0.0;
  std::size_t powered = 0;
  std::size_t covered = 0;
  std::size_t used = 0;
  std::size_t failed = 0;
};

}  // namespace

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::kHalfNormal:
      return "HalfNormal";
    case Distribution::kLogNormal:
      return "LogNormal";
    case Distribution::kHalfCauchy:
      return "HalfCauchy";
  }
  return "unknown";
}

Distribution parse_distribution(std::string_view name) {
  const auto key = lowercase_alnum(name);
  if (key == "halfnormal" || key == "hn") return Distribution::kHalfNormal;
  if (key == "lognormal" || key == "ln") return Distribution::kLogNormal;
  if (key == "halfcauchy" || key == "hc") return Distribution::kHalfCauchy;
  throw Error(ErrorKind::kInvalidInput, "unknown distribution '" + std::string(name) + "'");
}

void validate(const ScenarioConfig& config) {
  if (config.n < 2) throw config_error("n", "need at least 2 pairs");
  if (config.K < 1) throw config_error("K", "need at least 1 replicate");
  if (!(config.r > 0.0) || !std::isfinite(config.r)) throw config_error("r", "must be positive");
  if (!(config.delta >= 0.0 && config.delta <= 1.0)) {
    throw config_error("delta", "must lie in [0, 1]");
  }
  if (!std::isfinite(config.theta0)) throw config_error("theta0", "must be finite");
}

double geo_size_quantile(Distribution d, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "quantile level must lie in (0, 1)");
  }
  switch (d) {
    case Distribution::kHalfNormal:
      return null_dist::normal_quantile((1.0 + p) / 2.0);
    case Distribution::kLogNormal:
      return std::exp(null_dist::normal_quantile(p));
    case Distribution::kHalfCauchy:
      return std::tan(std::numbers::pi * p / 2.0);
  }
  return 0.0;
}

GeoPopulation generate_population(const ScenarioConfig& config) {
  validate(config);
  const std::size_t geos = 2 * config.n;
  GeoPopulation pop;
  pop.sizes.resize(geos);
  pop.control_spend.resize(geos);
  pop.control_response.resize(geos);
  pop.geo_iroas.resize(geos);
  for (std::size_t k = 0; k < geos; ++k) {
    const std::size_t g = k + 1;
    const double sign = g % 2 == 0 ? 1.0 : -1.0;  // (-1)^g
    const double z =
        geo_size_quantile(config.distribution, static_cast<double>(g) / static_cast<double>(geos + 1));
    pop.sizes[k] = z;
    pop.control_spend[k] = 0.01 * z * (1.0 + 0.25 * sign);
    pop.control_response[k] = z;
    pop.geo_iroas[k] = config.theta0 * (1.0 + config.delta * sign);
  }
  const double total_spend = std::accumulate(pop.control_spend.begin(), pop.control_spend.end(), 0.0);
  pop.budget = 0.25 * config.r * total_spend;
  return pop;
}

std::vector<GeoPair> make_pairs(const GeoPopulation& population) {
  const std::size_t geos = population.sizes.size();
  if (geos < 2 || geos % 2 != 0) {
    throw Error(ErrorKind::kInvalidInput, "pairing needs an even number of geos (at least 2)");
  }
  std::vector<std::size_t> order(geos);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return population.sizes[a] > population.sizes[b];
  });
  std::vector<GeoPair> pairs(geos / 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {order[2 * i], order[2 * i + 1]};
  return pairs;
}

Replicate run_replicate(const GeoPopulation& population, const std::vector<GeoPair>& pairs,
                        std::mt19937_64& rng) {
  const std::size_t geos = population.sizes.size();
  Replicate rep;
  rep.assignment.resize(pairs.size());
  rep.geos.resize(geos);
  for (std::size_t g = 0; g < geos; ++g) {
    rep.geos[g] = {population.control_spend[g], population.control_response[g], false};
  }
  double treated_spend = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    rep.assignment[i] = (rng() >> 63) != 0 ? 1 : -1;
    const std::size_t t = rep.assignment[i] > 0 ? pairs[i].first : pairs[i].second;
    rep.geos[t].treated = true;
    treated_spend += population.control_spend[t];
  }
  for (std::size_t g = 0; g < geos; ++g) {
    if (!rep.geos[g].treated) continue;
    const double extra = population.control_spend[g] * population.budget / treated_spend;
    rep.geos[g].spend += extra;
    rep.geos[g].response += population.geo_iroas[g] * extra;
  }
  rep.diffs.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& a = rep.geos[pairs[i].first];
    const auto& b = rep.geos[pairs[i].second];
    const double s = rep.assignment[i];
    rep.diffs[i] = {(a.spend - b.spend) * s, (a.response - b.response) * s};
  }
  return rep;
}

double true_theta(const GeoPopulation& population, const ScenarioConfig& config) {
  if (config.delta == 0.0) return config.theta0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < population.sizes.size(); ++k) {
    const double sign = (k + 1) % 2 == 0 ? 1.0 : -1.0;
    num += population.sizes[k] * (0.25 + sign);
    den += population.sizes[k] * (1.0 + 0.25 * sign);
  }
  return config.theta0 + config.delta * config.theta0 * num / den;
}

std::string estimator_name(Estimator e, double fixed_lambda) {
  switch (e) {
    case Estimator::kEmpirical:
      return "empirical";
    case Estimator::kSign:
      return "sign";
    case Estimator::kRank:
      return "rank";
    case Estimator::kTrimmedFixed:
      return "trimmed_" + format_fixed(fixed_lambda, 2);
    case Estimator::kTrimmedAuto:
      return "trimmed_auto";
  }
  return "unknown";
}

std::vector<ReplicateOutcome> evaluate_replicate(std::span<const PairedDifference> diffs,
                                                 const RunOptions& options) {
  std::vector<ReplicateOutcome> out(options.estimators.size());
  std::optional<TrimmedMatchSolver> solver;
  bool solver_failed = false;
  auto get_solver = [&]() -> const TrimmedMatchSolver* {
    if (!solver && !solver_failed) {
      try {
        solver.emplace(diffs);
      } catch (const Error&) {
        solver_failed = true;
      }
    }
    return solver ? &*solver : nullptr;
  };
  for (std::size_t e = 0; e < options.estimators.size(); ++e) {
    ReplicateOutcome& o = out[e];
    try {
      switch (options.estimators[e]) {
        case Estimator::kEmpirical: {
          const auto* s = get_solver();
          if (s == nullptr) continue;
          o.point = empirical_estimate(diffs);
          const auto ci = s->interval(0, s->t_threshold(0, options.alpha));
          o.lower = ci.lower;
          o.upper = ci.upper;
          break;
        }
        case Estimator::kSign:
        case Estimator::kRank: {
          const auto kind = options.estimators[e] == Estimator::kSign ? TestStatisticKind::kSign
                                                                      : TestStatisticKind::kRank;
          const auto inf = test_based_inference(diffs, kind, options.alpha);
          o.point = inf.estimate.point;
          o.lower = inf.interval.lower;
          o.upper = inf.interval.upper;
          break;
        }
        case Estimator::kTrimmedFixed: {
          const auto* s = get_solver();
          if (s == nullptr) continue;
          const std::size_t m = TrimSpec::from_rate(diffs.size(), options.fixed_lambda).m;
          const auto fit = s->fit(m, s->t_threshold(m, options.alpha));
          o.point = fit.estimate.point;
          o.lower = fit.interval.lower;
          o.upper = fit.interval.upper;
          break;
        }
        case Estimator::kTrimmedAuto: {
          const auto* s = get_solver();
          if (s == nullptr) continue;
          const auto fit = fit_with_auto_trim(*s, options.alpha);
          o.point = fit.fit.estimate.point;
          o.lower = fit.fit.interval.lower;
          o.upper = fit.fit.interval.upper;
          break;
        }
      }
      o.ok = std::isfinite(o.point);
    } catch (const Error&) {
      o.ok = false;
    }
  }
  return out;
}

ScenarioSummary run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  validate(config);
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw config_error("confidence", "must lie in (0, 1)");
  }
  const auto population = generate_population(config);
  const auto pairs = make_pairs(population);
  const double theta_star = true_theta(population, config);

  std::vector<std::vector<ReplicateOutcome>> outcomes(config.K);
  parallel_for(config.K, options.workers, [&](std::size_t k) {
    std::mt19937_64 rng(stream_seed(config.seed, k));
    const auto rep = run_replicate(population, pairs, rng);
    outcomes[k] = evaluate_replicate(rep.diffs, options);
  });

  std::vector<Accumulator> acc(options.estimators.size());
  for (const auto& row : outcomes) {
    for (std::size_t e = 0; e < row.size(); ++e) {
      const auto& o = row[e];
      auto& a = acc[e];
      if (!o.ok) {
        ++a.failed;
        continue;
      }
      const double err = o.point - theta_star;
      a.sum_error += err;
      a.sum_squared += err * err;
      a.sum_fourth += err * err * err * err;
      a.powered += o.lower > 0.0;
      a.covered += o.lower < theta_star && theta_star < o.upper;
      ++a.used;
    }
  }

  ScenarioSummary summary;
  summary.config = config;
  summary.theta_star = theta_star;
  for (std::size_t e = 0; e < acc.size(); ++e) {
    const auto& a = acc[e];
    EstimatorSummary s;
    s.name = estimator_name(options.estimators[e], options.fixed_lambda);
    s.used = a.used;
    s.failed = a.failed;
    if (a.used == 0) {
      s.rmse = s.rmse_se = s.bias = s.power = s.coverage =
          std::numeric_limits<double>::quiet_NaN();
    } else {
      const double used = static_cast<double>(a.used);
      const double mse = a.sum_squared / used;
      s.rmse = std::sqrt(mse);
      // Delta method: se(sqrt(MSE)) = sd(err^2) / (2 RMSE sqrt(used)).
      const double var_sq = std::max(0.0, a.sum_fourth / used - mse * mse);
      s.rmse_se = s.rmse > 0.0 ? std::sqrt(var_sq / used) / (2.0 * s.rmse) : 0.0;
      s.bias = a.sum_error / used;
      s.power = static_cast<double>(a.powered) / used;
      s.coverage = static_cast<double>(a.covered) / used;
    }
    summary.estimators.push_back(std::move(s));
  }
  return summary;
}

std::vector<ScenarioSummary> sensitivity_sweep(const ScenarioConfig& base,
                                               const std::vector<double>& deltas,
                                               const RunOptions& options) {
  std::vector<ScenarioSummary> out;
  out.reserve(deltas.size());
  for (double delta : deltas) {
    auto config = base;
    config.delta = delta;
    out.push_back(run_scenario(config, options));
  }
  return out;
}

StudyConfig parse_study_config(std::istream& in) {
  std::map<std::string, std::string> fields;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim_copy(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kInvalidInput,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim_copy(std::string_view(text).substr(0, eq));
    auto value = trim_copy(std::string_view(text).substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorKind::kInvalidInput,
                  "config line " + std::to_string(line_no) + ": empty key");
    }
    if (!fields.emplace(key, value).second) throw config_error(key, "given twice");
  }

  ScenarioConfig base;
  std::vector<Distribution> distributions{base.distribution};
  std::vector<double> rs{base.r};
  std::vector<double> deltas{base.delta};
  StudyConfig study;
  for (const auto& [key, value] : fields) {
    if (key == "n") {
      base.n = parse_unsigned(key, value);
    } else if (key == "K") {
      base.K = parse_unsigned(key, value);
    } else if (key == "seed") {
      base.seed = parse_unsigned(key, value);
    } else if (key == "theta0") {
      base.theta0 = parse_double(key, value);
    } else if (key == "distribution" || key == "distributions") {
      distributions.clear();
      for (const auto& item : split_list(value)) {
        try {
          distributions.push_back(parse_distribution(item));
        } catch (const Error&) {
          throw config_error(key, "unknown distribution '" + item + "'");
        }
      }
    } else if (key == "r") {
      rs.clear();
      for (const auto& item : split_list(value)) rs.push_back(parse_double(key, item));
    } else if (key == "delta") {
      deltas.clear();
      for (const auto& item : split_list(value)) deltas.push_back(parse_double(key, item));
    } else if (key == "sweep_delta") {
      for (const auto& item : split_list(value)) {
        study.sweep_deltas.push_back(parse_double(key, item));
      }
    } else if (key == "confidence") {
      const double c = parse_double(key, value);
      if (!(c > 0.0 && c < 1.0)) throw config_error(key, "must lie in (0, 1)");
      study.options.alpha = 1.0 - c;
    } else if (key == "fixed_lambda") {
      const double l = parse_double(key, value);
      if (!(l >= 0.0 && l < 0.5)) throw config_error(key, "must lie in [0, 0.5)");
      study.options.fixed_lambda = l;
    } else if (key == "workers") {
      study.options.workers = static_cast<unsigned>(parse_unsigned(key, value));
    } else if (key == "estimators") {
      study.options.estimators.clear();
      for (const auto& item : split_list(value)) {
        study.options.estimators.push_back(parse_estimator(key, item));
      }
    } else {
      throw config_error(key, "unknown key");
    }
  }
  if (distributions.empty()) throw config_error("distributions", "empty list");
  if (rs.empty()) throw config_error("r", "empty list");
  if (deltas.empty()) throw config_error("delta", "empty list");
  if (study.options.estimators.empty()) throw config_error("estimators", "empty list");

  for (auto d : distributions) {
    for (double r : rs) {
      for (double delta : deltas) {
        auto c = base;
        c.distribution = d;
        c.r = r;
        c.delta = delta;
        validate(c);
        study.scenarios.push_back(c);
      }
    }
  }
  for (double delta : study.sweep_deltas) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw config_error("sweep_delta", "must lie in [0, 1]");
  }
  return study;
}

void write_summary_csv(std::ostream& out, const std::vector<ScenarioSummary>& summaries) {
  out << "distribution,n,theta0,r,delta,K,seed,theta_star,estimator,rmse,rmse_se,scaled_rmse,"
         "bias,power,coverage,used,failed,failure_rate\n";
  for (const auto& s : summaries) {
    const auto& c = s.config;
    for (const auto& e : s.estimators) {
      const double total = static_cast<double>(e.used + e.failed);
      const std::vector<std::string> cells{std::string(to_string(c.distribution)),
                                           std::to_string(c.n),
                                           format_number(c.theta0),
                                           format_number(c.r),
                                           format_number(c.delta),
                                           std::to_string(c.K),
                                           std::to_string(c.seed),
                                           format_number(s.theta_star),
                                           e.name,
                                           format_number(e.rmse),
                                           format_number(e.rmse_se),
                                           format_number(e.rmse / s.theta_star),
                                           format_number(e.bias),
                                           format_number(e.power),
                                           format_number(e.coverage),
                                           std::to_string(e.used),
                                           std::to_string(e.failed),
                                           format_number(static_cast<double>(e.failed) / total)};
      for (std::size_t k = 0; k < cells.size(); ++k) out << (k > 0 ? "," : "") << cells[k];
      out << '\n';
    }
  }
}

void write_summary_json(std::ostream& out, const std::vector<ScenarioSummary>& summaries) {
  auto number = [](double v) -> nlohmann::json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : summaries) {
    const auto& c = s.config;
    nlohmann::json scenario;
    scenario["distribution"] = std::string(to_string(c.distribution));
    scenario["n"] = c.n;
    scenario["theta0"] = c.theta0;
    scenario["r"] = c.r;
    scenario["delta"] = c.delta;
    scenario["K"] = c.K;
    scenario["seed"] = c.seed;
    scenario["theta_star"] = s.theta_star;
    nlohmann::json estimators = nlohmann::json::array();
    for (const auto& e : s.estimators) {
      estimators.push_back({{"estimator", e.name},
                            {"rmse", number(e.rmse)},
                            {"rmse_se", number(e.rmse_se)},
                            {"scaled_rmse", number(e.rmse / s.theta_star)},
                            {"bias", number(e.bias)},
                            {"power", number(e.power)},
                            {"coverage", number(e.coverage)},
                            {"used", e.used},
                            {"failed", e.failed}});
    }
    scenario["estimators"] = std::move(estimators);
    doc.push_back(std::move(scenario));
  }
  out << doc.dump(2) << '\n';
}

void write_summary_table(std::ostream& out, const std::vector<ScenarioSummary>& summaries) {
  if (summaries.empty()) return;
  std::vector<std::string> names;
  for (const auto& e : summaries.front().estimators) names.push_back(e.name);
  auto label = [](const ScenarioSummary& s) {
    std::ostringstream os;
    os << to_string(s.config.distribution) << " r=" << format_number(s.config.r);
    if (s.config.delta != 0.0) os << " delta=" << format_number(s.config.delta);
    return os.str();
  };
  auto grid = [&](const std::string& title, auto&& cell) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"scenario"});
    rows.back().insert(rows.back().end(), names.begin(), names.end());
    for (const auto& s : summaries) {
      std::vector<std::string> row{label(s)};
      for (const auto& e : s.estimators) row.push_back(cell(e));
      rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    out << title << '\n';
    for (const auto& row : rows) {
      std::string line;
      for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
        if (c > 0) line += "  ";
        line += row[c] + std::string(width[c] - row[c].size(), ' ');
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << '\n';
    }
  };
  grid("RMSE (bias)", [](const EstimatorSummary& e) {
    return format_fixed(e.rmse, 2) + " (" + format_fixed(e.bias, 2) + ")";
  });
  out << '\n';
  grid("power (coverage), percent", [](const EstimatorSummary& e) {
    return format_fixed(100.0 * e.power, 0) + " (" + format_fixed(100.0 * e.coverage, 0) + ")";
  });
}

}  // namespace tmatch
