#pragma once

// Monte Carlo study of the estimators on a synthetic geo population: geo
// sizes from a quantile grid, matched pairs by size, fair coin assignment
// within pairs, and a fixed incremental budget shared by the treated geos in
// proportion to their control spend (so assignments interfere).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tmatch/paired_data.hpp"

namespace tmatch {

enum class Distribution { kHalfNormal, kLogNormal, kHalfCauchy };

[[nodiscard]] std::string_view to_string(Distribution d);
// Accepts HalfNormal / half-normal / half_normal style names, case-insensitive.
[[nodiscard]] Distribution parse_distribution(std::string_view name);

struct ScenarioConfig {
  std::size_t n = 50;  // geo pairs
  Distribution distribution = Distribution::kHalfNormal;
  double theta0 = 10.0;
  double r = 1.0;      // incremental spend intensity
  double delta = 0.0;  // spread of geo-level iROAS in [0, 1]
  std::size_t K = 10000;
  std::uint64_t seed = 0;
};

// Throws Error(kInvalidInput) naming the offending field.
void validate(const ScenarioConfig& config);

// Geo g = 1..2n is stored at index g - 1; sizes increase with g.
struct GeoPopulation {
  std::vector<double> sizes;
  std::vector<double> control_spend;
  std::vector<double> control_response;
  std::vector<double> geo_iroas;
  double budget = 0.0;
};

[[nodiscard]] double geo_size_quantile(Distribution d, double p);

[[nodiscard]] GeoPopulation generate_population(const ScenarioConfig& config);

// Geo indices (0-based) of one pair; `first` is the larger geo.
struct GeoPair {
  std::size_t first = 0;
  std::size_t second = 0;
};

// Geos sorted by size (descending, ties by index) and paired consecutively.
[[nodiscard]] std::vector<GeoPair> make_pairs(const GeoPopulation& population);

struct GeoObservation {
  double spend = 0.0;
  double response = 0.0;
  bool treated = false;
};

struct Replicate {
  std::vector<int> assignment;  // per pair: +1 first geo treated, -1 second
  std::vector<GeoObservation> geos;
  std::vector<PairedDifference> diffs;
};

// One random assignment: each pair's coin is the top bit of one draw.
[[nodiscard]] Replicate run_replicate(const GeoPopulation& population,
                                      const std::vector<GeoPair>& pairs, std::mt19937_64& rng);

// Overall iROAS of the virtual experiment that treats every geo with twice
// the budget; equals theta0 when delta = 0.
[[nodiscard]] double true_theta(const GeoPopulation& population, const ScenarioConfig& config);

enum class Estimator { kEmpirical, kSign, kRank, kTrimmedFixed, kTrimmedAuto };

[[nodiscard]] std::string estimator_name(Estimator e, double fixed_lambda);

struct RunOptions {
  std::vector<Estimator> estimators{Estimator::kEmpirical, Estimator::kSign, Estimator::kRank,
                                    Estimator::kTrimmedFixed, Estimator::kTrimmedAuto};
  double alpha = 0.1;
  double fixed_lambda = 0.10;
  unsigned workers = 1;
};

// One estimator on one replicate. `ok` is false when the estimator failed
// (no root, degenerate interval, unidentified or infinite estimate).
struct ReplicateOutcome {
  bool ok = false;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

[[nodiscard]] std::vector<ReplicateOutcome> evaluate_replicate(
    std::span<const PairedDifference> diffs, const RunOptions& options);

struct EstimatorSummary {
  std::string name;
  double rmse = 0.0;
  double rmse_se = 0.0;  // Monte Carlo standard error of rmse
  double bias = 0.0;
  double power = 0.0;
  double coverage = 0.0;
  std::size_t used = 0;
  std::size_t failed = 0;
};

struct ScenarioSummary {
  ScenarioConfig config;
  double theta_star = 0.0;
  std::vector<EstimatorSummary> estimators;
};

// Replicate k draws from a generator seeded with stream_seed(config.seed, k)
// and results are reduced in replicate order, so the summary does not depend
// on the worker count.
[[nodiscard]] ScenarioSummary run_scenario(const ScenarioConfig& config,
                                           const RunOptions& options = {});

[[nodiscard]] std::vector<ScenarioSummary> sensitivity_sweep(const ScenarioConfig& base,
                                                             const std::vector<double>& deltas,
                                                             const RunOptions& options = {});

// Key-value study file, one `key = value` per line, `#` comments. Keys: n,
// distributions, theta0, r, delta, K, seed, confidence, fixed_lambda,
// workers, estimators, sweep_delta. List values are comma-separated; the
// scenarios are every distribution x r x delta combination.
struct StudyConfig {
  std::vector<ScenarioConfig> scenarios;
  RunOptions options;
  std::vector<double> sweep_deltas;  // empty unless given
};

[[nodiscard]] StudyConfig parse_study_config(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<ScenarioSummary>& summaries);
void write_summary_json(std::ostream& out, const std::vector<ScenarioSummary>& summaries);
// Two grids: RMSE (bias), then power (coverage) in percent.
void write_summary_table(std::ostream& out, const std::vector<ScenarioSummary>& summaries);

}  // namespace tmatch
