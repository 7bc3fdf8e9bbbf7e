#include "tmatch/trimmed_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "tmatch/error.hpp"
#include "tmatch/null_distribution.hpp"
#include "tmatch/parallel.hpp"

namespace tmatch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTolerance = 1e-12;
constexpr double kMergeTolerance = 1e-11;
constexpr double kDeviationTieTolerance = 1e-12;
// Relative slack on the raw-sum quadratic used to shortlist interval states;
// shortlisted states are re-solved from centred sums.
constexpr double kShortlistSlack = 1e-9;
constexpr int kJitterAttempts = 6;

void check_spec(std::span<const PairedDifference> diffs, const TrimSpec& spec) {
  if (spec.n != diffs.size()) {
    throw Error(ErrorKind::kInvalidInput, "trim spec was built for " + std::to_string(spec.n) +
                                              " pairs but got " + std::to_string(diffs.size()));
  }
  if (spec.n < 2 * spec.m + 1) {
    throw Error(ErrorKind::kInvalidInput, "trimming removes every pair");
  }
}

std::vector<double> sorted_residuals(std::span<const PairedDifference> diffs, double theta) {
  std::vector<double> e;
  residuals_into(diffs, theta, e);
  std::sort(e.begin(), e.end());
  return e;
}

double trimmed_mean_sorted(const std::vector<double>& e, std::size_t m) {
  const std::size_t n = e.size();
  double sum = 0.0;
  for (std::size_t i = m; i < n - m; ++i) sum += e[i];
  return sum / static_cast<double>(n - 2 * m);
}

double deviation_sorted(const std::vector<double>& e, std::size_t m) {
  const std::size_t n = e.size();
  double sum = 0.0;
  for (std::size_t i = m; i < n - m; ++i) sum += std::abs(e[i] + e[n - 1 - i]);
  return sum / static_cast<double>(n - 2 * m);
}

WinsorizedMoments winsorized_sorted(const std::vector<double>& e, std::size_t m) {
  const std::size_t n = e.size();
  const double lo = e[m];
  const double hi = e[n - m - 1];
  const double w = static_cast<double>(m);
  double sum = w * (lo + hi);
  for (std::size_t i = m; i < n - m; ++i) sum += e[i];
  const double mean = sum / static_cast<double>(n);
  double ss = w * ((lo - mean) * (lo - mean) + (hi - mean) * (hi - mean));
  for (std::size_t i = m; i < n - m; ++i) ss += (e[i] - mean) * (e[i] - mean);
  return {mean, ss / static_cast<double>(n - 2 * m)};
}

double studentize(double trimmed_mean, double variance, std::size_t kept) {
  if (kept < 2) {
    throw Error(ErrorKind::kInvalidInput, "studentized statistic needs n - 2m - 1 >= 1");
  }
  const double sd = std::sqrt(variance);
  if (sd == 0.0) {
    return trimmed_mean == 0.0 ? 0.0 : std::copysign(kInf, trimmed_mean);
  }
  return trimmed_mean * std::sqrt(static_cast<double>(kept - 1)) / sd;
}

double interior_point(double start, double end) {
  if (std::isfinite(start) && std::isfinite(end)) return 0.5 * (start + end);
  if (std::isfinite(end)) return end - std::max(1.0, std::abs(end));
  if (std::isfinite(start)) return start + std::max(1.0, std::abs(start));
  return 0.0;
}

double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

TrimSpec TrimSpec::from_rate(std::size_t n, double lambda) {
  if (!(lambda >= 0.0 && lambda < 0.5)) {
    throw Error(ErrorKind::kInvalidInput, "trim rate must lie in [0, 0.5)");
  }
  const double raw = std::ceil(static_cast<double>(n) * lambda - 1e-9);
  const auto m = static_cast<std::size_t>(std::max(0.0, raw));
  if (n < 2 * m + 1) {
    throw Error(ErrorKind::kInvalidInput, "trim rate " + std::to_string(lambda) +
                                              " removes every one of " + std::to_string(n) +
                                              " pairs");
  }
  return {lambda, m, n};
}

TrimSpec TrimSpec::from_count(std::size_t n, std::size_t m) {
  if (n < 2 * m + 1) {
    throw Error(ErrorKind::kInvalidInput, "trim count " + std::to_string(m) +
                                              " removes every one of " + std::to_string(n) +
                                              " pairs");
  }
  return {static_cast<double>(m) / static_cast<double>(n), m, n};
}

std::vector<CrossingPoint> candidate_crossings(std::span<const PairedDifference> diffs) {
  const std::size_t n = diffs.size();
  std::vector<std::size_t> by_x(n);
  std::iota(by_x.begin(), by_x.end(), 0);
  std::sort(by_x.begin(), by_x.end(),
            [&](std::size_t a, std::size_t b) { return diffs[a].x < diffs[b].x; });
  for (std::size_t k = 1; k < n; ++k) {
    if (diffs[by_x[k]].x == diffs[by_x[k - 1]].x) {
      throw Error(ErrorKind::kDegenerateData,
                  "duplicate spend deltas; break ties with perturb_ties first");
    }
  }
  std::vector<CrossingPoint> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& lo = diffs[by_x[a]];
      const auto& hi = diffs[by_x[b]];
      out.push_back({by_x[a], by_x[b], (hi.y - lo.y) / (hi.x - lo.x)});
    }
  }
  std::sort(out.begin(), out.end(), [](const CrossingPoint& a, const CrossingPoint& b) {
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return out;
}

double trimmed_mean_residual(std::span<const PairedDifference> diffs, double theta,
                             const TrimSpec& spec) {
  check_spec(diffs, spec);
  return trimmed_mean_sorted(sorted_residuals(diffs, theta), spec.m);
}

double symmetry_deviation(std::span<const PairedDifference> diffs, double theta,
                          const TrimSpec& spec) {
  check_spec(diffs, spec);
  return deviation_sorted(sorted_residuals(diffs, theta), spec.m);
}

WinsorizedMoments winsorized_moments(std::span<const PairedDifference> diffs, double theta,
                                     const TrimSpec& spec) {
  check_spec(diffs, spec);
  return winsorized_sorted(sorted_residuals(diffs, theta), spec.m);
}

double studentized_statistic(std::span<const PairedDifference> diffs, double theta,
                             const TrimSpec& spec) {
  check_spec(diffs, spec);
  std::vector<double> e;
  residuals_into(diffs, theta, e);
  return studentized_from_residuals(e, spec.m);
}

double studentized_from_residuals(std::span<const double> residuals, std::size_t m) {
  const std::size_t n = residuals.size();
  if (n < 2 * m + 1) throw Error(ErrorKind::kInvalidInput, "trimming removes every pair");
  std::vector<double> e(residuals.begin(), residuals.end());
  std::sort(e.begin(), e.end());
  return studentize(trimmed_mean_sorted(e, m), winsorized_sorted(e, m).variance, n - 2 * m);
}

// ---------------------------------------------------------------------------
// Sweep

struct TrimmedMatchSolver::State {
  double start = -kInf;
  double end = kInf;
  // Sums over the kept ranks, on the swept values.
  double a = 0.0;  // y
  double b = 0.0;  // x
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  std::uint32_t lo = 0;  // element at rank m (winsorizing value for the low tail)
  std::uint32_t hi = 0;  // element at rank n - m - 1
};

struct TrimmedMatchSolver::Snapshot {
  double start = -kInf;
  double end = kInf;
  double a = 0.0;
  double b = 0.0;
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  std::vector<std::uint32_t> kept;
};

namespace {

using Interval = std::optional<std::pair<double, double>>;

// {t in [a, b] : qa t^2 + qb t + qc <= 0}, reduced to its hull.
Interval accepted_range(double qa, double qb, double qc, double a, double b) {
  auto clip = [&](double l, double h) -> Interval {
    l = std::max(l, a);
    h = std::min(h, b);
    if (l <= h) return std::make_pair(l, h);
    return std::nullopt;
  };
  if (qa == 0.0) {
    if (qb == 0.0) return qc <= 0.0 ? clip(-kInf, kInf) : std::nullopt;
    const double r = -qc / qb;
    return qb > 0.0 ? clip(-kInf, r) : clip(r, kInf);
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return qa > 0.0 ? std::nullopt : clip(-kInf, kInf);
  const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
  double r1 = 0.0;
  double r2 = 0.0;
  if (q != 0.0) {
    r1 = q / qa;
    r2 = qc / q;
  }
  if (r1 > r2) std::swap(r1, r2);
  if (qa > 0.0) return clip(r1, r2);
  const auto left = clip(-kInf, r1);
  const auto right = clip(r2, kInf);
  if (left && right) return std::make_pair(left->first, right->second);
  return left ? left : right;
}

}  // namespace

TrimmedMatchSolver::TrimmedMatchSolver(std::span<const PairedDifference> diffs,
                                       std::uint64_t tie_seed)
    : n_(diffs.size()) {
  if (n_ < 1) throw Error(ErrorKind::kInvalidInput, "trimmed match needs at least one pair");
  if (n_ > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw Error(ErrorKind::kInvalidInput, "too many pairs");
  }
  double x_min = kInf;
  double x_max = -kInf;
  double x_abs = 0.0;
  for (const auto& d : diffs) {
    if (!std::isfinite(d.x) || !std::isfinite(d.y)) {
      throw Error(ErrorKind::kInvalidInput, "non-finite paired difference");
    }
    x_min = std::min(x_min, d.x);
    x_max = std::max(x_max, d.x);
    x_abs = std::max(x_abs, std::abs(d.x));
  }
  const double base = std::max(x_max - x_min, x_abs);
  if (!(base > 0.0) && n_ > 1) {
    throw Error(ErrorKind::kDegenerateData, "every spend delta is zero");
  }

  std::mt19937_64 gen(tie_seed);
  std::vector<double> sweep_x(n_);
  for (int attempt = 0; attempt < kJitterAttempts; ++attempt) {
    for (std::size_t i = 0; i < n_; ++i) sweep_x[i] = diffs[i].x;
    if (attempt > 0) {
      perturbed_ = true;
      const double scale = base * kDefaultTieScale * std::pow(100.0, attempt - 1);
      for (auto& x : sweep_x) x += scale * (2.0 * unit_uniform(gen) - 1.0);
    }
    input_index_.resize(n_);
    std::iota(input_index_.begin(), input_index_.end(), 0);
    std::sort(input_index_.begin(), input_index_.end(), [&](std::size_t a, std::size_t b) {
      if (sweep_x[a] != sweep_x[b]) return sweep_x[a] < sweep_x[b];
      return diffs[a].y < diffs[b].y;
    });
    x_.resize(n_);
    y_.resize(n_);
    x_orig_.resize(n_);
    y_orig_.resize(n_);
    bool distinct = true;
    for (std::size_t k = 0; k < n_; ++k) {
      const auto& d = diffs[input_index_[k]];
      x_[k] = sweep_x[input_index_[k]];
      y_[k] = d.y;
      x_orig_[k] = d.x;
      y_orig_[k] = d.y;
      if (k > 0 && x_[k] == x_[k - 1]) distinct = false;
    }
    if (distinct && build_events()) {
      element_of_.resize(n_);
      for (std::size_t k = 0; k < n_; ++k) element_of_[input_index_[k]] = k;
      return;
    }
  }
  throw Error(ErrorKind::kDegenerateData, "could not order the residual crossings");
}

// Walks the crossings in (theta, i, j) order and replays them as swaps of
// adjacent ranks. Exactly tied crossings from a common intersection point
// form a valid swap sequence in that order; anything else (rounding in
// near-ties) is rejected and the caller retries with jittered x.
bool TrimmedMatchSolver::build_events() {
  const auto n = static_cast<std::uint32_t>(n_);
  struct Crossing {
    double theta;
    std::uint32_t i;
    std::uint32_t j;
  };
  std::vector<Crossing> crossings;
  crossings.reserve(n_ * (n_ - 1) / 2);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      crossings.push_back({(y_[j] - y_[i]) / (x_[j] - x_[i]), i, j});
    }
  }
  std::sort(crossings.begin(), crossings.end(), [](const Crossing& a, const Crossing& b) {
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });

  std::vector<std::uint32_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0u);
  events_.clear();
  events_.reserve(crossings.size());
  for (const auto& c : crossings) {
    if (!std::isfinite(c.theta) || rank[c.j] != rank[c.i] + 1) return false;
    events_.push_back({c.theta, rank[c.i], c.i, c.j});
    std::swap(rank[c.i], rank[c.j]);
  }
  events_at_.assign(n_ > 0 ? n_ - 1 : 0, {});
  for (std::uint32_t k = 0; k < events_.size(); ++k) {
    events_at_[events_[k].position].push_back(k);
  }
  return true;
}

template <class Visit>
void TrimmedMatchSolver::for_each_state(std::size_t m, Visit&& visit) const {
  const std::size_t first = m;
  const std::size_t last = n_ - m - 1;
  std::vector<char> kept(n_, 0);
  State s;
  auto add = [&](std::uint32_t e, double sign) {
    s.a += sign * y_[e];
    s.b += sign * x_[e];
    s.sxx += sign * x_[e] * x_[e];
    s.sxy += sign * x_[e] * y_[e];
    s.syy += sign * y_[e] * y_[e];
    kept[e] = sign > 0.0;
  };
  for (std::size_t k = first; k <= last; ++k) add(static_cast<std::uint32_t>(k), 1.0);
  s.lo = static_cast<std::uint32_t>(first);
  s.hi = static_cast<std::uint32_t>(last);

  // Only swaps at these ranks move an element across a trim boundary or
  // change a winsorizing order statistic.
  std::vector<std::uint32_t> relevant;
  if (m > 0) {
    std::size_t positions[] = {m - 1, m, n_ - m - 2, n_ - m - 1};
    std::sort(std::begin(positions), std::end(positions));
    const auto end = std::unique(std::begin(positions), std::end(positions));
    for (auto it = std::begin(positions); it != end; ++it) {
      if (*it + 1 >= n_) continue;
      const auto& list = events_at_[*it];
      relevant.insert(relevant.end(), list.begin(), list.end());
    }
    std::sort(relevant.begin(), relevant.end());
  }

  for (std::uint32_t index : relevant) {
    const Event& ev = events_[index];
    s.end = ev.theta;
    visit(s, kept);
    const std::size_t p = ev.position;
    const bool in_p = p >= first && p <= last;
    const bool in_next = p + 1 >= first && p + 1 <= last;
    if (in_p && !in_next) {
      add(ev.lower, -1.0);
      add(ev.upper, 1.0);
    } else if (!in_p && in_next) {
      add(ev.upper, -1.0);
      add(ev.lower, 1.0);
    }
    if (p == first) s.lo = ev.upper;
    if (p + 1 == first) s.lo = ev.lower;
    if (p == last) s.hi = ev.upper;
    if (p + 1 == last) s.hi = ev.lower;
    s.start = ev.theta;
  }
  s.end = kInf;
  visit(s, kept);
}

void TrimmedMatchSolver::check_count(std::size_t m, bool need_interval) const {
  if (n_ < 2 * m + 1) throw Error(ErrorKind::kInvalidInput, "trimming removes every pair");
  if (need_interval && n_ < 2 * m + 2) {
    throw Error(ErrorKind::kInvalidInput, "confidence interval needs n - 2m - 1 >= 1");
  }
}

RootSet TrimmedMatchSolver::collect(std::size_t m, double threshold,
                                    std::vector<std::size_t>* candidates) const {
  struct Found {
    double theta;
    std::vector<std::size_t> kept;
  };
  std::vector<Found> found;
  auto record = [&](double sweep_root, const std::vector<char>& kept) {
    Found f;
    for (std::size_t e = 0; e < n_; ++e) {
      if (kept[e]) f.kept.push_back(input_index_[e]);
    }
    // Summed in input order so callers recomputing the ratio get the same bits.
    std::sort(f.kept.begin(), f.kept.end());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i : f.kept) {
      sx += x_orig_[element_of_[i]];
      sy += y_orig_[element_of_[i]];
    }
    f.theta = sx != 0.0 ? sy / sx : sweep_root;
    found.push_back(std::move(f));
  };

  const double k = static_cast<double>(n_ - 2 * m);
  const double w = static_cast<double>(m);
  const double nd = static_cast<double>(n_);
  const double c2k = threshold * threshold * k;
  const double df = k - 1.0;
  std::size_t ordinal = 0;

  for_each_state(m, [&](const State& s, const std::vector<char>& kept) {
    if (!(s.start < s.end)) return;  // zero-length: covered by its neighbours
    const std::size_t current = ordinal++;

    const double scale = std::max({1.0, std::isfinite(s.start) ? std::abs(s.start) : 0.0,
                                   std::isfinite(s.end) ? std::abs(s.end) : 0.0});
    const double tol = kRootTolerance * scale;
    if (s.b != 0.0) {
      const double r = s.a / s.b;
      if (r >= s.start - tol && r <= s.end + tol) record(r, kept);
    } else if (s.a == 0.0) {
      // Trimmed mean vanishes on the whole state; keep its finite ends.
      if (std::isfinite(s.start)) record(s.start, kept);
      if (std::isfinite(s.end)) record(s.end, kept);
    }

    if (candidates == nullptr) return;
    const double ylh = y_[s.lo] + y_[s.hi];
    const double xlh = x_[s.lo] + x_[s.hi];
    const double wy = s.a + w * ylh;
    const double wx = s.b + w * xlh;
    const double syy = s.syy + w * (y_[s.lo] * y_[s.lo] + y_[s.hi] * y_[s.hi]);
    const double sxy = s.sxy + w * (x_[s.lo] * y_[s.lo] + x_[s.hi] * y_[s.hi]);
    const double sxx = s.sxx + w * (x_[s.lo] * x_[s.lo] + x_[s.hi] * x_[s.hi]);
    const double qa = df * s.b * s.b - c2k * (sxx - wx * wx / nd);
    const double qb = -2.0 * df * s.a * s.b + 2.0 * c2k * (sxy - wx * wy / nd);
    const double qc = df * s.a * s.a - c2k * (syy - wy * wy / nd);
    const double ma = df * s.b * s.b + c2k * (sxx + wx * wx / nd);
    const double mb = 2.0 * df * std::abs(s.a * s.b) + 2.0 * c2k * (std::abs(sxy) + std::abs(wx * wy) / nd);
    const double mc = df * s.a * s.a + c2k * (syy + wy * wy / nd);
    const double relaxed_qa = qa - kShortlistSlack * (ma + 0.5 * mb);
    const double relaxed_qc = qc - kShortlistSlack * (mc + 0.5 * mb);
    if (accepted_range(relaxed_qa, qb, relaxed_qc, s.start, s.end)) {
      candidates->push_back(current);
    }
  });

  std::sort(found.begin(), found.end(),
            [](const Found& a, const Found& b) { return a.theta < b.theta; });
  RootSet out;
  for (auto& f : found) {
    if (!out.roots.empty()) {
      const double prev = out.roots.back();
      if (std::abs(f.theta - prev) <= kMergeTolerance * std::max(1.0, std::abs(prev))) continue;
    }
    out.roots.push_back(f.theta);
    out.untrimmed.push_back(std::move(f.kept));
  }
  std::vector<double> e(n_);
  for (double theta : out.roots) {
    for (std::size_t i = 0; i < n_; ++i) e[i] = y_orig_[i] - theta * x_orig_[i];
    std::sort(e.begin(), e.end());
    out.d_values.push_back(deviation_sorted(e, m));
  }
  return out;
}

std::vector<TrimmedMatchSolver::Snapshot> TrimmedMatchSolver::snapshots(
    std::size_t m, const std::vector<std::size_t>& ordinals) const {
  std::vector<Snapshot> out;
  out.reserve(ordinals.size());
  std::size_t ordinal = 0;
  std::size_t next = 0;
  for_each_state(m, [&](const State& s, const std::vector<char>& kept) {
    if (!(s.start < s.end)) return;
    const std::size_t current = ordinal++;
    if (next >= ordinals.size() || ordinals[next] != current) return;
    ++next;
    Snapshot snap{s.start, s.end, s.a, s.b, s.lo, s.hi, {}};
    for (std::uint32_t e = 0; e < n_; ++e) {
      if (kept[e]) snap.kept.push_back(e);
    }
    out.push_back(std::move(snap));
  });
  return out;
}

TrimmedMatchEstimate TrimmedMatchSolver::choose(std::size_t m, const RootSet& roots) const {
  if (roots.roots.empty()) {
    std::vector<double> xs(x_orig_);
    std::sort(xs.begin(), xs.end());
    double trimmed_x = 0.0;
    for (std::size_t i = m; i < n_ - m; ++i) trimmed_x += xs[i];
    throw Error(ErrorKind::kNoRoot,
                "trimmed-mean equation has no root (trimmed sum of sorted spend deltas = " +
                    std::to_string(trimmed_x) +
                    (trimmed_x == 0.0 ? "; a root is only guaranteed when it is nonzero)"
                                      : ")"));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < roots.roots.size(); ++k) {
    const double d = roots.d_values[k];
    const double d_best = roots.d_values[best];
    const double tol = kDeviationTieTolerance * std::max(std::abs(d), std::abs(d_best));
    if (d < d_best - tol) {
      best = k;
    } else if (std::abs(d - d_best) <= tol) {
      const double t = roots.roots[k];
      const double t_best = roots.roots[best];
      if (std::abs(t) < std::abs(t_best) || (std::abs(t) == std::abs(t_best) && t < t_best)) {
        best = k;
      }
    }
  }
  return {roots.roots[best], roots.d_values[best], roots.untrimmed[best]};
}

ConfidenceInterval TrimmedMatchSolver::hull(std::size_t m, double threshold, const RootSet& roots,
                                            const std::vector<std::size_t>& candidates) const {
  const double k = static_cast<double>(n_ - 2 * m);
  const double w = static_cast<double>(m);
  const double nd = static_cast<double>(n_);
  const double c2k = threshold * threshold * k;
  const double df = k - 1.0;

  // Re-solves a shortlisted state from the caller's values, centred at a
  // point inside it so the quadratic's coefficients carry no cancellation.
  auto solve = [&](const Snapshot& s) -> Interval {
    double phi = interior_point(s.start, s.end);
    if (s.b != 0.0) {
      const double r = s.a / s.b;
      if (std::isfinite(r)) phi = std::clamp(r, s.start, s.end);
    }
    double sum_e = w * ((y_orig_[s.lo] - phi * x_orig_[s.lo]) + (y_orig_[s.hi] - phi * x_orig_[s.hi]));
    double sum_x = w * (x_orig_[s.lo] + x_orig_[s.hi]);
    double a = 0.0;
    double b = 0.0;
    for (std::uint32_t e : s.kept) {
      a += y_orig_[e] - phi * x_orig_[e];
      b += x_orig_[e];
    }
    sum_e += a;
    sum_x += b;
    const double mean_e = sum_e / nd;
    const double mean_x = sum_x / nd;
    double vee = 0.0;
    double vex = 0.0;
    double vxx = 0.0;
    auto accumulate = [&](std::uint32_t e, double weight) {
      const double de = (y_orig_[e] - phi * x_orig_[e]) - mean_e;
      const double dx = x_orig_[e] - mean_x;
      vee += weight * de * de;
      vex += weight * de * dx;
      vxx += weight * dx * dx;
    };
    for (std::uint32_t e : s.kept) accumulate(e, 1.0);
    accumulate(s.lo, w);
    accumulate(s.hi, w);
    const double qa = df * b * b - c2k * vxx;
    const double qb = -2.0 * df * a * b + 2.0 * c2k * vex;
    const double qc = df * a * a - c2k * vee;
    auto range = accepted_range(qa, qb, qc, s.start - phi, s.end - phi);
    if (!range) return std::nullopt;
    return std::make_pair(range->first + phi, range->second + phi);
  };

  double lower = kInf;
  double upper = -kInf;
  if (!roots.roots.empty()) {
    lower = roots.roots.front();
    upper = roots.roots.back();
  }

  // Scan the shortlist from both ends until each side finds a state whose
  // exact acceptance region is non-empty.
  constexpr std::size_t kBatch = 4;
  std::size_t left = 0;
  std::size_t right = candidates.size();
  bool left_done = false;
  bool right_done = false;
  while (!(left_done && right_done) && left < right) {
    std::vector<std::size_t> request;
    const std::size_t left_end = left_done ? left : std::min(right, left + kBatch);
    const std::size_t right_begin =
        right_done ? right : std::max(left_end, right >= kBatch ? right - kBatch : 0);
    for (std::size_t i = left; i < left_end; ++i) request.push_back(candidates[i]);
    for (std::size_t i = right_begin; i < right; ++i) request.push_back(candidates[i]);
    const auto snaps = snapshots(m, request);
    std::vector<Interval> ranges;
    ranges.reserve(snaps.size());
    for (const auto& s : snaps) ranges.push_back(solve(s));

    const std::size_t left_count = left_end - left;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      if (!ranges[i]) continue;
      lower = std::min(lower, ranges[i]->first);
      upper = std::max(upper, ranges[i]->second);
      (i < left_count ? left_done : right_done) = true;
    }
    left = left_end;
    right = right_begin;
  }

  if (lower > upper) {
    throw Error(ErrorKind::kDegenerateInterval,
                "no ratio satisfies |T| <= " + std::to_string(threshold));
  }
  return {lower, upper};
}

RootSet TrimmedMatchSolver::roots(std::size_t m) const {
  check_count(m, false);
  return collect(m, 0.0, nullptr);
}

TrimmedMatchEstimate TrimmedMatchSolver::estimate(std::size_t m) const {
  check_count(m, false);
  return choose(m, collect(m, 0.0, nullptr));
}

ConfidenceInterval TrimmedMatchSolver::interval(std::size_t m, double threshold) const {
  check_count(m, true);
  std::vector<std::size_t> candidates;
  const auto found = collect(m, threshold, &candidates);
  return hull(m, threshold, found, candidates);
}

TrimmedMatchFit TrimmedMatchSolver::fit(std::size_t m, double threshold) const {
  check_count(m, true);
  std::vector<std::size_t> candidates;
  const auto found = collect(m, threshold, &candidates);
  auto est = choose(m, found);
  return {std::move(est), hull(m, threshold, found, candidates), threshold};
}

double TrimmedMatchSolver::t_threshold(std::size_t m, double alpha) const {
  check_count(m, true);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "alpha must lie in (0, 1)");
  }
  return null_dist::student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(n_ - 2 * m - 1));
}

double TrimmedMatchSolver::randomization_threshold(std::size_t m, double point, double alpha,
                                                   std::size_t resamples, std::uint64_t seed,
                                                   unsigned workers) const {
  check_count(m, true);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "alpha must lie in (0, 1)");
  }
  if (resamples == 0) throw Error(ErrorKind::kInvalidInput, "resamples must be positive");
  std::vector<double> base(n_);
  for (std::size_t i = 0; i < n_; ++i) base[i] = y_orig_[i] - point * x_orig_[i];
  std::vector<double> stats(resamples);
  parallel_for(resamples, workers, [&](std::size_t r) {
    std::mt19937_64 gen(stream_seed(seed, r));
    std::vector<double> e(base);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (i % 64 == 0) bits = gen();
      if (bits & 1u) e[i] = -e[i];
      bits >>= 1;
    }
    stats[r] = std::abs(studentized_from_residuals(e, m));
  });
  std::sort(stats.begin(), stats.end());
  const double rank = std::ceil((1.0 - alpha) * static_cast<double>(resamples) - 1e-9);
  const auto index = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(resamples)));
  return stats[index - 1];
}

RootSet solve_trimmed_mean_equation(std::span<const PairedDifference> diffs,
                                    const TrimSpec& spec) {
  check_spec(diffs, spec);
  return TrimmedMatchSolver(diffs).roots(spec.m);
}

TrimmedMatchEstimate point_estimate(std::span<const PairedDifference> diffs,
                                    const TrimSpec& spec) {
  check_spec(diffs, spec);
  return TrimmedMatchSolver(diffs).estimate(spec.m);
}

ConfidenceInterval confidence_interval(std::span<const PairedDifference> diffs,
                                       const TrimSpec& spec, double alpha,
                                       const IntervalOptions& options) {
  check_spec(diffs, spec);
  const TrimmedMatchSolver solver(diffs);
  double threshold = 0.0;
  if (options.method == ThresholdMethod::kStudentT) {
    threshold = solver.t_threshold(spec.m, alpha);
  } else {
    const double point = solver.estimate(spec.m).point;
    threshold = solver.randomization_threshold(spec.m, point, alpha, options.resamples,
                                               options.seed, options.workers);
  }
  return solver.interval(spec.m, threshold);
}

}  // namespace tmatch
