#pragma once

// Shot-based stochastic simulation of post-selected weak measurements.
//
// Determinism contract: every shot draws from its own RNG stream derived by
// hashing (seed, shot index) through SplitMix64, so a result depends only on
// the RunConfig. Shards split the shot range into contiguous blocks; merged
// statistics are accumulated in shot order, which makes them bit-identical
// for any shard count.
//
// Each accepted shot draws one pointer reading from the normalised
// conditional density via an inverse-CDF lookup on a cached tabulation over
// [centre - 8 width - max|shift|, centre + 8 width + max|shift|] with 2^14
// nodes; the Gaussian mass outside 8 widths is below 1e-14.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

#include "cheshire/experiments.hpp"
#include "cheshire/gaussian.hpp"
#include "cheshire/pointer.hpp"
#include "cheshire/weak_measure.hpp"

namespace cheshire {

/// No shot survived post-selection; estimates are undefined.
struct ZeroAcceptance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// SplitMix64: portable, seedable 64-bit generator.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
};

/// Stream derivation for shot i: hash the seed and the index together so that
/// streams are independent of how shots are grouped into shards.
inline SplitMix64 shot_stream(std::uint64_t seed, std::uint64_t shot) {
  SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ull * (shot + 1)));
  return SplitMix64(mixer.next());
}

/// Inverse-CDF sampler over a tabulated density. The CDF is the trapezoid
/// cumulative of the node values; within a segment the density is linear and
/// the quantile solves the corresponding quadratic exactly.
class TabulatedSampler {
 public:
  TabulatedSampler(const std::function<double(double)>& density, double lo,
                   double hi, std::size_t nodes = std::size_t{1} << 14)
      : lo_(lo), step_((hi - lo) / static_cast<double>(nodes - 1)) {
    if (!(hi > lo) || nodes < 2)
      throw std::invalid_argument("sampler needs an increasing range");
    values_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      values_[i] = std::max(density(lo_ + step_ * static_cast<double>(i)), 0.0);
    cdf_.resize(nodes, 0.0);
    for (std::size_t i = 1; i < nodes; ++i)
      cdf_[i] = cdf_[i - 1] + 0.5 * (values_[i - 1] + values_[i]) * step_;
    const double total = cdf_.back();
    if (!(total > 0.0))
      throw std::invalid_argument("sampler density has no mass on the range");
    for (double& c : cdf_) c /= total;
  }

  double sample(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t hi_idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    const std::size_t i = hi_idx == 0 ? 0 : hi_idx - 1;
    const double seg_mass = cdf_[i + 1] - cdf_[i];
    if (seg_mass <= 0.0) return lo_ + step_ * static_cast<double>(i);
    const double frac = (u - cdf_[i]) / seg_mass;  // mass fraction inside segment
    const double f0 = values_[i], f1 = values_[i + 1];
    double t;
    if (std::abs(f1 - f0) < 1e-14 * (f0 + f1)) {
      t = frac;
    } else {
      // Solve (f1-f0)/2 t^2 + f0 t = frac (f0+f1)/2 for t in [0, 1].
      const double a = 0.5 * (f1 - f0);
      const double target = frac * 0.5 * (f0 + f1);
      const double disc = f0 * f0 + 4.0 * a * target;
      t = (std::sqrt(std::max(disc, 0.0)) - f0) / (2.0 * a);
    }
    return lo_ + step_ * (static_cast<double>(i) + std::clamp(t, 0.0, 1.0));
  }

 private:
  double lo_;
  double step_;
  std::vector<double> values_;
  std::vector<double> cdf_;
};

/// Full description of a stochastic run.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::generalised_qcc;
  QccConfig cfg{0.0, 0.0};
  std::string operator_name = "A";
  double g = 0.0;
  GaussianPointer pointer{1.0};
  std::uint64_t shots = 1;
  std::uint64_t seed = 0;
  Readout readout = Readout::position;
};

struct RunResult {
  std::uint64_t accepted = 0;
  std::uint64_t total = 0;
  double postselection_rate = 0.0;
  double mean_reading = 0.0;
  double stderr_reading = 0.0;
  /// Centre-relative mean reading over g (position basis subtracts the beam
  /// centre); 0 when g = 0, where no displacement is being estimated.
  double weak_value_estimate = 0.0;
  /// The analytic value weak_value_estimate converges to.
  double exact_reference = 0.0;
  bool weak_regime_warning = false;
};

namespace detail {

struct RunPlan {
  ConditionalPointerState state;
  double accept_probability;
  TabulatedSampler sampler;
};

inline RunPlan make_plan(const RunConfig& config) {
  if (config.shots < 1) throw std::invalid_argument("shots must be >= 1");
  const auto pair = build_states(config.kind, config.cfg);
  const auto op = operator_by_name(config.kind, config.operator_name, config.cfg);
  auto state = conditional_state(op, pair, config.pointer, config.g,
                                 config.readout);
  const double p = postselection_probability(state);
  if (p <= 0.0)
    throw ZeroAcceptance("post-selection probability is zero for this config");

  double max_shift = 0.0;
  for (const auto& t : state.terms)
    max_shift = std::max(max_shift, std::abs(t.shift));

  double lo, hi;
  if (config.readout == Readout::position) {
    lo = config.pointer.centre() - 8.0 * config.pointer.sigma() - max_shift;
    hi = config.pointer.centre() + 8.0 * config.pointer.sigma() + max_shift;
  } else {
    const double spread = 1.0 / (2.0 * config.pointer.sigma());
    lo = -8.0 * spread - max_shift;
    hi = 8.0 * spread + max_shift;
  }
  TabulatedSampler sampler(
      [&state](double q) { return conditional_density(state, q); }, lo, hi);
  return RunPlan{std::move(state), p, std::move(sampler)};
}

inline std::vector<double> run_shard(const RunPlan& plan,
                                     const RunConfig& config,
                                     std::uint64_t begin, std::uint64_t end) {
  std::vector<double> readings;
  for (std::uint64_t i = begin; i < end; ++i) {
    SplitMix64 rng = shot_stream(config.seed, i);
    if (rng.next_double() < plan.accept_probability)
      readings.push_back(plan.sampler.sample(rng.next_double()));
  }
  return readings;
}

}  // namespace detail

/// Runs the configured ensemble. Deterministic for a fixed config, including
/// across shard counts. Throws ZeroAcceptance when no shot is accepted.
inline RunResult run(const RunConfig& config, unsigned shards = 1,
                     std::vector<double>* readings_out = nullptr) {
  const detail::RunPlan plan = detail::make_plan(config);
  const unsigned used_shards = static_cast<unsigned>(std::min<std::uint64_t>(
      std::max(shards, 1u), config.shots));

  // Contiguous ascending shot ranges per shard.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  const std::uint64_t base = config.shots / used_shards;
  const std::uint64_t extra = config.shots % used_shards;
  std::uint64_t cursor = 0;
  for (unsigned s = 0; s < used_shards; ++s) {
    const std::uint64_t len = base + (s < extra ? 1 : 0);
    ranges.emplace_back(cursor, cursor + len);
    cursor += len;
  }

  std::vector<std::vector<double>> per_shard(ranges.size());
  if (used_shards == 1) {
    per_shard[0] = detail::run_shard(plan, config, ranges[0].first, ranges[0].second);
  } else {
    std::vector<std::future<std::vector<double>>> futures;
    futures.reserve(ranges.size());
    for (const auto& [b, e] : ranges)
      futures.push_back(std::async(std::launch::async, [&plan, &config, b = b, e = e] {
        return detail::run_shard(plan, config, b, e);
      }));
    for (std::size_t s = 0; s < futures.size(); ++s)
      per_shard[s] = futures[s].get();
  }

  // Merge in shot order: shard blocks are contiguous and ascending.
  std::vector<double> readings;
  for (auto& block : per_shard)
    readings.insert(readings.end(), block.begin(), block.end());

  RunResult result;
  result.total = config.shots;
  result.accepted = readings.size();
  result.postselection_rate =
      static_cast<double>(result.accepted) / static_cast<double>(result.total);
  result.weak_regime_warning = config.g > 0.2 * config.pointer.sigma();
  if (result.accepted == 0)
    throw ZeroAcceptance("0 of " + std::to_string(config.shots) +
                         " shots accepted");

  double sum = 0.0;
  for (const double r : readings) sum += r;
  const double mean = sum / static_cast<double>(readings.size());
  double sq = 0.0;
  for (const double r : readings) sq += (r - mean) * (r - mean);
  result.mean_reading = mean;
  result.stderr_reading =
      readings.size() > 1
          ? std::sqrt(sq / (static_cast<double>(readings.size() - 1) *
                            static_cast<double>(readings.size())))
          : 0.0;

  if (config.g > 0.0) {
    const double offset =
        config.readout == Readout::position ? config.pointer.centre() : 0.0;
    result.weak_value_estimate = (mean - offset) / config.g;
    const double exact_mean = config.readout == Readout::position
                                  ? conditional_mean_position(plan.state)
                                  : conditional_mean_momentum(plan.state);
    result.exact_reference = (exact_mean - offset) / config.g;
  }

  if (readings_out) *readings_out = std::move(readings);
  return result;
}

/// Exact post-selection probability for a config, for comparing against the
/// empirical rate.
inline double exact_postselection_probability(const RunConfig& config) {
  return detail::make_plan(config).accept_probability;
}

struct ConvergenceRow {
  std::uint64_t shots;
  double abs_error;       // |weak_value_estimate - exact_reference|
  double stderr_reading;
};

/// Reruns the config over an ascending shot grid with the same seed.
inline std::vector<ConvergenceRow> convergence_scan(
    const RunConfig& config, std::span<const std::uint64_t> shot_grid,
    unsigned shards = 1) {
  if (shot_grid.empty()) throw std::invalid_argument("empty shot grid");
  for (std::size_t i = 1; i < shot_grid.size(); ++i)
    if (shot_grid[i] <= shot_grid[i - 1])
      throw std::invalid_argument("shot grid must be ascending");
  std::vector<ConvergenceRow> rows;
  rows.reserve(shot_grid.size());
  for (const std::uint64_t n : shot_grid) {
    RunConfig c = config;
    c.shots = n;
    const RunResult r = run(c, shards);
    rows.push_back(ConvergenceRow{
        n, std::abs(r.weak_value_estimate - r.exact_reference),
        r.stderr_reading});
  }
  return rows;
}

}  // namespace cheshire
