// Acceptance suite: every release-gating property in one binary, one PASS or
// FAIL line per criterion, non-zero exit when anything fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cheshire/circuit.hpp"
#include "cheshire/experiments.hpp"
#include "cheshire/montecarlo.hpp"
#include "cheshire/pointer.hpp"
#include "cheshire/weak_measure.hpp"
#include "oracles.hpp"

using namespace cheshire;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  int id;
  std::string description;
  bool passed;
  std::string detail;
};

std::vector<Outcome> outcomes;

template <typename F>
void criterion(int id, const std::string& description, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  bool passed = false;
  std::string detail;
  try {
    detail = body();
    passed = true;
  } catch (const std::exception& e) {
    detail = e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  char buf[64];
  std::snprintf(buf, sizeof buf, " [%.3fs]", seconds);
  outcomes.push_back(Outcome{id, description, passed, detail + buf});
}

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw Failure(message);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// -------------------------------------------------------------------------

std::string criterion_qcc_weak_values() {
  const auto t0 = std::chrono::steady_clock::now();
  oracle::Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const QccConfig cfg(rng.uniform(-2 * pi, 2 * pi), rng.uniform(-2 * pi, 2 * pi));
    const auto report = weak_value_report(ExperimentKind::generalised_qcc, cfg);
    const std::array<Complex, 4> want{
        Complex{1.0, 0.0}, Complex{0.0, 0.0}, Complex{0.0, 0.0},
        std::polar(1.0, cfg.phi - cfg.theta)};
    for (int i = 0; i < 4; ++i) {
      const Complex got = report.entries[i].computed.value();
      worst = std::max({worst, std::abs(got.real() - want[i].real()),
                        std::abs(got.imag() - want[i].imag())});
    }
  }
  require(worst <= 1e-12, "componentwise deviation " + fmt(worst) + " > 1e-12");
  const double dt = elapsed_since(t0);
  require(dt < 1.0, "runtime " + fmt(dt) + "s >= 1s");
  return "100 random configs, worst componentwise deviation " + fmt(worst);
}

std::string criterion_dual_weak_values() {
  const auto t0 = std::chrono::steady_clock::now();
  oracle::Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const QccConfig cfg(rng.uniform(-2 * pi, 2 * pi), rng.uniform(-2 * pi, 2 * pi));
    const auto report = weak_value_report(ExperimentKind::dual_qcc, cfg);
    const Complex h = report.entries[0].computed.value();
    const Complex v = report.entries[1].computed.value();
    const Complex sh = report.entries[2].computed.value();
    const Complex sv = report.entries[3].computed.value();
    worst = std::max({worst, std::abs(h - Complex{1.0, 0.0}), std::abs(v),
                      std::abs(sh)});
    worst = std::max(worst, std::abs(std::abs(sv) - 1.0));
    worst = std::max(worst, std::abs(sv.real() - std::cos(cfg.phi - cfg.theta)));
    // The imaginary part follows the directly computed convention.
    worst = std::max(worst, std::abs(sv.imag() - std::sin(cfg.theta - cfg.phi)));
  }
  require(worst <= 1e-12, "deviation " + fmt(worst) + " > 1e-12");

  // The sign-convention note must be present in the shipped documentation.
  const std::string readme = read_file(std::string(CHESHIRE_SOURCE_DIR) + "/README.md");
  require(readme.find("e^{i(theta-phi)}") != std::string::npos &&
              readme.find("sign") != std::string::npos,
          "README.md lacks the sign-convention note");
  const double dt = elapsed_since(t0);
  require(dt < 1.0, "runtime " + fmt(dt) + "s >= 1s");
  return "100 random configs, Im = sin(theta-phi) convention documented";
}

std::string criterion_basis_independence() {
  const double theta = 0.8;
  std::vector<double> grid(1000);
  for (int i = 0; i < 1000; ++i)
    grid[i] = -2 * pi + 4 * pi * static_cast<double>(i) / 999.0;
  const auto rows = polarisation_sweep(ExperimentKind::generalised_qcc, theta, grid);
  double worst_first = 0.0, worst_second = 0.0;
  for (const auto& row : rows) {
    worst_first = std::max(worst_first, std::abs(row.sigma_first.real()));
    worst_second = std::max(
        worst_second, std::abs(row.sigma_second.real() - std::cos(row.phi - theta)));
  }
  require(worst_first <= 1e-12,
          "Re of the null observable reached " + fmt(worst_first));
  require(worst_second <= 1e-12,
          "max |Re - cos(phi-theta)| = " + fmt(worst_second) + " > 1e-12");
  return "1000-point sweep, null column max " + fmt(worst_first) +
         ", cosine deviation max " + fmt(worst_second);
}

std::string criterion_pointer_first_order() {
  const auto t0 = std::chrono::steady_clock::now();
  const GaussianPointer pointer(1.0);
  struct Case {
    const char* name;
    QccConfig cfg;
  };
  const Case cases[] = {{"A", QccConfig(0.3, 1.0)},
                        {"sigma_B", QccConfig(0.7, 0.7)}};
  std::string detail;
  for (const auto& c : cases) {
    const auto pair = build_qcc_states(c.cfg);
    const auto op = operator_by_name(ExperimentKind::generalised_qcc, c.name, c.cfg);
    const double re_w = weak_value(op, pair).real();
    auto error_at = [&](double g) {
      const auto s = conditional_state(op, pair, pointer, g);
      return std::abs(conditional_mean_position(s) / g - re_w);
    };
    // Fit the quadratic constant at g = 0.1. The frozen regression margin
    // x1.5 (+ floor) absorbs the O(g^4) part of the fit itself.
    const double c_fit = 1.5 * error_at(0.1) / (0.1 * 0.1) + 1e-9;
    for (const double g : {0.01, 0.001}) {
      const double err = error_at(g);
      require(err <= c_fit * g * g,
              std::string(c.name) + ": error " + fmt(err) + " at g=" + fmt(g) +
                  " exceeds C g^2 = " + fmt(c_fit * g * g));
    }
    detail += std::string(c.name) + ": C=" + fmt(c_fit) + " ";
  }
  const double dt = elapsed_since(t0);
  require(dt < 1.0, "runtime " + fmt(dt) + "s >= 1s");
  return detail;
}

std::string criterion_probability_disturbance() {
  const GaussianPointer pointer(1.0);
  const double g = 0.01;

  // Position basis: operators with purely imaginary (or zero) weak values see
  // no first-order disturbance anywhere; the exact residual is O(g^2).
  struct Case {
    ExperimentKind kind;
    QccConfig cfg;
    const char* name;
  };
  const Case imaginary_cases[] = {
      {ExperimentKind::generalised_qcc, QccConfig(0.9, 2.2), "sigma_A"},
      {ExperimentKind::generalised_qcc, QccConfig(0.4, 0.4 + pi / 2), "sigma_B"},
      {ExperimentKind::dual_qcc, QccConfig(1.3, 0.2), "sigma_H"},
      {ExperimentKind::dual_qcc, QccConfig(0.9 + pi / 2, 0.9), "sigma_V"},
  };
  for (const auto& c : imaginary_cases) {
    const auto pair = build_states(c.kind, c.cfg);
    const auto op = operator_by_name(c.kind, c.name, c.cfg);
    const WeakValue w = weak_value(op, pair);
    require(std::abs(w.real()) <= 1e-12,
            std::string(c.name) + ": weak value not purely imaginary");
    for (int i = 0; i <= 20; ++i) {
      const double q = -2.0 + 4.0 * i / 20.0;
      const Complex pw =
          pointer_momentum_weak_value(pointer, Readout::position, q);
      require(pw.real() == 0.0, "position-basis momentum weak value not purely imaginary");
      const double first = disturbance_ratio_first_order(w, pw, g);
      require(std::abs(first) <= 1e-12,
              "nonzero first-order prediction in position basis");
      const CouplingConfig cc(g, Readout::position, q);
      const CouplingConfig c0(0.0, Readout::position, q);
      const double ratio = exact_detection_probability(op, pair, pointer, cc) /
                               exact_detection_probability(op, pair, pointer, c0) -
                           1.0;
      require(std::abs(ratio) <= 2.0 * g * g,
              std::string(c.name) + ": exact residual " + fmt(std::abs(ratio)) +
                  " above the O(g^2) band");
    }
  }

  // Momentum basis with weak value i: ratio - 1 = 2 g p within 5 g^2 over
  // p in [-2/sigma, 2/sigma].
  const QccConfig cfg(0.0, pi / 2);
  const auto pair = build_qcc_states(cfg);
  const auto ops = build_qcc_operators(cfg);
  double worst = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double p = -2.0 + 4.0 * i / 40.0;
    const CouplingConfig cc(g, Readout::momentum, p);
    const CouplingConfig c0(0.0, Readout::momentum, p);
    const double ratio = exact_detection_probability(ops.sigma_b, pair, pointer, cc) /
                             exact_detection_probability(ops.sigma_b, pair, pointer, c0) -
                         1.0;
    worst = std::max(worst, std::abs(ratio - 2.0 * g * p));
  }
  require(worst <= 5.0 * g * g, "momentum deviation " + fmt(worst) +
                                    " > 5 g^2 = " + fmt(5.0 * g * g));
  return "position residuals within 2g^2; momentum |ratio-2gp| max " + fmt(worst);
}

std::string criterion_montecarlo() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig config;
  config.kind = ExperimentKind::generalised_qcc;
  config.cfg = QccConfig(0.4, 0.4);
  config.operator_name = "A";
  config.g = 0.1;
  config.pointer = GaussianPointer(1.0);
  config.shots = 1000000;
  config.seed = 2024;
  config.readout = Readout::position;

  const RunResult r = run(config, 4);
  const double p_exact = exact_postselection_probability(config);
  const double binom_se =
      std::sqrt(p_exact * (1.0 - p_exact) / static_cast<double>(config.shots));
  require(std::abs(r.postselection_rate - p_exact) <= 4.0 * binom_se,
          "rate " + fmt(r.postselection_rate) + " vs exact " + fmt(p_exact));

  // Estimate against the analytic limit (which carries the O(g^2) bias).
  require(std::abs(r.exact_reference - 1.0) <= 0.5 * config.g * config.g,
          "analytic reference drifted from Re<O>_w beyond the g^2 budget");
  const double se_est = r.stderr_reading / config.g;
  require(std::abs(r.weak_value_estimate - r.exact_reference) <= 4.0 * se_est,
          "estimate " + fmt(r.weak_value_estimate) + " vs " +
              fmt(r.exact_reference) + " se " + fmt(se_est));

  // Bit-identical rerun and shard invariance.
  const RunResult again = run(config, 4);
  require(again.mean_reading == r.mean_reading &&
              again.stderr_reading == r.stderr_reading &&
              again.accepted == r.accepted,
          "rerun differed");
  const RunResult one = run(config, 1);
  const RunResult eight = run(config, 8);
  require(one.mean_reading == eight.mean_reading &&
              one.accepted == eight.accepted &&
              one.stderr_reading == eight.stderr_reading,
          "shard counts disagreed");

  const double dt = elapsed_since(t0);
  require(dt < 60.0, "runtime " + fmt(dt) + "s >= 60s");
  return "10^6 shots: rate " + fmt(r.postselection_rate) + ", estimate " +
         fmt(r.weak_value_estimate) + " +- " + fmt(se_est);
}

std::string criterion_circuits() {
  const std::string base = std::string(CHESHIRE_SOURCE_DIR) + "/circuits/";

  const auto a = parse_circuit(read_file(base + "fig1a.circ"));
  require(a.ok(), "fig1a.circ failed to parse");
  const auto report_a = verify_postselection(*a.spec);
  require(report_a.passed, "fig1a verification failed: " + report_a.failure_reason);
  require(report_a.detector_matrix[0][0] >= 1.0 - 1e-10, "D1 not certain on the target");
  for (int s = 1; s < 4; ++s)
    require(report_a.detector_matrix[s][0] <= 1e-10,
            "D1 fired on an orthogonal state");

  const auto b = parse_circuit(read_file(base + "fig1b.circ"));
  require(b.ok(), "fig1b.circ failed to parse");
  const auto report_b = verify_postselection(*b.spec);
  require(report_b.passed, "fig1b verification failed: " + report_b.failure_reason);
  require(report_b.projector_deviation <= 1e-10,
          "fig1b conditioned projector deviates by " +
              fmt(report_b.projector_deviation));

  // Deflection branching of the weak splitter elements.
  const double theta = 1.1;
  const Complex ph = std::polar(1.0, theta);
  const double r = 1.0 / std::sqrt(2.0);
  const StateVector plus(Basis::path(), {r, ph * r}, true);
  const StateVector minus(Basis::path(), {r, -ph * r}, true);
  const auto arm_a = StateVector::basis_state(Basis::path(), 0);
  const auto wp = deflection_weights(plus, theta);
  const auto wm = deflection_weights(minus, theta);
  const auto wa = deflection_weights(arm_a, theta);
  require(std::abs(wp.left - 1.0) <= 1e-12 && std::abs(wp.right) <= 1e-12,
          "plus eigenstate branching wrong");
  require(std::abs(wm.left) <= 1e-12 && std::abs(wm.right - 1.0) <= 1e-12,
          "minus eigenstate branching wrong");
  require(std::abs(wa.left - 0.5) <= 1e-12 && std::abs(wa.right - 0.5) <= 1e-12,
          "single-arm branching wrong");

  return "fig1a certainty, fig1b projector dev " + fmt(report_b.projector_deviation) +
         ", branching (1,0)/(0,1)/(1/2,1/2)";
}

std::string criterion_duality() {
  oracle::Rng rng(1008);
  // Involution on 10^3 random states.
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = oracle::random_unit_vec4(rng);
    const StateVector s(Basis::path_polarisation(), {v[0], v[1], v[2], v[3]}, true);
    const auto back = dualize(dualize(s));
    for (int i = 0; i < 4; ++i)
      require(std::abs(back.amplitude(i) - s.amplitude(i)) <= 1e-15,
              "involution drifted");
  }
  // Post-selection state invariance.
  const auto pair = build_qcc_states(QccConfig(0.5, 0.1));
  const auto post_dual = dualize(pair.post());
  for (int i = 0; i < 4; ++i)
    require(std::abs(post_dual.amplitude(i) - pair.post().amplitude(i)) <= 1e-15,
            "post-selection state not invariant");
  // Weak values preserved under simultaneous dualization.
  for (int trial = 0; trial < 100; ++trial) {
    const QccConfig cfg(rng.uniform(-pi, pi), rng.uniform(-pi, pi));
    const auto p = build_qcc_states(cfg);
    const PrePostPair pd(dualize(p.pre()), dualize(p.post()));
    const auto ops = build_qcc_operators(cfg);
    for (const Operator* op : {&ops.arm_a, &ops.arm_b, &ops.sigma_a, &ops.sigma_b}) {
      const Complex w = weak_value(*op, p).value();
      const Complex wd = weak_value(dualize(*op), pd).value();
      require(std::abs(w - wd) <= 1e-12, "weak value changed under duality");
    }
  }
  return "10^3 involutions exact, invariant post state, 100x4 weak values preserved";
}

std::string criterion_temporal_interference() {
  oracle::Rng rng(1009);
  double worst_exp = 0.0, worst_mag = 0.0, worst_h = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const QccConfig cfg(rng.uniform(-2 * pi, 2 * pi), rng.uniform(-2 * pi, 2 * pi));
    for (const auto which : {DualSigma::sigma_h, DualSigma::sigma_v}) {
      const auto el = temporal_interference_elements(cfg, which);
      worst_exp = std::max({worst_exp, std::abs(el.pre_expectation),
                            std::abs(el.post_expectation)});
      if (which == DualSigma::sigma_v)
        worst_mag = std::max(worst_mag, std::abs(std::abs(el.transition) - 0.5));
      else
        worst_h = std::max(worst_h, std::abs(el.transition));
    }
  }
  require(worst_exp <= 1e-12, "expectation values deviated by " + fmt(worst_exp));
  require(worst_mag <= 1e-12, "transition magnitude deviated by " + fmt(worst_mag));
  require(worst_h <= 1e-12, "horizontal transition nonzero: " + fmt(worst_h));
  return "100 configs: expectations 0, |transition| = 1/2, null channel 0";
}

}  // namespace

int main() {
  criterion(1, "generalised QCC weak values (1, 0, 0, e^{i(phi-theta)})",
            criterion_qcc_weak_values);
  criterion(2, "dual weak values and documented sign convention",
            criterion_dual_weak_values);
  criterion(3, "basis-independent null weak value over a 1000-point sweep",
            criterion_basis_independence);
  criterion(4, "pointer first-order deflection law with frozen g^2 bound",
            criterion_pointer_first_order);
  criterion(5, "detection-probability disturbance, position and momentum readout",
            criterion_probability_disturbance);
  criterion(6, "Monte Carlo rates, estimates, determinism, shard invariance",
            criterion_montecarlo);
  criterion(7, "circuit verification and weak-element branching",
            criterion_circuits);
  criterion(8, "duality involution and weak-value invariance",
            criterion_duality);
  criterion(9, "temporal-interference matrix elements", criterion_temporal_interference);

  int failures = 0;
  for (const auto& o : outcomes) {
    std::printf("%s criterion %d: %s — %s\n", o.passed ? "PASS" : "FAIL", o.id,
                o.description.c_str(), o.detail.c_str());
    if (!o.passed) ++failures;
  }
  std::printf("%zu/%zu acceptance criteria passed\n", outcomes.size() - failures,
              outcomes.size());
  return failures == 0 ? 0 : 1;
}
