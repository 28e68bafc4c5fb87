// Command-line driver: weak-value reports, polarisation sweeps, pointer
// distributions, Monte Carlo runs, and circuit verification, with
// machine-readable output (JSON for scalar reports, CSV for grids).
//
// Exit codes: 0 ok, 2 usage/parse error, 3 I/O error, 4 statistical failure
// under --strict, 5 circuit verification failure.
//
// Determinism: identical flags produce byte-identical output. Angles accept
// decimal radians or k*pi/n literals. The seed may come from CHESHIRE_SEED;
// an explicit --seed wins.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cheshire/circuit.hpp"
#include "cheshire/experiments.hpp"
#include "cheshire/montecarlo.hpp"
#include "cheshire/pointer.hpp"
#include "cheshire/weak_measure.hpp"

namespace {

using cheshire::Complex;
using json = nlohmann::ordered_json;

constexpr const char* kSchemaVersion = "1.0";
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitStatistical = 4;
constexpr int kExitVerification = 5;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json complex_to_json(Complex z) {
  return json{{"re", z.real()}, {"im", z.imag()}};
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_angle(const std::string& text, const char* flag) {
  const auto v = cheshire::parse_phase_expr(text);
  if (!v)
    throw UsageError(std::string(flag) + ": bad angle '" + text +
                     "' (want decimal radians, pi, or k*pi/n)");
  return *v;
}

cheshire::ExperimentKind parse_kind(const std::string& text) {
  if (text == "qcc") return cheshire::ExperimentKind::generalised_qcc;
  if (text == "dual") return cheshire::ExperimentKind::dual_qcc;
  throw UsageError("--kind: expected 'qcc' or 'dual', got '" + text + "'");
}

cheshire::Readout parse_readout(const std::string& text) {
  if (text == "position") return cheshire::Readout::position;
  if (text == "momentum") return cheshire::Readout::momentum;
  throw UsageError("--readout: expected 'position' or 'momentum', got '" +
                   text + "'");
}

/// Writes text to the given path, or stdout when the path is empty.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out.good()) throw std::ios_base::failure("cannot open " + out_path);
  out << text;
  out.flush();
  if (!out.good()) throw std::ios_base::failure("cannot write " + out_path);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("CHESHIRE_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const std::uint64_t v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw UsageError("CHESHIRE_SEED is not a valid unsigned integer");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_weak(const std::string& kind_text, const std::string& theta_text,
             const std::string& phi_text, const std::string& out_path) {
  const auto kind = parse_kind(kind_text);
  const cheshire::QccConfig cfg(parse_angle(theta_text, "--theta"),
                                parse_angle(phi_text, "--phi"));
  const auto report = cheshire::weak_value_report(kind, cfg);

  json record;
  record["schema_version"] = kSchemaVersion;
  record["command"] = "weak";
  record["parameters"] = {{"kind", kind_text},
                          {"theta", cfg.theta},
                          {"phi", cfg.phi}};
  json rows = json::array();
  for (const auto& entry : report.entries) {
    rows.push_back({{"name", entry.name},
                    {"value", complex_to_json(entry.computed.value())},
                    {"reference", complex_to_json(entry.reference)},
                    {"abs_deviation", entry.deviation()}});
  }
  record["rows"] = std::move(rows);
  emit(out_path, record.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const std::string& kind_text, const std::string& theta_text,
              const std::string& phi_start_text, const std::string& phi_end_text,
              std::int64_t steps, const std::string& out_path) {
  const auto kind = parse_kind(kind_text);
  const double theta = parse_angle(theta_text, "--theta");
  const double phi_start = parse_angle(phi_start_text, "--phi-start");
  const double phi_end = parse_angle(phi_end_text, "--phi-end");
  if (steps < 2) throw UsageError("--steps must be at least 2");

  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (std::int64_t i = 0; i < steps; ++i)
    grid[static_cast<std::size_t>(i)] =
        phi_start + (phi_end - phi_start) * static_cast<double>(i) /
                        static_cast<double>(steps - 1);
  const auto rows = cheshire::polarisation_sweep(kind, theta, grid);

  std::ostringstream csv;
  csv << "# command: sweep\n";
  csv << "# kind: " << kind_text << "\n";
  csv << "# theta: " << fmt17(theta) << "\n";
  csv << "# phi_start: " << fmt17(phi_start) << "\n";
  csv << "# phi_end: " << fmt17(phi_end) << "\n";
  csv << "# steps: " << steps << "\n";
  csv << "phi,re_sigma_first,im_sigma_first,re_sigma_second,im_sigma_second\n";
  for (const auto& row : rows) {
    csv << fmt17(row.phi) << ',' << fmt17(row.sigma_first.real()) << ','
        << fmt17(row.sigma_first.imag()) << ',' << fmt17(row.sigma_second.real())
        << ',' << fmt17(row.sigma_second.imag()) << '\n';
  }
  emit(out_path, csv.str());
  return 0;
}

int cmd_pointer(const std::string& kind_text, const std::string& op_name,
                const std::string& theta_text, const std::string& phi_text,
                double g, double sigma, double x0,
                const std::string& readout_text,
                const std::vector<double>& grid_spec,
                const std::string& out_path) {
  const auto kind = parse_kind(kind_text);
  const cheshire::QccConfig cfg(parse_angle(theta_text, "--theta"),
                                parse_angle(phi_text, "--phi"));
  const auto readout = parse_readout(readout_text);
  if (grid_spec.size() != 3) throw UsageError("--grid needs MIN MAX N");
  const double grid_min = grid_spec[0];
  const double grid_max = grid_spec[1];
  const auto grid_n = static_cast<std::int64_t>(grid_spec[2]);
  if (grid_n < 2 || grid_max <= grid_min)
    throw UsageError("--grid needs MIN < MAX and N >= 2");

  const cheshire::GaussianPointer pointer(sigma, x0);
  const auto pair = cheshire::build_states(kind, cfg);
  const auto op = cheshire::operator_by_name(kind, op_name, cfg);
  const auto w = cheshire::weak_value(op, pair);
  const auto state = cheshire::conditional_state(op, pair, pointer, g, readout);
  const auto state0 = cheshire::conditional_state(op, pair, pointer, 0.0, readout);
  const double probability = cheshire::postselection_probability(state);

  std::ostringstream csv;
  csv << "# command: pointer\n";
  csv << "# kind: " << kind_text << "\n";
  csv << "# operator: " << op_name << "\n";
  csv << "# theta: " << fmt17(cfg.theta) << "\n";
  csv << "# phi: " << fmt17(cfg.phi) << "\n";
  csv << "# g: " << fmt17(g) << "\n";
  csv << "# sigma: " << fmt17(sigma) << "\n";
  csv << "# x0: " << fmt17(x0) << "\n";
  csv << "# readout: " << readout_text << "\n";
  if (g > 0.2 * sigma)
    csv << "# warning: coupling exceeds the weak regime (g > sigma/5)\n";
  csv << "q,conditional_density,ratio_to_g0_minus_1,first_order_prediction\n";
  for (std::int64_t i = 0; i < grid_n; ++i) {
    const double q = grid_min + (grid_max - grid_min) * static_cast<double>(i) /
                                    static_cast<double>(grid_n - 1);
    const double density = cheshire::conditional_density(state, q) / probability;
    const double with_g = cheshire::conditional_density(state, q);
    const double without_g = cheshire::conditional_density(state0, q);
    const double ratio = without_g > 0.0 ? with_g / without_g - 1.0 : 0.0;
    const double first = cheshire::disturbance_ratio_first_order(
        w, cheshire::pointer_momentum_weak_value(pointer, readout, q), g);
    csv << fmt17(q) << ',' << fmt17(density) << ',' << fmt17(ratio) << ','
        << fmt17(first) << '\n';
  }
  emit(out_path, csv.str());
  return 0;
}

int cmd_montecarlo(const std::string& kind_text, const std::string& op_name,
                   const std::string& theta_text, const std::string& phi_text,
                   double g, double sigma, double x0,
                   const std::string& readout_text, std::uint64_t shots,
                   const std::optional<std::uint64_t>& seed_flag,
                   unsigned shards, bool strict, const std::string& out_path) {
  const auto kind = parse_kind(kind_text);
  const cheshire::QccConfig cfg(parse_angle(theta_text, "--theta"),
                                parse_angle(phi_text, "--phi"));
  cheshire::RunConfig config;
  config.kind = kind;
  config.cfg = cfg;
  config.operator_name = op_name;
  config.g = g;
  config.pointer = cheshire::GaussianPointer(sigma, x0);
  config.shots = shots;
  config.seed = resolve_seed(seed_flag);
  config.readout = parse_readout(readout_text);

  json record;
  record["schema_version"] = kSchemaVersion;
  record["command"] = "montecarlo";
  record["parameters"] = {{"kind", kind_text},   {"operator", op_name},
                          {"theta", cfg.theta},  {"phi", cfg.phi},
                          {"g", g},              {"sigma", sigma},
                          {"x0", x0},            {"readout", readout_text},
                          {"shots", shots},      {"seed", config.seed},
                          {"shards", shards}};

  bool zero_acceptance = false;
  json rows = json::array();
  json warnings = json::array();
  try {
    const cheshire::RunResult r = cheshire::run(config, shards);
    if (r.weak_regime_warning)
      warnings.push_back("coupling exceeds the weak regime (g > sigma/5)");
    rows.push_back({{"accepted", r.accepted},
                    {"total", r.total},
                    {"postselection_rate", r.postselection_rate},
                    {"mean_reading", r.mean_reading},
                    {"stderr_reading", r.stderr_reading},
                    {"weak_value_estimate", r.weak_value_estimate},
                    {"exact_reference", r.exact_reference}});
  } catch (const cheshire::ZeroAcceptance& e) {
    zero_acceptance = true;
    warnings.push_back(std::string("zero acceptance: ") + e.what());
  }
  record["zero_acceptance"] = zero_acceptance;
  record["warnings"] = std::move(warnings);
  record["rows"] = std::move(rows);
  emit(out_path, record.dump(2) + "\n");
  return zero_acceptance && strict ? kExitStatistical : 0;
}

int cmd_circuit_verify(const std::string& path, const std::string& out_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    std::cerr << "cannot read " << path << "\n";
    return kExitIo;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();

  const auto outcome = cheshire::parse_circuit(buffer.str());
  if (!outcome.ok()) {
    const auto& e = *outcome.error;
    std::cerr << path << ":" << e.line << ":" << e.column << ": " << e.message
              << " (expected:";
    for (const auto& t : e.expected) std::cerr << " " << t;
    std::cerr << ")\n";
    return kExitUsage;
  }

  const auto report = cheshire::verify_postselection(*outcome.spec);

  json record;
  record["schema_version"] = kSchemaVersion;
  record["command"] = "circuit-verify";
  record["parameters"] = {{"circuit", path}};
  record["passed"] = report.passed;
  record["d1"] = report.d1_name;
  record["calibration_phases"] = {report.calibration_phases[0],
                                  report.calibration_phases[1]};
  record["projector_deviation"] = report.projector_deviation;
  if (!report.failure_reason.empty())
    record["failure_reason"] = report.failure_reason;
  json matrix;
  matrix["states"] = report.state_labels;
  matrix["detectors"] = report.detector_names;
  json probs = json::array();
  for (const auto& row : report.detector_matrix) probs.push_back(row);
  matrix["probabilities"] = std::move(probs);
  record["detector_matrix"] = std::move(matrix);
  emit(out_path, record.dump(2) + "\n");
  return report.passed ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-measurement interferometer simulator"};
  app.require_subcommand(1);

  // weak ---------------------------------------------------------------
  auto* weak = app.add_subcommand("weak", "Weak values of one experiment");
  std::string w_kind, w_theta, w_phi, w_out;
  weak->add_option("--kind", w_kind, "qcc or dual")->required();
  weak->add_option("--theta", w_theta, "arm phase (radians or k*pi/n)")->required();
  weak->add_option("--phi", w_phi, "polarisation phase")->required();
  weak->add_option("--out", w_out, "output file (default stdout)");

  // sweep --------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Polarisation-basis rotation sweep");
  std::string s_kind, s_theta, s_start, s_end, s_out;
  std::int64_t s_steps = 0;
  sweep->add_option("--kind", s_kind)->required();
  sweep->add_option("--theta", s_theta)->required();
  sweep->add_option("--phi-start", s_start)->required();
  sweep->add_option("--phi-end", s_end)->required();
  sweep->add_option("--steps", s_steps)->required();
  sweep->add_option("--out", s_out, "output CSV")->required();

  // pointer ------------------------------------------------------------
  auto* pointer = app.add_subcommand("pointer", "Conditional pointer distribution");
  std::string p_kind, p_op, p_theta, p_phi, p_readout = "position", p_out;
  double p_g = 0.0, p_sigma = 1.0, p_x0 = 0.0;
  std::vector<double> p_grid;
  pointer->add_option("--kind", p_kind)->required();
  pointer->add_option("--operator", p_op)->required();
  pointer->add_option("--theta", p_theta)->required();
  pointer->add_option("--phi", p_phi)->required();
  pointer->add_option("--g", p_g, "coupling strength")->required();
  pointer->add_option("--sigma", p_sigma, "beam width")->required();
  pointer->add_option("--x0", p_x0, "beam centre");
  pointer->add_option("--readout", p_readout, "position or momentum");
  pointer->add_option("--grid", p_grid, "MIN MAX N")->expected(3)->required();
  pointer->add_option("--out", p_out, "output CSV")->required();

  // montecarlo ----------------------------------------------------------
  auto* mc = app.add_subcommand("montecarlo", "Shot-based stochastic run");
  std::string m_kind, m_op, m_theta, m_phi, m_readout = "position", m_out;
  double m_g = 0.0, m_sigma = 1.0, m_x0 = 0.0;
  std::uint64_t m_shots = 0;
  std::optional<std::uint64_t> m_seed;
  unsigned m_shards = 1;
  bool m_strict = false;
  mc->add_option("--kind", m_kind)->required();
  mc->add_option("--operator", m_op)->required();
  mc->add_option("--theta", m_theta)->required();
  mc->add_option("--phi", m_phi)->required();
  mc->add_option("--g", m_g)->required();
  mc->add_option("--sigma", m_sigma)->required();
  mc->add_option("--x0", m_x0);
  mc->add_option("--readout", m_readout);
  mc->add_option("--shots", m_shots)->required();
  mc->add_option("--seed", m_seed, "RNG seed (CHESHIRE_SEED used when absent)");
  mc->add_option("--shards", m_shards, "parallel shards (result invariant)");
  mc->add_flag("--strict", m_strict, "exit 4 on zero acceptance");
  mc->add_option("--out", m_out, "output file (default stdout)");

  // circuit ---------------------------------------------------------------
  auto* circuit = app.add_subcommand("circuit", "Circuit-file operations");
  circuit->require_subcommand(1);
  auto* verify = circuit->add_subcommand("verify", "Verify a post-selection table");
  std::string c_path, c_out;
  verify->add_option("path", c_path, ".circ file")->required();
  verify->add_option("--out", c_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (weak->parsed()) return cmd_weak(w_kind, w_theta, w_phi, w_out);
    if (sweep->parsed())
      return cmd_sweep(s_kind, s_theta, s_start, s_end, s_steps, s_out);
    if (pointer->parsed())
      return cmd_pointer(p_kind, p_op, p_theta, p_phi, p_g, p_sigma, p_x0,
                         p_readout, p_grid, p_out);
    if (mc->parsed())
      return cmd_montecarlo(m_kind, m_op, m_theta, m_phi, m_g, m_sigma, m_x0,
                            m_readout, m_shots, m_seed, m_shards, m_strict,
                            m_out);
    if (verify->parsed()) return cmd_circuit_verify(c_path, c_out);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
