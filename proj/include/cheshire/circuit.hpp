#pragma once

// Textual optical-table description language (".circ") and its compiler onto
// the 4-dimensional path x polarisation space.
//
// Grammar, line oriented, keywords case-insensitive, '#' starts a comment:
//   ps <arm> <phase-expr>     phase shifter: |arm> -> e^{i phase}|arm>
//   hwp <arm>                 half-wave plate: swaps H <-> V inside the arm
//   bs <arm> <arm>            50:50 beam splitter, reflection phase i
//   pbs <arm> <arm>           polarising splitter: H keeps its arm, V swaps
//                             arms and picks up phase i
//   detector <name> <arm> [<pol>]
// <phase-expr> is a decimal literal, "pi", or "k*pi/n" (optionally signed).
//
// Beam-splitter phase conventions differ between optical tables, so the
// post-selection verifier is allowed one calibration pass: a compensating
// input phase per arm drawn from {0, pi/2, pi, 3pi/2}. The calibrated phases
// are part of the verification report; failing every calibration is a hard
// verification failure.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cheshire/hilbert.hpp"

namespace cheshire {

// ---------------------------------------------------------------------------
// Phase expressions (shared with the CLI's angle flags).

/// Parses a decimal literal, "pi", or "k*pi/n", optionally signed.
inline std::optional<double> parse_phase_expr(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double sign = 1.0;
  if (text.front() == '+' || text.front() == '-') {
    if (text.front() == '-') sign = -1.0;
    text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
  }

  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  const std::size_t pi_pos = lower.find("pi");
  if (pi_pos != std::string::npos) {
    double k = 1.0, n = 1.0;
    const std::string_view before(lower.data(), pi_pos);
    const std::string_view after(lower.data() + pi_pos + 2,
                                 lower.size() - pi_pos - 2);
    if (!before.empty()) {
      if (before.back() != '*') return std::nullopt;
      const std::string_view digits = before.substr(0, before.size() - 1);
      long v = 0;
      const auto [p, ec] =
          std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc{} || p != digits.data() + digits.size() || v <= 0)
        return std::nullopt;
      k = static_cast<double>(v);
    }
    if (!after.empty()) {
      if (after.front() != '/') return std::nullopt;
      const std::string_view digits = after.substr(1);
      long v = 0;
      const auto [p, ec] =
          std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc{} || p != digits.data() + digits.size() || v <= 0)
        return std::nullopt;
      n = static_cast<double>(v);
    }
    return sign * k * std::numbers::pi / n;
  }

  double value = 0.0;
  const auto [p, ec] =
      std::from_chars(lower.data(), lower.data() + lower.size(), value);
  if (ec != std::errc{} || p != lower.data() + lower.size()) return std::nullopt;
  return sign * value;
}

// ---------------------------------------------------------------------------
// Circuit description.

struct PhaseShifter {
  Path arm;
  double phase;
  friend bool operator==(const PhaseShifter&, const PhaseShifter&) = default;
};

struct HalfWavePlate {
  Path arm;
  friend bool operator==(const HalfWavePlate&, const HalfWavePlate&) = default;
};

struct BeamSplitter {
  Path a;
  Path b;
  friend bool operator==(const BeamSplitter&, const BeamSplitter&) = default;
};

struct PolarisingBeamSplitter {
  Path a;
  Path b;
  friend bool operator==(const PolarisingBeamSplitter&,
                         const PolarisingBeamSplitter&) = default;
};

using Element =
    std::variant<PhaseShifter, HalfWavePlate, BeamSplitter, PolarisingBeamSplitter>;

struct Detector {
  std::string name;
  Path arm;
  std::optional<Pol> pol;
  friend bool operator==(const Detector&, const Detector&) = default;
};

struct CircuitSpec {
  std::vector<Element> elements;
  std::vector<Detector> detectors;
  friend bool operator==(const CircuitSpec&, const CircuitSpec&) = default;
};

struct ParseError {
  int line = 0;
  int column = 0;
  std::string message;
  std::vector<std::string> expected;
};

struct ParseOutcome {
  std::optional<CircuitSpec> spec;
  std::optional<ParseError> error;

  bool ok() const { return spec.has_value(); }
};

// ---------------------------------------------------------------------------
// Parser.

namespace detail {

struct Token {
  std::string text;
  int column;  // 1-based
};

inline std::vector<Token> tokenize_line(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    tokens.push_back(
        {std::string(line.substr(start, i - start)), static_cast<int>(start + 1)});
  }
  return tokens;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::optional<Path> parse_arm(std::string_view tok) {
  const std::string l = lowercase(tok);
  if (l == "a") return Path::A;
  if (l == "b") return Path::B;
  return std::nullopt;
}

inline std::optional<Pol> parse_pol(std::string_view tok) {
  const std::string l = lowercase(tok);
  if (l == "h") return Pol::H;
  if (l == "v") return Pol::V;
  return std::nullopt;
}

}  // namespace detail

inline ParseOutcome parse_circuit(std::string_view source) {
  CircuitSpec spec;
  auto fail = [](int line, int col, std::string message,
                 std::vector<std::string> expected) {
    return ParseOutcome{std::nullopt,
                        ParseError{line, col, std::move(message), std::move(expected)}};
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const std::size_t eol = source.find('\n', pos);
    const std::string_view line =
        source.substr(pos, eol == std::string_view::npos ? source.size() - pos
                                                         : eol - pos);
    ++line_no;
    const auto tokens = detail::tokenize_line(line);
    const int end_col = static_cast<int>(line.size()) + 1;

    if (!tokens.empty()) {
      const std::string keyword = detail::lowercase(tokens[0].text);
      auto need = [&](std::size_t count) { return tokens.size() >= 1 + count; };

      if (keyword == "ps") {
        if (!need(2))
          return fail(line_no, end_col, "phase shifter needs an arm and a phase",
                      {"<arm>", "<phase-expr>"});
        const auto arm = detail::parse_arm(tokens[1].text);
        if (!arm)
          return fail(line_no, tokens[1].column,
                      "unknown arm '" + tokens[1].text + "'", {"A", "B"});
        const auto phase = parse_phase_expr(tokens[2].text);
        if (!phase)
          return fail(line_no, tokens[2].column,
                      "bad phase expression '" + tokens[2].text + "'",
                      {"<decimal>", "pi", "k*pi/n"});
        if (tokens.size() > 3)
          return fail(line_no, tokens[3].column, "unexpected trailing token",
                      {"<end of line>"});
        spec.elements.push_back(PhaseShifter{*arm, *phase});
      } else if (keyword == "hwp") {
        if (!need(1))
          return fail(line_no, end_col, "half-wave plate needs an arm", {"<arm>"});
        const auto arm = detail::parse_arm(tokens[1].text);
        if (!arm)
          return fail(line_no, tokens[1].column,
                      "unknown arm '" + tokens[1].text + "'", {"A", "B"});
        if (tokens.size() > 2)
          return fail(line_no, tokens[2].column, "unexpected trailing token",
                      {"<end of line>"});
        spec.elements.push_back(HalfWavePlate{*arm});
      } else if (keyword == "bs" || keyword == "pbs") {
        if (!need(2))
          return fail(line_no, end_col, keyword + " needs two arms",
                      {"<arm>", "<arm>"});
        const auto a = detail::parse_arm(tokens[1].text);
        if (!a)
          return fail(line_no, tokens[1].column,
                      "unknown arm '" + tokens[1].text + "'", {"A", "B"});
        const auto b = detail::parse_arm(tokens[2].text);
        if (!b)
          return fail(line_no, tokens[2].column,
                      "unknown arm '" + tokens[2].text + "'", {"A", "B"});
        if (*a == *b)
          return fail(line_no, tokens[2].column,
                      "splitter arms must be distinct", {"A", "B"});
        if (tokens.size() > 3)
          return fail(line_no, tokens[3].column, "unexpected trailing token",
                      {"<end of line>"});
        if (keyword == "bs")
          spec.elements.push_back(BeamSplitter{*a, *b});
        else
          spec.elements.push_back(PolarisingBeamSplitter{*a, *b});
      } else if (keyword == "detector") {
        if (!need(2))
          return fail(line_no, end_col, "detector needs a name and an arm",
                      {"<name>", "<arm>"});
        const std::string& name = tokens[1].text;
        for (const auto& d : spec.detectors)
          if (d.name == name)
            return fail(line_no, tokens[1].column,
                        "duplicate detector name '" + name + "'", {"<unique name>"});
        const auto arm = detail::parse_arm(tokens[2].text);
        if (!arm)
          return fail(line_no, tokens[2].column,
                      "unknown arm '" + tokens[2].text + "'", {"A", "B"});
        std::optional<Pol> pol;
        if (tokens.size() > 3) {
          pol = detail::parse_pol(tokens[3].text);
          if (!pol)
            return fail(line_no, tokens[3].column,
                        "unknown polarisation '" + tokens[3].text + "'",
                        {"H", "V"});
          if (tokens.size() > 4)
            return fail(line_no, tokens[4].column, "unexpected trailing token",
                        {"<end of line>"});
        }
        spec.detectors.push_back(Detector{name, *arm, pol});
      } else {
        return fail(line_no, tokens[0].column,
                    "unknown element '" + tokens[0].text + "'",
                    {"ps", "hwp", "bs", "pbs", "detector"});
      }
    }

    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }

  if (spec.detectors.empty())
    return fail(line_no, 1, "circuit needs at least one detector", {"detector"});
  return ParseOutcome{std::move(spec), std::nullopt};
}

/// Canonical text form; parse(pretty_print(spec)) reproduces the spec.
inline std::string pretty_print(const CircuitSpec& spec) {
  std::string out;
  char buf[64];
  for (const auto& e : spec.elements) {
    if (const auto* ps = std::get_if<PhaseShifter>(&e)) {
      std::snprintf(buf, sizeof buf, "%.17g", ps->phase);
      out += std::string("ps ") + to_string(ps->arm) + " " + buf + "\n";
    } else if (const auto* hwp = std::get_if<HalfWavePlate>(&e)) {
      out += std::string("hwp ") + to_string(hwp->arm) + "\n";
    } else if (const auto* bs = std::get_if<BeamSplitter>(&e)) {
      out += std::string("bs ") + to_string(bs->a) + " " + to_string(bs->b) + "\n";
    } else if (const auto* pbs = std::get_if<PolarisingBeamSplitter>(&e)) {
      out += std::string("pbs ") + to_string(pbs->a) + " " + to_string(pbs->b) + "\n";
    }
  }
  for (const auto& d : spec.detectors) {
    out += "detector " + d.name + " " + to_string(d.arm);
    if (d.pol) out += std::string(" ") + to_string(*d.pol);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Compiler.

namespace detail {

inline Operator element_unitary(const Element& e) {
  const Basis basis = Basis::path_polarisation();
  std::vector<Complex> m(16, Complex{0.0, 0.0});
  auto at = [&m](std::size_t r, std::size_t c) -> Complex& { return m[r * 4 + c]; };
  auto idx = [](Path p, Pol q) { return Basis::index_of(p, q); };
  const Complex i{0.0, 1.0};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  if (const auto* ps = std::get_if<PhaseShifter>(&e)) {
    const Complex ph = std::polar(1.0, ps->phase);
    for (std::size_t k = 0; k < 4; ++k) at(k, k) = 1.0;
    at(idx(ps->arm, Pol::H), idx(ps->arm, Pol::H)) = ph;
    at(idx(ps->arm, Pol::V), idx(ps->arm, Pol::V)) = ph;
  } else if (const auto* hwp = std::get_if<HalfWavePlate>(&e)) {
    for (std::size_t k = 0; k < 4; ++k) at(k, k) = 1.0;
    at(idx(hwp->arm, Pol::H), idx(hwp->arm, Pol::H)) = 0.0;
    at(idx(hwp->arm, Pol::V), idx(hwp->arm, Pol::V)) = 0.0;
    at(idx(hwp->arm, Pol::H), idx(hwp->arm, Pol::V)) = 1.0;
    at(idx(hwp->arm, Pol::V), idx(hwp->arm, Pol::H)) = 1.0;
  } else if (const auto* bs = std::get_if<BeamSplitter>(&e)) {
    for (const Pol p : {Pol::H, Pol::V}) {
      at(idx(bs->a, p), idx(bs->a, p)) = inv_sqrt2;
      at(idx(bs->b, p), idx(bs->a, p)) = i * inv_sqrt2;
      at(idx(bs->a, p), idx(bs->b, p)) = i * inv_sqrt2;
      at(idx(bs->b, p), idx(bs->b, p)) = inv_sqrt2;
    }
  } else if (const auto* pbs = std::get_if<PolarisingBeamSplitter>(&e)) {
    at(idx(pbs->a, Pol::H), idx(pbs->a, Pol::H)) = 1.0;
    at(idx(pbs->b, Pol::H), idx(pbs->b, Pol::H)) = 1.0;
    at(idx(pbs->b, Pol::V), idx(pbs->a, Pol::V)) = i;
    at(idx(pbs->a, Pol::V), idx(pbs->b, Pol::V)) = i;
  }
  Operator op(basis, std::move(m));
  op.set_unitary();
  return op;
}

}  // namespace detail

/// Product of the element unitaries, first listed element applied first.
/// The result carries a verified unitary flag.
inline Operator compile_circuit(const CircuitSpec& spec) {
  Operator u = Operator::identity(Basis::path_polarisation());
  for (const auto& e : spec.elements) u = detail::element_unitary(e) * u;
  u.set_unitary();
  return u;
}

/// Per-detector click probabilities for a (normalised) input state, with the
/// mass on labels no detector covers reported separately.
struct DetectorDistribution {
  std::vector<std::pair<std::string, double>> probabilities;
  double undetected = 0.0;
};

inline DetectorDistribution detector_distribution(const CircuitSpec& spec,
                                                  const StateVector& input) {
  const Operator u = compile_circuit(spec);
  const StateVector out = u.apply(input);

  DetectorDistribution dist;
  std::array<bool, 4> covered{};
  for (const auto& d : spec.detectors) {
    double p = 0.0;
    for (const Pol pol : {Pol::H, Pol::V}) {
      if (d.pol && *d.pol != pol) continue;
      const std::size_t k = Basis::index_of(d.arm, pol);
      p += std::norm(out.amplitude(k));
      covered[k] = true;
    }
    dist.probabilities.emplace_back(d.name, p);
  }
  for (std::size_t k = 0; k < 4; ++k)
    if (!covered[k]) dist.undetected += std::norm(out.amplitude(k));
  return dist;
}

// ---------------------------------------------------------------------------
// Post-selection verification.

/// Result of checking the D1-certainty property of a post-selection circuit:
/// D1 clicks with probability 1 on the target state and 0 on each state of an
/// orthonormal complement basis, equivalently the D1-conditioned projector
/// equals the target projector.
struct VerificationReport {
  bool passed = false;
  std::string d1_name = "D1";
  std::array<double, 2> calibration_phases{0.0, 0.0};  // arm A, arm B
  double projector_deviation = 0.0;
  std::vector<std::string> detector_names;  // includes "undetected" last
  std::array<std::string, 4> state_labels{"post", "orth1", "orth2", "orth3"};
  std::array<std::vector<double>, 4> detector_matrix;  // row per state
  std::string failure_reason;
};

namespace detail {

inline std::array<StateVector, 4> verification_states() {
  const Basis basis = Basis::path_polarisation();
  const double r = 1.0 / std::sqrt(2.0);
  return {
      StateVector(basis, {r, 0.0, 0.0, r}, true),    // the post-selection target
      StateVector(basis, {r, 0.0, 0.0, -r}, true),   // orthogonal complement...
      StateVector::basis_state(basis, 1),
      StateVector::basis_state(basis, 2),
  };
}

inline CircuitSpec with_calibration(const CircuitSpec& spec, double phase_a,
                                    double phase_b) {
  CircuitSpec out = spec;
  std::vector<Element> elements;
  if (phase_a != 0.0) elements.push_back(PhaseShifter{Path::A, phase_a});
  if (phase_b != 0.0) elements.push_back(PhaseShifter{Path::B, phase_b});
  elements.insert(elements.end(), out.elements.begin(), out.elements.end());
  out.elements = std::move(elements);
  return out;
}

inline double d1_probability(const CircuitSpec& spec, const StateVector& state,
                             const std::string& d1) {
  const auto dist = detector_distribution(spec, state);
  for (const auto& [name, p] : dist.probabilities)
    if (name == d1) return p;
  return 0.0;
}

}  // namespace detail

/// Verifies the D1-certainty property, trying the calibration phases
/// {0, pi/2, pi, 3pi/2} per arm in scan order (arm A outer, arm B inner) and
/// keeping the first pass.
inline VerificationReport verify_postselection(const CircuitSpec& spec,
                                               double tolerance = 1e-10) {
  VerificationReport report;
  for (const auto& d : spec.detectors)
    report.detector_names.push_back(d.name);
  report.detector_names.push_back("undetected");

  const bool has_d1 =
      std::any_of(spec.detectors.begin(), spec.detectors.end(),
                  [&](const Detector& d) { return d.name == report.d1_name; });

  const auto states = detail::verification_states();
  auto fill_matrix = [&](const CircuitSpec& calibrated) {
    for (std::size_t s = 0; s < states.size(); ++s) {
      const auto dist = detector_distribution(calibrated, states[s]);
      report.detector_matrix[s].clear();
      for (const auto& [name, p] : dist.probabilities)
        report.detector_matrix[s].push_back(p);
      report.detector_matrix[s].push_back(dist.undetected);
    }
  };

  if (!has_d1) {
    report.failure_reason = "no detector named D1";
    fill_matrix(spec);
    return report;
  }

  const std::array<double, 4> grid{0.0, std::numbers::pi / 2, std::numbers::pi,
                                   3 * std::numbers::pi / 2};
  for (const double pa : grid) {
    for (const double pb : grid) {
      const CircuitSpec calibrated = detail::with_calibration(spec, pa, pb);
      bool pass =
          detail::d1_probability(calibrated, states[0], report.d1_name) >=
          1.0 - tolerance;
      for (std::size_t s = 1; pass && s < states.size(); ++s)
        pass = detail::d1_probability(calibrated, states[s], report.d1_name) <=
               tolerance;
      if (!pass) continue;

      report.passed = true;
      report.calibration_phases = {pa, pb};
      fill_matrix(calibrated);

      // Deviation of the D1-conditioned projector U^dag P_D1 U from the
      // target projector.
      const Operator u = compile_circuit(calibrated);
      const Detector* d1 = nullptr;
      for (const auto& d : spec.detectors)
        if (d.name == report.d1_name) d1 = &d;
      std::vector<Complex> proj(16, Complex{0.0, 0.0});
      for (const Pol pol : {Pol::H, Pol::V}) {
        if (d1->pol && *d1->pol != pol) continue;
        const std::size_t k = Basis::index_of(d1->arm, pol);
        proj[k * 4 + k] = 1.0;
      }
      const Operator conditioned =
          u.adjoint() * Operator(Basis::path_polarisation(), std::move(proj)) * u;
      const Operator target = Operator::outer(states[0], states[0]);
      double dev = 0.0;
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
          dev = std::max(dev,
                         std::abs(conditioned.entry(r, c) - target.entry(r, c)));
      report.projector_deviation = dev;
      return report;
    }
  }

  report.failure_reason =
      "no calibration phases make D1 certain on the post-selection state";
  fill_matrix(spec);
  return report;
}

// ---------------------------------------------------------------------------
// Weak-element branching model.

/// Which phase observable a deflecting splitter element implements: the
/// measured polarisation branches into the arm-superposition eigenstates with
/// left/right deflections; the other polarisation passes undeflected.
enum class WeakElementKind { sigma_h, sigma_v };

struct WeakElementModel {
  WeakElementKind kind;
  Pol measured_pol;     // branches into |+> / |-> deflections
  Pol passthrough_pol;  // transmitted undeflected with certainty
};

inline WeakElementModel weak_element_model(WeakElementKind kind) {
  if (kind == WeakElementKind::sigma_h)
    return {kind, Pol::H, Pol::V};
  return {kind, Pol::V, Pol::H};
}

inline bool element_deflects(WeakElementKind kind, Pol pol) {
  return weak_element_model(kind).measured_pol == pol;
}

struct BranchWeights {
  double left;   // |<+|psi>|^2
  double right;  // |<-|psi>|^2
};

/// Left/right deflection weights of a 2-dimensional path state projected on
/// the |+/-> = (|A> +- e^{i theta}|B>)/sqrt(2) eigenbasis.
inline BranchWeights deflection_weights(const StateVector& path_state,
                                        double theta) {
  if (!(path_state.basis() == Basis::path()))
    throw BasisMismatch("deflection weights need a path-basis state");
  const Complex ph = std::polar(1.0, theta);
  const double r = 1.0 / std::sqrt(2.0);
  const StateVector plus(Basis::path(), {r, ph * r}, true);
  const StateVector minus(Basis::path(), {r, -ph * r}, true);
  return {std::norm(inner(plus, path_state)),
          std::norm(inner(minus, path_state))};
}

}  // namespace cheshire
