#pragma once

// Exact post-selected conditional pointer states. The coupling evolution
// exp(-i g O P) with O = sum_k lambda_k P_k turns the joint amplitude into a
// finite sum of translated Gaussians,
//   <x|m_f> = sum_k c_k phi(x - g lambda_k),   c_k = <psi_f|P_k|psi_i>,
// (or phase factors e^{-i g lambda_k p} times phi~(p) in the momentum basis).
// All moments reduce to the pairwise overlap of two shifted copies of the
// profile,
//   Ovl(a, b) = int phi(x-a) phi(x-b) dx = exp(-(a-b)^2 / 8 sigma^2),
//   int x phi(x-a) phi(x-b) dx = (x0 + (a+b)/2) Ovl(a, b),
// so no numerical integration is performed at runtime (the derivations are
// spelled out in docs/gaussian_overlaps.md; tests cross-check by quadrature).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cheshire/gaussian.hpp"
#include "cheshire/hilbert.hpp"
#include "cheshire/weak_measure.hpp"

namespace cheshire {

/// Post-selection succeeded with (numerically) zero probability; conditional
/// moments are undefined.
struct ZeroPostSelection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pointer state conditioned on successful post-selection, kept in exact
/// sum-of-translated-Gaussians form. Not normalised: the squared norm is the
/// post-selection probability.
struct ConditionalPointerState {
  struct Term {
    Complex coefficient;  // <psi_f|P_k|psi_i>
    double shift;         // g lambda_k
  };

  std::vector<Term> terms;
  GaussianPointer pointer;
  Readout basis = Readout::position;
};

/// Overlap of two shifted copies of the position profile.
inline double gaussian_overlap(const GaussianPointer& p, double a, double b) {
  const double d = a - b;
  return std::exp(-d * d / (8.0 * p.sigma() * p.sigma()));
}

/// Builds the conditional state for hermitian O. Terms with an exactly
/// negligible coefficient are dropped (the represented function is
/// unchanged); at least one term is always kept.
inline ConditionalPointerState conditional_state(const Operator& op,
                                                 const PrePostPair& pair,
                                                 const GaussianPointer& pointer,
                                                 double g,
                                                 Readout basis = Readout::position) {
  if (!op.is_hermitian())
    throw FlagViolation("conditional state needs a hermitian operator");
  const EigenDecomposition decomp = eigendecompose(op);

  std::vector<ConditionalPointerState::Term> terms;
  double scale = 0.0;
  for (std::size_t k = 0; k < decomp.eigenvalues.size(); ++k) {
    const Complex c = sandwich(pair.post(), decomp.projectors[k], pair.pre());
    scale = std::max(scale, std::abs(c));
    terms.push_back({c, g * decomp.eigenvalues[k]});
  }
  std::erase_if(terms, [scale](const ConditionalPointerState::Term& t) {
    return std::abs(t.coefficient) <= 1e-15 * scale;
  });
  if (terms.empty())
    terms.push_back({Complex{0.0, 0.0}, 0.0});  // fully orthogonal selection

  ConditionalPointerState state{std::move(terms), pointer, basis};

  // Total probability must be a probability.
  const double p = [&state] {
    double s = 0.0;
    for (const auto& tj : state.terms)
      for (const auto& tk : state.terms)
        s += (std::conj(tj.coefficient) * tk.coefficient).real() *
             gaussian_overlap(state.pointer, tj.shift, tk.shift);
    return s;
  }();
  if (p < -1e-10 || p > 1.0 + 1e-10)
    throw std::logic_error("conditional state probability outside [0, 1]");
  return state;
}

/// <q|m_f> at a pointer coordinate in the state's readout basis.
inline Complex conditional_amplitude(const ConditionalPointerState& s,
                                     double q) {
  Complex amp{0.0, 0.0};
  for (const auto& t : s.terms) {
    if (s.basis == Readout::position)
      amp += t.coefficient * amplitude_position(s.pointer, q - t.shift);
    else
      amp += t.coefficient * amplitude_momentum(s.pointer, q) *
             std::polar(1.0, -t.shift * q);
  }
  return amp;
}

/// Joint (unnormalised) detection density |<q|m_f>|^2.
inline double conditional_density(const ConditionalPointerState& s, double q) {
  return std::norm(conditional_amplitude(s, q));
}

/// Total post-selection probability, basis independent:
/// sum_jk conj(c_j) c_k Ovl(shift_j, shift_k).
inline double postselection_probability(const ConditionalPointerState& s) {
  double p = 0.0;
  for (const auto& tj : s.terms)
    for (const auto& tk : s.terms)
      p += (std::conj(tj.coefficient) * tk.coefficient).real() *
           gaussian_overlap(s.pointer, tj.shift, tk.shift);
  return std::max(p, 0.0);
}

/// Mean of the normalised conditional position density, from the analytic
/// pairwise moments of shifted Gaussians.
inline double conditional_mean_position(const ConditionalPointerState& s) {
  if (s.basis != Readout::position)
    throw std::logic_error("conditional_mean_position needs a position-basis state");
  const double p = postselection_probability(s);
  if (p <= 1e-300)
    throw ZeroPostSelection("post-selection probability is zero");
  double num = 0.0;
  for (const auto& tj : s.terms)
    for (const auto& tk : s.terms)
      num += (std::conj(tj.coefficient) * tk.coefficient).real() *
             (s.pointer.centre() + 0.5 * (tj.shift + tk.shift)) *
             gaussian_overlap(s.pointer, tj.shift, tk.shift);
  return num / p;
}

/// Mean of the normalised conditional momentum density. The first moment of
/// |phi~(p)|^2 e^{i(a-b)p} is i(a-b)/(4 sigma^2) Ovl(a, b), making the sum
/// real by hermitian symmetry.
inline double conditional_mean_momentum(const ConditionalPointerState& s) {
  if (s.basis != Readout::momentum)
    throw std::logic_error("conditional_mean_momentum needs a momentum-basis state");
  const double p = postselection_probability(s);
  if (p <= 1e-300)
    throw ZeroPostSelection("post-selection probability is zero");
  const double s2 = s.pointer.sigma() * s.pointer.sigma();
  double num = 0.0;
  for (const auto& tj : s.terms)
    for (const auto& tk : s.terms) {
      const Complex cc = std::conj(tj.coefficient) * tk.coefficient;
      const double delta = tj.shift - tk.shift;
      num += (cc * Complex{0.0, delta / (4.0 * s2)}).real() *
             gaussian_overlap(s.pointer, tj.shift, tk.shift);
    }
  return num / p;
}

}  // namespace cheshire
