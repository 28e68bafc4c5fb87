#pragma once

// Weak values, first-order pointer-shift contracts, and detection-probability
// disturbance for arbitrary pre/post-selected pairs.
//
// A weak value <O>_w = <psi_f|O|psi_i> / <psi_f|psi_i> is a complex number.
// Its real part is what shifts the pointer mean in the position basis; the
// first-order change of the detection probability at pointer coordinate q is
//   P_eps/P - 1 = 2g (Re<O>_w Im<P>_w + Im<O>_w Re<P>_w),
// with <P>_w the pointer's momentum weak value at q.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cheshire/gaussian.hpp"
#include "cheshire/hilbert.hpp"

namespace cheshire {

/// Overlap magnitude below which a pre/post pair counts as orthogonal and the
/// weak value is treated as undefined.
inline constexpr double kOverlapEpsilon = 1e-12;

/// Post-selection overlap too small: the weak value diverges.
struct OrthogonalSelection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A pre-selected state together with the state a later projective
/// measurement is conditioned on. Both must be normalised over the same
/// basis; the overlap <psi_f|psi_i> is recorded at construction.
class PrePostPair {
 public:
  PrePostPair(StateVector pre, StateVector post)
      : pre_(std::move(pre)), post_(std::move(post)) {
    if (!(pre_.basis() == post_.basis()))
      throw BasisMismatch("pre and post states need the same basis");
    if (!pre_.normalised() || !post_.normalised())
      throw FlagViolation("pre and post states must be flagged normalised");
    overlap_ = inner(post_, pre_);
  }

  const StateVector& pre() const { return pre_; }
  const StateVector& post() const { return post_; }
  /// <psi_f|psi_i>
  Complex overlap() const { return overlap_; }

 private:
  StateVector pre_;
  StateVector post_;
  Complex overlap_;
};

/// Complex weak value; construction rejects non-finite components.
class WeakValue {
 public:
  explicit WeakValue(Complex value) : value_(value) {
    if (!std::isfinite(value_.real()) || !std::isfinite(value_.imag()))
      throw std::invalid_argument("weak value must be finite");
  }

  Complex value() const { return value_; }
  double real() const { return value_.real(); }
  double imag() const { return value_.imag(); }

 private:
  Complex value_;
};

/// Coupling strength and pointer-readout choice. The weak-measurement regime
/// wants the deflection g below a fraction of the beam width; exceeding it is
/// advisory (recorded), not an error.
struct CouplingConfig {
  double g = 0.0;
  Readout readout_basis = Readout::position;
  double readout_value = 0.0;
  bool weak_regime_warning = false;

  CouplingConfig(double coupling, Readout basis, double q)
      : g(coupling), readout_basis(basis), readout_value(q) {
    if (!(g >= 0.0) || !std::isfinite(g))
      throw std::invalid_argument("coupling must be non-negative");
  }

  /// Same, with the weak-regime check against a concrete pointer recorded.
  /// Default threshold: deflection at most sigma/5.
  static CouplingConfig attached(double coupling, Readout basis, double q,
                                 const GaussianPointer& pointer,
                                 double fraction = 0.2) {
    CouplingConfig cfg(coupling, basis, q);
    cfg.weak_regime_warning = coupling > fraction * pointer.sigma();
    return cfg;
  }
};

/// <psi_f|O|psi_i> / <psi_f|psi_i>. Throws OrthogonalSelection when the
/// overlap magnitude is at or below eps.
inline WeakValue weak_value(const Operator& op, const PrePostPair& pair,
                            double eps = kOverlapEpsilon) {
  const Complex ov = pair.overlap();
  if (std::abs(ov) <= eps)
    throw OrthogonalSelection("pre/post overlap below threshold: |<f|i>| = " +
                              std::to_string(std::abs(ov)));
  return WeakValue(sandwich(pair.post(), op, pair.pre()) / ov);
}

/// First-order conditional mean displacement of a position-basis pointer:
/// only the real part of the weak value translates the pointer.
inline double pointer_shift_first_order(const WeakValue& w,
                                        const CouplingConfig& cfg) {
  return cfg.g * w.real();
}

/// Detection probability density at a pointer coordinate with the coupling
/// switched off: |<psi_f|psi_i>|^2 |<q|m_i>|^2.
inline double detection_probability_no_interaction(const PrePostPair& pair,
                                                   Complex pointer_amp_at_q) {
  return std::norm(pair.overlap()) * std::norm(pointer_amp_at_q);
}

/// Momentum weak value of a Gaussian pointer at readout coordinate q.
/// Position basis: i (q - x0) / (2 sigma^2), purely imaginary. Momentum
/// basis: the readout value itself.
inline Complex pointer_momentum_weak_value(const GaussianPointer& pointer,
                                           Readout basis, double q) {
  if (basis == Readout::momentum) return Complex{q, 0.0};
  const double s2 = pointer.sigma() * pointer.sigma();
  return Complex{0.0, (q - pointer.centre()) / (2.0 * s2)};
}

/// First-order detection-probability disturbance P_eps/P - 1.
inline double disturbance_ratio_first_order(const WeakValue& ow, Complex pw,
                                            double g) {
  return 2.0 * g * (ow.real() * pw.imag() + ow.imag() * pw.real());
}

/// Exact detection probability density at the readout coordinate, with the
/// coupling evolution exp(-i g O P) resolved through the spectral
/// decomposition O = sum_k lambda_k P_k: each eigenvalue translates the
/// position profile by g lambda_k (position basis) or contributes the phase
/// e^{-i g lambda_k p} (momentum basis).
inline double exact_detection_probability(const Operator& op,
                                          const PrePostPair& pair,
                                          const GaussianPointer& pointer,
                                          const CouplingConfig& cfg) {
  if (!op.is_hermitian())
    throw FlagViolation("exact detection probability needs a hermitian operator");
  const EigenDecomposition decomp = eigendecompose(op);

  Complex amp{0.0, 0.0};
  const double q = cfg.readout_value;
  for (std::size_t k = 0; k < decomp.eigenvalues.size(); ++k) {
    const Complex c =
        sandwich(pair.post(), decomp.projectors[k], pair.pre());
    const double shift = cfg.g * decomp.eigenvalues[k];
    if (cfg.readout_basis == Readout::position) {
      amp += c * amplitude_position(pointer, q - shift);
    } else {
      amp += c * amplitude_momentum(pointer, q) *
             std::polar(1.0, -shift * q);
    }
  }
  return std::norm(amp);
}

}  // namespace cheshire
