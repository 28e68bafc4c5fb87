#pragma once

// Analytic Gaussian beam profile used as the measurement pointer. The
// position-basis profile is real; the momentum-basis amplitude follows the
// unitary Fourier convention with hbar = 1, picking up the phase e^{-i k x0}
// for an off-centre beam.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace cheshire {

/// Which pointer coordinate a readout projects onto.
enum class Readout { position, momentum };

inline const char* to_string(Readout r) {
  return r == Readout::position ? "position" : "momentum";
}

/// Transverse beam profile of width sigma centred at x0. The position
/// amplitude (1/2 pi sigma^2)^{1/4} exp(-(x-x0)^2 / 4 sigma^2) integrates to
/// one in probability.
class GaussianPointer {
 public:
  explicit GaussianPointer(double sigma, double x0 = 0.0)
      : sigma_(sigma), x0_(x0) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("pointer width must be positive");
    if (!std::isfinite(x0))
      throw std::invalid_argument("pointer centre must be finite");
  }

  double sigma() const { return sigma_; }
  double centre() const { return x0_; }

 private:
  double sigma_;
  double x0_;
};

inline double amplitude_position(const GaussianPointer& p, double x) {
  const double s2 = p.sigma() * p.sigma();
  const double d = x - p.centre();
  return std::pow(2.0 * std::numbers::pi * s2, -0.25) *
         std::exp(-d * d / (4.0 * s2));
}

inline std::complex<double> amplitude_momentum(const GaussianPointer& p,
                                               double k) {
  const double s2 = p.sigma() * p.sigma();
  const double mag = std::pow(2.0 * s2 / std::numbers::pi, 0.25) *
                     std::exp(-s2 * k * k);
  return std::polar(mag, -k * p.centre());
}

}  // namespace cheshire
