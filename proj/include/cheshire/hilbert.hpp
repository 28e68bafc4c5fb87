#pragma once

// Exact finite-dimensional complex linear algebra over labelled tensor-product
// bases (interferometer path x polarisation). Everything else in the library
// builds on the types here. Values are treated as immutable once built (the
// flag setters are construction-time builders), so they are safe to share
// across threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace cheshire {

using Complex = std::complex<double>;

/// Numerical tolerance for verifying operator/state flags at construction.
inline constexpr double kFlagTolerance = 1e-12;
/// Tolerance for eigendecomposition round-trip identities.
inline constexpr double kDecompositionTolerance = 1e-10;
/// Eigenvalues closer than this are merged into one degenerate projector.
inline constexpr double kEigenvalueMergeTolerance = 1e-8;

enum class Path : int { A = 0, B = 1 };
enum class Pol : int { H = 0, V = 1 };

/// The two kinds of 2-dimensional factor spaces a basis can be built from.
enum class Axis : int { path = 0, polarisation = 1 };

inline const char* to_string(Path p) { return p == Path::A ? "A" : "B"; }
inline const char* to_string(Pol p) { return p == Pol::H ? "H" : "V"; }
inline const char* to_string(Axis a) {
  return a == Axis::path ? "path" : "polarisation";
}

struct BasisMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FlagViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Composite label in the fixed enumeration order
/// (A,H), (A,V), (B,H), (B,V).
struct BasisLabel {
  Path path;
  Pol pol;

  friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
};

/// An ordered list of tensor factors. Factors are 2-dimensional and may not
/// repeat; the composite path (x) polarisation basis is row-major with the
/// path factor slowest, which fixes the global enumeration order
/// (A,H), (A,V), (B,H), (B,V).
class Basis {
 public:
  explicit Basis(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw BasisMismatch("basis needs at least one factor");
    for (std::size_t i = 0; i < axes_.size(); ++i)
      for (std::size_t j = i + 1; j < axes_.size(); ++j)
        if (axes_[i] == axes_[j])
          throw BasisMismatch(std::string("duplicate basis factor: ") +
                              to_string(axes_[i]));
  }

  static Basis path() { return Basis({Axis::path}); }
  static Basis polarisation() { return Basis({Axis::polarisation}); }
  static Basis path_polarisation() {
    return Basis({Axis::path, Axis::polarisation});
  }

  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t dim() const { return std::size_t{1} << axes_.size(); }

  /// True for the canonical 4-dimensional path (x) polarisation basis.
  bool is_composite() const {
    return axes_.size() == 2 && axes_[0] == Axis::path &&
           axes_[1] == Axis::polarisation;
  }

  static constexpr std::array<BasisLabel, 4> composite_labels() {
    return {BasisLabel{Path::A, Pol::H}, BasisLabel{Path::A, Pol::V},
            BasisLabel{Path::B, Pol::H}, BasisLabel{Path::B, Pol::V}};
  }

  /// Flat index of a composite label: path is the slow factor.
  static std::size_t index_of(Path p, Pol q) {
    return static_cast<std::size_t>(p) * 2 + static_cast<std::size_t>(q);
  }

  friend bool operator==(const Basis& a, const Basis& b) {
    return a.axes_ == b.axes_;
  }

 private:
  std::vector<Axis> axes_;
};

/// Complex amplitude vector over a labelled basis. When constructed with
/// `normalised = true` the norm is verified to be 1 within kFlagTolerance;
/// all pre/post-selection constructors in the library set the flag.
class StateVector {
 public:
  StateVector(Basis basis, std::vector<Complex> amplitudes,
              bool normalised = false)
      : basis_(std::move(basis)),
        amplitudes_(std::move(amplitudes)),
        normalised_(normalised) {
    if (amplitudes_.size() != basis_.dim())
      throw BasisMismatch("amplitude count does not match basis dimension");
    for (const Complex& a : amplitudes_)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
        throw FlagViolation("state amplitude is not finite");
    if (normalised_ && std::abs(norm() - 1.0) > kFlagTolerance)
      throw FlagViolation("state flagged normalised but norm != 1");
  }

  static StateVector basis_state(const Basis& basis, std::size_t index) {
    std::vector<Complex> amps(basis.dim(), Complex{0.0, 0.0});
    amps.at(index) = Complex{1.0, 0.0};
    return StateVector(basis, std::move(amps), true);
  }

  const Basis& basis() const { return basis_; }
  std::size_t dim() const { return amplitudes_.size(); }
  bool normalised() const { return normalised_; }
  const std::vector<Complex>& amplitudes() const { return amplitudes_; }
  const Complex& amplitude(std::size_t i) const { return amplitudes_.at(i); }
  /// Composite-basis accessor.
  const Complex& amplitude(Path p, Pol q) const {
    if (!basis_.is_composite())
      throw BasisMismatch("labelled access needs the composite basis");
    return amplitudes_[Basis::index_of(p, q)];
  }

  double norm() const {
    double s = 0.0;
    for (const Complex& a : amplitudes_) s += std::norm(a);
    return std::sqrt(s);
  }

 private:
  Basis basis_;
  std::vector<Complex> amplitudes_;
  bool normalised_;
};

/// <bra|ket>, conjugating the bra.
inline Complex inner(const StateVector& bra, const StateVector& ket) {
  if (!(bra.basis() == ket.basis()))
    throw BasisMismatch("inner product needs a shared basis");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < bra.dim(); ++i)
    s += std::conj(bra.amplitude(i)) * ket.amplitude(i);
  return s;
}

/// Square complex matrix over a labelled basis, with optional hermitian /
/// unitary / projector flags. Each flag is verified numerically when set and
/// setting an unverifiable flag throws.
class Operator {
 public:
  Operator(Basis basis, std::vector<Complex> row_major)
      : basis_(std::move(basis)), m_(std::move(row_major)) {
    if (m_.size() != basis_.dim() * basis_.dim())
      throw BasisMismatch("matrix size does not match basis dimension");
  }

  static Operator identity(const Basis& basis) {
    const std::size_t n = basis.dim();
    std::vector<Complex> m(n * n, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
    Operator op(basis, std::move(m));
    op.hermitian_ = op.unitary_ = op.projector_ = true;
    return op;
  }

  /// |ket><bra|
  static Operator outer(const StateVector& ket, const StateVector& bra) {
    if (!(ket.basis() == bra.basis()))
      throw BasisMismatch("outer product needs a shared basis");
    const std::size_t n = ket.dim();
    std::vector<Complex> m(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        m[r * n + c] = ket.amplitude(r) * std::conj(bra.amplitude(c));
    return Operator(ket.basis(), std::move(m));
  }

  const Basis& basis() const { return basis_; }
  std::size_t dim() const { return basis_.dim(); }
  const std::vector<Complex>& matrix() const { return m_; }
  const Complex& entry(std::size_t r, std::size_t c) const {
    return m_.at(r * dim() + c);
  }

  bool is_hermitian() const { return hermitian_; }
  bool is_unitary() const { return unitary_; }
  bool is_projector() const { return projector_; }

  Operator& set_hermitian() {
    if (max_deviation_hermitian() > kFlagTolerance)
      throw FlagViolation("hermitian flag rejected: max|M - M^dag| = " +
                          std::to_string(max_deviation_hermitian()));
    hermitian_ = true;
    return *this;
  }

  Operator& set_unitary() {
    if (max_deviation_unitary() > kFlagTolerance)
      throw FlagViolation("unitary flag rejected: max|M^dag M - I| = " +
                          std::to_string(max_deviation_unitary()));
    unitary_ = true;
    return *this;
  }

  Operator& set_projector() {
    set_hermitian();
    if (max_deviation_projector() > kFlagTolerance)
      throw FlagViolation("projector flag rejected: max|M^2 - M| = " +
                          std::to_string(max_deviation_projector()));
    projector_ = true;
    return *this;
  }

  StateVector apply(const StateVector& v) const {
    if (!(basis_ == v.basis()))
      throw BasisMismatch("operator and state bases differ");
    const std::size_t n = dim();
    std::vector<Complex> out(n, Complex{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        out[r] += m_[r * n + c] * v.amplitude(c);
    return StateVector(basis_, std::move(out), false);
  }

  Operator adjoint() const {
    const std::size_t n = dim();
    std::vector<Complex> m(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        m[r * n + c] = std::conj(m_[c * n + r]);
    return Operator(basis_, std::move(m));
  }

  friend Operator operator*(const Operator& a, const Operator& b) {
    if (!(a.basis_ == b.basis_))
      throw BasisMismatch("operator product needs a shared basis");
    const std::size_t n = a.dim();
    std::vector<Complex> m(n * n, Complex{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k) {
        const Complex arc = a.m_[r * n + k];
        if (arc == Complex{0.0, 0.0}) continue;
        for (std::size_t c = 0; c < n; ++c) m[r * n + c] += arc * b.m_[k * n + c];
      }
    return Operator(a.basis_, std::move(m));
  }

  friend Operator operator+(const Operator& a, const Operator& b) {
    if (!(a.basis_ == b.basis_))
      throw BasisMismatch("operator sum needs a shared basis");
    std::vector<Complex> m(a.m_);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += b.m_[i];
    return Operator(a.basis_, std::move(m));
  }

  friend Operator operator-(const Operator& a, const Operator& b) {
    if (!(a.basis_ == b.basis_))
      throw BasisMismatch("operator difference needs a shared basis");
    std::vector<Complex> m(a.m_);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] -= b.m_[i];
    return Operator(a.basis_, std::move(m));
  }

  friend Operator operator*(Complex s, const Operator& a) {
    std::vector<Complex> m(a.m_);
    for (Complex& x : m) x *= s;
    return Operator(a.basis_, std::move(m));
  }

  double max_deviation_hermitian() const {
    const std::size_t n = dim();
    double d = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        d = std::max(d, std::abs(m_[r * n + c] - std::conj(m_[c * n + r])));
    return d;
  }

  double max_deviation_unitary() const {
    const Operator p = adjoint() * (*this);
    const std::size_t n = dim();
    double d = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const Complex want = r == c ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
        d = std::max(d, std::abs(p.m_[r * n + c] - want));
      }
    return d;
  }

  double max_deviation_projector() const {
    const Operator p = (*this) * (*this);
    double d = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i)
      d = std::max(d, std::abs(p.m_[i] - m_[i]));
    return d;
  }

 private:
  Basis basis_;
  std::vector<Complex> m_;
  bool hermitian_ = false;
  bool unitary_ = false;
  bool projector_ = false;
};

/// <bra|O|ket>
inline Complex sandwich(const StateVector& bra, const Operator& op,
                        const StateVector& ket) {
  return inner(bra, op.apply(ket));
}

namespace detail {

inline Basis joined_basis(const Basis& a, const Basis& b) {
  std::vector<Axis> axes = a.axes();
  axes.insert(axes.end(), b.axes().begin(), b.axes().end());
  return Basis(std::move(axes));  // Basis ctor rejects duplicate factors
}

}  // namespace detail

/// Kronecker product of states; the left factor is the slower index.
inline StateVector tensor(const StateVector& a, const StateVector& b) {
  Basis basis = detail::joined_basis(a.basis(), b.basis());
  std::vector<Complex> amps(a.dim() * b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j)
      amps[i * b.dim() + j] = a.amplitude(i) * b.amplitude(j);
  const bool normalised = a.normalised() && b.normalised();
  return StateVector(std::move(basis), std::move(amps), normalised);
}

/// Kronecker product of operators in the same factor order as states.
inline Operator tensor(const Operator& a, const Operator& b) {
  Basis basis = detail::joined_basis(a.basis(), b.basis());
  const std::size_t na = a.dim(), nb = b.dim(), n = na * nb;
  std::vector<Complex> m(n * n);
  for (std::size_t ra = 0; ra < na; ++ra)
    for (std::size_t rb = 0; rb < nb; ++rb)
      for (std::size_t ca = 0; ca < na; ++ca)
        for (std::size_t cb = 0; cb < nb; ++cb)
          m[(ra * nb + rb) * n + (ca * nb + cb)] =
              a.entry(ra, ca) * b.entry(rb, cb);
  return Operator(std::move(basis), std::move(m));
}

/// Spectral decomposition O = sum_k lambda_k P_k with distinct ascending
/// eigenvalues; eigenvalues within kEigenvalueMergeTolerance are merged into
/// one (degenerate) projector.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  std::vector<Operator> projectors;
};

inline EigenDecomposition eigendecompose(const Operator& op) {
  if (!op.is_hermitian())
    throw FlagViolation("eigendecompose needs the hermitian flag set");
  const std::size_t n = op.dim();

  Eigen::MatrixXcd m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          op.entry(r, c);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian eigensolver failed to converge");

  EigenDecomposition out;
  std::size_t k = 0;
  while (k < n) {
    const double lambda = solver.eigenvalues()(static_cast<Eigen::Index>(k));
    std::size_t end = k + 1;
    while (end < n &&
           solver.eigenvalues()(static_cast<Eigen::Index>(end)) - lambda <
               kEigenvalueMergeTolerance)
      ++end;

    std::vector<Complex> proj(n * n, Complex{0.0, 0.0});
    double lambda_mean = 0.0;
    for (std::size_t v = k; v < end; ++v) {
      lambda_mean += solver.eigenvalues()(static_cast<Eigen::Index>(v));
      const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(v));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          proj[r * n + c] += col(static_cast<Eigen::Index>(r)) *
                             std::conj(col(static_cast<Eigen::Index>(c)));
    }
    lambda_mean /= static_cast<double>(end - k);

    Operator projector(op.basis(), std::move(proj));
    projector.set_projector();
    out.eigenvalues.push_back(lambda_mean);
    out.projectors.push_back(std::move(projector));
    k = end;
  }
  return out;
}

}  // namespace cheshire
