#pragma once

#include <string>
#include <vector>

namespace lyapchain {

enum class Domain { Torus, Line };

/// Closed-form potential: a real polynomial plus a finite Fourier series,
///
///   V(x) = sum_m poly[m] x^m + sum_k (cos_coeffs[k-1] cos(k x) + sin_coeffs[k-1] sin(k x)) + shift.
///
/// A potential with only trigonometric terms (and a constant) is a TrigPoly and may live on the
/// torus; anything with a non-constant polynomial part lives on the line. Derivatives of every
/// order are exact.
class Potential {
 public:
  enum class Kind { TrigPoly, Polynomial, Mixed };

  Potential() = default;

  static Potential trig(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs = {});
  static Potential polynomial(std::vector<double> coeffs);
  /// Polynomial part plus Fourier part on the line.
  static Potential mixed(std::vector<double> poly, std::vector<double> cos_coeffs,
                         std::vector<double> sin_coeffs);

  Kind kind() const;
  Domain domain() const { return domain_; }
  double shift() const { return shift_; }
  Potential shifted(double delta) const;

  /// Exact `order`-th derivative at x. The shift only enters order 0.
  double eval(double x, int order = 0) const;

  /// Symbolic derivative; the result carries no shift.
  Potential derivative(int order = 1) const;

  const std::vector<double>& poly() const { return poly_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  int degree() const;  ///< polynomial degree, -1 for the zero polynomial
  int harmonics() const { return static_cast<int>(cos_.size()); }

  /// sup over x of |sum of trigonometric terms| of the given derivative order (triangle bound).
  double trig_bound(int order) const;

  std::string describe() const;

 private:
  void normalize();

  std::vector<double> poly_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  double shift_ = 0.0;
  Domain domain_ = Domain::Line;
};

/// eval_deriv operation: k-th derivative of the potential at x.
inline double eval_deriv(const Potential& pot, double x, int order) { return pot.eval(x, order); }

struct RotorValidationConfig {
  int grid_points = 4096;
  int refine_rounds = 8;         ///< each round densifies the bracket around the minimum x4
  double nondegeneracy_floor = 1e-8;
  double min_value = 1.0;        ///< target lower bound V >= 1 after shifting
};

struct ValidationReport {
  bool pass = false;
  std::string message;
  double min_nondegeneracy = 0.0;  ///< min of (V')^2 + (V'')^2
  double argmin_nondegeneracy = 0.0;
  double min_value = 0.0;          ///< min of V before shifting
  double argmin_value = 0.0;
  double shift = 0.0;              ///< additive constant applied so that V >= 1
};

/// Grid certificate of (V')^2 + (V'')^2 > floor and the shift making V >= 1.
ValidationReport validate_rotor_potential(const Potential& pot, const RotorValidationConfig& config = {});

/// Applies the shift recorded by validate_rotor_potential.
Potential normalize_rotor_potential(const Potential& pot, const RotorValidationConfig& config = {});

/// Generic grid minimisation on [lo, hi] followed by x4 bracket refinement.
struct GridMin {
  double x;
  double value;
};
template <class F>
GridMin grid_minimize(F&& f, double lo, double hi, int points, int refine_rounds);

}  // namespace lyapchain

#include "lyapchain/detail/grid_minimize.ipp"
