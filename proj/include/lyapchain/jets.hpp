#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"

namespace lyapchain {

/// Truncated power series c_0 + c_1 t + ... + c_K t^K.
///
/// Every jet also carries a majorant series: mags()[k] bounds the sum of absolute values of the
/// terms that produced coeffs()[k]. It is the natural scale against which a computed coefficient is
/// declared zero.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order) : c_(order + 1, 0.0), m_(order + 1, 0.0) {}

  static Jet constant(double value, int order);
  /// value + t
  static Jet variable(double value, int order);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int k) const { return c_[k]; }
  double mag(int k) const { return m_[k]; }
  std::span<const double> coeffs() const { return c_; }
  std::span<const double> mags() const { return m_; }
  void set(int k, double value, double mag) {
    c_[k] = value;
    m_[k] = mag;
  }

  /// k-th time derivative at t = 0, i.e. k! c_k.
  double derivative(int k) const;

  /// Jet of d/dt of this series (order drops by one).
  Jet differentiated() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet operator-() const;

  bool finite() const;

 private:
  std::vector<double> c_;
  std::vector<double> m_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet pow(const Jet& a, int n);
/// (sin u, cos u) of a jet argument.
std::pair<Jet, Jet> sincos(const Jet& u);

/// Basis functions {u^m, cos(k u), sin(k u)} of a potential evaluated along a jet argument; grown
/// one coefficient at a time so that ODE propagation stays O(K^2).
class BasisJet {
 public:
  BasisJet() = default;
  BasisJet(int degree, int harmonics, int order);

  /// Computes coefficient n of every basis function; u's coefficients 0..n must be final.
  void extend(const Jet& u, int n);

  /// Coefficient n of pot(u(t)) for a potential whose degree/harmonics fit this basis.
  void combine(const Potential& pot, int n, double& value, double& mag) const;
  Jet compose(const Potential& pot) const;

 private:
  int order_ = 0;
  std::vector<Jet> powers_;  ///< u^1 .. u^deg
  std::vector<Jet> sin_;
  std::vector<Jet> cos_;
};

/// Taylor jets of every coordinate along the flow (or along any seeded curve) plus the composed
/// potential bases of every bond and pinning site.
class StateJet {
 public:
  /// Taylor expansion of the flow through s to order K.
  static StateJet propagate(const ChainSpec& spec, const State& s, int order);

  /// Arbitrary coordinate jets (e.g. a straight line in momentum space for directional
  /// derivatives). No ODE relation is imposed.
  static StateJet from_coordinates(const ChainSpec& spec, std::vector<Jet> p, std::vector<Jet> q);

  const ChainSpec& spec() const { return spec_; }
  int order() const { return order_; }
  const Jet& p(int j) const { return p_[j]; }
  const Jet& q(int j) const { return q_[j]; }

  /// V_j^{(deriv)}(q_j - q_{j+1}) along the curve; `bond` is zero-based.
  Jet interaction(int bond, int deriv) const;
  /// U_j^{(deriv)}(q_j).
  Jet pinning(int site, int deriv) const;

  /// True if any coefficient left the float range.
  bool overflow() const;

 private:
  StateJet(const ChainSpec& spec, int order);
  void build_bases();

  ChainSpec spec_;
  int order_ = 0;
  std::vector<Jet> p_, q_;
  std::vector<std::vector<Potential>> interaction_derivs_, pinning_derivs_;
  std::vector<BasisJet> interaction_basis_, pinning_basis_;
};

inline StateJet propagate(const ChainSpec& spec, const State& s, int order) {
  return StateJet::propagate(spec, s, order);
}

/// Observable g(p, q), evaluated as a jet along a StateJet.
struct Observable {
  std::string name;
  std::function<Jet(const StateJet&)> eval;

  static Observable energy();
  static Observable momentum(int j);          ///< p_{j+1}, zero-based
  static Observable coordinate(int j);        ///< q_{j+1}, zero-based
  static Observable momentum_squared(int j);  ///< p_{j+1}^2
  static Observable xi(int bond);             ///< xi_bond, bond in 1..N-1 (paper indexing)
  static Observable lie_xi(int bond);         ///< closed form -(p_j - p_{j+1}) V_j''
  static Observable product(const Observable& a, const Observable& b);
};

Jet energy_jet(const StateJet& sj);
Jet xi_jet(const StateJet& sj, int bond);
Jet lie_xi_jet(const StateJet& sj, int bond);

struct LieResult {
  std::vector<double> values;  ///< L_F^k g(s), k = 0..kmax
  std::vector<double> scales;  ///< k! times the majorant coefficient
  bool overflow = false;
};

LieResult lie_derivatives(const ChainSpec& spec, const State& s, const Observable& g, int kmax);

/// Lie derivatives of H from the dissipation identity: L H = -sum_damped p_j^2 holds exactly, with
/// no cancellation between kinetic and potential parts.
LieResult energy_lie_derivatives(const ChainSpec& spec, const State& s, int kmax);

enum class ZeroScale {
  Majorant,   ///< |L^k g| > tol * (majorant of the k-th coefficient) * k!
  StateNorm,  ///< |L^k g| > tol * (1 + |s|^k)
};

struct OrderOptions {
  int kmin = 1;  ///< first derivative order inspected (1 for H, 0 for p_j)
  double zero_tol = 1e-9;
  ZeroScale scale = ZeroScale::Majorant;
};

struct OrderResult {
  bool resolved = false;
  int order = -1;  ///< valid when resolved; otherwise the inspected kmax
  int kmax = 0;
  double value = 0.0;      ///< L^order g when resolved
  double threshold = 0.0;  ///< the zero threshold at that order
  bool overflow = false;
  std::string scale_note;
};

OrderResult order_of(const ChainSpec& spec, const State& s, const Observable& g, int kmax,
                     const OrderOptions& options = {});

/// Same as order_of but with precomputed Lie derivatives.
OrderResult order_from(const LieResult& lie, double state_norm, int kmax, const OrderOptions& options);

/// Taylor jets of a generic autonomous ODE x' = f(x) whose right-hand side is expressed in jet
/// arithmetic. Coefficients are rebuilt order by order, O(K^3); meant for small test systems.
std::vector<Jet> propagate_ode(std::span<const double> x0, int order,
                               const std::function<std::vector<Jet>(std::span<const Jet>)>& rhs);

double factorial(int k);
double binomial(int n, int k);

}  // namespace lyapchain
