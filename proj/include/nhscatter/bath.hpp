// bath.hpp — single-band non-Hermitian bath models: dispersion h_k, the
// symbol h(y) and its roots in the complex plane, spectral winding numbers
// and self-intersection detection.

#pragma once

#include <vector>

#include "nhscatter/types.hpp"

namespace nhscatter {

// Hopping coefficients h_n over the range n = -p..q. The leftmost/rightmost
// declared hoppings must be nonzero so that (p, q) are tight.
class BathSpec {
 public:
  // hoppings[i] holds h_n for n = i - p; size must be p + q + 1.
  BathSpec(int p, int q, std::vector<Complex> hoppings);

  int left_range() const { return p_; }
  int right_range() const { return q_; }
  Complex hopping(int n) const { return hoppings_[n + p_]; }
  const std::vector<Complex>& hoppings() const { return hoppings_; }
  bool unidirectional() const { return p_ == 0 || q_ == 0; }
  // max |h_n|, the natural energy scale of the bath
  double hopping_scale() const { return scale_; }

 private:
  int p_;
  int q_;
  std::vector<Complex> hoppings_;
  double scale_;
};

// Hatano-Nelson: h_{-1} = -(u - kappa/2), h_{+1} = -(u + kappa/2).
BathSpec hn_bath(double u, double kappa);

// Unidirectional next-to-nearest-neighbor: h_1 = -kappa, h_2 = -kappa'.
BathSpec nnn_bath(double kappa, double kappap);

// Self-intersection momentum arccos(-kappa/(2 kappa')) of the NNN dispersion.
double nnn_k_si(double kappa, double kappap);

// h_k = sum_n h_n e^{-ink}; k reduced mod 2pi before evaluation.
Complex dispersion(const BathSpec& bath, double k);
Complex dispersion(const BathSpec& bath, Complex k);

// d^order h_k / dk^order for order 1 or 2
Complex dispersion_derivative(const BathSpec& bath, double k, int order);
Complex dispersion_derivative(const BathSpec& bath, Complex k, int order);

// Laurent symbol h(y) = sum_n h_n y^{-n} (h_k = h(e^{ik})) and dh/dy.
Complex symbol(const BathSpec& bath, Complex y);
Complex symbol_derivative(const BathSpec& bath, Complex y);

struct SymbolRoot {
  Complex y;
  int multiplicity;
  bool on_circle;  // | |y| - 1 | <= unit-circle tolerance
};

struct SymbolRoots {
  Complex energy;
  std::vector<SymbolRoot> roots;  // sorted by |y| ascending, ties by arg
  Complex leading;                // leading coefficient of y^q (E - h(y))

  int total_multiplicity() const {
    int m = 0;
    for (const auto& r : roots) m += r.multiplicity;
    return m;
  }
};

// Tolerances used by the root machinery.
inline constexpr double kUnitCircleTol = 1e-8;   // on-circle classification
inline constexpr double kRootMergeTol = 1e-7;    // relative multiplicity merge

// All p+q roots (with multiplicity) of y^q (E - h(y)).
SymbolRoots symbol_roots(const BathSpec& bath, Complex E);

// Distance from z to the band curve {h_k}, refined around the closest sample.
double band_distance(const BathSpec& bath, Complex z, int samples = 4096);

// Spectral winding index ind(h_k - z) via root counting: (# roots of
// E = h(y) strictly inside the unit circle) - q.
int winding_number(const BathSpec& bath, Complex z);

// Same index from the discretized argument-principle integral; cross-check.
int winding_number_quadrature(const BathSpec& bath, Complex z, int samples = 4096);

struct SelfIntersection {
  double k1;
  double k2;       // k1 < k2, both in (-pi, pi]
  Complex energy;  // h_{k1} = h_{k2}
};

// Pairs of distinct real momenta with equal dispersion, located by a coarse
// grid scan refined with Newton iteration. Cusps (k1 == k2) are not pairs.
std::vector<SelfIntersection> self_intersections(const BathSpec& bath, int grid = 256);

}  // namespace nhscatter
