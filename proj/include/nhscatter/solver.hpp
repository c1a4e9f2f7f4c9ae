// solver.hpp — solves the secular equation E - Delta - Sigma^{(L)}(E) = 0 for
// finite-size scattering momenta, locates all bound states as poles of the
// branch-resolved emitter Green's functions, and handles the fine-tuned
// two-root secular equations (self-intersections, second-order poles).

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "nhscatter/bath.hpp"
#include "nhscatter/selfenergy.hpp"
#include "nhscatter/types.hpp"

namespace nhscatter {

struct EmitterParams {
  double J;      // coupling strength; solver operations require J != 0
  double Delta;  // detuning
};

inline void require_coupling(const EmitterParams& p) {
  if (p.J == 0.0) throw Error(ErrorCode::ConfigError, "coupling strength J must be nonzero");
}

// G_e(z) = 1 / (z - Delta - Sigma(z)). Side selects the x >= 0 / x < 0 value
// of the self-energy at x = 0 for unidirectional baths.
Complex emitter_green(const BathSpec& bath, const EmitterParams& params, Complex z,
                      std::optional<Branch> branch = std::nullopt, Side side = Side::Auto);

// Branch-resolved continuation along E = h(e^{ik}); analytic in complex k.
Complex emitter_green_continued(const BathSpec& bath, const EmitterParams& params,
                                Complex k_tilde, Branch branch, Side side = Side::Auto);

// Leading order of Im k~ for the scattering state perturbed from real k:
// (1/L) log | G_e^>(h_k) / G_e^<(h_k) |.
double imk_leading(const BathSpec& bath, const EmitterParams& params, long L, double k);

struct ScatteringMomentum {
  double k_base = 0.0;   // unperturbed momentum 2 pi m / L (or target)
  Complex k_tilde{0.0, 0.0};
  Complex E{0.0, 0.0};   // h_{k~}
  long L = 0;
  Complex residual{0.0, 0.0};  // secular residual at the solution
  Branch branch_used = Branch::Less;
};

// Newton solve of the exact finite-size secular equation on k~ with E = h_{k~},
// initialized at 2 pi m / L + i imk_leading.
ScatteringMomentum scattering_momentum(const BathSpec& bath, const EmitterParams& params, long L,
                                       long m);

// Same solve through the single-pole approximations Eq.-(ex)-style on a chosen
// branch (test hook for the branch equivalence of the secular equation).
ScatteringMomentum scattering_momentum_approx(const BathSpec& bath, const EmitterParams& params,
                                              long L, long m, Branch branch);

// Exact secular residual evaluated through the independent direct-sum
// self-energy.
Complex secular_residual_direct(const BathSpec& bath, const EmitterParams& params, long L,
                                Complex k_tilde);

enum class BoundKind { Conventional, Hidden };

struct BoundState {
  Complex E_b{0.0, 0.0};
  Complex k_tilde{0.0, 0.0};        // |Im k~| = O(1)
  std::vector<Branch> pole_branches; // branch continuations with this pole
  int region_winding = 0;
  BoundKind kind = BoundKind::Conventional;
};

struct BoundStateOptions {
  int grid_re = 64;
  int grid_im = 64;
  double im_max = 3.0;  // localization lengths below lattice scale are unphysical
};

// Poles of the branch-resolved emitter Green's functions with E_b off the band
// curve, validated against the thermodynamic self-energy with the actual root
// classification, deduplicated and classified by the winding number of the
// region containing E_b.
std::vector<BoundState> bound_states(const BathSpec& bath, const EmitterParams& params,
                                     const BoundStateOptions& opt = {});

struct DegenerateTarget {
  enum class Type { SelfIntersectionPoint, SecondOrderPole };
  Type type;
  // Self-intersection: the two momenta and shared energy from bath scanning.
  SelfIntersection si{0.0, 0.0, Complex(0.0, 0.0)};
  // Second-order pole: the momentum with vanishing h'_k and the mode index m.
  double k_r = 0.0;
  int m = 1;

  static DegenerateTarget self_intersection(const SelfIntersection& s) {
    DegenerateTarget t;
    t.type = Type::SelfIntersectionPoint;
    t.si = s;
    return t;
  }
  static DegenerateTarget second_order(double k_r, int m) {
    DegenerateTarget t;
    t.type = Type::SecondOrderPole;
    t.k_r = k_r;
    t.m = m;
    return t;
  }
};

// Solves the two-root secular equation for the fine-tuned pair (k~_alpha,
// k~_gamma); returns both members sharing one energy.
std::vector<ScatteringMomentum> degenerate_momenta(const BathSpec& bath,
                                                   const EmitterParams& params, long L,
                                                   const DegenerateTarget& target);

// Momenta of real k with |h'_k| below tol * hopping scale (second-order-pole
// candidates), located by grid scan plus Newton on h'.
std::vector<double> vanishing_velocity_points(const BathSpec& bath, double tol = 1e-6);

}  // namespace nhscatter
