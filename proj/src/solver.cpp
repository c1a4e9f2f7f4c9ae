#include "nhscatter/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nhscatter {

namespace {

double green_scale(const EmitterParams& p, Complex z) {
  return 1.0 + std::abs(z) + std::abs(p.Delta);
}

Complex green_from_sigma(const EmitterParams& params, Complex z, Complex sigma) {
  const Complex denom = z - params.Delta - sigma;
  if (std::abs(denom) < 1e-12 * green_scale(params, z))
    throw Error(ErrorCode::AtPole, "z is a bound-state energy, not an evaluation point");
  return 1.0 / denom;
}

}  // namespace

Complex emitter_green(const BathSpec& bath, const EmitterParams& params, Complex z,
                      std::optional<Branch> branch, Side side) {
  require_coupling(params);
  const Complex sigma = (side == Side::Auto)
                            ? sigma_thermo(bath, params.J, z, 0, branch).value
                            : sigma_thermo_line(bath, params.J, z, 0, side, branch);
  return green_from_sigma(params, z, sigma);
}

Complex emitter_green_continued(const BathSpec& bath, const EmitterParams& params,
                                Complex k_tilde, Branch branch, Side side) {
  require_coupling(params);
  const Complex sigma = sigma_thermo_continued(bath, params.J, k_tilde, 0, branch, side);
  return green_from_sigma(params, dispersion(bath, k_tilde), sigma);
}

double imk_leading(const BathSpec& bath, const EmitterParams& params, long L, double k) {
  require_coupling(params);
  const Complex gg = emitter_green_continued(bath, params, Complex(k, 0.0), Branch::Greater);
  const Complex gl = emitter_green_continued(bath, params, Complex(k, 0.0), Branch::Less);
  return std::log(std::abs(gg / gl)) / static_cast<double>(L);
}

namespace {

// Exact finite-size secular function of k~, through the residue-form
// self-energy (exact f factors, cluster-safe).
Complex secular_exact_k(const BathSpec& bath, const EmitterParams& params, long L,
                        Complex k_tilde) {
  const Complex E = dispersion(bath, k_tilde);
  return E - params.Delta - sigma_finite_residue(bath, params.J, L, E, 0).value;
}

// Single-pole approximate secular function on a chosen branch.
Complex secular_approx_k(const BathSpec& bath, const EmitterParams& params, long L,
                         Complex k_tilde, Branch branch) {
  const Complex E = dispersion(bath, k_tilde);
  const Complex hp = dispersion_derivative(bath, k_tilde, 1);
  const Complex sigma = sigma_thermo_continued(bath, params.J, k_tilde, 0, branch);
  const Complex phase = std::exp(kI * k_tilde * static_cast<double>(L));
  const Complex finite = (branch == Branch::Less)
                             ? params.J * params.J / (kI * hp * (1.0 - phase))
                             : params.J * params.J * phase / (kI * hp * (1.0 - phase));
  return E - params.Delta - sigma - finite;
}

struct NewtonResult {
  Complex root;
  Complex residual;
  bool converged;
  int iterations;
};

template <typename F>
NewtonResult newton_complex(F f, Complex x0, double tol, int max_iter) {
  Complex x = x0;
  Complex fx = f(x);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (std::abs(fx) <= tol) return {x, fx, true, it};
    const double h = 1e-7 * (1.0 + std::abs(x));
    const Complex df = (f(x + h) - fx) / h;
    if (std::abs(df) == 0.0) break;
    Complex step = fx / df;
    // Damped update.
    bool moved = false;
    for (int halve = 0; halve < 8; ++halve) {
      const Complex xn = x - step;
      const Complex fn = f(xn);
      if (std::abs(fn) < std::abs(fx)) {
        x = xn;
        fx = fn;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {x, fx, std::abs(fx) <= tol, it};
}

std::vector<double> fine_tuned_momenta(const BathSpec& bath) {
  std::vector<double> pts;
  for (const auto& si : self_intersections(bath)) {
    pts.push_back(si.k1);
    pts.push_back(si.k2);
  }
  for (double k : vanishing_velocity_points(bath)) pts.push_back(k);
  return pts;
}

double momentum_distance(double a, double b) {
  return std::abs(reduce_momentum(a - b));
}

}  // namespace

std::vector<double> vanishing_velocity_points(const BathSpec& bath, double tol) {
  const double scale = bath.hopping_scale();
  std::vector<double> pts;
  const int grid = 1024;
  for (int i = 0; i < grid; ++i) {
    const double k0 = -kPi + 2.0 * kPi * (i + 0.5) / grid;
    const double v0 = std::abs(dispersion_derivative(bath, k0, 1));
    const double vm = std::abs(dispersion_derivative(bath, k0 - 2.0 * kPi / grid, 1));
    const double vp = std::abs(dispersion_derivative(bath, k0 + 2.0 * kPi / grid, 1));
    if (v0 > vm || v0 > vp) continue;
    // Newton on Re/Im of h' along real k: minimize |h'|^2.
    double k = k0;
    for (int it = 0; it < 50; ++it) {
      const Complex d1 = dispersion_derivative(bath, k, 1);
      const Complex d2 = dispersion_derivative(bath, k, 2);
      const double g = 2.0 * (d1 * std::conj(d2)).real();
      const double curv = 2.0 * std::norm(d2);
      if (curv == 0.0) break;
      const double step = std::clamp(g / curv, -0.1, 0.1);
      k -= step;
      if (std::abs(step) < 1e-14) break;
    }
    if (std::abs(dispersion_derivative(bath, k, 1)) < tol * scale) {
      const double kr = reduce_momentum(k);
      bool dup = false;
      for (double e : pts)
        if (momentum_distance(e, kr) < 1e-6) dup = true;
      if (!dup) pts.push_back(kr);
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

ScatteringMomentum scattering_momentum(const BathSpec& bath, const EmitterParams& params, long L,
                                       long m) {
  require_coupling(params);
  if (m < 1 || m > L) throw Error(ErrorCode::ConfigError, "mode index m must be in 1..L");
  const double k = 2.0 * kPi * m / L;
  for (double kf : fine_tuned_momenta(bath)) {
    if (momentum_distance(k, kf) < 1e-3)
      throw Error(ErrorCode::FineTunedInput,
                  "k = 2 pi m / L is within 1e-3 of a fine-tuned point; use degenerate_momenta");
  }

  const Complex k0 = Complex(k, 0.0) + kI * imk_leading(bath, params, L, k);
  const double tol = 1e-10 * (1.0 + std::abs(dispersion(bath, k)) + std::abs(params.Delta));
  const NewtonResult nr = newton_complex(
      [&](Complex kt) { return secular_exact_k(bath, params, L, kt); }, k0, tol, 100);
  if (!nr.converged)
    throw Error(ErrorCode::NoConvergence,
                "secular Newton stalled at m = " + std::to_string(m) + " after " +
                    std::to_string(nr.iterations) + " steps, |F| = " +
                    std::to_string(std::abs(nr.residual)));
  if (std::abs(nr.root.imag()) > 10.0 / static_cast<double>(L))
    throw Error(ErrorCode::ConvergedToBoundState,
                "solution left the scattering regime at m = " + std::to_string(m));

  ScatteringMomentum out;
  out.k_base = k;
  out.k_tilde = reduce_momentum(nr.root);
  out.E = dispersion(bath, out.k_tilde);
  out.L = L;
  out.residual = nr.residual;
  out.branch_used = Branch::Less;
  return out;
}

ScatteringMomentum scattering_momentum_approx(const BathSpec& bath, const EmitterParams& params,
                                              long L, long m, Branch branch) {
  const double k = 2.0 * kPi * m / L;
  const Complex k0 = Complex(k, 0.0) + kI * imk_leading(bath, params, L, k);
  const double tol = 1e-10 * (1.0 + std::abs(dispersion(bath, k)) + std::abs(params.Delta));
  const NewtonResult nr = newton_complex(
      [&](Complex kt) { return secular_approx_k(bath, params, L, kt, branch); }, k0, tol, 100);
  if (!nr.converged)
    throw Error(ErrorCode::NoConvergence, "approximate secular Newton stalled");

  ScatteringMomentum out;
  out.k_base = k;
  out.k_tilde = reduce_momentum(nr.root);
  out.E = dispersion(bath, out.k_tilde);
  out.L = L;
  out.residual = nr.residual;
  out.branch_used = branch;
  return out;
}

Complex secular_residual_direct(const BathSpec& bath, const EmitterParams& params, long L,
                                Complex k_tilde) {
  const Complex E = dispersion(bath, k_tilde);
  return E - params.Delta - sigma_finite_sum(bath, params.J, L, E, 0).value;
}

namespace {

// The thermodynamic secular equation with the actual root classification;
// the physical condition a candidate bound state must satisfy.
bool is_true_bound_state(const BathSpec& bath, const EmitterParams& params, Complex E,
                         double tol_scale) {
  try {
    const Complex sigma = sigma_thermo(bath, params.J, E, 0).value;
    return std::abs(E - params.Delta - sigma) <= 1e-9 * tol_scale;
  } catch (const Error&) {
    return false;
  }
}

Complex canonical_momentum(const SymbolRoots& sr, BoundKind kind) {
  std::vector<Complex> preferred, other;
  for (const auto& r : sr.roots) {
    const bool inside = std::abs(r.y) < 1.0;
    const bool want_inside = (kind == BoundKind::Conventional);
    (inside == want_inside ? preferred : other).push_back(r.y);
  }
  const std::vector<Complex>& cands = preferred.empty() ? other : preferred;
  // Localization momentum: root closest to the unit circle in log distance;
  // conjugate-pair ties resolved toward positive Re k.
  double best = std::numeric_limits<double>::max();
  for (const Complex& y : cands) best = std::min(best, std::abs(std::log(std::abs(y))));
  Complex pick = cands.front();
  double best_arg = -std::numeric_limits<double>::max();
  for (const Complex& y : cands) {
    if (std::abs(std::log(std::abs(y))) > best + 1e-3) continue;
    if (std::arg(y) > best_arg) {
      best_arg = std::arg(y);
      pick = y;
    }
  }
  return Complex(std::arg(pick), -std::log(std::abs(pick)));
}

}  // namespace

std::vector<BoundState> bound_states(const BathSpec& bath, const EmitterParams& params,
                                     const BoundStateOptions& opt) {
  require_coupling(params);
  const double scale = 1.0 + bath.hopping_scale() + std::abs(params.Delta);

  std::vector<Side> sides{Side::PlusHalf};
  if (bath.unidirectional()) sides.push_back(Side::MinusHalf);

  struct Candidate {
    Complex E;
    Branch branch;
  };
  std::vector<Candidate> cands;

  for (Branch branch : {Branch::Greater, Branch::Less}) {
    for (Side side : sides) {
      for (int ir = 0; ir < opt.grid_re; ++ir) {
        for (int ii = 0; ii < opt.grid_im; ++ii) {
          const double re = -kPi + 2.0 * kPi * (ir + 0.5) / opt.grid_re;
          const double im = -opt.im_max + 2.0 * opt.im_max * (ii + 0.5) / (opt.grid_im - 1.0);
          if (std::abs(im) < 0.02) continue;  // scattering regime, not a pole seed
          const Complex k0(re, im);
          NewtonResult nr;
          try {
            nr = newton_complex(
                [&](Complex kt) {
                  const Complex E = dispersion(bath, kt);
                  return E - params.Delta -
                         sigma_thermo_continued(bath, params.J, kt, 0, branch, side);
                },
                k0, 1e-11 * scale, 40);
          } catch (const Error&) {
            continue;
          }
          if (!nr.converged) continue;
          const Complex E = dispersion(bath, nr.root);
          cands.push_back({E, branch});
        }
      }
    }
  }

  std::vector<BoundState> out;
  for (const Candidate& c : cands) {
    if (band_distance(bath, c.E) <= 1e-6 * scale) continue;
    if (!is_true_bound_state(bath, params, c.E, scale)) continue;

    bool merged = false;
    for (BoundState& b : out) {
      if (std::abs(b.E_b - c.E) < 1e-6 * (1.0 + std::abs(b.E_b))) {
        if (std::find(b.pole_branches.begin(), b.pole_branches.end(), c.branch) ==
            b.pole_branches.end())
          b.pole_branches.push_back(c.branch);
        merged = true;
        break;
      }
    }
    if (merged) continue;

    BoundState b;
    b.E_b = c.E;
    b.pole_branches = {c.branch};
    b.region_winding = winding_number(bath, c.E);
    b.kind = (b.region_winding == 0) ? BoundKind::Conventional : BoundKind::Hidden;
    b.k_tilde = canonical_momentum(symbol_roots(bath, c.E), b.kind);
    out.push_back(std::move(b));
  }

  std::sort(out.begin(), out.end(), [](const BoundState& a, const BoundState& b) {
    if (a.E_b.real() != b.E_b.real()) return a.E_b.real() < b.E_b.real();
    return a.E_b.imag() < b.E_b.imag();
  });
  return out;
}

namespace {

// Both near-unit-circle momenta of a fine-tuned solution energy, ordered to
// match the reference momenta (kr1, kr2).
std::pair<Complex, Complex> pair_momenta(const BathSpec& bath, Complex E, double kr1, double kr2) {
  const SymbolRoots sr = symbol_roots(bath, E);
  std::vector<Complex> ks;
  std::vector<double> circ;
  for (const auto& r : sr.roots) {
    for (int rep = 0; rep < r.multiplicity; ++rep) {
      ks.push_back(Complex(std::arg(r.y), -std::log(std::abs(r.y))));
      circ.push_back(std::abs(std::log(std::abs(r.y))));
    }
  }
  // Two roots closest to the circle.
  std::vector<size_t> idx(ks.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return circ[a] < circ[b]; });
  Complex a = ks[idx[0]];
  Complex b = ks[idx[1]];
  if (momentum_distance(a.real(), kr1) + momentum_distance(b.real(), kr2) >
      momentum_distance(b.real(), kr1) + momentum_distance(a.real(), kr2))
    std::swap(a, b);
  return {a, b};
}

}  // namespace

std::vector<ScatteringMomentum> degenerate_momenta(const BathSpec& bath,
                                                   const EmitterParams& params, long L,
                                                   const DegenerateTarget& target) {
  require_coupling(params);
  const double scale = bath.hopping_scale();
  double kr1, kr2;
  Complex E0;

  if (target.type == DegenerateTarget::Type::SelfIntersectionPoint) {
    const auto& si = target.si;
    if (std::abs(dispersion(bath, si.k1) - dispersion(bath, si.k2)) > 1e-10 * scale ||
        momentum_distance(si.k1, si.k2) < 1e-3)
      throw Error(ErrorCode::NotDegenerate, "descriptor is not a self-intersection pair");
    kr1 = si.k1;
    kr2 = si.k2;
    E0 = si.energy;
  } else {
    if (std::abs(dispersion_derivative(bath, target.k_r, 1)) > 1e-6 * scale)
      throw Error(ErrorCode::NotDegenerate, "h'_k does not vanish at the descriptor momentum");
    if (target.m < 1) throw Error(ErrorCode::ConfigError, "mode index m must be positive");
    kr1 = target.k_r + target.m * kPi / L;
    kr2 = target.k_r - target.m * kPi / L;
    E0 = dispersion(bath, kr1);
  }

  const double tol = 1e-10 * (1.0 + std::abs(E0) + std::abs(params.Delta));
  auto secular_E = [&](Complex E) {
    return E - params.Delta - sigma_finite_residue(bath, params.J, L, E, 0).value;
  };

  std::vector<Complex> solutions;
  Complex bestE;

  if (target.type == DegenerateTarget::Type::SelfIntersectionPoint) {
    // Fan of starts around the self-intersection energy.
    const double spread = std::abs(dispersion_derivative(bath, kr1, 1)) * kPi / L;
    for (int j = -4; j <= 4; ++j) {
      const Complex start = E0 + Complex(j * spread * 0.5, 0.0);
      NewtonResult nr;
      try {
        nr = newton_complex(secular_E, start, tol, 80);
      } catch (const Error&) {
        continue;
      }
      if (!nr.converged) continue;
      bool dup = false;
      for (const Complex& s : solutions)
        if (std::abs(s - nr.root) < 1e-9 * (1.0 + std::abs(s))) dup = true;
      if (!dup) solutions.push_back(nr.root);
    }
    if (solutions.empty())
      throw Error(ErrorCode::NoConvergence, "no secular solution near the fine-tuned energy");

    // Pick the solution whose two momenta stay closest to the real axis.
    bestE = solutions.front();
    double best_im = std::numeric_limits<double>::max();
    for (const Complex& E : solutions) {
      const auto [ka, kg] = pair_momenta(bath, E, kr1, kr2);
      const double worst = std::max(std::abs(ka.imag()), std::abs(kg.imag()));
      const double roff = momentum_distance(ka.real(), kr1) + momentum_distance(kg.real(), kr2);
      if (roff > 0.2) continue;
      if (worst < best_im) {
        best_im = worst;
        bestE = E;
      }
    }
  } else {
    // Near a second-order pole the secular solutions sit O(L^-3) in energy
    // from the finite-size bath levels, far below what a direct evaluation of
    // F(E) = E - Delta - Sigma^{(L)}(E) can resolve. Newton therefore runs on
    // the pole-deflated split form
    //   G(E) = A(E) prod_j (E - h_j) - (J^2/L) sum_j prod_{l != j} (E - h_l),
    // where A collects the smooth remainder of the direct sum; every pole
    // factor is polynomial and exact.
    std::vector<Complex> poles;
    std::vector<long> pole_modes;
    for (long j = 1; j <= L; ++j) {
      const double klat = 2.0 * kPi * j / L;
      if (std::abs(reduce_momentum(klat - target.k_r)) <= (target.m + 3) * kPi / L) {
        poles.push_back(dispersion(bath, klat));
        pole_modes.push_back(j);
      }
    }

    std::vector<Complex> far_levels;
    for (long j = 1; j <= L; ++j) {
      if (std::find(pole_modes.begin(), pole_modes.end(), j) != pole_modes.end()) continue;
      far_levels.push_back(dispersion(bath, 2.0 * kPi * j / L));
    }
    const double r = params.J * params.J / static_cast<double>(L);

    struct GEval {
      Complex value;
      Complex deriv;
      double scale;  // sum of term magnitudes, for a well-scaled residual
    };
    auto deflated = [&](Complex E) {
      KahanSum acc, acc2;
      for (const Complex& h : far_levels) {
        const Complex inv = 1.0 / (E - h);
        acc.add(inv);
        acc2.add(inv * inv);
      }
      const Complex a = E - params.Delta - r * acc.sum;   // smooth remainder
      const Complex ap = 1.0 + r * acc2.sum;
      Complex P(1.0, 0.0), Pp(0.0, 0.0);
      for (const Complex& p : poles) {
        Pp = Pp * (E - p) + P;
        P *= (E - p);
      }
      Complex Q(0.0, 0.0), Qp(0.0, 0.0);
      double qmag = 0.0;
      for (size_t j = 0; j < poles.size(); ++j) {
        Complex prod(1.0, 0.0), prodp(0.0, 0.0);
        for (size_t l = 0; l < poles.size(); ++l) {
          if (l == j) continue;
          prodp = prodp * (E - poles[l]) + prod;
          prod *= (E - poles[l]);
        }
        Q += prod;
        Qp += prodp;
        qmag += std::abs(prod);
      }
      return GEval{a * P - r * Q, ap * P + a * Pp - r * Qp, std::abs(a * P) + r * qmag};
    };

    const double pole_gap =
        std::abs(dispersion_derivative(bath, target.k_r, 2)) * (kPi / L) * (kPi / L);
    const double spread = std::max(std::abs(E0 - dispersion(bath, target.k_r)), pole_gap);
    for (double radius : {2e-3 * pole_gap, 0.3 * spread}) {
      for (int j = 0; j < 12; ++j) {
        const Complex start = E0 + radius * std::exp(Complex(0.0, 2.0 * kPi * (j + 0.5) / 12.0));
        Complex x = start;
        GEval fx = deflated(x);
        bool converged = false;
        for (int it = 0; it < 200; ++it) {
          if (std::abs(fx.value) <= 1e-12 * fx.scale) {
            converged = true;
            break;
          }
          if (std::abs(fx.deriv) == 0.0) break;
          Complex step = fx.value / fx.deriv;
          bool moved = false;
          for (int halve = 0; halve < 12; ++halve) {
            const Complex xn = x - step;
            const GEval fn = deflated(xn);
            if (std::abs(fn.value) < std::abs(fx.value)) {
              x = xn;
              fx = fn;
              moved = true;
              break;
            }
            step *= 0.5;
          }
          if (moved && std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) {
            // Step at the machine floor; the residual scale overestimates the
            // roundoff floor of the cancelling pole terms.
            converged = std::abs(fx.value) <= 1e-8 * fx.scale;
            break;
          }
          if (!moved) {
            converged = std::abs(fx.value) <= 1e-8 * fx.scale;
            break;
          }
        }
        if (!converged) continue;
        bool dup = false;
        for (const Complex& s : solutions)
          if (std::abs(s - x) < 1e-13 * (1.0 + std::abs(s))) dup = true;
        if (!dup) solutions.push_back(x);
      }
    }
    if (solutions.empty())
      throw Error(ErrorCode::NoConvergence, "no secular solution near the second-order pole");

    // Keep the solution whose momenta realize the requested +-m pi/L pattern.
    bestE = solutions.front();
    double best_off = std::numeric_limits<double>::max();
    for (const Complex& E : solutions) {
      const auto [ka, kg] = pair_momenta(bath, E, kr1, kr2);
      const double off = momentum_distance(ka.real(), kr1) + momentum_distance(kg.real(), kr2) +
                         std::abs(ka.imag()) + std::abs(kg.imag());
      if (off < best_off) {
        best_off = off;
        bestE = E;
      }
    }
    if (best_off > 0.8 * kPi / L)
      throw Error(ErrorCode::NoConvergence,
                  "no secular solution realizes the requested mode pattern");

    std::vector<ScatteringMomentum> out;
    const auto [ka, kg] = pair_momenta(bath, bestE, kr1, kr2);
    const GEval g = deflated(bestE);
    for (const auto& [kb, kt] : {std::pair{kr1, ka}, std::pair{kr2, kg}}) {
      ScatteringMomentum s;
      s.k_base = reduce_momentum(kb);
      s.k_tilde = kt;
      s.E = bestE;
      s.L = L;
      s.residual = g.value / g.scale;  // deflated-form residual, dimensionless
      s.branch_used = Branch::Less;
      out.push_back(s);
    }
    return out;
  }

  const auto [ka, kg] = pair_momenta(bath, bestE, kr1, kr2);
  std::vector<ScatteringMomentum> out;
  for (const auto& [kb, kt] : {std::pair{kr1, ka}, std::pair{kr2, kg}}) {
    ScatteringMomentum s;
    s.k_base = reduce_momentum(kb);
    s.k_tilde = kt;
    s.E = bestE;
    s.L = L;
    s.residual = secular_E(bestE);
    s.branch_used = Branch::Less;
    out.push_back(s);
  }
  return out;
}

}  // namespace nhscatter
