// selfenergy.hpp — finite-size self-energy and its spatial generalization,
// computed by direct momentum sum, by the exact residue formula, and in the
// thermodynamic limit with branch-resolved analytic continuation.

#pragma once

#include <memory>
#include <optional>

#include "nhscatter/bath.hpp"
#include "nhscatter/types.hpp"

namespace nhscatter {

enum class SigmaKind { FiniteSum, FiniteResidue, Thermo };

struct SelfEnergyResult {
  Complex value{0.0, 0.0};
  SigmaKind kind = SigmaKind::FiniteSum;
  long x = 0;
  long L = 0;  // 0 for thermodynamic-limit results
  std::optional<Branch> branch;
  // Half-line convention actually used at x = 0 (meaningful for
  // unidirectional baths).
  Side side_convention = Side::Auto;
  // Set when an exponentially small f-factor was replaced by its Heaviside
  // limit to avoid overflow; the truncation error is below double roundoff.
  bool truncated = false;
};

// f^{(L)}_+(y) = 1/(y^L - 1) and f^{(L)}_-(y) = f_+ + 1, with log-magnitude
// guards for large L |log|y||.
Complex f_plus(Complex y, long L);
Complex f_minus(Complex y, long L);

// (J^2/L) sum_k e^{ikx} / (z - h_k) over k = 2 pi m / L, m = 1..L, summed in
// ascending m order with compensated accumulation.
SelfEnergyResult sigma_finite_sum(const BathSpec& bath, double J, long L, Complex z, long x);

// Exact residue form J^2 sum_y f_{s_x}(y) y^{x-1} / h'(y); near-degenerate
// root clusters are handled by a small contour quadrature (higher-order
// residues). At x = 0 the unidirectional side convention applies.
SelfEnergyResult sigma_finite_residue(const BathSpec& bath, double J, long L, Complex z, long x);

// Same, with the f-line forced (test hook for the x -> 0 side discrepancy).
Complex sigma_finite_residue_line(const BathSpec& bath, double J, long L, Complex z, long x,
                                  Side line);

// Thermodynamic limit: -J^2 sum_{|y|<1} y^{x-1}/h'(y) for x >= 0 and
// +J^2 sum_{|y|>1} y^{x-1}/h'(y) for x < 0. Roots on the unit circle require
// an explicit branch (Greater counts them inside, Less outside).
SelfEnergyResult sigma_thermo(const BathSpec& bath, double J, Complex z, long x,
                              std::optional<Branch> branch = std::nullopt);

// Thermodynamic-limit line with the forced-line convention (test hook).
Complex sigma_thermo_line(const BathSpec& bath, double J, Complex z, long x, Side line,
                          std::optional<Branch> branch = std::nullopt);

// Branch-resolved analytic continuation along the dispersion sheet: the root
// matching e^{ik} is classified by the branch tag and all other roots by
// magnitude. This is the continuation in which the closed-form self-energies
// of the concrete models are analytic in complex k.
Complex sigma_thermo_continued(const BathSpec& bath, double J, Complex k_tilde, long x,
                               Branch branch, Side side = Side::Auto);

// Sigma^>_x(h_k) - Sigma^<_x(h_k); asserts the analytic identity
// (J^2 / (i h'_k)) e^{ikx} to 1e-10 relative.
Complex branch_jump(const BathSpec& bath, double J, double k, long x);

// sum_y 1/(y h'(y)) plus the unidirectional correction; vanishes identically.
Complex sum_rule_residual(const BathSpec& bath, Complex E);

// Whole-profile evaluators: the symbol roots are computed once and reused for
// every site, which keeps wavefunction assembly at O(L (p+q)).

class SigmaFiniteSeries {
 public:
  SigmaFiniteSeries(const BathSpec& bath, double J, long L, Complex E);
  ~SigmaFiniteSeries();
  SigmaFiniteSeries(SigmaFiniteSeries&&) noexcept;
  Complex at(long x) const;  // Sigma^{(L)}_x(E)
  long L() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class SigmaThermoSeries {
 public:
  // Branch-resolved continuation at E = h(e^{ik~}), as in
  // sigma_thermo_continued.
  SigmaThermoSeries(const BathSpec& bath, double J, Complex k_tilde, Branch branch,
                    Side side = Side::Auto);
  ~SigmaThermoSeries();
  SigmaThermoSeries(SigmaThermoSeries&&) noexcept;
  Complex at(long x) const;  // Sigma^{branch}_x(h_{k~})

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nhscatter
