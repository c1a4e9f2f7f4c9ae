#include "nhscatter/selfenergy.hpp"

#include <algorithm>
#include <cmath>

namespace nhscatter {

namespace {

constexpr double kExpGuard = 700.0;
constexpr double kClusterTol = 1e-5;  // relative radius for joint residue treatment
constexpr int kQuadPoints = 96;

struct FTerm {
  Complex value;
  bool truncated;
};

// f_+(y) y^{x-1} guarded against overflow of y^{+-L}.
FTerm f_plus_power(Complex y, long L, long xm1) {
  const Complex ly = std::log(y);
  const double re_u = L * ly.real();
  if (re_u > kExpGuard) {
    // f_+ ~ y^{-L}; fold into the power.
    return {std::exp(Complex(xm1 - L, 0.0) * ly), true};
  }
  if (re_u < -kExpGuard) {
    // y^L ~ 0, f_+ ~ -1.
    return {-std::exp(Complex(xm1, 0.0) * ly), true};
  }
  const Complex yl = std::exp(Complex(L, 0.0) * ly);
  return {std::exp(Complex(xm1, 0.0) * ly) / (yl - 1.0), false};
}

// f_-(y) y^{x-1} = (f_+(y) + 1) y^{x-1} guarded.
FTerm f_minus_power(Complex y, long L, long xm1) {
  const Complex ly = std::log(y);
  const double re_u = L * ly.real();
  if (re_u > kExpGuard) {
    // f_- ~ 1.
    return {std::exp(Complex(xm1, 0.0) * ly), true};
  }
  if (re_u < -kExpGuard) {
    // f_- = 1/(1 - y^{-L}) ~ -y^{L}.
    return {-std::exp(Complex(xm1 + L, 0.0) * ly), true};
  }
  const Complex yml = std::exp(Complex(-L, 0.0) * ly);
  return {std::exp(Complex(xm1, 0.0) * ly) / (1.0 - yml), false};
}

// Plain y^{x-1} (thermodynamic f replaced by the Heaviside limit).
FTerm unit_power(Complex y, long /*L*/, long xm1) {
  const Complex ly = std::log(y);
  if (xm1 * ly.real() < -kExpGuard) return {Complex(0.0, 0.0), true};
  return {std::exp(Complex(xm1, 0.0) * ly), false};
}

using PowerFn = FTerm (*)(Complex, long, long);

struct Cluster {
  std::vector<SymbolRoot> members;
  Complex center;
  double radius;
};

std::vector<Cluster> cluster_roots(const std::vector<SymbolRoot>& roots) {
  std::vector<Cluster> clusters;
  std::vector<bool> used(roots.size(), false);
  for (size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    Cluster c;
    c.members.push_back(roots[i]);
    used[i] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (size_t j = 0; j < roots.size(); ++j) {
        if (used[j]) continue;
        for (const auto& m : c.members) {
          if (std::abs(roots[j].y - m.y) <= kClusterTol * std::max(1.0, std::abs(m.y))) {
            c.members.push_back(roots[j]);
            used[j] = true;
            grew = true;
            break;
          }
        }
      }
    }
    Complex ctr = 0.0;
    int tot = 0;
    for (const auto& m : c.members) {
      ctr += m.y * static_cast<double>(m.multiplicity);
      tot += m.multiplicity;
    }
    c.center = ctr / static_cast<double>(tot);
    c.radius = 0.0;
    for (const auto& m : c.members) c.radius = std::max(c.radius, std::abs(m.y - c.center));
    clusters.push_back(std::move(c));
  }
  return clusters;
}

int cluster_multiplicity(const Cluster& c) {
  int m = 0;
  for (const auto& r : c.members) m += r.multiplicity;
  return m;
}

double distance_to_lattice_poles(Complex c, long L) {
  if (L <= 0) return std::numeric_limits<double>::max();
  const double r = std::abs(c);
  double best = std::abs(r - 1.0);
  const double a = std::arg(c);
  const long m0 = std::lround(L * a / (2.0 * kPi));
  for (long dm = -1; dm <= 1; ++dm) {
    const double th = 2.0 * kPi * (m0 + dm) / L;
    best = std::min(best, std::abs(c - std::exp(Complex(0.0, th))));
  }
  return best;
}

// sum over the cluster of w(y) y^{x-1} / h'(y), where w is the f-factor (or 1
// for thermodynamic sums). Simple well-separated roots use the closed form;
// clusters and multiple roots go through a contour integral, which realizes
// the higher-order residue limit without derivative bookkeeping.
FTerm cluster_sum(const BathSpec& bath, const SymbolRoots& all, const Cluster& c, long L, long xm1,
                  PowerFn power) {
  if (cluster_multiplicity(c) == 1) {
    const Complex y = c.members[0].y;
    const FTerm t = power(y, L, xm1);
    return {t.value / symbol_derivative(bath, y), t.truncated};
  }

  // Contour radius: clear of the other roots and of the lattice poles.
  double limit = std::numeric_limits<double>::max();
  for (const auto& r : all.roots) {
    bool member = false;
    for (const auto& m : c.members)
      if (std::abs(r.y - m.y) == 0.0) member = true;
    if (!member) limit = std::min(limit, std::abs(r.y - c.center));
  }
  limit = std::min(limit, distance_to_lattice_poles(c.center, L));
  double rho = std::min(0.45 * limit, 0.1 * (1.0 + std::abs(c.center)));
  rho = std::max(rho, 1e-7 * (1.0 + std::abs(c.center)));

  if (rho < 4.0 * c.radius) {
    // Geometry too tight for a clean contour; fall back to simple terms.
    FTerm sum{Complex(0.0, 0.0), false};
    for (const auto& m : c.members) {
      for (int rep = 0; rep < m.multiplicity; ++rep) {
        const Complex y =
            m.y + (m.multiplicity > 1
                       ? 1e-8 * (1.0 + std::abs(m.y)) *
                             std::exp(Complex(0.0, 2.0 * kPi * rep / m.multiplicity))
                       : Complex(0.0, 0.0));
        const FTerm t = power(y, L, xm1);
        sum.value += t.value / symbol_derivative(bath, y);
        sum.truncated = sum.truncated || t.truncated;
      }
    }
    return sum;
  }

  // If every weighted power on the contour underflows, the cluster does not
  // contribute at this x.
  bool truncated = false;
  KahanSum acc;
  for (int j = 0; j < kQuadPoints; ++j) {
    const double th = 2.0 * kPi * (j + 0.5) / kQuadPoints;
    const Complex beta = c.center + rho * std::exp(Complex(0.0, th));
    const FTerm w = power(beta, L, xm1);
    truncated = truncated || w.truncated;
    const Complex denom = all.energy - symbol(bath, beta);
    // term = -(1/2pi i) oint w(beta) beta^{x-1} / (E - h(beta)) d beta
    acc.add(w.value / denom * std::exp(Complex(0.0, th)));
  }
  return {-(rho / kQuadPoints) * acc.sum, truncated};
}

bool plus_line_for(const BathSpec& bath, long x, Side side) {
  if (x > 0) return true;
  if (x < 0) return false;
  switch (side) {
    case Side::PlusHalf: return true;
    case Side::MinusHalf: return false;
    case Side::Auto: break;
  }
  // p = 0 takes the positive-half expression, q = 0 the negative-half one.
  if (bath.right_range() == 0) return false;
  return true;
}

long reduce_site(long x, long L) {
  long r = ((x % L) + L) % L;
  if (r > (L - 1) / 2) r -= L;
  return r;
}

}  // namespace

Complex f_plus(Complex y, long L) { return f_plus_power(y, L, 0).value; }
Complex f_minus(Complex y, long L) { return f_minus_power(y, L, 0).value; }

SelfEnergyResult sigma_finite_sum(const BathSpec& bath, double J, long L, Complex z, long x) {
  if (L < bath.left_range() + bath.right_range() + 1)
    throw Error(ErrorCode::InvalidBath, "L must be at least p + q + 1");
  const long xr = reduce_site(x, L);
  const double tol = 1e-12 * (1.0 + std::abs(z));

  KahanSum acc;
  for (long m = 1; m <= L; ++m) {
    const double k = 2.0 * kPi * m / L;
    const Complex d = z - dispersion(bath, k);
    if (std::abs(d) < tol)
      throw Error(ErrorCode::OnFiniteSpectrum, "z collides with a finite-size bath level");
    acc.add(std::exp(Complex(0.0, k * xr)) / d);
  }

  SelfEnergyResult res;
  res.value = (J * J / static_cast<double>(L)) * acc.sum;
  res.kind = SigmaKind::FiniteSum;
  res.x = xr;
  res.L = L;
  return res;
}

namespace {

Complex residue_line_sum(const BathSpec& bath, const SymbolRoots& sr, long L, long xm1,
                         PowerFn power, bool* truncated) {
  const std::vector<Cluster> clusters = cluster_roots(sr.roots);
  KahanSum acc;
  bool trunc = false;
  for (const auto& c : clusters) {
    const FTerm t = cluster_sum(bath, sr, c, L, xm1, power);
    acc.add(t.value);
    trunc = trunc || t.truncated;
  }
  if (truncated) *truncated = trunc;
  return acc.sum;
}

}  // namespace

namespace {

// z sits on a finite-size bath level iff a symbol root coincides with an
// L-th root of unity; tolerance mirrors the direct-sum collision tolerance
// 1e-12 (1 + |z|) in energy.
void check_spectrum_collision(const BathSpec& bath, const SymbolRoots& sr, long L, Complex z) {
  for (const auto& r : sr.roots) {
    if (std::abs(std::abs(r.y) - 1.0) > 1e-5) continue;
    const long m0 = std::lround(L * std::arg(r.y) / (2.0 * kPi));
    const Complex ylat = std::exp(Complex(0.0, 2.0 * kPi * m0 / L));
    const double dz = std::abs(r.y - ylat) * std::abs(symbol_derivative(bath, r.y));
    if (dz < 1e-12 * (1.0 + std::abs(z)))
      throw Error(ErrorCode::OnFiniteSpectrum, "z collides with a finite-size bath level");
  }
}

}  // namespace

Complex sigma_finite_residue_line(const BathSpec& bath, double J, long L, Complex z, long x,
                                  Side line) {
  const long xr = reduce_site(x, L);
  const SymbolRoots sr = symbol_roots(bath, z);
  check_spectrum_collision(bath, sr, L, z);
  const bool plus = (line == Side::MinusHalf) ? false : true;
  bool trunc = false;
  const Complex s =
      residue_line_sum(bath, sr, L, xr - 1, plus ? f_plus_power : f_minus_power, &trunc);
  return J * J * s;
}

SelfEnergyResult sigma_finite_residue(const BathSpec& bath, double J, long L, Complex z, long x) {
  if (L < bath.left_range() + bath.right_range() + 1)
    throw Error(ErrorCode::InvalidBath, "L must be at least p + q + 1");
  const long xr = reduce_site(x, L);
  const bool plus = plus_line_for(bath, xr, Side::Auto);

  const SymbolRoots sr = symbol_roots(bath, z);
  check_spectrum_collision(bath, sr, L, z);

  SelfEnergyResult res;
  res.kind = SigmaKind::FiniteResidue;
  res.x = xr;
  res.L = L;
  bool trunc = false;
  res.value =
      J * J * residue_line_sum(bath, sr, L, xr - 1, plus ? f_plus_power : f_minus_power, &trunc);
  res.truncated = trunc;
  if (bath.unidirectional() && xr == 0)
    res.side_convention = plus ? Side::PlusHalf : Side::MinusHalf;
  return res;
}

namespace {

// Split clusters into inside/outside sets; on-circle clusters resolved by the
// branch, or rejected when no branch is supplied.
struct SplitRoots {
  SymbolRoots inside;
  SymbolRoots outside;
};

SplitRoots split_by_circle(const SymbolRoots& sr, std::optional<Branch> branch) {
  SplitRoots out;
  out.inside.energy = out.outside.energy = sr.energy;
  out.inside.leading = out.outside.leading = sr.leading;
  for (const auto& r : sr.roots) {
    bool in;
    if (r.on_circle) {
      if (!branch)
        throw Error(ErrorCode::AmbiguousBranch,
                    "root on the unit circle; a branch must be chosen");
      in = (*branch == Branch::Greater);
    } else {
      in = std::abs(r.y) < 1.0;
    }
    (in ? out.inside : out.outside).roots.push_back(r);
  }
  return out;
}

Complex thermo_from_split(const BathSpec& bath, const SplitRoots& split, double J, long xm1,
                          bool plus_line) {
  // Keep the full root list available for contour-radius decisions.
  SymbolRoots all;
  all.energy = split.inside.energy;
  all.leading = split.inside.leading;
  all.roots = split.inside.roots;
  all.roots.insert(all.roots.end(), split.outside.roots.begin(), split.outside.roots.end());

  const SymbolRoots& sel = plus_line ? split.inside : split.outside;
  SymbolRoots sel_all = all;
  sel_all.roots = sel.roots;

  KahanSum acc;
  for (const auto& c : cluster_roots(sel.roots)) {
    const FTerm t = cluster_sum(bath, all, c, 0, xm1, unit_power);
    acc.add(t.value);
  }
  const double sign = plus_line ? -1.0 : 1.0;
  return sign * J * J * acc.sum;
}

}  // namespace

SelfEnergyResult sigma_thermo(const BathSpec& bath, double J, Complex z, long x,
                              std::optional<Branch> branch) {
  const SymbolRoots sr = symbol_roots(bath, z);
  const SplitRoots split = split_by_circle(sr, branch);
  const bool plus = plus_line_for(bath, x, Side::Auto);

  SelfEnergyResult res;
  res.kind = SigmaKind::Thermo;
  res.x = x;
  res.L = 0;
  res.branch = branch;
  res.value = thermo_from_split(bath, split, J, x - 1, plus);
  if (bath.unidirectional() && x == 0)
    res.side_convention = plus ? Side::PlusHalf : Side::MinusHalf;
  return res;
}

Complex sigma_thermo_line(const BathSpec& bath, double J, Complex z, long x, Side line,
                          std::optional<Branch> branch) {
  const SymbolRoots sr = symbol_roots(bath, z);
  const SplitRoots split = split_by_circle(sr, branch);
  return thermo_from_split(bath, split, J, x - 1, line != Side::MinusHalf);
}

Complex sigma_thermo_continued(const BathSpec& bath, double J, Complex k_tilde, long x,
                               Branch branch, Side side) {
  const Complex y0_target = std::exp(kI * reduce_momentum(k_tilde));
  const Complex E = dispersion(bath, k_tilde);
  const SymbolRoots sr = symbol_roots(bath, E);

  size_t i0 = 0;
  double best = std::numeric_limits<double>::max();
  for (size_t i = 0; i < sr.roots.size(); ++i) {
    const double d = std::abs(sr.roots[i].y - y0_target);
    if (d < best) {
      best = d;
      i0 = i;
    }
  }
  if (best > 1e-5 * (1.0 + std::abs(y0_target)))
    throw Error(ErrorCode::InternalCheck, "e^{ik} is not among the symbol roots");
  if (sr.roots[i0].multiplicity > 1)
    throw Error(ErrorCode::FineTunedInput, "e^{ik} is a multiple root; use the degenerate solver");

  SplitRoots split;
  split.inside.energy = split.outside.energy = E;
  split.inside.leading = split.outside.leading = sr.leading;
  for (size_t i = 0; i < sr.roots.size(); ++i) {
    bool in;
    if (i == i0) {
      in = (branch == Branch::Greater);
    } else {
      in = std::abs(sr.roots[i].y) < 1.0;
    }
    (in ? split.inside : split.outside).roots.push_back(sr.roots[i]);
  }
  const bool plus = plus_line_for(bath, x, side);
  return thermo_from_split(bath, split, J, x - 1, plus);
}

Complex branch_jump(const BathSpec& bath, double J, double k, long x) {
  const Complex hp = dispersion_derivative(bath, k, 1);
  if (std::abs(hp) < 1e-9 * bath.hopping_scale())
    throw Error(ErrorCode::VanishingGroupVelocity,
                "h'_k vanishes; second-order-pole regime");
  const Complex jump = sigma_thermo_continued(bath, J, Complex(k, 0.0), x, Branch::Greater) -
                       sigma_thermo_continued(bath, J, Complex(k, 0.0), x, Branch::Less);
  const Complex expected = J * J / (kI * hp) * std::exp(Complex(0.0, k * x));
  if (std::abs(jump - expected) > 1e-10 * (1.0 + std::abs(expected)))
    throw Error(ErrorCode::InternalCheck, "branch jump identity violated");
  return jump;
}

Complex sum_rule_residual(const BathSpec& bath, Complex E) {
  const SymbolRoots sr = symbol_roots(bath, E);
  KahanSum acc;
  for (const auto& c : cluster_roots(sr.roots)) {
    const FTerm t = cluster_sum(bath, sr, c, 0, -1, unit_power);
    acc.add(t.value);
  }
  Complex res = acc.sum;
  if (bath.unidirectional()) {
    const Complex h0 = bath.hopping(0);
    if (std::abs(E - h0) < 1e-12 * (1.0 + std::abs(E)))
      throw Error(ErrorCode::SingularEnergy, "sum rule requires E != h_0 for unidirectional baths");
    if (bath.left_range() == 0)
      res += 1.0 / (E - h0);
    else
      res -= 1.0 / (E - h0);
  }
  return res;
}

struct SigmaFiniteSeries::Impl {
  BathSpec bath;
  double J;
  long L;
  SymbolRoots sr;
  std::vector<Cluster> clusters;
};

SigmaFiniteSeries::SigmaFiniteSeries(const BathSpec& bath, double J, long L, Complex E)
    : impl_(new Impl{bath, J, L, symbol_roots(bath, E), {}}) {
  if (L < bath.left_range() + bath.right_range() + 1)
    throw Error(ErrorCode::InvalidBath, "L must be at least p + q + 1");
  impl_->clusters = cluster_roots(impl_->sr.roots);
}

SigmaFiniteSeries::~SigmaFiniteSeries() = default;
SigmaFiniteSeries::SigmaFiniteSeries(SigmaFiniteSeries&&) noexcept = default;

long SigmaFiniteSeries::L() const { return impl_->L; }

Complex SigmaFiniteSeries::at(long x) const {
  const long xr = reduce_site(x, impl_->L);
  const bool plus = plus_line_for(impl_->bath, xr, Side::Auto);
  KahanSum acc;
  for (const auto& c : impl_->clusters) {
    acc.add(cluster_sum(impl_->bath, impl_->sr, c, impl_->L, xr - 1,
                        plus ? f_plus_power : f_minus_power)
                .value);
  }
  return impl_->J * impl_->J * acc.sum;
}

struct SigmaThermoSeries::Impl {
  BathSpec bath;
  double J;
  Side side;
  SymbolRoots all;
  std::vector<Cluster> inside_clusters;
  std::vector<Cluster> outside_clusters;
};

SigmaThermoSeries::SigmaThermoSeries(const BathSpec& bath, double J, Complex k_tilde, Branch branch,
                                     Side side)
    : impl_(new Impl{bath, J, side, {}, {}, {}}) {
  const Complex y0_target = std::exp(kI * reduce_momentum(k_tilde));
  const Complex E = dispersion(bath, k_tilde);
  const SymbolRoots sr = symbol_roots(bath, E);

  size_t i0 = 0;
  double best = std::numeric_limits<double>::max();
  for (size_t i = 0; i < sr.roots.size(); ++i) {
    const double d = std::abs(sr.roots[i].y - y0_target);
    if (d < best) {
      best = d;
      i0 = i;
    }
  }
  if (best > 1e-5 * (1.0 + std::abs(y0_target)))
    throw Error(ErrorCode::InternalCheck, "e^{ik} is not among the symbol roots");
  if (sr.roots[i0].multiplicity > 1)
    throw Error(ErrorCode::FineTunedInput, "e^{ik} is a multiple root; use the degenerate solver");

  impl_->all = sr;
  std::vector<SymbolRoot> in, out;
  for (size_t i = 0; i < sr.roots.size(); ++i) {
    const bool inside =
        (i == i0) ? (branch == Branch::Greater) : (std::abs(sr.roots[i].y) < 1.0);
    (inside ? in : out).push_back(sr.roots[i]);
  }
  impl_->inside_clusters = cluster_roots(in);
  impl_->outside_clusters = cluster_roots(out);
}

SigmaThermoSeries::~SigmaThermoSeries() = default;
SigmaThermoSeries::SigmaThermoSeries(SigmaThermoSeries&&) noexcept = default;

Complex SigmaThermoSeries::at(long x) const {
  const bool plus = plus_line_for(impl_->bath, x, impl_->side);
  const auto& clusters = plus ? impl_->inside_clusters : impl_->outside_clusters;
  KahanSum acc;
  for (const auto& c : clusters)
    acc.add(cluster_sum(impl_->bath, impl_->all, c, 0, x - 1, unit_power).value);
  const double sign = plus ? -1.0 : 1.0;
  return sign * impl_->J * impl_->J * acc.sum;
}

}  // namespace nhscatter
