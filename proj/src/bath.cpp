#include "nhscatter/bath.hpp"

#include <algorithm>
#include <cmath>

#include "nhscatter/linalg.hpp"

namespace nhscatter {

BathSpec::BathSpec(int p, int q, std::vector<Complex> hoppings)
    : p_(p), q_(q), hoppings_(std::move(hoppings)) {
  if (p_ < 0 || q_ < 0) throw Error(ErrorCode::InvalidBath, "hopping ranges must be nonnegative");
  if (p_ + q_ < 1) throw Error(ErrorCode::InvalidBath, "need at least one hopping term");
  if (static_cast<int>(hoppings_.size()) != p_ + q_ + 1)
    throw Error(ErrorCode::InvalidBath, "hoppings must cover n = -p..q");
  if (p_ >= 1 && std::abs(hoppings_.front()) == 0.0)
    throw Error(ErrorCode::InvalidBath, "h_{-p} must be nonzero for tight left range");
  if (q_ >= 1 && std::abs(hoppings_.back()) == 0.0)
    throw Error(ErrorCode::InvalidBath, "h_q must be nonzero for tight right range");
  scale_ = 0.0;
  for (const Complex& h : hoppings_) scale_ = std::max(scale_, std::abs(h));
  if (scale_ == 0.0) throw Error(ErrorCode::DegenerateBath, "all hoppings vanish");
}

BathSpec hn_bath(double u, double kappa) {
  return BathSpec(1, 1, {Complex(-(u - kappa / 2.0), 0.0), Complex(0.0, 0.0),
                         Complex(-(u + kappa / 2.0), 0.0)});
}

BathSpec nnn_bath(double kappa, double kappap) {
  return BathSpec(0, 2, {Complex(0.0, 0.0), Complex(-kappa, 0.0), Complex(-kappap, 0.0)});
}

double nnn_k_si(double kappa, double kappap) {
  return std::acos(-kappa / (2.0 * kappap));
}

namespace {

template <typename K>
Complex dispersion_impl(const BathSpec& bath, K k, int order) {
  const K kr = reduce_momentum(k);
  Complex acc = 0.0;
  for (int n = -bath.left_range(); n <= bath.right_range(); ++n) {
    const Complex h = bath.hopping(n);
    if (h == Complex(0.0, 0.0)) continue;
    Complex w = std::exp(Complex(0.0, -1.0) * Complex(kr) * static_cast<double>(n));
    Complex coef = 1.0;
    for (int d = 0; d < order; ++d) coef *= Complex(0.0, -static_cast<double>(n));
    acc += coef * h * w;
  }
  return acc;
}

}  // namespace

Complex dispersion(const BathSpec& bath, double k) { return dispersion_impl(bath, k, 0); }
Complex dispersion(const BathSpec& bath, Complex k) { return dispersion_impl(bath, k, 0); }

Complex dispersion_derivative(const BathSpec& bath, double k, int order) {
  if (order != 1 && order != 2)
    throw Error(ErrorCode::InvalidBath, "derivative order must be 1 or 2");
  return dispersion_impl(bath, k, order);
}

Complex dispersion_derivative(const BathSpec& bath, Complex k, int order) {
  if (order != 1 && order != 2)
    throw Error(ErrorCode::InvalidBath, "derivative order must be 1 or 2");
  return dispersion_impl(bath, k, order);
}

Complex symbol(const BathSpec& bath, Complex y) {
  Complex acc = 0.0;
  for (int n = -bath.left_range(); n <= bath.right_range(); ++n)
    acc += bath.hopping(n) * std::pow(y, Complex(-n, 0.0));
  return acc;
}

Complex symbol_derivative(const BathSpec& bath, Complex y) {
  Complex acc = 0.0;
  for (int n = -bath.left_range(); n <= bath.right_range(); ++n) {
    if (n == 0) continue;
    acc += bath.hopping(n) * static_cast<double>(-n) * std::pow(y, Complex(-n - 1, 0.0));
  }
  return acc;
}

namespace {

// Coefficients of P(y) = y^q (E - h(y)), degree p + q in y.
std::vector<Complex> symbol_polynomial(const BathSpec& bath, Complex E) {
  const int p = bath.left_range(), q = bath.right_range();
  std::vector<Complex> c(p + q + 1, Complex(0.0, 0.0));
  c[q] += E;
  for (int n = -p; n <= q; ++n) c[q - n] -= bath.hopping(n);
  return c;
}

Complex poly_eval(const std::vector<Complex>& c, Complex y) {
  Complex acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * y + *it;
  return acc;
}

std::vector<Complex> poly_derivative(const std::vector<Complex>& c) {
  std::vector<Complex> d(c.size() > 1 ? c.size() - 1 : 1, Complex(0.0, 0.0));
  for (size_t j = 1; j < c.size(); ++j) d[j - 1] = c[j] * static_cast<double>(j);
  return d;
}

}  // namespace

SymbolRoots symbol_roots(const BathSpec& bath, Complex E) {
  const int p = bath.left_range(), q = bath.right_range();
  const int deg = p + q;
  std::vector<Complex> c = symbol_polynomial(bath, E);

  const double cscale = std::max(std::abs(E), bath.hopping_scale());
  if (std::abs(c[deg]) <= 1e-14 * cscale)
    throw Error(ErrorCode::SingularEnergy,
                "leading coefficient of y^q (E - h(y)) vanishes (unidirectional E = h_0?)");

  std::vector<Complex> raw = linalg::polynomial_roots(c);

  // One guarded Newton polish per root.
  const std::vector<Complex> dc = poly_derivative(c);
  for (Complex& y : raw) {
    for (int it = 0; it < 2; ++it) {
      const Complex f = poly_eval(c, y);
      const Complex df = poly_eval(dc, y);
      if (std::abs(df) == 0.0) break;
      const Complex step = f / df;
      if (std::abs(step) > 1e-4 * (1.0 + std::abs(y))) break;  // likely a multiple root
      y -= step;
    }
  }

  // Merge near-coincident roots into multiplicities.
  std::vector<int> group(raw.size(), -1);
  int ngroups = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (group[i] >= 0) continue;
    group[i] = ngroups++;
    for (size_t j = i + 1; j < raw.size(); ++j) {
      if (group[j] >= 0) continue;
      for (size_t m = 0; m <= j; ++m) {
        if (group[m] != group[i] || m == j) continue;
        if (std::abs(raw[j] - raw[m]) <= kRootMergeTol * std::max(1.0, std::abs(raw[m]))) {
          group[j] = group[i];
          break;
        }
      }
    }
  }

  SymbolRoots out;
  out.energy = E;
  out.leading = c[deg];
  for (int g = 0; g < ngroups; ++g) {
    Complex centroid = 0.0;
    int mult = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
      if (group[i] == g) {
        centroid += raw[i];
        ++mult;
      }
    }
    centroid /= static_cast<double>(mult);
    if (mult > 1) {
      // Refine a multiple root on the (mult-1)-th derivative, where it is simple.
      std::vector<Complex> dm = c;
      for (int d = 0; d < mult - 1; ++d) dm = poly_derivative(dm);
      const std::vector<Complex> dm1 = poly_derivative(dm);
      for (int it = 0; it < 4; ++it) {
        const Complex f = poly_eval(dm, centroid);
        const Complex df = poly_eval(dm1, centroid);
        if (std::abs(df) == 0.0) break;
        centroid -= f / df;
      }
    }
    out.roots.push_back({centroid, mult, std::abs(std::abs(centroid) - 1.0) <= kUnitCircleTol});
  }

  std::sort(out.roots.begin(), out.roots.end(), [](const SymbolRoot& a, const SymbolRoot& b) {
    const double ma = std::abs(a.y), mb = std::abs(b.y);
    if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) return ma < mb;
    return std::arg(a.y) < std::arg(b.y);
  });
  return out;
}

double band_distance(const BathSpec& bath, Complex z, int samples) {
  double best = std::numeric_limits<double>::max();
  double kbest = 0.0;
  for (int m = 0; m < samples; ++m) {
    const double k = -kPi + 2.0 * kPi * (m + 0.5) / samples;
    const double d = std::abs(dispersion(bath, k) - z);
    if (d < best) {
      best = d;
      kbest = k;
    }
  }
  // Local refinement: minimize |h_k - z|^2 over real k by damped Newton on
  // the derivative of the squared distance.
  double k = kbest;
  for (int it = 0; it < 40; ++it) {
    const Complex r = dispersion(bath, k) - z;
    const Complex d1 = dispersion_derivative(bath, k, 1);
    const Complex d2 = dispersion_derivative(bath, k, 2);
    const double g = 2.0 * (r * std::conj(d1)).real();
    const double h = 2.0 * (std::norm(d1) + (r * std::conj(d2)).real());
    if (std::abs(g) < 1e-15 * (1.0 + std::abs(h))) break;
    double step = (h > 0.0) ? g / h : g;
    step = std::clamp(step, -2.0 * kPi / samples, 2.0 * kPi / samples);
    k -= step;
  }
  return std::min(best, std::abs(dispersion(bath, k) - z));
}

int winding_number(const BathSpec& bath, Complex z) {
  const double scale = std::max(std::abs(z), bath.hopping_scale());
  const SymbolRoots sr = symbol_roots(bath, z);
  int inside = 0;
  for (const auto& r : sr.roots) {
    if (r.on_circle)
      throw Error(ErrorCode::OnBandCurve,
                  "z within " + std::to_string(kUnitCircleTol * scale) + " of the band curve");
    if (std::abs(r.y) < 1.0) inside += r.multiplicity;
  }
  return inside - bath.right_range();
}

int winding_number_quadrature(const BathSpec& bath, Complex z, int samples) {
  double total = 0.0;
  Complex prev = dispersion(bath, 2.0 * kPi / samples) - z;
  for (int m = 2; m <= samples; ++m) {
    const Complex cur = dispersion(bath, 2.0 * kPi * m / samples) - z;
    total += std::arg(cur / prev);
    prev = cur;
  }
  total += std::arg((dispersion(bath, 2.0 * kPi / samples) - z) / prev);
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

std::vector<SelfIntersection> self_intersections(const BathSpec& bath, int grid) {
  std::vector<Complex> hk(grid);
  for (int i = 0; i < grid; ++i) hk[i] = dispersion(bath, -kPi + 2.0 * kPi * (i + 0.5) / grid);

  const double scale = bath.hopping_scale();
  const double cell = 2.0 * kPi / grid;
  std::vector<SelfIntersection> found;

  auto try_refine = [&](double k1, double k2) {
    for (int it = 0; it < 60; ++it) {
      const Complex f = dispersion(bath, k1) - dispersion(bath, k2);
      if (std::abs(f) < 1e-13 * scale) break;
      const Complex d1 = dispersion_derivative(bath, k1, 1);
      const Complex d2 = dispersion_derivative(bath, k2, 1);
      // 2x2 real Newton for F(k1,k2) = h_{k1} - h_{k2} in C ~ R^2.
      const double a = d1.real(), b = -d2.real();
      const double cc = d1.imag(), d = -d2.imag();
      const double det = a * d - b * cc;
      if (std::abs(det) < 1e-14 * scale * scale) return;
      double s1 = (d * f.real() - b * f.imag()) / det;
      double s2 = (-cc * f.real() + a * f.imag()) / det;
      const double cap = 2.0 * cell;
      s1 = std::clamp(s1, -cap, cap);
      s2 = std::clamp(s2, -cap, cap);
      k1 -= s1;
      k2 -= s2;
    }
    if (std::abs(dispersion(bath, k1) - dispersion(bath, k2)) > 1e-10 * scale) return;
    k1 = reduce_momentum(k1);
    k2 = reduce_momentum(k2);
    if (k1 > k2) std::swap(k1, k2);
    // A cusp (coincident pair) is not a self-intersection.
    double sep = k2 - k1;
    sep = std::min(sep, 2.0 * kPi - sep);
    if (sep < 1e-3) return;
    for (const auto& s : found)
      if (std::abs(s.k1 - k1) < 1e-6 && std::abs(s.k2 - k2) < 1e-6) return;
    found.push_back({k1, k2, 0.5 * (dispersion(bath, k1) + dispersion(bath, k2))});
  };

  for (int i = 0; i < grid; ++i) {
    for (int j = i + 1; j < grid; ++j) {
      const double d = std::abs(hk[i] - hk[j]);
      if (d > 0.75 * scale * cell * (1.0 + std::abs(j - i))) continue;
      // Only start from local minima of |h_{k1} - h_{k2}| over the grid.
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1 && is_min; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = (i + di + grid) % grid;
          const int jj = (j + dj + grid) % grid;
          if (ii == jj) continue;
          if (std::abs(hk[ii] - hk[jj]) < d) is_min = false;
        }
      }
      if (!is_min) continue;
      try_refine(-kPi + 2.0 * kPi * (i + 0.5) / grid, -kPi + 2.0 * kPi * (j + 0.5) / grid);
    }
  }

  std::sort(found.begin(), found.end(),
            [](const SelfIntersection& a, const SelfIntersection& b) { return a.k1 < b.k1; });
  return found;
}

}  // namespace nhscatter
