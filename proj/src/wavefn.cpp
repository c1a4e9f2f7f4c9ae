#include "nhscatter/wavefn.hpp"

#include <algorithm>
#include <cmath>

#include "nhscatter/selfenergy.hpp"

namespace nhscatter {

namespace {

WaveFunction make_empty(long L) {
  WaveFunction wf;
  wf.L = L;
  wf.amplitudes.assign(L, Complex(0.0, 0.0));
  return wf;
}

// exp(a * log(base)) with integer exponent a; safe for |base| far from 1.
Complex ipow(Complex base, long a) {
  if (a == 0) return Complex(1.0, 0.0);
  const Complex lb = std::log(base);
  if (a * lb.real() < -700.0) return Complex(0.0, 0.0);
  return std::exp(static_cast<double>(a) * lb);
}

void check_not_fine_tuned(const BathSpec& bath, Complex k_tilde) {
  const Complex E = dispersion(bath, k_tilde);
  const Complex y0 = std::exp(kI * k_tilde);
  const SymbolRoots sr = symbol_roots(bath, E);
  for (const auto& r : sr.roots) {
    if (std::abs(r.y - y0) < 1e-5 * (1.0 + std::abs(y0))) {
      if (r.multiplicity > 1)
        throw Error(ErrorCode::FineTunedInput, "k~ sits at a multiple symbol root");
      continue;
    }
    if (std::abs(std::abs(r.y) - 1.0) < 1e-3)
      throw Error(ErrorCode::FineTunedInput,
                  "a second symbol root has near-unit magnitude; two-pole regime");
  }
  if (std::abs(dispersion_derivative(bath, k_tilde, 1)) < 1e-6 * bath.hopping_scale())
    throw Error(ErrorCode::FineTunedInput, "h'_k vanishes at k~; second-order-pole regime");
}

}  // namespace

std::vector<Complex> to_state_vector(const WaveFunction& wf) {
  std::vector<Complex> v;
  v.reserve(wf.L + 1);
  v.push_back(wf.c_e);
  v.insert(v.end(), wf.amplitudes.begin(), wf.amplitudes.end());
  return v;
}

WaveFunction formal_wavefunction(const BathSpec& bath, const EmitterParams& params, long L,
                                 Complex E, Complex c_e) {
  const SigmaFiniteSeries series(bath, params.J, L, E);
  const Complex secular = E - params.Delta - series.at(0);
  const double scale = 1.0 + std::abs(E) + std::abs(params.Delta);
  if (std::abs(secular) > 1e-8 * scale)
    throw Error(ErrorCode::ConfigError,
                "E does not solve the finite-size secular equation (residual " +
                    std::to_string(std::abs(secular)) + ")");

  WaveFunction wf = make_empty(L);
  wf.energy = E;
  wf.c_e = c_e;
  const Complex pref = c_e / params.J;
  for (long x = wf.window_min(); x <= wf.window_max(); ++x)
    wf.amplitudes[x + L / 2] = pref * series.at(x);
  return wf;
}

WaveFunction ls_wavefunction(const BathSpec& bath, const EmitterParams& params, Complex k_tilde,
                             Branch branch, long L) {
  check_not_fine_tuned(bath, k_tilde);
  const SigmaThermoSeries series(bath, params.J, k_tilde, branch);
  const Complex E = dispersion(bath, k_tilde);
  const Complex G = 1.0 / (E - params.Delta - series.at(0));

  WaveFunction wf = make_empty(L);
  wf.energy = E;
  wf.k_tilde = k_tilde;
  wf.branch = branch;
  wf.c_e = params.J * G;
  for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
    const Complex plane = std::exp(kI * k_tilde * static_cast<double>(x));
    wf.amplitudes[x + L / 2] = plane + G * series.at(x);
  }
  return wf;
}

WaveFunction hn_closed_form(double u, double kappa, const EmitterParams& params, Complex k_tilde,
                            Branch branch, long L) {
  if (kappa == 0.0)
    throw Error(ErrorCode::HermitianLimit,
                "kappa = 0 is the Hermitian limit; the closed form does not apply there");
  const double J = params.J;
  const Complex eik = std::exp(kI * k_tilde);
  const Complex emk = 1.0 / eik;
  const Complex h = -(u - kappa / 2.0) * eik - (u + kappa / 2.0) * emk;
  const Complex delta = (u - kappa / 2.0) * eik - (u + kappa / 2.0) * emk;
  const Complex ratio = Complex(u - kappa / 2.0, 0.0) / Complex(u + kappa / 2.0, 0.0);

  const Complex G = (branch == Branch::Greater)
                        ? 1.0 / (h - params.Delta - J * J / delta)
                        : 1.0 / (h - params.Delta);

  WaveFunction wf = make_empty(L);
  wf.energy = h;
  wf.k_tilde = k_tilde;
  wf.branch = branch;
  wf.c_e = J * G;
  for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
    const Complex plane = std::exp(kI * k_tilde * static_cast<double>(x));
    Complex val;
    if (branch == Branch::Greater) {
      if (x >= 0) {
        val = plane * (1.0 + G * J * J / delta);
      } else {
        const Complex evan = ipow(ratio, -x) * std::exp(-kI * k_tilde * static_cast<double>(x));
        val = plane + G * (J * J / delta) * evan;
      }
    } else {
      if (x >= 0) {
        val = plane;
      } else {
        const Complex evan = ipow(ratio, -x) * std::exp(-kI * k_tilde * static_cast<double>(x));
        val = plane + G * (J * J / delta) * (evan - plane);
      }
    }
    wf.amplitudes[x + L / 2] = val;
  }
  return wf;
}

WaveFunction nnn_closed_form(double kappa, double kappap, const EmitterParams& params,
                             Complex k_tilde, NnnRegion region, Branch branch, long L) {
  const double k_si = nnn_k_si(kappa, kappap);
  const double kre = std::abs(reduce_momentum(k_tilde.real()));
  if (std::abs(kre - k_si) < 1e-3)
    throw Error(ErrorCode::FineTunedInput, "k~ within the self-intersection exclusion radius");
  const NnnRegion actual = (kre < k_si) ? NnnRegion::K1 : NnnRegion::K2;
  if (actual != region)
    throw Error(ErrorCode::RegionMismatch, "supplied region contradicts |Re k~| vs arccos(-kappa/2kappa')");

  const double J = params.J;
  const Complex eik = std::exp(kI * k_tilde);
  const Complex emk = 1.0 / eik;
  const Complex h = -kappa * emk - kappap * emk * emk;
  const Complex delta = kappa + 2.0 * kappap * emk;
  const Complex denom = kappa + kappap * emk;
  const Complex yp = -kappap / denom;  // the co-root of e^{ik~}

  Complex G;
  if (region == NnnRegion::K1) {
    G = (branch == Branch::Greater)
            ? 1.0 / (h - params.Delta + J * J * eik / denom)
            : 1.0 / (h - params.Delta + (J * J / delta) * (kappap / denom));
  } else {
    G = (branch == Branch::Greater) ? 1.0 / (h - params.Delta + (J * J / delta) * eik)
                                    : 1.0 / (h - params.Delta);
  }

  WaveFunction wf = make_empty(L);
  wf.energy = h;
  wf.k_tilde = k_tilde;
  wf.branch = branch;
  wf.c_e = J * G;

  for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
    const Complex plane = std::exp(kI * k_tilde * static_cast<double>(x));
    const Complex plane1 = std::exp(kI * k_tilde * static_cast<double>(x + 1));
    Complex val;
    if (region == NnnRegion::K1) {
      if (branch == Branch::Greater) {
        val = (x >= 0) ? plane + G * (J * J / delta) * (ipow(yp, x + 1) - plane1) : plane;
      } else {
        val = (x >= 0) ? plane + G * (J * J / delta) * ipow(yp, x + 1)
                       : plane + G * (J * J / delta) * plane1;
      }
    } else {
      if (branch == Branch::Greater) {
        val = (x >= 0) ? plane - G * (J * J / delta) * plane1
                       : plane - G * (J * J / delta) * ipow(yp, x + 1);
      } else {
        val = (x >= 0) ? plane : plane + G * (J * J / delta) * (plane1 - ipow(yp, x + 1));
      }
    }
    wf.amplitudes[x + L / 2] = val;
  }
  return wf;
}

WaveFunction degenerate_wavefunction(const BathSpec& bath, const EmitterParams& params, long L,
                                     std::pair<Complex, Complex> k_pair) {
  const double J = params.J;
  WaveFunction wf = make_empty(L);
  wf.energy = dispersion(bath, k_pair.first);
  wf.k_tilde = k_pair.first;
  wf.c_e = 1.0;

  struct Pole {
    Complex k;
    Complex coef_pos;
    Complex coef_neg;
  };
  std::vector<Pole> poles;
  for (const Complex& k : {k_pair.first, k_pair.second}) {
    const Complex hp = dispersion_derivative(bath, k, 1);
    const Complex phase = std::exp(kI * k * static_cast<double>(L));
    poles.push_back({k, J / (kI * hp * (1.0 - phase)), J / (kI * hp * (1.0 / phase - 1.0))});
  }

  for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
    Complex val = 0.0;
    for (const Pole& p : poles) {
      const Complex plane = std::exp(kI * p.k * static_cast<double>(x));
      val += (x >= 0 ? p.coef_pos : p.coef_neg) * plane;
    }
    wf.amplitudes[x + L / 2] = val;
  }
  return wf;
}

std::vector<WaveFunction> plane_wave_superposition(const BathSpec& bath, long L, Complex E) {
  // Momenta sharing the eigenvalue E in the finite spectrum.
  std::vector<double> ks;
  for (long m = 1; m <= L; ++m) {
    const double k = 2.0 * kPi * m / L;
    if (std::abs(dispersion(bath, k) - E) <= 1e-12 * (1.0 + std::abs(E))) ks.push_back(k);
  }
  const long n = static_cast<long>(ks.size());
  if (n < 2)
    throw Error(ErrorCode::NotDegenerate, "fewer than two momenta share this eigenvalue");

  std::vector<WaveFunction> out;
  for (long j = 1; j < n; ++j) {
    // Orthonormal staircase basis of the zero-sum hyperplane:
    // (1,..,1,-j,0,..)/sqrt(j(j+1)).
    const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    std::vector<Complex> c(n, Complex(0.0, 0.0));
    for (long i = 0; i < j; ++i) c[i] = 1.0 / norm;
    c[j] = -static_cast<double>(j) / norm;

    WaveFunction wf = make_empty(L);
    wf.energy = E;
    wf.c_e = 0.0;
    wf.normalized = true;
    const double pref = 1.0 / std::sqrt(static_cast<double>(L));
    for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
      Complex val = 0.0;
      for (long i = 0; i < n; ++i) val += c[i] * std::exp(Complex(0.0, ks[i] * x));
      wf.amplitudes[x + L / 2] = pref * val;
    }
    out.push_back(std::move(wf));
  }
  return out;
}

WaveFunction normalize(WaveFunction wf) {
  double w = std::norm(wf.c_e);
  for (const Complex& a : wf.amplitudes) w += std::norm(a);
  if (w == 0.0) throw Error(ErrorCode::ZeroState, "cannot normalize the zero state");
  const double inv = 1.0 / std::sqrt(w);
  wf.c_e *= inv;
  for (Complex& a : wf.amplitudes) a *= inv;
  wf.normalized = true;
  return wf;
}

}  // namespace nhscatter
