#include "nhscatter/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace nhscatter {

LatticeHamiltonian build_hamiltonian(const BathSpec& bath, const EmitterParams& params, long L,
                                     Boundary boundary) {
  if (L < bath.left_range() + bath.right_range() + 1)
    throw Error(ErrorCode::InvalidBath, "L must be at least p + q + 1");

  LatticeHamiltonian lh{bath, params, L, boundary, linalg::Matrix(L + 1, L + 1)};
  lh.H.at(0, 0) = params.Delta;
  const long e0 = lh.site_index(0);
  lh.H.at(0, e0) = params.J;
  lh.H.at(e0, 0) = params.J;

  const long xmin = -(L / 2);
  for (long x = xmin; x <= (L - 1) / 2; ++x) {
    for (long xp = xmin; xp <= (L - 1) / 2; ++xp) {
      const long o = x - xp;
      Complex val(0.0, 0.0);
      bool set = false;
      for (long cand : {o, o - L, o + L}) {
        if (boundary == Boundary::OBC && cand != o) continue;
        if (cand >= -bath.left_range() && cand <= bath.right_range()) {
          val += bath.hopping(static_cast<int>(cand));
          set = true;
        }
      }
      if (set) lh.H.at(lh.site_index(x), lh.site_index(xp)) = val;
    }
  }
  return lh;
}

EDResult eigenpairs(const LatticeHamiltonian& lh, long max_dim) {
  if (lh.dim() > max_dim)
    throw Error(ErrorCode::ConfigError, "dimension exceeds the configured maximum");

  const linalg::EigenSystem es = linalg::eigensystem(lh.H);

  EDResult ed;
  ed.dim = lh.dim();
  ed.L = lh.L;
  ed.eigenvalues = es.values;
  ed.vectors = es.vectors;
  ed.residuals.resize(ed.dim);
  ed.classes.assign(ed.dim, StateClass::Unclassified);
  ed.loc_lengths.assign(ed.dim, 0.0);
  ed.band_distances.assign(ed.dim, 0.0);

  std::vector<Complex> v(ed.dim);
  for (long i = 0; i < ed.dim; ++i) {
    for (long r = 0; r < ed.dim; ++r) v[r] = ed.vectors.at(r, i);
    const std::vector<Complex> hv = linalg::matvec(lh.H, v);
    double res = 0.0;
    for (long r = 0; r < ed.dim; ++r) res += std::norm(hv[r] - ed.eigenvalues[i] * v[r]);
    ed.residuals[i] = std::sqrt(res);
  }
  return ed;
}

double state_mean_position(const EDResult& ed, long index) {
  const long L = ed.L;
  double wsum = 0.0, xsum = 0.0;
  for (long x = -(L / 2); x <= (L - 1) / 2; ++x) {
    const double w = std::norm(ed.vectors.at(1 + (x + L / 2), index));
    wsum += w;
    xsum += w * x;
  }
  return xsum / wsum;
}

double fitted_localization_length(const EDResult& ed, long index) {
  const long L = ed.L;
  // Peak of the photon profile.
  long xpeak = 0;
  double apeak = -1.0;
  for (long x = -(L / 2); x <= (L - 1) / 2; ++x) {
    const double a = std::abs(ed.vectors.at(1 + (x + L / 2), index));
    if (a > apeak) {
      apeak = a;
      xpeak = x;
    }
  }
  if (apeak <= 0.0) return std::numeric_limits<double>::infinity();

  // Least squares of log|psi| against the ring distance from the peak.
  double sd = 0.0, sl = 0.0, sdd = 0.0, sdl = 0.0;
  long npts = 0;
  for (long x = -(L / 2); x <= (L - 1) / 2; ++x) {
    const double a = std::abs(ed.vectors.at(1 + (x + L / 2), index));
    if (a < 1e-14 * apeak) continue;
    long d = std::abs(x - xpeak);
    d = std::min(d, L - d);
    const double ll = std::log(a / apeak);
    sd += d;
    sl += ll;
    sdd += static_cast<double>(d) * d;
    sdl += d * ll;
    ++npts;
  }
  const double det = npts * sdd - sd * sd;
  if (det == 0.0) return std::numeric_limits<double>::infinity();
  const double slope = (npts * sdl - sd * sl) / det;
  if (slope >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / slope;
}

void classify_states(EDResult& ed, const BathSpec& bath,
                     const std::vector<Complex>& degenerate_energies) {
  // Median nearest-neighbor level spacing.
  std::vector<double> nn(ed.dim, std::numeric_limits<double>::max());
  for (long i = 0; i < ed.dim; ++i)
    for (long j = 0; j < ed.dim; ++j) {
      if (i == j) continue;
      nn[i] = std::min(nn[i], std::abs(ed.eigenvalues[i] - ed.eigenvalues[j]));
    }
  std::vector<double> sorted = nn;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[ed.dim / 2];

  for (long i = 0; i < ed.dim; ++i) {
    ed.band_distances[i] = band_distance(bath, ed.eigenvalues[i], 2048);
    ed.loc_lengths[i] = fitted_localization_length(ed, i);
    ed.classes[i] = (ed.band_distances[i] > 10.0 * median && ed.loc_lengths[i] < ed.L / 10.0)
                        ? StateClass::Bound
                        : StateClass::Scattering;
  }
  for (const Complex& e : degenerate_energies) {
    const long i = nearest_eigenvalue(ed, e);
    if (std::abs(ed.eigenvalues[i] - e) < 1e-6 * (1.0 + std::abs(e)))
      ed.classes[i] = StateClass::DegenerateFamily;
  }
}

MatchResult match_state(const EDResult& ed, long index, const WaveFunction& wf) {
  const std::vector<Complex> v = to_state_vector(wf);
  if (static_cast<long>(v.size()) != ed.dim)
    throw Error(ErrorCode::DimensionMismatch, "wavefunction window does not match the lattice");

  Complex dot(0.0, 0.0);
  double nv = 0.0, ne = 0.0;
  for (long r = 0; r < ed.dim; ++r) {
    const Complex e = ed.vectors.at(r, index);
    dot += std::conj(v[r]) * e;
    nv += std::norm(v[r]);
    ne += std::norm(e);
  }
  if (nv == 0.0) throw Error(ErrorCode::ZeroState, "cannot match the zero state");
  const Complex alpha = dot / nv;

  double err = 0.0;
  for (long r = 0; r < ed.dim; ++r) err += std::norm(alpha * v[r] - ed.vectors.at(r, index));
  return {alpha, std::sqrt(err / ne)};
}

long nearest_eigenvalue(const EDResult& ed, Complex target) {
  long best = 0;
  double bd = std::numeric_limits<double>::max();
  for (long i = 0; i < ed.dim; ++i) {
    const double d = std::abs(ed.eigenvalues[i] - target);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

}  // namespace nhscatter
