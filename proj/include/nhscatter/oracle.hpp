// oracle.hpp — independent exact-diagonalization oracle: dense (L+1)-site
// single-excitation Hamiltonian under PBC or OBC, full eigenpairs through the
// in-repo QR solver, state classification and matching against analytic
// predictions.

#pragma once

#include <vector>

#include "nhscatter/bath.hpp"
#include "nhscatter/linalg.hpp"
#include "nhscatter/solver.hpp"
#include "nhscatter/wavefn.hpp"

namespace nhscatter {

enum class Boundary { PBC, OBC };

struct LatticeHamiltonian {
  BathSpec bath;
  EmitterParams params;
  long L = 0;
  Boundary boundary = Boundary::PBC;
  linalg::Matrix H;  // dimension L+1; row/column 0 is the emitter

  long dim() const { return L + 1; }
  long site_index(long x) const { return 1 + (x + L / 2); }
};

LatticeHamiltonian build_hamiltonian(const BathSpec& bath, const EmitterParams& params, long L,
                                     Boundary boundary);

enum class StateClass { Unclassified, Scattering, Bound, DegenerateFamily };

inline const char* to_string(StateClass c) {
  switch (c) {
    case StateClass::Scattering: return "scattering";
    case StateClass::Bound: return "bound";
    case StateClass::DegenerateFamily: return "degenerate_family";
    default: return "unclassified";
  }
}

struct EDResult {
  long dim = 0;
  long L = 0;
  std::vector<Complex> eigenvalues;
  linalg::Matrix vectors;  // column i: unit-norm right eigenvector
  std::vector<double> residuals;  // ||H v - E v|| per state
  std::vector<StateClass> classes;
  std::vector<double> loc_lengths;
  std::vector<double> band_distances;
};

// All eigenpairs; deterministic (fixed iteration order and start vectors).
EDResult eigenpairs(const LatticeHamiltonian& H, long max_dim = 2048);

// Fill classification: BOUND iff the eigenvalue sits farther from the sampled
// band curve than 10x the median level spacing AND the fitted localization
// length is below L/10; DEGENERATE_FAMILY for states within the windows of
// the supplied fine-tuned energies.
void classify_states(EDResult& ed, const BathSpec& bath,
                     const std::vector<Complex>& degenerate_energies = {});

struct MatchResult {
  Complex alpha;     // argmin_a ||a v(wf) - v_ED||
  double rel_error;  // ||alpha v(wf) - v_ED|| / ||v_ED||
};

MatchResult match_state(const EDResult& ed, long index, const WaveFunction& wf);

// Nearest eigenvalue index to a target energy.
long nearest_eigenvalue(const EDResult& ed, Complex target);

// Photon-weight mean position sum_x x |v(x)|^2 / sum_x |v(x)|^2.
double state_mean_position(const EDResult& ed, long index);

// Least-squares decay length of the photon profile away from its peak.
double fitted_localization_length(const EDResult& ed, long index);

}  // namespace nhscatter
