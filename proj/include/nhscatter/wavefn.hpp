// wavefn.hpp — photon wavefunction constructors: the exact finite-L formal
// solution, the branch-resolved Lippmann-Schwinger form, closed forms for the
// Hatano-Nelson and unidirectional NNN baths, degenerate two-pole
// superpositions and plane-wave superpositions for exact spectral degeneracy.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "nhscatter/bath.hpp"
#include "nhscatter/solver.hpp"
#include "nhscatter/types.hpp"

namespace nhscatter {

// Photon amplitude on Z_L plus the emitter amplitude. amplitudes[i] holds the
// site x = i - floor(L/2); c_e and the amplitudes share one scale, so
// (c_e, amplitudes...) assembles directly into the (L+1)-dimensional state
// vector used by the exact-diagonalization oracle.
struct WaveFunction {
  long L = 0;
  std::vector<Complex> amplitudes;
  Complex c_e{0.0, 0.0};
  bool normalized = false;

  // construction metadata
  Complex energy{0.0, 0.0};
  Complex k_tilde{0.0, 0.0};
  std::optional<Branch> branch;

  long window_min() const { return -(L / 2); }
  long window_max() const { return (L - 1) / 2; }

  // psi(x) with x reduced mod L into the window
  Complex psi(long x) const {
    long r = ((x % L) + L) % L;
    if (r > window_max()) r -= L;
    return amplitudes[r + L / 2];
  }
};

// (c_e, psi(x_min..x_max)) as one vector; row 0 is the emitter.
std::vector<Complex> to_state_vector(const WaveFunction& wf);

// Exact formal eigenstate psi(x) proportional to Sigma^{(L)}_x(E) for a
// solution E of the finite-size secular equation (residual <= 1e-8 scale).
WaveFunction formal_wavefunction(const BathSpec& bath, const EmitterParams& params, long L,
                                 Complex E, Complex c_e);

// Lippmann-Schwinger form psi(x) = e^{ik~x} + G_e Sigma_x(h_{k~}) materialized
// on the L-site window, built from the branch-resolved thermodynamic
// self-energy. The two branch constructions describe the same state (they are
// exactly proportional).
WaveFunction ls_wavefunction(const BathSpec& bath, const EmitterParams& params, Complex k_tilde,
                             Branch branch, long L);

// Closed form for the Hatano-Nelson bath; kappa = 0 is the unsupported
// Hermitian limit.
WaveFunction hn_closed_form(double u, double kappa, const EmitterParams& params, Complex k_tilde,
                            Branch branch, long L);

// Dispersion arcs of the unidirectional NNN bath, separated by the
// self-intersection momentum: K1 is the outer loop |Re k| < k_SI (the
// winding-1 boundary), K2 the inner loop |Re k| > k_SI.
enum class NnnRegion { K1, K2 };

WaveFunction nnn_closed_form(double kappa, double kappap, const EmitterParams& params,
                             Complex k_tilde, NnnRegion region, Branch branch, long L);

// Two-pole superposition for fine-tuned states (self-intersection or
// second-order-pole pairs from degenerate_momenta). Unnormalized.
WaveFunction degenerate_wavefunction(const BathSpec& bath, const EmitterParams& params, long L,
                                     std::pair<Complex, Complex> k_pair);

// For an exactly degenerate finite-size eigenvalue shared by l+1 momenta:
// the l independent c_e = 0 plane-wave superpositions with zero coefficient
// sum.
std::vector<WaveFunction> plane_wave_superposition(const BathSpec& bath, long L, Complex E);

// Rescale so |c_e|^2 + sum_x |psi(x)|^2 = 1.
WaveFunction normalize(WaveFunction wf);

}  // namespace nhscatter
