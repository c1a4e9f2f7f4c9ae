// Python bindings for the main operations: bath models, self-energies,
// secular solves, bound states, wavefunctions and the ED oracle.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nhscatter/bath.hpp"
#include "nhscatter/oracle.hpp"
#include "nhscatter/selfenergy.hpp"
#include "nhscatter/solver.hpp"
#include "nhscatter/wavefn.hpp"

namespace py = pybind11;
using namespace nhscatter;

namespace {

std::vector<std::vector<Complex>> ed_vectors(const EDResult& ed) {
  std::vector<std::vector<Complex>> cols(ed.dim, std::vector<Complex>(ed.dim));
  for (long i = 0; i < ed.dim; ++i)
    for (long r = 0; r < ed.dim; ++r) cols[i][r] = ed.vectors.at(r, i);
  return cols;
}

}  // namespace

PYBIND11_MODULE(_nhscatter, m) {
  m.doc() = "Scattering and bound states of an emitter coupled to 1D non-Hermitian baths";

  py::register_exception<Error>(m, "NhscatterError");

  py::enum_<Branch>(m, "Branch")
      .value("GREATER", Branch::Greater)
      .value("LESS", Branch::Less);
  py::enum_<Side>(m, "Side")
      .value("AUTO", Side::Auto)
      .value("PLUS", Side::PlusHalf)
      .value("MINUS", Side::MinusHalf);
  py::enum_<Boundary>(m, "Boundary").value("PBC", Boundary::PBC).value("OBC", Boundary::OBC);
  py::enum_<NnnRegion>(m, "NnnRegion").value("K1", NnnRegion::K1).value("K2", NnnRegion::K2);

  py::class_<BathSpec>(m, "BathSpec")
      .def(py::init<int, int, std::vector<Complex>>(), py::arg("p"), py::arg("q"),
           py::arg("hoppings"))
      .def_property_readonly("p", &BathSpec::left_range)
      .def_property_readonly("q", &BathSpec::right_range)
      .def("hopping", &BathSpec::hopping)
      .def_property_readonly("unidirectional", &BathSpec::unidirectional);

  m.def("hn_bath", &hn_bath, py::arg("u"), py::arg("kappa"));
  m.def("nnn_bath", &nnn_bath, py::arg("kappa"), py::arg("kappap"));
  m.def("nnn_k_si", &nnn_k_si);

  m.def("dispersion", py::overload_cast<const BathSpec&, double>(&dispersion));
  m.def("dispersion_c", py::overload_cast<const BathSpec&, Complex>(&dispersion));
  m.def("dispersion_derivative",
        py::overload_cast<const BathSpec&, double, int>(&dispersion_derivative));
  m.def("symbol", &symbol);
  m.def("symbol_derivative", &symbol_derivative);
  m.def("symbol_roots", [](const BathSpec& b, Complex E) {
    std::vector<std::tuple<Complex, int, bool>> out;
    for (const auto& r : symbol_roots(b, E).roots)
      out.emplace_back(r.y, r.multiplicity, r.on_circle);
    return out;
  });
  m.def("winding_number", &winding_number);
  m.def("winding_number_quadrature", &winding_number_quadrature, py::arg("bath"), py::arg("z"),
        py::arg("samples") = 4096);
  m.def("band_distance", &band_distance, py::arg("bath"), py::arg("z"), py::arg("samples") = 4096);
  m.def("self_intersections", [](const BathSpec& b) {
    std::vector<std::tuple<double, double, Complex>> out;
    for (const auto& s : self_intersections(b)) out.emplace_back(s.k1, s.k2, s.energy);
    return out;
  });

  m.def("sigma_finite_sum",
        [](const BathSpec& b, double J, long L, Complex z, long x) {
          return sigma_finite_sum(b, J, L, z, x).value;
        });
  m.def("sigma_finite_residue",
        [](const BathSpec& b, double J, long L, Complex z, long x) {
          return sigma_finite_residue(b, J, L, z, x).value;
        });
  m.def(
      "sigma_thermo",
      [](const BathSpec& b, double J, Complex z, long x, std::optional<Branch> branch) {
        return sigma_thermo(b, J, z, x, branch).value;
      },
      py::arg("bath"), py::arg("J"), py::arg("z"), py::arg("x"),
      py::arg("branch") = std::nullopt);
  m.def("sigma_thermo_continued", &sigma_thermo_continued, py::arg("bath"), py::arg("J"),
        py::arg("k_tilde"), py::arg("x"), py::arg("branch"), py::arg("side") = Side::Auto);
  m.def("branch_jump", &branch_jump);
  m.def("sum_rule_residual", &sum_rule_residual);

  py::class_<EmitterParams>(m, "EmitterParams")
      .def(py::init<double, double>(), py::arg("J"), py::arg("Delta"))
      .def_readwrite("J", &EmitterParams::J)
      .def_readwrite("Delta", &EmitterParams::Delta);

  m.def("emitter_green", &emitter_green, py::arg("bath"), py::arg("params"), py::arg("z"),
        py::arg("branch") = std::nullopt, py::arg("side") = Side::Auto);
  m.def("emitter_green_continued", &emitter_green_continued, py::arg("bath"), py::arg("params"),
        py::arg("k_tilde"), py::arg("branch"), py::arg("side") = Side::Auto);
  m.def("imk_leading", &imk_leading);

  py::class_<ScatteringMomentum>(m, "ScatteringMomentum")
      .def_readonly("k_base", &ScatteringMomentum::k_base)
      .def_readonly("k_tilde", &ScatteringMomentum::k_tilde)
      .def_readonly("E", &ScatteringMomentum::E)
      .def_readonly("L", &ScatteringMomentum::L)
      .def_readonly("residual", &ScatteringMomentum::residual);

  m.def("scattering_momentum", &scattering_momentum);
  m.def("secular_residual_direct", &secular_residual_direct);

  py::enum_<BoundKind>(m, "BoundKind")
      .value("CONVENTIONAL", BoundKind::Conventional)
      .value("HIDDEN", BoundKind::Hidden);

  py::class_<BoundState>(m, "BoundState")
      .def_readonly("E_b", &BoundState::E_b)
      .def_readonly("k_tilde", &BoundState::k_tilde)
      .def_readonly("pole_branches", &BoundState::pole_branches)
      .def_readonly("region_winding", &BoundState::region_winding)
      .def_readonly("kind", &BoundState::kind);

  m.def(
      "bound_states",
      [](const BathSpec& b, const EmitterParams& p) { return bound_states(b, p); },
      py::arg("bath"), py::arg("params"));

  py::class_<WaveFunction>(m, "WaveFunction")
      .def_readonly("L", &WaveFunction::L)
      .def_readonly("amplitudes", &WaveFunction::amplitudes)
      .def_readonly("c_e", &WaveFunction::c_e)
      .def_readonly("normalized", &WaveFunction::normalized)
      .def_readonly("energy", &WaveFunction::energy)
      .def_readonly("k_tilde", &WaveFunction::k_tilde)
      .def("psi", &WaveFunction::psi);

  m.def("formal_wavefunction", &formal_wavefunction);
  m.def("ls_wavefunction", &ls_wavefunction);
  m.def("hn_closed_form", &hn_closed_form);
  m.def("nnn_closed_form", &nnn_closed_form);
  m.def("plane_wave_superposition", &plane_wave_superposition);
  m.def("normalize", &normalize);
  m.def("to_state_vector", &to_state_vector);

  py::class_<LatticeHamiltonian>(m, "LatticeHamiltonian")
      .def_property_readonly("dim", &LatticeHamiltonian::dim)
      .def("element",
           [](const LatticeHamiltonian& h, long i, long j) { return h.H.at(i, j); });

  m.def("build_hamiltonian", &build_hamiltonian);

  py::class_<EDResult>(m, "EDResult")
      .def_readonly("dim", &EDResult::dim)
      .def_readonly("eigenvalues", &EDResult::eigenvalues)
      .def_readonly("residuals", &EDResult::residuals)
      .def("vectors", &ed_vectors);

  m.def("eigenpairs", &eigenpairs, py::arg("hamiltonian"), py::arg("max_dim") = 2048);
  m.def("nearest_eigenvalue", &nearest_eigenvalue);
  m.def("match_state", [](const EDResult& ed, long index, const WaveFunction& wf) {
    const MatchResult r = match_state(ed, index, wf);
    return std::make_pair(r.alpha, r.rel_error);
  });
}
