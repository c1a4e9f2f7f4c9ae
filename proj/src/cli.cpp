#include "nhscatter/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nhscatter/bath.hpp"
#include "nhscatter/io.hpp"
#include "nhscatter/oracle.hpp"
#include "nhscatter/selfenergy.hpp"
#include "nhscatter/solver.hpp"
#include "nhscatter/wavefn.hpp"

namespace nhscatter {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::string model = "hn";
  double u = std::nan("");
  double kappa = std::nan("");
  double kappap = std::nan("");
  std::string bath_file;
  double J = 20.0;
  double delta = 2.14;
  long L = 801;
  std::string boundary = "pbc";
  std::string out = "out";
  std::string format = "csv";
  std::string branch = ">";
  long m = -1;
  double k_target = std::nan("");
  std::string fine;  // "si" or "second-order"
  int fine_m = 1;
  std::string L_list = "101,201,401,801,1601";
};

void apply_defaults(RunConfig& cfg) {
  if (std::isnan(cfg.u)) cfg.u = 6.0;
  if (std::isnan(cfg.kappa)) cfg.kappa = (cfg.model == "nnn") ? 5.0 : 2.0;
  if (std::isnan(cfg.kappap)) cfg.kappap = 12.0;
}

BathSpec make_bath(const RunConfig& cfg) {
  if (cfg.model == "hn") return hn_bath(cfg.u, cfg.kappa);
  if (cfg.model == "nnn") return nnn_bath(cfg.kappa, cfg.kappap);
  if (cfg.model == "custom") {
    if (cfg.bath_file.empty())
      throw Error(ErrorCode::ConfigError, "--model custom requires --bath FILE");
    return parse_bath_file(cfg.bath_file);
  }
  throw Error(ErrorCode::ConfigError, "unknown model '" + cfg.model + "'");
}

Boundary make_boundary(const RunConfig& cfg) {
  if (cfg.boundary == "pbc") return Boundary::PBC;
  if (cfg.boundary == "obc") return Boundary::OBC;
  throw Error(ErrorCode::ConfigError, "boundary must be pbc or obc");
}

Branch make_branch(const RunConfig& cfg) {
  if (cfg.branch == ">") return Branch::Greater;
  if (cfg.branch == "<") return Branch::Less;
  throw Error(ErrorCode::ConfigError, "branch must be '>' or '<'");
}

std::vector<long> parse_L_list(const std::string& s) {
  std::vector<long> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad L list entry '" + item + "'");
    }
  }
  return out;
}

// Tracks created files so a failed command leaves no partial output behind.
struct OutputTracker {
  std::vector<fs::path> written;

  void cleanup() {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> cols;
  std::vector<std::vector<json>> rows;

  void write(const fs::path& base, const std::string& format, OutputTracker& track) const {
    if (format == "json") {
      json arr = json::array();
      for (const auto& r : rows) {
        json obj;
        for (size_t i = 0; i < cols.size(); ++i) obj[cols[i]] = r[i];
        arr.push_back(std::move(obj));
      }
      json doc;
      for (const auto& c : comments) doc["meta"].push_back(c);
      doc["rows"] = std::move(arr);
      const fs::path p = base.string() + ".json";
      std::ofstream out(p);
      out << doc.dump(1) << "\n";
      track.written.push_back(p);
      return;
    }
    const fs::path p = base.string() + ".csv";
    CsvWriter w(p);
    for (const auto& c : comments) w.comment(c);
    w.header(cols);
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      for (const auto& v : r) {
        if (v.is_number_float())
          cells.push_back(format_csv(v.get<double>()));
        else if (v.is_string())
          cells.push_back(v.get<std::string>());
        else
          cells.push_back(v.dump());
      }
      w.row(cells);
    }
    w.close();
    track.written.push_back(p);
  }
};

void write_json(const fs::path& p, const json& doc, OutputTracker& track) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + p.string() + "'");
  out << doc.dump(1) << "\n";
  track.written.push_back(p);
}

json params_json(const RunConfig& cfg) {
  json j{{"model", cfg.model}, {"J", cfg.J},         {"delta", cfg.delta},
         {"L", cfg.L},         {"boundary", cfg.boundary}};
  if (cfg.model == "hn") {
    j["u"] = cfg.u;
    j["kappa"] = cfg.kappa;
  } else if (cfg.model == "nnn") {
    j["kappa"] = cfg.kappa;
    j["kappap"] = cfg.kappap;
  } else {
    j["bath_file"] = cfg.bath_file;
  }
  return j;
}

std::string branches_string(const std::vector<Branch>& bs) {
  std::string s;
  for (const Branch& b : bs) s += to_string(b);
  return s;
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const RunConfig& cfg, OutputTracker& track) {
  const BathSpec bath = make_bath(cfg);
  const EmitterParams params{cfg.J, cfg.delta};
  const fs::path out(cfg.out);
  fs::create_directories(out);

  const LatticeHamiltonian H = build_hamiltonian(bath, params, cfg.L, make_boundary(cfg));
  EDResult ed = eigenpairs(H);
  classify_states(ed, bath);

  std::vector<BoundState> bounds;
  if (cfg.J != 0.0) bounds = bound_states(bath, params);

  Table band;
  band.comments = {"band curve h_k"};
  band.cols = {"k", "re_h", "im_h"};
  for (int i = 0; i < 2048; ++i) {
    const double k = -kPi + 2.0 * kPi * (i + 0.5) / 2048;
    const Complex h = dispersion(bath, k);
    band.rows.push_back({k, h.real(), h.imag()});
  }
  band.write(out / "band", cfg.format, track);

  Table spec;
  spec.comments = {"single-excitation spectrum, dimension L+1"};
  spec.cols = {"re_E", "im_E", "class", "loc_length"};
  long nbound = 0;
  for (long i = 0; i < ed.dim; ++i) {
    if (ed.classes[i] == StateClass::Bound) ++nbound;
    spec.rows.push_back({ed.eigenvalues[i].real(), ed.eigenvalues[i].imag(),
                         std::string(to_string(ed.classes[i])),
                         std::isfinite(ed.loc_lengths[i]) ? ed.loc_lengths[i] : -1.0});
  }
  spec.write(out / "spectrum", cfg.format, track);

  Table bt;
  bt.comments = {"analytic bound states and matched ED eigenvalues"};
  bt.cols = {"re_k_tilde", "im_k_tilde", "re_E", "im_E", "branches", "winding",
             "kind",       "re_E_ed",    "im_E_ed", "ed_distance"};
  for (const BoundState& b : bounds) {
    const long idx = nearest_eigenvalue(ed, b.E_b);
    const Complex eed = ed.eigenvalues[idx];
    bt.rows.push_back({b.k_tilde.real(), b.k_tilde.imag(), b.E_b.real(), b.E_b.imag(),
                       branches_string(b.pole_branches), b.region_winding,
                       std::string(b.kind == BoundKind::Conventional ? "conventional" : "hidden"),
                       eed.real(), eed.imag(), std::abs(eed - b.E_b)});
  }
  bt.write(out / "bound_states", cfg.format, track);

  json summary{{"command", "spectrum"},
               {"params", params_json(cfg)},
               {"counts",
                {{"eigenvalues", ed.dim},
                 {"bound_ed", nbound},
                 {"bound_analytic", static_cast<long>(bounds.size())},
                 {"scattering", ed.dim - nbound}}}};
  write_json(out / "summary.json", summary, track);

  std::cout << "spectrum: " << ed.dim << " eigenvalues, " << nbound << " bound (ED), "
            << bounds.size() << " bound (analytic)\n";
  return 0;
}

// ------------------------------------------------------------------- state

int cmd_state(const RunConfig& cfg, OutputTracker& track) {
  const BathSpec bath = make_bath(cfg);
  const EmitterParams params{cfg.J, cfg.delta};
  require_coupling(params);
  const fs::path out(cfg.out);
  fs::create_directories(out);
  const Branch branch = make_branch(cfg);

  WaveFunction wf;
  json mode_info;

  if (cfg.fine.empty()) {
    long m = cfg.m;
    if (m < 0) {
      if (std::isnan(cfg.k_target))
        throw Error(ErrorCode::ConfigError, "state needs --m or --k-target or --fine");
      m = std::lround(reduce_momentum(cfg.k_target) / (2.0 * kPi) * cfg.L);
      m = ((m % cfg.L) + cfg.L) % cfg.L;
      if (m == 0) m = cfg.L;
    }
    const ScatteringMomentum sm = scattering_momentum(bath, params, cfg.L, m);
    if (cfg.model == "hn") {
      wf = hn_closed_form(cfg.u, cfg.kappa, params, sm.k_tilde, branch, cfg.L);
    } else if (cfg.model == "nnn") {
      const NnnRegion region =
          std::abs(reduce_momentum(sm.k_tilde.real())) < nnn_k_si(cfg.kappa, cfg.kappap)
              ? NnnRegion::K1
              : NnnRegion::K2;
      wf = nnn_closed_form(cfg.kappa, cfg.kappap, params, sm.k_tilde, region, branch, cfg.L);
      mode_info["region"] = (region == NnnRegion::K1) ? "k1" : "k2";
    } else {
      wf = ls_wavefunction(bath, params, sm.k_tilde, branch, cfg.L);
    }
    mode_info["m"] = m;
    mode_info["k_base"] = sm.k_base;
    mode_info["secular_residual"] = std::abs(sm.residual);
  } else if (cfg.fine == "si") {
    const auto sis = self_intersections(bath);
    if (sis.empty()) throw Error(ErrorCode::NotDegenerate, "bath has no self-intersection");
    const auto pair = degenerate_momenta(bath, params, cfg.L,
                                         DegenerateTarget::self_intersection(sis.front()));
    wf = degenerate_wavefunction(bath, params, cfg.L, {pair[0].k_tilde, pair[1].k_tilde});
    mode_info["fine"] = "si";
    mode_info["k_alpha"] = {pair[0].k_tilde.real(), pair[0].k_tilde.imag()};
    mode_info["k_gamma"] = {pair[1].k_tilde.real(), pair[1].k_tilde.imag()};
  } else if (cfg.fine == "second-order") {
    const auto pts = vanishing_velocity_points(bath);
    if (pts.empty()) throw Error(ErrorCode::NotDegenerate, "no vanishing-derivative momentum");
    const auto pair = degenerate_momenta(bath, params, cfg.L,
                                         DegenerateTarget::second_order(pts.front(), cfg.fine_m));
    wf = degenerate_wavefunction(bath, params, cfg.L, {pair[0].k_tilde, pair[1].k_tilde});
    mode_info["fine"] = "second-order";
    mode_info["m"] = cfg.fine_m;
    mode_info["k_r"] = pts.front();
  } else {
    throw Error(ErrorCode::ConfigError, "--fine must be 'si' or 'second-order'");
  }

  const LatticeHamiltonian H = build_hamiltonian(bath, params, cfg.L, make_boundary(cfg));
  const EDResult ed = eigenpairs(H);
  const long idx = nearest_eigenvalue(ed, wf.energy);
  const MatchResult match = match_state(ed, idx, wf);

  Table t;
  t.comments = {"aligned analytic state vs exact-diagonalization eigenvector",
                "alpha scales the analytic state onto the ED vector"};
  t.cols = {"x",      "re_ed",      "im_ed",      "abs_ed",
            "re_analytic", "im_analytic", "abs_analytic", "abs_dev"};
  const std::vector<Complex> v = to_state_vector(wf);
  for (long x = wf.window_min(); x <= wf.window_max(); ++x) {
    const long r = 1 + (x + cfg.L / 2);
    const Complex e = ed.vectors.at(r, idx);
    const Complex a = match.alpha * v[r];
    t.rows.push_back({static_cast<double>(x), e.real(), e.imag(), std::abs(e), a.real(), a.imag(),
                      std::abs(a), std::abs(a - e)});
  }
  t.write(out / "state", cfg.format, track);

  json summary{{"command", "state"},
               {"params", params_json(cfg)},
               {"mode", mode_info},
               {"branch", cfg.branch},
               {"k_tilde", {wf.k_tilde.real(), wf.k_tilde.imag()}},
               {"energy", {wf.energy.real(), wf.energy.imag()}},
               {"matched_eigenvalue",
                {ed.eigenvalues[idx].real(), ed.eigenvalues[idx].imag()}},
               {"alpha", {match.alpha.real(), match.alpha.imag()}},
               {"rel_error", match.rel_error},
               {"c_e", {wf.c_e.real(), wf.c_e.imag()}},
               {"c_e_below_floor", std::abs(wf.c_e) < 1e-12}};
  write_json(out / "state_summary.json", summary, track);

  std::cout << "state: matched eigenvalue (" << ed.eigenvalues[idx].real() << ", "
            << ed.eigenvalues[idx].imag() << "), relative L2 error " << match.rel_error << "\n";
  return 0;
}

// ------------------------------------------------------------------- bound

int cmd_bound(const RunConfig& cfg, OutputTracker& track) {
  const BathSpec bath = make_bath(cfg);
  const EmitterParams params{cfg.J, cfg.delta};
  require_coupling(params);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  const std::vector<BoundState> bounds = bound_states(bath, params);
  const LatticeHamiltonian H = build_hamiltonian(bath, params, cfg.L, make_boundary(cfg));
  const EDResult ed = eigenpairs(H);

  Table t;
  t.comments = {"bound states: poles of the branch-resolved emitter Green's functions"};
  t.cols = {"re_k_tilde", "im_k_tilde", "re_E", "im_E", "branches", "winding",
            "kind",       "re_E_ed",    "im_E_ed", "ed_distance"};
  json jb = json::array();
  for (const BoundState& b : bounds) {
    const long idx = nearest_eigenvalue(ed, b.E_b);
    const Complex eed = ed.eigenvalues[idx];
    const std::string kind = (b.kind == BoundKind::Conventional) ? "conventional" : "hidden";
    t.rows.push_back({b.k_tilde.real(), b.k_tilde.imag(), b.E_b.real(), b.E_b.imag(),
                      branches_string(b.pole_branches), b.region_winding, kind, eed.real(),
                      eed.imag(), std::abs(eed - b.E_b)});
    jb.push_back({{"k_tilde", {b.k_tilde.real(), b.k_tilde.imag()}},
                  {"E_b", {b.E_b.real(), b.E_b.imag()}},
                  {"branches", branches_string(b.pole_branches)},
                  {"winding", b.region_winding},
                  {"kind", kind},
                  {"ed_distance", std::abs(eed - b.E_b)}});
  }
  t.write(out / "bound_states", cfg.format, track);

  json summary{{"command", "bound"},
               {"params", params_json(cfg)},
               {"count", static_cast<long>(bounds.size())},
               {"bound_states", jb}};
  write_json(out / "bound_summary.json", summary, track);

  std::cout << "bound: " << bounds.size() << " states\n";
  for (const BoundState& b : bounds)
    std::cout << "  k~ = (" << b.k_tilde.real() << ", " << b.k_tilde.imag() << "), E_b = ("
              << b.E_b.real() << ", " << b.E_b.imag() << ") ["
              << (b.kind == BoundKind::Conventional ? "conventional" : "hidden") << ", w = "
              << b.region_winding << "]\n";
  return 0;
}

// ----------------------------------------------------------------- scaling

struct LinearFit {
  double slope;
  double intercept;
  double r2;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - slope * xs[i] - intercept;
    ss_res += r * r;
  }
  const double ss_tot = syy - sy * sy / n;
  return {slope, intercept, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

int cmd_scaling(const RunConfig& cfg, OutputTracker& track) {
  const BathSpec bath = make_bath(cfg);
  const EmitterParams params{cfg.J, cfg.delta};
  require_coupling(params);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  const std::vector<long> Ls = parse_L_list(cfg.L_list);
  if (Ls.size() < 4) throw Error(ErrorCode::ConfigError, "scaling needs at least 4 values of L");
  const double k_target = std::isnan(cfg.k_target) ? 1.0 : cfg.k_target;

  Table t;
  t.comments = {"difference between Im k~ and its leading order vs L"};
  t.cols = {"L", "k_base", "imk_leading", "im_k_solved", "abs_diff"};
  std::vector<double> lx, ly;
  for (long L : Ls) {
    long m = std::lround(reduce_momentum(k_target) / (2.0 * kPi) * L);
    m = ((m % L) + L) % L;
    if (m == 0) m = L;
    const ScatteringMomentum sm = scattering_momentum(bath, params, L, m);
    const double lead = imk_leading(bath, params, L, sm.k_base);
    const double diff = std::abs(sm.k_tilde.imag() - lead);
    t.rows.push_back({static_cast<double>(L), sm.k_base, lead, sm.k_tilde.imag(), diff});
    if (diff > 0.0) {
      lx.push_back(std::log(static_cast<double>(L)));
      ly.push_back(std::log(diff));
    }
  }
  t.write(out / "imk_scaling", cfg.format, track);
  const LinearFit fit = fit_line(lx, ly);

  // Off-band convergence of Sigma^{(L)} toward the thermodynamic limit.
  Complex z_off = dispersion(bath, k_target) + kI * (1.0 + bath.hopping_scale());
  while (band_distance(bath, z_off) < 0.05 * bath.hopping_scale())
    z_off += kI * bath.hopping_scale();
  const Complex sig_inf = sigma_thermo(bath, params.J, z_off, 0).value;
  Table conv;
  conv.comments = {"off-band |Sigma^(L) - Sigma| at z = (" + format_csv(z_off.real()) + ", " +
                   format_csv(z_off.imag()) + ")"};
  conv.cols = {"L", "abs_err"};
  for (long L : {16L, 32L, 64L, 128L, 256L, 512L}) {
    const Complex s = sigma_finite_sum(bath, params.J, L, z_off, 0).value;
    conv.rows.push_back({static_cast<double>(L), std::abs(s - sig_inf)});
  }
  conv.write(out / "sigma_offband", cfg.format, track);

  // On-band |Sigma^{(L)}(h_k)| series: does not converge with system size.
  const Complex z_on = dispersion(bath, k_target);
  Table onb;
  onb.comments = {"on-band |Sigma^(L)(h_k)| at k = " + format_csv(k_target)};
  onb.cols = {"L", "abs_sigma"};
  std::vector<double> vals;
  for (long L = 100; L <= 2000; L += 100) {
    const Complex s = sigma_finite_sum(bath, params.J, L, z_on, 0).value;
    onb.rows.push_back({static_cast<double>(L), std::abs(s)});
    vals.push_back(std::abs(s));
  }
  onb.write(out / "sigma_onband", cfg.format, track);
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  const double cv = std::sqrt(var / vals.size()) / mean;

  json summary{{"command", "scaling"},
               {"params", params_json(cfg)},
               {"k_target", k_target},
               {"imk_slope", fit.slope},
               {"imk_fit_r2", fit.r2},
               {"onband_cv", cv}};
  write_json(out / "scaling_summary.json", summary, track);

  std::cout << "scaling: log-log slope " << fit.slope << " (r2 " << fit.r2 << "), on-band CV "
            << cv << "\n";
  return 0;
}

// ------------------------------------------------------------------ verify

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

BathSpec random_bath(std::mt19937& rng) {
  std::uniform_int_distribution<int> range(0, 3);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  int p = 0, q = 0;
  while (p + q < 1) {
    p = range(rng);
    q = range(rng);
  }
  std::vector<Complex> hops(p + q + 1);
  for (auto& h : hops) h = Complex(amp(rng), amp(rng));
  if (p >= 1 && std::abs(hops.front()) < 0.2) hops.front() += Complex(0.5, 0.5);
  if (q >= 1 && std::abs(hops.back()) < 0.2) hops.back() += Complex(0.5, 0.5);
  return BathSpec(p, q, hops);
}

Complex random_offband_z(const BathSpec& bath, std::mt19937& rng) {
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  const double s = bath.hopping_scale();
  for (int tries = 0; tries < 200; ++tries) {
    const Complex z(box(rng) * s, box(rng) * s);
    if (band_distance(bath, z, 1024) > 1e-3 * s) return z;
  }
  throw Error(ErrorCode::InternalCheck, "could not sample an off-band point");
}

double align_distance(const WaveFunction& a, const WaveFunction& b) {
  // Projective pointwise distance: scale a onto b, then max relative deviation.
  const std::vector<Complex> va = to_state_vector(a);
  const std::vector<Complex> vb = to_state_vector(b);
  Complex dot = 0.0;
  double na = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    dot += std::conj(va[i]) * vb[i];
    na += std::norm(va[i]);
  }
  const Complex alpha = dot / na;
  double worst = 0.0;
  for (size_t i = 0; i < va.size(); ++i)
    worst = std::max(worst,
                     std::abs(alpha * va[i] - vb[i]) / (1.0 + std::abs(vb[i])));
  return worst;
}

int cmd_verify(const RunConfig& cfg, OutputTracker& track) {
  const fs::path out(cfg.out);
  fs::create_directories(out);
  std::vector<Check> checks;
  std::mt19937 rng(12345);

  const BathSpec hn = hn_bath(6.0, 2.0);
  const BathSpec nnn = nnn_bath(5.0, 12.0);
  const EmitterParams pp{20.0, 2.14};

  auto run = [&](const std::string& name, const std::function<std::string()>& body) {
    try {
      const std::string detail = body();
      checks.push_back({name, true, detail});
    } catch (const std::exception& e) {
      checks.push_back({name, false, e.what()});
    }
  };

  run("bath.root_count_and_residual", [&] {
    for (int t = 0; t < 10; ++t) {
      const BathSpec b = random_bath(rng);
      for (int j = 0; j < 10; ++j) {
        const Complex E = random_offband_z(b, rng);
        const SymbolRoots sr = symbol_roots(b, E);
        if (sr.total_multiplicity() != b.left_range() + b.right_range())
          throw Error(ErrorCode::InternalCheck, "root count mismatch");
        for (const auto& r : sr.roots) {
          const double res = std::abs(E - symbol(b, r.y));
          if (res > 1e-10 * std::max(std::abs(E), b.hopping_scale()))
            throw Error(ErrorCode::InternalCheck, "root residual " + std::to_string(res));
        }
      }
    }
    return "100 random (bath, E) instances";
  });

  run("bath.winding_consistency", [&] {
    int n = 0;
    for (const BathSpec& b : {hn, nnn, random_bath(rng), random_bath(rng)}) {
      for (int j = 0; j < 25; ++j) {
        const Complex z = random_offband_z(b, rng);
        if (winding_number(b, z) != winding_number_quadrature(b, z)) {
          throw Error(ErrorCode::InternalCheck, "winding mismatch at z = (" +
                                                    std::to_string(z.real()) + ", " +
                                                    std::to_string(z.imag()) + ")");
        }
        ++n;
      }
    }
    return std::to_string(n) + " points, root counting == argument principle";
  });

  run("bath.winding_regions", [&] {
    if (winding_number(hn, Complex(0.0, 0.0)) != -1) throw Error(ErrorCode::InternalCheck, "hn w(0)");
    if (winding_number(hn, Complex(40.0, 0.0)) != 0) throw Error(ErrorCode::InternalCheck, "hn far");
    if (winding_number(nnn, Complex(2.14, 0.0)) != -2) throw Error(ErrorCode::InternalCheck, "nnn inner");
    if (winding_number(nnn, Complex(-11.5, 0.0)) != -1) throw Error(ErrorCode::InternalCheck, "nnn annulus");
    if (winding_number(nnn, Complex(40.0, 0.0)) != 0) throw Error(ErrorCode::InternalCheck, "nnn outer");
    return "winding jumps by one per band-curve crossing along the real axis";
  });

  run("bath.derivative_finite_difference", [&] {
    std::uniform_real_distribution<double> ku(-kPi, kPi);
    for (int t = 0; t < 5; ++t) {
      const BathSpec b = random_bath(rng);
      for (int j = 0; j < 10; ++j) {
        const double k = ku(rng);
        const double h = 1e-6;
        const Complex fd = (dispersion(b, k + h) - dispersion(b, k - h)) / (2.0 * h);
        const Complex an = dispersion_derivative(b, k, 1);
        if (std::abs(fd - an) > 1e-6 * (1.0 + std::abs(an)))
          throw Error(ErrorCode::InternalCheck, "derivative mismatch");
      }
    }
    return "central differences at 50 momenta";
  });

  run("selfenergy.residue_equals_sum", [&] {
    std::uniform_int_distribution<int> Lpick(0, 2);
    const long Ls[3] = {32, 64, 128};
    for (int t = 0; t < 50; ++t) {
      const BathSpec b = random_bath(rng);
      const long L = Ls[Lpick(rng)];
      std::uniform_int_distribution<long> xu(-(L / 2), (L - 1) / 2);
      const Complex z = random_offband_z(b, rng);
      const long x = xu(rng);
      const Complex a = sigma_finite_sum(b, 3.0, L, z, x).value;
      const Complex r = sigma_finite_residue(b, 3.0, L, z, x).value;
      if (std::abs(a - r) > 1e-10 * (1.0 + std::abs(a)))
        throw Error(ErrorCode::InternalCheck,
                    "sum/residue mismatch " + std::to_string(std::abs(a - r)));
    }
    return "50 random (bath, z, x, L) instances at 1e-10 relative";
  });

  run("selfenergy.f_identity", [&] {
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
      const Complex y(box(rng), box(rng));
      if (std::abs(y) < 0.05) continue;
      const Complex a = f_minus(y, 64);
      const Complex b = f_plus(y, 64) + 1.0;
      if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
        throw Error(ErrorCode::InternalCheck, "f identity");
    }
    return "f_- = f_+ + 1 at 100 random y";
  });

  run("selfenergy.sum_rules", [&] {
    for (int t = 0; t < 50; ++t) {
      const BathSpec b = (t % 3 == 0) ? hn : (t % 3 == 1) ? nnn : random_bath(rng);
      const Complex E = random_offband_z(b, rng);
      const Complex r = sum_rule_residual(b, E);
      if (std::abs(r) > 1e-10)
        throw Error(ErrorCode::InternalCheck, "sum rule residual " + std::to_string(std::abs(r)));
    }
    return "50 random energies, bidirectional and unidirectional rules";
  });

  run("selfenergy.branch_jump", [&] {
    std::uniform_real_distribution<double> ku(-kPi, kPi);
    int n = 0;
    for (int t = 0; t < 100; ++t) {
      const BathSpec& b = (t % 2 == 0) ? hn : nnn;
      const double k = ku(rng);
      if (std::abs(dispersion_derivative(b, k, 1)) < 1e-3 * b.hopping_scale()) continue;
      branch_jump(b, 3.0, k, t % 7 - 3);  // throws if the identity fails
      ++n;
    }
    return std::to_string(n) + " momenta";
  });

  run("selfenergy.offband_convergence_sign", [&] {
    for (const BathSpec& b : {hn, nnn}) {
      const Complex z = dispersion(b, 1.0) + Complex(0.0, 1.0 + b.hopping_scale());
      const Complex inf = sigma_thermo(b, 20.0, z, 0).value;
      std::vector<double> lx, ly;
      for (long L : {16L, 32L, 64L, 128L, 256L}) {
        const double err = std::abs(sigma_finite_sum(b, 20.0, L, z, 0).value - inf);
        if (err > 0) {
          lx.push_back(static_cast<double>(L));
          ly.push_back(std::log(err));
        }
      }
      const LinearFit f = fit_line(lx, ly);
      if (f.slope >= 0.0) throw Error(ErrorCode::InternalCheck, "no exponential convergence");
    }
    return "log-error decreases affinely in L for HN and NNN";
  });

  run("selfenergy.x0_side_discrepancy", [&] {
    const Complex E = random_offband_z(nnn, rng);
    const Complex plus = sigma_finite_residue_line(nnn, 20.0, 64, E, 0, Side::PlusHalf);
    const Complex minus = sigma_finite_residue_line(nnn, 20.0, 64, E, 0, Side::MinusHalf);
    const Complex expect = 400.0 / (E - nnn.hopping(0));
    if (std::abs(plus - minus - expect) > 1e-10 * (1.0 + std::abs(expect)))
      throw Error(ErrorCode::InternalCheck, "side discrepancy != J^2/(E - h_0)");
    return "J^2/(E - h_0), unidirectional convention";
  });

  run("solver.secular_residual_direct", [&] {
    for (const auto& [b, name] : {std::pair{hn, "hn"}, std::pair{nnn, "nnn"}}) {
      for (long m : {40L, 100L, 150L}) {
        const ScatteringMomentum sm = scattering_momentum(b, pp, 201, m);
        const double res = std::abs(secular_residual_direct(b, pp, 201, sm.k_tilde));
        if (res > 1e-8 * (1.0 + std::abs(sm.E)))
          throw Error(ErrorCode::InternalCheck,
                      std::string(name) + " residual " + std::to_string(res));
      }
    }
    return "independent direct-sum residual below 1e-8 scale";
  });

  run("solver.branch_equivalence", [&] {
    for (long m : {40L, 150L}) {
      const ScatteringMomentum a = scattering_momentum_approx(hn, pp, 401, m, Branch::Less);
      const ScatteringMomentum b = scattering_momentum_approx(hn, pp, 401, m, Branch::Greater);
      if (std::abs(a.k_tilde - b.k_tilde) > 1e-8)
        throw Error(ErrorCode::InternalCheck, "branches disagree");
    }
    return "Eq.-(ex) and Eq.-(in) routes agree to 1e-8";
  });

  run("solver.small_J_limit", [&] {
    const EmitterParams weak{1e-6, 2.14};
    const ScatteringMomentum sm = scattering_momentum(hn, weak, 101, 30);
    if (std::abs(sm.k_tilde - Complex(2.0 * kPi * 30 / 101, 0.0)) > 1e-8)
      throw Error(ErrorCode::InternalCheck, "k~ did not reduce to the Bloch momentum");
    return "J -> 0 recovers Bloch waves";
  });

  run("wavefn.branch_independence", [&] {
    const ScatteringMomentum sm = scattering_momentum(hn, pp, 201, 60);
    const WaveFunction a = ls_wavefunction(hn, pp, sm.k_tilde, Branch::Greater, 201);
    const WaveFunction b = ls_wavefunction(hn, pp, sm.k_tilde, Branch::Less, 201);
    const double d = align_distance(a, b);
    if (d > 1e-9) throw Error(ErrorCode::InternalCheck, "pointwise deviation " + std::to_string(d));
    return "GREATER and LESS describe the same state";
  });

  run("wavefn.closed_equals_generic", [&] {
    const ScatteringMomentum sm = scattering_momentum(hn, pp, 201, 60);
    const WaveFunction c = hn_closed_form(6.0, 2.0, pp, sm.k_tilde, Branch::Greater, 201);
    const WaveFunction g = ls_wavefunction(hn, pp, sm.k_tilde, Branch::Greater, 201);
    for (long x = c.window_min(); x <= c.window_max(); ++x)
      if (std::abs(c.psi(x) - g.psi(x)) > 1e-10 * (1.0 + std::abs(g.psi(x))))
        throw Error(ErrorCode::InternalCheck, "closed form deviates from generic construction");
    const ScatteringMomentum sn = scattering_momentum(nnn, pp, 201, 30);
    const NnnRegion region = std::abs(reduce_momentum(sn.k_tilde.real())) < nnn_k_si(5.0, 12.0)
                                 ? NnnRegion::K1
                                 : NnnRegion::K2;
    const WaveFunction cn = nnn_closed_form(5.0, 12.0, pp, sn.k_tilde, region, Branch::Greater, 201);
    const WaveFunction gn = ls_wavefunction(nnn, pp, sn.k_tilde, Branch::Greater, 201);
    for (long x = cn.window_min(); x <= cn.window_max(); ++x)
      if (std::abs(cn.psi(x) - gn.psi(x)) > 1e-10 * (1.0 + std::abs(gn.psi(x))))
        throw Error(ErrorCode::InternalCheck, "NNN closed form deviates");
    return "HN and NNN closed forms match the generic LS construction";
  });

  run("wavefn.nonuniform_amplitude", [&] {
    const ScatteringMomentum sm = scattering_momentum(hn, pp, 201, 60);
    const WaveFunction w = hn_closed_form(6.0, 2.0, pp, sm.k_tilde, Branch::Greater, 201);
    double lo = 1e300, hi = 0.0;
    for (const Complex& a : w.amplitudes) {
      lo = std::min(lo, std::abs(a));
      hi = std::max(hi, std::abs(a));
    }
    if (hi / lo <= 1.001)
      throw Error(ErrorCode::InternalCheck, "scattering state looks like a plane wave");
    return "NH scattering states have inhomogeneous |psi|";
  });

  run("oracle.small_lattice", [&] {
    const LatticeHamiltonian H = build_hamiltonian(hn, pp, 64, Boundary::PBC);
    const EDResult ed = eigenpairs(H);
    if (ed.dim != 65) throw Error(ErrorCode::InternalCheck, "eigenvalue count");
    Complex tr = 0.0;
    for (const Complex& e : ed.eigenvalues) tr += e;
    const Complex expect = Complex(pp.Delta, 0.0) + 64.0 * hn.hopping(0);
    if (std::abs(tr - expect) > 1e-8 * (1.0 + std::abs(expect)))
      throw Error(ErrorCode::InternalCheck, "trace identity");
    for (long i = 0; i < ed.dim; ++i)
      if (ed.residuals[i] > 1e-8) throw Error(ErrorCode::InternalCheck, "eigenpair residual");
    // J = 0: spectrum is the band plus the detuning.
    const LatticeHamiltonian H0 = build_hamiltonian(hn, {0.0, 2.14}, 32, Boundary::PBC);
    const EDResult ed0 = eigenpairs(H0);
    for (long m = 1; m <= 32; ++m) {
      const Complex hk = dispersion(hn, 2.0 * kPi * m / 32);
      if (std::abs(ed0.eigenvalues[nearest_eigenvalue(ed0, hk)] - hk) > 1e-8)
        throw Error(ErrorCode::InternalCheck, "J=0 spectrum");
    }
    if (std::abs(ed0.eigenvalues[nearest_eigenvalue(ed0, Complex(2.14, 0.0))] - 2.14) > 1e-8)
      throw Error(ErrorCode::InternalCheck, "J=0 emitter level");
    // Hermitian special case: real spectrum.
    const LatticeHamiltonian Hh = build_hamiltonian(hn_bath(6.0, 0.0), pp, 64, Boundary::PBC);
    const EDResult edh = eigenpairs(Hh);
    for (const Complex& e : edh.eigenvalues)
      if (std::abs(e.imag()) > 1e-10) throw Error(ErrorCode::InternalCheck, "Hermitian reality");
    return "residuals, trace, count, J=0 and Hermitian limits";
  });

  bool all = true;
  json report = json::array();
  for (const Check& c : checks) {
    all = all && c.pass;
    report.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " — " << c.detail << "\n";
  }
  write_json(out / "verify_report.json",
             json{{"command", "verify"}, {"all_pass", all}, {"checks", report}}, track);
  std::cout << (all ? "verify: all checks passed\n" : "verify: FAILURES present\n");
  return all ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Scattering states, bound states, self-energies and emitter Green's functions "
               "for a two-level emitter coupled to 1D non-Hermitian lattice baths"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model, "hn | nnn | custom")->capture_default_str();
    sub->add_option("--u", cfg.u, "HN symmetric hopping u");
    sub->add_option("--kappa", cfg.kappa, "HN asymmetry / NNN nearest hopping");
    sub->add_option("--kappap", cfg.kappap, "NNN next-nearest hopping");
    sub->add_option("--bath", cfg.bath_file, "bath file for --model custom");
    sub->add_option("--J", cfg.J, "coupling strength")->capture_default_str();
    sub->add_option("--delta", cfg.delta, "emitter detuning")->capture_default_str();
    sub->add_option("--L", cfg.L, "lattice size")->capture_default_str();
    sub->add_option("--boundary", cfg.boundary, "pbc | obc")->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_option("--format", cfg.format, "csv | json")->capture_default_str();
    sub->add_option("--config", config_file, "key-value config file (CLI flags override)");
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "ED spectrum, band curve, bound markers");
  add_common(spectrum);
  CLI::App* state = app.add_subcommand("state", "one scattering state vs the ED eigenvector");
  add_common(state);
  state->add_option("--m", cfg.m, "mode index 1..L");
  state->add_option("--k-target", cfg.k_target, "target momentum (picks nearest m)");
  state->add_option("--fine", cfg.fine, "fine-tuned state: si | second-order");
  state->add_option("--fine-m", cfg.fine_m, "mode index for the second-order family");
  state->add_option("--branch", cfg.branch, "> | <")->capture_default_str();
  CLI::App* bound = app.add_subcommand("bound", "all bound states with ED match");
  add_common(bound);
  CLI::App* scaling = app.add_subcommand("scaling", "Im k~ leading-order scaling study");
  add_common(scaling);
  scaling->add_option("--L-list", cfg.L_list, "comma-separated lattice sizes")
      ->capture_default_str();
  scaling->add_option("--k-target", cfg.k_target, "momentum tracked across sizes");
  CLI::App* verify = app.add_subcommand("verify", "run the module property suites");
  add_common(verify);

  // Config-file pass: values act as defaults, explicit flags override.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  OutputTracker track;
  try {
    if (!config_file.empty()) {
      const auto kv = parse_config_file(config_file);
      auto maybe = [&](const std::string& key, auto& target, CLI::Option* opt) {
        const auto it = kv.find(key);
        if (it == kv.end() || (opt && opt->count() > 0)) return;
        std::stringstream ss(it->second);
        ss >> target;
        if (ss.fail()) throw Error(ErrorCode::ConfigError, "bad config value for " + key);
      };
      CLI::App* sub = app.get_subcommands().front();
      auto opt = [&](const std::string& name) -> CLI::Option* {
        return sub->get_option_no_throw(name);
      };
      maybe("model.type", cfg.model, opt("--model"));
      maybe("model.u", cfg.u, opt("--u"));
      maybe("model.kappa", cfg.kappa, opt("--kappa"));
      maybe("model.kappap", cfg.kappap, opt("--kappap"));
      maybe("model.bath", cfg.bath_file, opt("--bath"));
      maybe("emitter.J", cfg.J, opt("--J"));
      maybe("emitter.delta", cfg.delta, opt("--delta"));
      maybe("run.L", cfg.L, opt("--L"));
      maybe("run.boundary", cfg.boundary, opt("--boundary"));
      maybe("run.out", cfg.out, opt("--out"));
      maybe("run.format", cfg.format, opt("--format"));
      maybe("state.m", cfg.m, opt("--m"));
      maybe("state.k_target", cfg.k_target, opt("--k-target"));
      maybe("state.fine", cfg.fine, opt("--fine"));
      maybe("state.fine_m", cfg.fine_m, opt("--fine-m"));
      maybe("state.branch", cfg.branch, opt("--branch"));
      maybe("scaling.L_list", cfg.L_list, opt("--L-list"));
    }
    apply_defaults(cfg);
    if (cfg.format != "csv" && cfg.format != "json")
      throw Error(ErrorCode::ConfigError, "format must be csv or json");

    if (app.got_subcommand(spectrum)) return cmd_spectrum(cfg, track);
    if (app.got_subcommand(state)) return cmd_state(cfg, track);
    if (app.got_subcommand(bound)) return cmd_bound(cfg, track);
    if (app.got_subcommand(scaling)) return cmd_scaling(cfg, track);
    if (app.got_subcommand(verify)) return cmd_verify(cfg, track);
    return 2;
  } catch (const Error& e) {
    track.cleanup();
    std::cerr << "error: " << e.what() << "\n";
    return (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidBath) ? 2 : 1;
  } catch (const std::exception& e) {
    track.cleanup();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nhscatter
