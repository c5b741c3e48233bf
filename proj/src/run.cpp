#include "kryloc/run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "kryloc/csv.hpp"
#include "kryloc/dynamics.hpp"
#include "kryloc/errors.hpp"
#include "kryloc/eth.hpp"
#include "kryloc/localization.hpp"
#include "kryloc/models.hpp"
#include "kryloc/parallel.hpp"
#include "kryloc/spectral.hpp"

namespace kryloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

long long as_ll(std::size_t x) { return static_cast<long long>(x); }

std::string compact(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(format_number(x)); }

json stats_json(const LocalizationReport& r) {
  return {{"gamma_bar", r.stats.gamma_bar}, {"W2", r.stats.W2},
          {"var_gamma", r.stats.var_gamma}, {"window_start", r.stats.window_start},
          {"window_len", r.stats.window_len}, {"l_loc_0", finite_or_null(r.l_loc_0)},
          {"l_loc_1", finite_or_null(r.l_loc_1)}, {"l_loc_2", finite_or_null(r.l_loc_2)},
          {"l_loc", finite_or_null(r.l_loc)}, {"xi", r.xi},
          {"R", r.R}, {"S_C", r.S_C},
          {"verdict", to_string(r.verdict)}};
}

ReportOptions report_options(const RunConfig& cfg) {
  ReportOptions o;
  o.stats.window_len = cfg.diagnostics.window_len;
  o.stats.drift_window = cfg.diagnostics.drift_window;
  o.stats.detrend = cfg.diagnostics.detrend;
  o.alpha = cfg.diagnostics.alpha;
  o.xi_low = cfg.diagnostics.xi_low;
  o.xi_high = cfg.diagnostics.xi_high;
  return o;
}

LanczosOptions lanczos_options(const RunConfig& cfg) {
  return {cfg.lanczos.n_max, cfg.lanczos.termination_tol, cfg.lanczos.store_vectors};
}

Table coefficient_table(const TridiagonalMatrix& tri) {
  Table t{{"k", "h_k", "gamma_k"}, {}};
  for (std::size_t k = 0; k < tri.size(); ++k)
    t.add({as_ll(k), tri.h[k], k + 1 < tri.size() ? tri.gamma[k] : std::nan("")});
  return t;
}

// ---- anderson ----------------------------------------------------------

void run_anderson(const RunConfig& cfg, RunResults& out) {
  const auto& sec = *cfg.anderson;
  struct PanelResult {
    LanczosResult res;
    std::optional<LocalizationReport> loc;
    std::optional<EvolutionTrace> trace;
  };
  auto results = parallel_map<PanelResult>(sec.panels.size(), cfg.workers, [&](std::size_t i) {
    AndersonConfig a = sec.base;
    a.w_half = sec.panels[i].w_half;
    a.seed = cfg.seed;
    const auto H = build_anderson(a);
    PanelResult pr;
    pr.res = lanczos_iterate(H, StateVector::basis_state(H.basis_ptr(), 0), lanczos_options(cfg));
    if (pr.res.size() > cfg.diagnostics.window_len)
      pr.loc = localization_report(pr.res.tri, H.c_strength(), H.d_strength(), 2.0 * a.D,
                                   std::log(static_cast<double>(H.dim())), report_options(cfg));
    if (cfg.dynamics.enabled)
      pr.trace = evolve_krylov(pr.res.tri, linspace(0, cfg.dynamics.t_final, cfg.dynamics.n_times));
    return pr;
  });

  for (std::size_t i = 0; i < sec.panels.size(); ++i) {
    const auto& name = sec.panels[i].name;
    const auto& pr = results[i];
    const auto& tri = pr.res.tri;
    const double w = sec.panels[i].w_half / std::sqrt(3.0);
    json rep = {{"w_half", sec.panels[i].w_half},
                {"w", w},
                {"krylov_dimension", tri.size()},
                {"terminated_early", pr.res.terminated_early}};

    Table h{{"k", "h_k", "windowed_std", "w_over_sqrt_k"}, {}};
    for (std::size_t k = 0; k < tri.size(); ++k)
      h.add({as_ll(k), tri.h[k], windowed_std(tri.h, k, sec.std_half_window),
             k > 0 ? w / std::sqrt(static_cast<double>(k)) : kInfinity});
    out.tables[name + "_h"] = std::move(h);

    Table g{{"k", "gamma_k"}, {}};
    for (std::size_t k = 0; k + 1 < tri.size(); ++k) g.add({as_ll(k), tri.gamma[k]});
    out.tables[name + "_gamma"] = std::move(g);

    if (!pr.res.vectors.empty()) {
      const auto& basis = *pr.res.basis;
      Table r{{"k", "radial_mean", "radial_std", "manhattan_mean"}, {}};
      std::vector<std::size_t> ks = sec.radial_k;
      if (ks.empty()) {
        ks.resize(tri.size());
        std::iota(ks.begin(), ks.end(), std::size_t{0});
      }
      for (std::size_t k : ks) {
        if (k >= pr.res.vectors.size()) continue;
        const auto wts = krylov_microstate_weights(pr.res, k);
        const auto e = radial_profile(wts, basis);
        r.add({as_ll(k), e.mean, e.std, manhattan_profile(wts, basis).mean});
      }
      out.tables[name + "_radial"] = std::move(r);

      if (sec.microstate_k < pr.res.vectors.size()) {
        static const char* axes[] = {"x", "y", "z"};
        Table m;
        for (int d = 0; d < basis.dimension(); ++d) m.header.push_back(axes[d]);
        m.header.push_back("weight");
        const auto wts = krylov_microstate_weights(pr.res, sec.microstate_k);
        for (std::size_t s = 0; s < wts.size(); ++s) {
          std::vector<Cell> row;
          for (int c : basis.site(s)) row.emplace_back(static_cast<long long>(c));
          row.emplace_back(wts[s]);
          m.add(std::move(row));
        }
        out.tables[name + "_microstates"] = std::move(m);
        rep["microstate_k"] = sec.microstate_k;
      }
      rep["orthogonality_defect"] = orthogonality_defect(pr.res);
    }

    if (pr.loc) {
      rep["localization"] = stats_json(*pr.loc);
      const auto sp = single_particle_criterion(pr.loc->l_loc, sec.base.J == 0 ? 0 : std::abs(sec.base.J), w,
                                                sec.base.D, sec.base.L, cfg.diagnostics.xi_low);
      rep["single_particle"] = {{"ratio", sp.ratio}, {"verdict", to_string(sp.verdict)}};
    } else {
      rep["warning"] = "Krylov chain shorter than the statistics window; no localization report";
    }

    if (pr.trace) {
      const auto& tr = *pr.trace;
      Table s{{"t", "spread_complexity", "last_state_pop"}, {}};
      for (std::size_t i2 = 0; i2 < tr.times.size(); ++i2)
        s.add({tr.times[i2], tr.spread_complexity[i2], tr.last_state_pop[i2]});
      out.tables[name + "_spread"] = std::move(s);
      const auto guard = last_state_guard(tr, tri.size(), pr.res.reason == Termination::exhausted);
      rep["last_state_guard"] = {{"passed", guard.passed}, {"max_population", guard.max_population}};
      if (!guard) throw GuardError("panel '" + name + "': " + guard.note);
    }
    if (cfg.dump_vectors) out.krylov_dumps.emplace_back(name, pr.res);
    out.report["panels"][name] = rep;
  }
}

// ---- spins -------------------------------------------------------------

void run_spins(const RunConfig& cfg, RunResults& out) {
  const auto& sec = *cfg.dipolar;
  struct QResult {
    LanczosResult res;
    LocalizationReport loc;
    std::optional<EntropyTrace> ent;
    std::size_t dim = 0;
    std::string path;
  };
  // Workers split the Q values; each Q runs its kernels sequentially.
  auto results = parallel_map<QResult>(sec.Q.size(), cfg.workers, [&](std::size_t i) {
    DipolarConfig d = sec.base;
    d.Q = sec.Q[i];
    const auto H = build_dipolar_plaquette(d);
    const auto psi0 = dipolar_initial_vector(d, H);
    QResult qr;
    qr.dim = H.dim();
    qr.res = lanczos_iterate(H, psi0, lanczos_options(cfg));
    if (qr.res.size() <= cfg.diagnostics.window_len)
      throw NumericalError("Krylov chain for Q=" + compact(d.Q) + " has " + std::to_string(qr.res.size()) +
                           " states, fewer than the statistics window needs");
    const int N = d.nx * d.ny;
    const double R = cfg.diagnostics.R.value_or(static_cast<double>(N) * N);
    qr.loc = localization_report(qr.res.tri, H.c_strength(), H.d_strength(), R,
                                 std::log(static_cast<double>(H.dim())), report_options(cfg));
    if (cfg.dynamics.enabled) {
      EvolveOptions eo;
      eo.dense_limit = cfg.dynamics.dense_limit;
      const auto traj = evolve_full(H, psi0, linspace(0, cfg.dynamics.t_final, cfg.dynamics.n_times), eo);
      qr.path = traj.path == PropagationPath::dense ? "dense" : "krylov";
      qr.ent = entropy_trace(traj);
    }
    if (!cfg.dump_vectors) qr.res.vectors.clear();
    return qr;
  });

  Table sweep{{"Q", "gamma_bar", "W2", "var_gamma", "l_loc0", "l_loc1", "l_loc2", "xi", "verdict"}, {}};
  Table frac{{"Q", "xi", "populated_fraction", "populated_fraction_boltzmann"}, {}};
  for (std::size_t i = 0; i < sec.Q.size(); ++i) {
    const auto& qr = results[i];
    const auto& l = qr.loc;
    const double Q = sec.Q[i];
    const std::string tag = "Q" + compact(Q);
    sweep.add({Q, l.stats.gamma_bar, l.stats.W2, l.stats.var_gamma, l.l_loc_0, l.l_loc_1, l.l_loc_2, l.xi,
               to_string(l.verdict)});
    out.tables["coefficients_" + tag] = coefficient_table(qr.res.tri);
    json rep = stats_json(l);
    rep["Q"] = Q;
    rep["dimension"] = qr.dim;
    rep["krylov_dimension"] = qr.res.size();
    if (qr.ent) {
      const auto& e = *qr.ent;
      const double pf = tail_average(e.populated_fraction, cfg.dynamics.average_fraction);
      const double pfb =
          e.S_B.empty() ? std::nan("") : tail_average(e.populated_fraction_boltzmann, cfg.dynamics.average_fraction);
      frac.add({Q, l.xi, pf, pfb});
      Table et{{"t", "S_D", "S_B", "S_B_corrected", "S_C", "populated_fraction", "populated_fraction_boltzmann"}, {}};
      for (std::size_t t = 0; t < e.times.size(); ++t)
        et.add({e.times[t], e.S_D[t], e.S_B.empty() ? std::nan("") : e.S_B[t],
                e.S_B.empty() ? std::nan("") : e.S_B_corrected[t], e.S_C, e.populated_fraction[t],
                e.S_B.empty() ? std::nan("") : e.populated_fraction_boltzmann[t]});
      out.tables["entropy_" + tag] = std::move(et);
      rep["populated_fraction"] = pf;
      rep["populated_fraction_boltzmann"] = finite_or_null(pfb);
      rep["F"] = e.F;
      rep["propagation"] = qr.path;
    }
    if (cfg.dump_vectors) out.krylov_dumps.emplace_back(tag, qr.res);
    out.report["sweep"].push_back(rep);
  }
  out.tables["sweep"] = std::move(sweep);
  if (cfg.dynamics.enabled) out.tables["fraction"] = std::move(frac);
}

// ---- ensemble ----------------------------------------------------------

std::uint64_t seed_for(std::uint64_t base, std::size_t s) { return base + s; }

Table histogram_table(const std::vector<double>& centers, const std::vector<std::size_t>& counts, double width) {
  Table t{{"s", "count", "density", "wigner_ref", "poisson_ref"}, {}};
  std::size_t total = 0;
  for (auto c : counts) total += c;
  for (std::size_t b = 0; b < centers.size(); ++b)
    t.add({centers[b], as_ll(counts[b]),
           total ? static_cast<double>(counts[b]) / (static_cast<double>(total) * width) : 0.0,
           wigner_surmise(centers[b]), poisson_density(centers[b])});
  return t;
}

Table scan_table(const TridiagonalMatrix& tri, std::size_t n, std::size_t points) {
  const auto ev = sturm_eigenvalues(tri, n - 1);
  double gb = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) gb += tri.gamma[i];
  gb /= static_cast<double>(n - 1);
  const auto scan = fixed_point_scan(tri, n, linspace(ev.front() - gb, ev.back() + gb, points));
  Table t{{"lambda", "L", "R", "R0", "R_log_abs", "R_sign"}, {}};
  for (std::size_t i = 0; i < scan.lambda.size(); ++i)
    t.add({scan.lambda[i], scan.L[i], scan.R[i], scan.R0[i], scan.R_log_abs[i], static_cast<long long>(scan.R_sign[i])});
  return t;
}

void run_ensemble(const RunConfig& cfg, RunResults& out) {
  const auto& sec = *cfg.ensemble;
  RepulsionOptions ro;
  ro.ref_window = sec.propagation_ref_window;
  struct SeedResult {
    TridiagonalMatrix tri;
    SpectralReport spec;
    std::vector<PropagationRecord> prop;
  };
  for (const auto& ens : sec.ensembles) {
    auto seeds = parallel_map<SeedResult>(sec.seeds, cfg.workers, [&](std::size_t s) {
      EnsembleConfig e = ens.cfg;
      e.seed = seed_for(cfg.seed, s);
      SeedResult r;
      r.tri = build_random_tridiagonal(e);
      r.spec = spacing_statistics(sturm_eigenvalues(r.tri));
      if (sec.propagation_n_min <= r.tri.size())
        r.prop = propagation_sweep(r.tri, sec.propagation_n_min, sec.propagation_n_step, sec.propagation_mid_band, ro);
      return r;
    });

    const auto& first = seeds.front();
    std::vector<std::size_t> counts(first.spec.histogram.size(), 0);
    std::vector<double> pvalues, metrics, pooled;
    std::size_t prop_total = 0, prop_pass = 0;
    Table summary{{"seed", "repulsion_metric", "ks_statistic", "ks_pvalue", "propagation_pass_fraction"}, {}};
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& r = seeds[s];
      for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += r.spec.histogram[b];
      pvalues.push_back(r.spec.ks_pvalue);
      metrics.push_back(r.spec.repulsion_metric);
      pooled.insert(pooled.end(), r.spec.unfolded_spacings.begin(), r.spec.unfolded_spacings.end());
      std::size_t pass = 0;
      for (const auto& p : r.prop) pass += p.prediction.error <= 0.1;
      prop_total += r.prop.size();
      prop_pass += pass;
      summary.add({static_cast<long long>(seed_for(cfg.seed, s)), r.spec.repulsion_metric, r.spec.ks_statistic,
                   r.spec.ks_pvalue,
                   r.prop.empty() ? std::nan("") : static_cast<double>(pass) / static_cast<double>(r.prop.size())});
    }
    out.tables[ens.name + "_histogram"] = histogram_table(first.spec.bin_centers, counts, first.spec.bin_width);
    out.tables[ens.name + "_summary"] = std::move(summary);

    Table ev{{"k", "lambda"}, {}};
    for (std::size_t k = 0; k < first.spec.eigenvalues.size(); ++k) ev.add({as_ll(k), first.spec.eigenvalues[k]});
    out.tables[ens.name + "_eigenvalues"] = std::move(ev);

    Table sp{{"seed", "i", "delta_e", "s_unfolded"}, {}};
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& r = seeds[s].spec;
      for (std::size_t i = 0; i < r.spacings.size(); ++i)
        sp.add({static_cast<long long>(seed_for(cfg.seed, s)), as_ll(i), r.spacings[i],
                i < r.unfolded_spacings.size() ? r.unfolded_spacings[i] : std::nan("")});
    }
    out.tables[ens.name + "_spacings"] = std::move(sp);

    out.tables[ens.name + "_scan"] = scan_table(first.tri, first.tri.size(), sec.scan_points);

    Table pr{{"n", "k", "predicted", "exact", "local_spacing", "error", "e_ref", "flagged"}, {}};
    for (const auto& p : first.prop)
      pr.add({as_ll(p.n), as_ll(p.k), p.prediction.predicted, p.prediction.exact, p.prediction.local_spacing,
              p.prediction.error, p.prediction.e_ref, static_cast<long long>(p.prediction.flagged)});
    out.tables[ens.name + "_propagation"] = std::move(pr);

    std::vector<double> sorted_p = pvalues;
    std::sort(sorted_p.begin(), sorted_p.end());
    const double median_p = sorted_p.size() % 2 ? sorted_p[sorted_p.size() / 2]
                                                 : 0.5 * (sorted_p[sorted_p.size() / 2 - 1] + sorted_p[sorted_p.size() / 2]);
    const auto pooled_ks = ks_exponential(pooled);
    const double mean_metric = std::accumulate(metrics.begin(), metrics.end(), 0.0) / static_cast<double>(metrics.size());
    out.report["ensembles"][ens.name] = {
        {"seeds", sec.seeds},
        {"repulsion_metric_mean", mean_metric},
        {"ks_pvalue_median", median_p},
        {"ks_poisson_consistent", median_p >= 0.01},
        {"ks_pooled_statistic", pooled_ks.statistic},
        {"ks_pooled_pvalue", pooled_ks.pvalue},
        {"propagation_pairs", prop_total},
        {"propagation_pass_fraction",
         prop_total ? json(static_cast<double>(prop_pass) / static_cast<double>(prop_total)) : json(nullptr)}};
  }
}

// ---- spectral ----------------------------------------------------------

void run_spectral(const RunConfig& cfg, RunResults& out) {
  const auto& sec = *cfg.spectral;
  TridiagonalMatrix tri;
  if (sec.tri) {
    tri = *sec.tri;
  } else {
    EnsembleConfig e = *sec.ensemble;
    e.seed = cfg.seed;
    tri = build_random_tridiagonal(e);
  }
  const std::size_t n = sec.order ? sec.order : tri.size();
  if (n < 2 || n > tri.size()) throw ConfigError("spectral.order must lie in [2, size]");
  const auto ev = sturm_eigenvalues(tri, n);
  Table t{{"k", "lambda"}, {}};
  for (std::size_t k = 0; k < ev.size(); ++k) t.add({as_ll(k), ev[k]});
  out.tables["eigenvalues"] = std::move(t);
  out.tables["coefficients"] = coefficient_table(tri.leading(n));
  const auto il = interlacing_check(tri, n);
  out.report["order"] = n;
  out.report["interlacing"] = {{"ok", il.ok}, {"max_violation", il.max_violation}};
  out.tables["scan"] = scan_table(tri, n, 2001);
  try {
    const auto sr = spacing_statistics(ev);
    out.tables["histogram"] = histogram_table(sr.bin_centers, sr.histogram, sr.bin_width);
    out.report["repulsion_metric"] = sr.repulsion_metric;
    out.report["ks_statistic"] = sr.ks_statistic;
    out.report["ks_pvalue"] = sr.ks_pvalue;
    out.report["warnings"] = sr.warnings;
  } catch (const std::invalid_argument& e) {
    out.report["warnings"].push_back(std::string("no spacing statistics: ") + e.what());
  }
}

// ---- eth ---------------------------------------------------------------

void run_eth(const RunConfig& cfg, RunResults& out) {
  const auto& sec = *cfg.eth;
  const auto profile = sec.observable.profile == "cosine" ? ObservableProfile::cosine : ObservableProfile::linear;
  struct SeedResult {
    TridiagonalMatrix tri;
    EthExpectations ex;
    double wkb_min = 0, wkb_mean = 0, fourier_pass = 0;
    std::size_t bandwidth = 0;
    Eigen::MatrixXd Z;
  };
  double smooth_mean[2] = {0, 0};
  const NamedEnsemble* ens[2] = {&sec.chaotic, &sec.localized};
  for (int which = 0; which < 2; ++which) {
    const auto& e = *ens[which];
    const std::size_t n = static_cast<std::size_t>(e.cfg.n);
    const auto jmax = static_cast<std::size_t>(std::floor(sec.observable.jmax_fraction * static_cast<double>(n)));
    const Eigen::MatrixXd B = banded_observable(n, profile, sec.observable.ell, sec.observable.a, jmax);
    const auto Bm = observable_from_matrix(B);
    auto seeds = parallel_map<SeedResult>(sec.seeds, cfg.workers, [&](std::size_t s) {
      EnsembleConfig c = e.cfg;
      c.seed = seed_for(cfg.seed, s);
      SeedResult r;
      r.tri = build_random_tridiagonal(c);
      r.ex = eigenstate_expectations(r.tri, B);
      r.Z = inverse_iteration(r.tri, r.ex.energies);
      r.bandwidth = Bm.effective_bandwidth;
      std::size_t count = 0, pass = 0;
      r.wkb_min = 1.0;
      for (std::size_t q = n / 4; q < 3 * n / 4; ++q) {
        const Eigen::VectorXd z = r.Z.col(static_cast<Eigen::Index>(q));
        const double ov = wkb_overlap(wkb_eigenstate(r.tri, r.ex.energies[q]), z);
        r.wkb_min = std::min(r.wkb_min, ov);
        r.wkb_mean += ov;
        const auto fc = fourier_expectation_check(r.tri, Bm, r.ex.energies[q], z);
        pass += fc.rel_error <= 0.05;
        ++count;
      }
      r.wkb_mean /= static_cast<double>(count);
      r.fourier_pass = static_cast<double>(pass) / static_cast<double>(count);
      if (s != 0) r.Z.resize(0, 0);
      return r;
    });

    Table summary{{"seed", "smoothness", "wkb_min_overlap", "wkb_mean_overlap", "fourier_pass_fraction"}, {}};
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& r = seeds[s];
      summary.add({static_cast<long long>(seed_for(cfg.seed, s)), r.ex.smoothness, r.wkb_min, r.wkb_mean, r.fourier_pass});
      smooth_mean[which] += r.ex.smoothness / static_cast<double>(seeds.size());
    }
    out.tables[e.name + "_summary"] = std::move(summary);

    const auto& r0 = seeds.front();
    Table ex{{"q", "E_q", "expectation", "centroid", "smoothness_window_flag"}, {}};
    for (std::size_t q = 0; q < r0.ex.energies.size(); ++q)
      ex.add({as_ll(q), r0.ex.energies[q], r0.ex.expectations[q], r0.ex.centroid[q],
              static_cast<long long>(q >= n / 4 && q < 3 * n / 4)});
    out.tables[e.name + "_expectations"] = std::move(ex);

    if (which == 0) {
      const std::size_t q = sec.q;
      const auto w0 = wkb_eigenstate(r0.tri, r0.ex.energies[q]);
      const auto w1 = wkb_eigenstate(r0.tri, r0.ex.energies[q + 1]);
      auto aligned = [](const WkbEigenstate& w, const Eigen::VectorXd& z) {
        double d = 0;
        for (Eigen::Index j = 0; j < z.size(); ++j) d += w.psi[static_cast<std::size_t>(j)] * z[j];
        return d < 0 ? -1.0 : 1.0;
      };
      const Eigen::VectorXd z0 = r0.Z.col(static_cast<Eigen::Index>(q)), z1 = r0.Z.col(static_cast<Eigen::Index>(q + 1));
      const double s0 = aligned(w0, z0), s1 = aligned(w1, z1);
      Table es{{"j", "psi_q", "psi_q1", "wkb_q", "wkb_q1"}, {}};
      for (std::size_t j = 0; j < n; ++j)
        es.add({as_ll(j), z0[static_cast<Eigen::Index>(j)], z1[static_cast<Eigen::Index>(j)], s0 * w0.psi[j],
                s1 * w1.psi[j]});
      out.tables["eigenstates"] = std::move(es);
      out.report["eigenstates"] = {{"q", q}, {"E_q", r0.ex.energies[q]}, {"E_q1", r0.ex.energies[q + 1]},
                                   {"wkb_overlap_q", wkb_overlap(w0, z0)}, {"wkb_overlap_q1", wkb_overlap(w1, z1)}};

      Table heat;
      heat.header.push_back("p");
      for (std::size_t c = 0; c < n; ++c) heat.header.push_back("q" + std::to_string(c));
      for (std::size_t p = 0; p < n; ++p) {
        std::vector<Cell> row{as_ll(p)};
        for (std::size_t c = 0; c < n; ++c) row.emplace_back(B(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)));
        heat.add(std::move(row));
      }
      out.tables["observable"] = std::move(heat);
      out.report["observable"] = {{"profile", sec.observable.profile}, {"ell", sec.observable.ell},
                                  {"a", sec.observable.a}, {"jmax", jmax},
                                  {"effective_bandwidth", Bm.effective_bandwidth}};
    }
    out.report["ensembles"][e.name] = {{"smoothness_mean", smooth_mean[which]}};
  }
  out.report["smoothness_ratio"] = smooth_mean[0] > 0 ? json(smooth_mean[1] / smooth_mean[0]) : json(nullptr);
}

// ---- calculator --------------------------------------------------------

void run_calculator(const RunConfig& cfg, RunResults& out) {
  Table t{{"J", "W", "Delta", "q", "mean_free_path", "l_loc_q", "l_loc_integrated"}, {}};
  for (const auto& in : cfg.calculator) {
    const auto r = continuum_calculator(in.J, in.W, in.Delta, in.q);
    t.add({in.J, in.W, in.Delta, in.q.value_or(std::nan("")), r.mean_free_path, r.l_loc_q.value_or(std::nan("")),
           r.l_loc_integrated});
  }
  out.tables["calculator"] = std::move(t);
}

// ---- output ------------------------------------------------------------

void write_table(const Table& t, const fs::path& file) {
  CsvWriter w(file, t.header);
  for (const auto& row : t.rows) {
    for (const auto& c : row) std::visit([&](const auto& v) { w << v; }, c);
    w.end_row();
  }
  w.close();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream f(file, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw std::runtime_error("failed writing " + file.string());
}

bool has_suffix(const std::map<std::string, Table>& t, const std::string& suffix) {
  for (const auto& [k, v] : t)
    if (k.size() >= suffix.size() && k.compare(k.size() - suffix.size(), suffix.size(), suffix) == 0) return true;
  return false;
}

bool has_prefix(const std::map<std::string, Table>& t, const std::string& prefix) {
  for (const auto& [k, v] : t)
    if (k.rfind(prefix, 0) == 0) return true;
  return false;
}

fs::path temp_sibling(const fs::path& target) {
  std::random_device rd;
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::ostringstream name;
    name << "." << target.filename().string() << ".tmp-" << std::hex << rd();
    fs::path p = parent / name.str();
    if (fs::create_directory(p)) return p;
  }
  throw std::runtime_error("cannot create a temporary directory next to " + target.string());
}

void publish(const fs::path& tmp, const fs::path& target) {
  if (fs::exists(target)) {
    if (!fs::is_directory(target)) throw ConfigError("output path " + target.string() + " is not a directory");
    const bool empty = fs::is_empty(target);
    if (!empty && !fs::exists(target / "manifest.json"))
      throw ConfigError("output directory " + target.string() + " is not empty and holds no previous run");
    fs::remove_all(target);
  }
  fs::rename(tmp, target);
}

RunConfig load_config(const RunOptions& opts) {
  if (opts.config_path && opts.preset) throw ConfigError("give either --config or --preset, not both");
  if (!opts.config_path && !opts.preset) throw ConfigError("no configuration: pass --config PATH or --preset NAME");
  RunConfig cfg;
  if (opts.preset) {
    cfg = parse_config(preset_json(*opts.preset));
  } else {
    std::ifstream f(*opts.config_path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + opts.config_path->string());
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = parse_config_text(ss.str());
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.workers) {
    if (*opts.workers == 0) throw ConfigError("--workers must be >= 1");
    cfg.workers = *opts.workers;
  }
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  return cfg;
}

}  // namespace

RunResults execute(const RunConfig& cfg) {
  RunResults out;
  out.command = cfg.command;
  switch (cfg.command) {
    case Command::anderson: run_anderson(cfg, out); break;
    case Command::spins: run_spins(cfg, out); break;
    case Command::ensemble: run_ensemble(cfg, out); break;
    case Command::spectral: run_spectral(cfg, out); break;
    case Command::eth: run_eth(cfg, out); break;
    case Command::calculator: run_calculator(cfg, out); break;
  }
  return out;
}

std::vector<std::string> export_figure_data(const RunResults& results, int figure_id, const fs::path& dir) {
  const auto& t = results.tables;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw NumericalError("figure " + std::to_string(figure_id) + " needs " + what);
  };
  need(!t.empty(), "at least one result table");
  switch (figure_id) {
    case 2: need(has_suffix(t, "_h") && has_suffix(t, "_gamma"), "Lanczos coefficient tables"); break;
    case 3: need(t.count("sweep") && t.count("fraction"), "the Q sweep and populated-fraction tables"); break;
    case 4:
      need(has_suffix(t, "_histogram") || t.count("eigenvalues"), "spacing histograms or an eigenvalue table");
      break;
    case 6: need(t.count("eigenstates") > 0, "the consecutive-eigenstate table"); break;
    case 7: need(has_prefix(t, "entropy_"), "an entropy trace"); break;
    default: break;
  }
  std::vector<std::string> files;
  for (const auto& [panel, table] : t) {
    const std::string name = "figure" + std::to_string(figure_id) + "_" + panel + ".csv";
    write_table(table, dir / name);
    files.push_back(name);
  }
  return files;
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

int run(const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  fs::path tmp;
  auto cleanup = [&] {
    std::error_code ec;
    if (!tmp.empty()) fs::remove_all(tmp, ec);
  };
  try {
    const RunConfig cfg = load_config(opts);
    const fs::path target = cfg.output_dir;
    if (fs::exists(target) && !fs::is_directory(target))
      throw ConfigError("output path " + target.string() + " is not a directory");
    if (target.has_parent_path() && !fs::is_directory(target.parent_path()))
      throw ConfigError("parent of output directory " + target.string() + " does not exist");

    const RunResults results = execute(cfg);

    tmp = temp_sibling(target);
    std::vector<std::string> files = export_figure_data(results, cfg.figure, tmp);
    write_text(tmp / "report.json", results.report.dump(2) + "\n");
    files.push_back("report.json");
    for (const auto& [name, res] : results.krylov_dumps) {
      const std::string prefix = "figure" + std::to_string(cfg.figure) + "_" + name + "_krylov";
      save_lanczos(res, tmp / prefix);
      files.push_back(prefix + ".json");
      if (!res.vectors.empty()) files.push_back(prefix + ".bin");
    }

    json manifest;
    json effective = cfg.echo;
    effective["seed"] = cfg.seed;
    effective["workers"] = cfg.workers;
    effective["output"]["directory"] = cfg.output_dir;
    manifest["config"] = effective;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["command"] = to_string(cfg.command);
    manifest["figure"] = cfg.figure;
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      manifest["files"].push_back({{"name", f}, {"bytes", fs::file_size(tmp / f)}, {"sha256", sha256_hex(tmp / f)}});
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(tmp / "manifest.json.part", manifest.dump(2) + "\n");
    fs::rename(tmp / "manifest.json.part", tmp / "manifest.json");

    publish(tmp, target);
    tmp.clear();
    std::cerr << "kryloc: wrote " << files.size() + 1 << " files to " << target.string() << "\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    cleanup();
    std::cerr << "kryloc: configuration error: " << e.what() << "\n";
    return exit_config;
  } catch (const GuardError& e) {
    cleanup();
    std::cerr << "kryloc: guard failure: " << e.what() << "\n";
    return exit_guard;
  } catch (const fs::filesystem_error& e) {
    cleanup();
    std::cerr << "kryloc: output error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    cleanup();
    std::cerr << "kryloc: numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
}

int run(const fs::path& config_path) {
  RunOptions o;
  o.config_path = config_path;
  return run(o);
}

}  // namespace kryloc
