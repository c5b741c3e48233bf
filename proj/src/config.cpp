#include "kryloc/config.hpp"

#include <algorithm>
#include <set>

#include "kryloc/errors.hpp"

namespace kryloc {

using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get_to(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void get_to(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  T v{};
  get_to(j, key, v, where);
  out = v;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

EnsembleConfig parse_ensemble(const json& j, const std::string& where) {
  allow_keys(j, where, {"name", "n", "gamma_bar", "W", "var_gamma", "drift_amplitude", "seed"});
  EnsembleConfig e;
  get_to(j, "n", e.n, where);
  get_to(j, "gamma_bar", e.gamma_bar, where);
  get_to(j, "W", e.W, where);
  get_to(j, "var_gamma", e.var_gamma, where);
  get_to(j, "drift_amplitude", e.drift_amplitude, where);
  get_to(j, "seed", e.seed, where);
  require(e.n >= 4, where + ".n must be >= 4");
  require(e.gamma_bar != 0, where + ".gamma_bar must be nonzero");
  require(e.W >= 0 && e.var_gamma >= 0, where + ": dispersions must be non-negative");
  return e;
}

NamedEnsemble parse_named(const json& j, const std::string& where, const std::string& fallback) {
  NamedEnsemble e{fallback, parse_ensemble(j, where)};
  get_to(j, "name", e.name, where);
  require(!e.name.empty() && e.name.find_first_of("/\\ ") == std::string::npos, where + ".name must be a plain token");
  return e;
}

Command parse_command(const std::string& s) {
  static const std::pair<const char*, Command> names[] = {
      {"anderson", Command::anderson}, {"spins", Command::spins}, {"ensemble", Command::ensemble},
      {"spectral", Command::spectral}, {"eth", Command::eth},     {"calculator", Command::calculator}};
  for (auto& [n, c] : names)
    if (s == n) return c;
  throw ConfigError("unknown command '" + s + "'");
}

int default_figure(Command c) {
  switch (c) {
    case Command::anderson: return 2;
    case Command::spins: return 3;
    case Command::ensemble: return 4;
    case Command::spectral: return 4;
    case Command::eth: return 6;
    case Command::calculator: return 0;
  }
  return 0;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::anderson: return "anderson";
    case Command::spins: return "spins";
    case Command::ensemble: return "ensemble";
    case Command::spectral: return "spectral";
    case Command::eth: return "eth";
    case Command::calculator: return "calculator";
  }
  return "calculator";
}

RunConfig parse_config(const json& j) {
  allow_keys(j, "config", {"command", "seed", "workers", "output", "lanczos", "diagnostics", "dynamics", "anderson",
                           "dipolar", "ensemble", "eth", "spectral", "calculator"});
  RunConfig c;
  c.echo = j;
  require(j.contains("command") && j["command"].is_string(), "config.command is required");
  c.command = parse_command(j["command"].get<std::string>());
  get_to(j, "seed", c.seed, "config");
  get_to(j, "workers", c.workers, "config");
  require(c.workers >= 1, "config.workers must be >= 1");
  c.figure = default_figure(c.command);

  if (j.contains("output")) {
    const auto& o = j["output"];
    allow_keys(o, "output", {"directory", "figure", "krylov_vectors"});
    get_to(o, "directory", c.output_dir, "output");
    get_to(o, "krylov_vectors", c.dump_vectors, "output");
    get_to(o, "figure", c.figure, "output");
  }
  if (j.contains("lanczos")) {
    const auto& o = j["lanczos"];
    allow_keys(o, "lanczos", {"n_max", "termination_tol", "store_vectors"});
    get_to(o, "n_max", c.lanczos.n_max, "lanczos");
    get_to(o, "termination_tol", c.lanczos.termination_tol, "lanczos");
    get_to(o, "store_vectors", c.lanczos.store_vectors, "lanczos");
    require(c.lanczos.n_max >= 2, "lanczos.n_max must be >= 2");
    require(c.lanczos.termination_tol > 0, "lanczos.termination_tol must be positive");
  }
  if (j.contains("diagnostics")) {
    const auto& o = j["diagnostics"];
    allow_keys(o, "diagnostics", {"window_len", "drift_window", "detrend", "alpha", "xi_low", "xi_high", "R"});
    auto& d = c.diagnostics;
    get_to(o, "window_len", d.window_len, "diagnostics");
    get_to(o, "drift_window", d.drift_window, "diagnostics");
    get_to(o, "detrend", d.detrend, "diagnostics");
    get_to(o, "alpha", d.alpha, "diagnostics");
    get_to(o, "xi_low", d.xi_low, "diagnostics");
    get_to(o, "xi_high", d.xi_high, "diagnostics");
    get_to(o, "R", d.R, "diagnostics");
    require(d.window_len >= 4, "diagnostics.window_len must be >= 4");
    require(d.xi_low < d.xi_high, "diagnostics.xi_low must be below xi_high");
    require(!d.R || *d.R > 1, "diagnostics.R must exceed 1");
  }
  if (j.contains("dynamics")) {
    const auto& o = j["dynamics"];
    allow_keys(o, "dynamics", {"enabled", "t_final", "n_times", "average_fraction", "dense_limit"});
    auto& d = c.dynamics;
    get_to(o, "enabled", d.enabled, "dynamics");
    get_to(o, "t_final", d.t_final, "dynamics");
    get_to(o, "n_times", d.n_times, "dynamics");
    get_to(o, "average_fraction", d.average_fraction, "dynamics");
    get_to(o, "dense_limit", d.dense_limit, "dynamics");
    require(d.t_final >= 0 && d.n_times >= 2, "dynamics needs t_final >= 0 and n_times >= 2");
    require(d.average_fraction > 0 && d.average_fraction <= 1, "dynamics.average_fraction must lie in (0, 1]");
  }

  const int sections = j.contains("anderson") + j.contains("dipolar") + j.contains("ensemble") + j.contains("eth") +
                       j.contains("spectral");
  const char* needed = nullptr;
  switch (c.command) {
    case Command::anderson: needed = "anderson"; break;
    case Command::spins: needed = "dipolar"; break;
    case Command::ensemble: needed = "ensemble"; break;
    case Command::eth: needed = "eth"; break;
    case Command::spectral: needed = "spectral"; break;
    case Command::calculator: break;
  }
  if (needed) {
    require(sections == 1 && j.contains(needed),
            "command '" + to_string(c.command) + "' needs exactly one model section, '" + needed + "'");
  } else {
    require(sections == 0, "command 'calculator' takes no model section");
  }

  if (c.command == Command::anderson) {
    const auto& o = j["anderson"];
    allow_keys(o, "anderson", {"D", "L", "J", "w_half", "panels", "radial_k", "microstate_k", "std_half_window"});
    AndersonSection a;
    get_to(o, "D", a.base.D, "anderson");
    get_to(o, "L", a.base.L, "anderson");
    get_to(o, "J", a.base.J, "anderson");
    require(a.base.D >= 1 && a.base.D <= 3, "anderson.D must be 1, 2 or 3");
    require(a.base.L >= 2, "anderson.L must be >= 2");
    if (o.contains("panels")) {
      require(o["panels"].is_array() && !o["panels"].empty(), "anderson.panels must be a non-empty array");
      for (const auto& p : o["panels"]) {
        allow_keys(p, "anderson.panels[]", {"name", "w_half"});
        AndersonPanel ap;
        get_to(p, "name", ap.name, "anderson.panels[]");
        get_to(p, "w_half", ap.w_half, "anderson.panels[]");
        require(!ap.name.empty(), "anderson.panels[].name is required");
        a.panels.push_back(ap);
      }
    } else {
      AndersonPanel ap{"a", 0.0};
      get_to(o, "w_half", ap.w_half, "anderson");
      a.panels.push_back(ap);
    }
    for (const auto& p : a.panels) require(p.w_half >= 0, "anderson w_half must be non-negative");
    get_to(o, "radial_k", a.radial_k, "anderson");
    get_to(o, "microstate_k", a.microstate_k, "anderson");
    get_to(o, "std_half_window", a.std_half_window, "anderson");
    c.anderson = a;
  } else if (c.command == Command::spins) {
    const auto& o = j["dipolar"];
    allow_keys(o, "dipolar", {"nx", "ny", "s", "V", "Q", "initial", "Mz", "coupling_cutoff"});
    DipolarSection d;
    get_to(o, "nx", d.base.nx, "dipolar");
    get_to(o, "ny", d.base.ny, "dipolar");
    get_to(o, "s", d.base.s, "dipolar");
    get_to(o, "V", d.base.V, "dipolar");
    get_to(o, "initial", d.base.initial, "dipolar");
    get_to(o, "Mz", d.base.Mz, "dipolar");
    get_to(o, "coupling_cutoff", d.base.coupling_cutoff, "dipolar");
    if (o.contains("Q") && o["Q"].is_array())
      get_to(o, "Q", d.Q, "dipolar");
    else {
      double q = 0;
      get_to(o, "Q", q, "dipolar");
      d.Q = {q};
    }
    require(!d.Q.empty(), "dipolar.Q must list at least one value");
    require(d.base.nx >= 1 && d.base.ny >= 1 && d.base.nx * d.base.ny >= 2, "dipolar plaquette needs >= 2 sites");
    require(d.base.V != 0, "dipolar.V must be nonzero");
    c.dipolar = d;
  } else if (c.command == Command::ensemble) {
    const auto& o = j["ensemble"];
    allow_keys(o, "ensemble", {"ensembles", "seeds", "scan_points", "propagation"});
    EnsembleSection e;
    require(o.contains("ensembles") && o["ensembles"].is_array() && !o["ensembles"].empty(),
            "ensemble.ensembles must be a non-empty array");
    int i = 0;
    for (const auto& x : o["ensembles"]) e.ensembles.push_back(parse_named(x, "ensemble.ensembles[]", "e" + std::to_string(i++)));
    get_to(o, "seeds", e.seeds, "ensemble");
    get_to(o, "scan_points", e.scan_points, "ensemble");
    if (o.contains("propagation")) {
      const auto& p = o["propagation"];
      allow_keys(p, "ensemble.propagation", {"n_min", "n_step", "mid_band", "ref_window"});
      get_to(p, "n_min", e.propagation_n_min, "ensemble.propagation");
      get_to(p, "n_step", e.propagation_n_step, "ensemble.propagation");
      get_to(p, "mid_band", e.propagation_mid_band, "ensemble.propagation");
      get_to(p, "ref_window", e.propagation_ref_window, "ensemble.propagation");
    }
    require(e.seeds >= 1, "ensemble.seeds must be >= 1");
    require(e.propagation_n_min >= 4 && e.propagation_n_step >= 1, "ensemble.propagation needs n_min >= 4, n_step >= 1");
    c.ensemble = e;
  } else if (c.command == Command::eth) {
    const auto& o = j["eth"];
    allow_keys(o, "eth", {"chaotic", "localized", "observable", "seeds", "q"});
    EthSection e;
    require(o.contains("chaotic") && o.contains("localized"), "eth needs 'chaotic' and 'localized' ensembles");
    e.chaotic = parse_named(o["chaotic"], "eth.chaotic", "chaotic");
    e.localized = parse_named(o["localized"], "eth.localized", "localized");
    if (o.contains("observable")) {
      const auto& b = o["observable"];
      allow_keys(b, "eth.observable", {"profile", "ell", "a", "jmax_fraction"});
      get_to(b, "profile", e.observable.profile, "eth.observable");
      get_to(b, "ell", e.observable.ell, "eth.observable");
      get_to(b, "a", e.observable.a, "eth.observable");
      get_to(b, "jmax_fraction", e.observable.jmax_fraction, "eth.observable");
      require(e.observable.profile == "linear" || e.observable.profile == "cosine",
              "eth.observable.profile must be 'linear' or 'cosine'");
      require(e.observable.ell > 0, "eth.observable.ell must be positive");
    }
    get_to(o, "seeds", e.seeds, "eth");
    get_to(o, "q", e.q, "eth");
    require(e.seeds >= 1, "eth.seeds must be >= 1");
    require(e.q + 1 < static_cast<std::size_t>(e.chaotic.cfg.n), "eth.q must leave room for q+1");
    c.eth = e;
  } else if (c.command == Command::spectral) {
    const auto& o = j["spectral"];
    allow_keys(o, "spectral", {"h", "gamma", "ensemble", "order"});
    SpectralSection s;
    if (o.contains("ensemble")) {
      require(!o.contains("h") && !o.contains("gamma"), "spectral takes either h/gamma or an ensemble");
      s.ensemble = parse_ensemble(o["ensemble"], "spectral.ensemble");
    } else {
      TridiagonalMatrix t;
      get_to(o, "h", t.h, "spectral");
      get_to(o, "gamma", t.gamma, "spectral");
      require(t.h.size() >= 2 && t.gamma.size() + 1 == t.h.size(), "spectral needs h (n >= 2) and gamma (n - 1)");
      s.tri = t;
    }
    get_to(o, "order", s.order, "spectral");
    c.spectral = s;
  } else {
    require(j.contains("calculator") && j["calculator"].is_array() && !j["calculator"].empty(),
            "calculator needs a non-empty 'calculator' array");
    for (const auto& x : j["calculator"]) {
      allow_keys(x, "calculator[]", {"J", "W", "Delta", "q"});
      CalculatorInput in;
      get_to(x, "J", in.J, "calculator[]");
      get_to(x, "W", in.W, "calculator[]");
      get_to(x, "Delta", in.Delta, "calculator[]");
      get_to(x, "q", in.q, "calculator[]");
      require(in.W > 0, "calculator W must be positive");
      c.calculator.push_back(in);
    }
  }
  if (j.contains("calculator") && c.command != Command::calculator)
    throw ConfigError("'calculator' section given for command '" + to_string(c.command) + "'");
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig6", "fig7"}; }

nlohmann::json preset_json(const std::string& name) {
  if (name == "fig2") {
    json radial = json::array();
    for (int k = 0; k <= 100; ++k) radial.push_back(k);
    return {{"command", "anderson"},
            {"seed", 1},
            {"output", {{"figure", 2}}},
            {"lanczos", {{"n_max", 101}}},
            {"dynamics", {{"enabled", true}, {"t_final", 10.0}, {"n_times", 41}}},
            {"anderson",
             {{"D", 2},
              {"L", 120},
              {"J", -1.0},
              {"panels", {{{"name", "weak"}, {"w_half", 0.15}}, {{"name", "strong"}, {"w_half", 5.0}}}},
              {"radial_k", radial},
              {"microstate_k", 100}}}};
  }
  if (name == "fig3") {
    return {{"command", "spins"},
            {"seed", 1},
            {"output", {{"figure", 3}}},
            {"lanczos", {{"n_max", 60}}},
            {"diagnostics", {{"window_len", 40}, {"R", 81.0}}},
            {"dynamics", {{"enabled", true}, {"t_final", 50.0}, {"n_times", 51}, {"average_fraction", 0.2}}},
            {"dipolar", {{"nx", 3}, {"ny", 3}, {"s", 1.0}, {"V", 1.0}, {"Q", {0.0, 0.25, 0.5, 1.0, 2.0, 5.0}}}}};
  }
  if (name == "fig4") {
    return {{"command", "ensemble"},
            {"seed", 1},
            {"output", {{"figure", 4}}},
            {"ensemble",
             {{"ensembles",
               {{{"name", "delocalized"}, {"n", 400}, {"gamma_bar", 4.0}, {"W", 0.1}, {"var_gamma", 0.0}, {"drift_amplitude", 4.0}},
                {{"name", "localized"}, {"n", 400}, {"gamma_bar", 4.0}, {"W", 3.7}, {"var_gamma", 0.0}, {"drift_amplitude", 0.0}}}},
              {"seeds", 20}}}};
  }
  if (name == "fig6") {
    return {{"command", "eth"},
            {"seed", 1},
            {"output", {{"figure", 6}}},
            {"eth",
             {{"chaotic", {{"n", 400}, {"gamma_bar", 4.0}, {"W", 0.1}, {"var_gamma", 0.0}, {"drift_amplitude", 4.0}}},
              {"localized", {{"n", 400}, {"gamma_bar", 4.0}, {"W", 3.7}, {"var_gamma", 0.0}, {"drift_amplitude", 0.0}}},
              {"observable", {{"profile", "linear"}, {"ell", 3.0}, {"a", 0.5}, {"jmax_fraction", 0.1}}},
              {"seeds", 20},
              {"q", 200}}}};
  }
  if (name == "fig7") {
    return {{"command", "spins"},
            {"seed", 1},
            {"output", {{"figure", 7}}},
            {"lanczos", {{"n_max", 60}}},
            {"diagnostics", {{"window_len", 40}, {"R", 81.0}}},
            {"dynamics", {{"enabled", true}, {"t_final", 50.0}, {"n_times", 26}, {"average_fraction", 0.2}}},
            {"dipolar",
             {{"nx", 3}, {"ny", 3}, {"s", 3.0}, {"V", 1.0}, {"Q", 0.0}, {"initial", std::vector<double>(9, 2.0)}}}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace kryloc
