#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kryloc/models.hpp"

namespace kryloc {

enum class Command { anderson, spins, ensemble, spectral, eth, calculator };

struct LanczosSection {
  std::size_t n_max = 200;
  double termination_tol = 1e-10;
  bool store_vectors = true;
};

struct DiagnosticsSection {
  std::size_t window_len = 40;
  std::size_t drift_window = 0;
  bool detrend = false;
  double alpha = 9.0;
  double xi_low = 0.3;
  double xi_high = 3.0;
  std::optional<double> R;
};

struct DynamicsSection {
  bool enabled = true;
  double t_final = 50.0;
  std::size_t n_times = 51;
  double average_fraction = 0.2;
  std::size_t dense_limit = 8192;
};

struct AndersonPanel {
  std::string name;
  double w_half = 0;
};

struct AndersonSection {
  AndersonConfig base;
  std::vector<AndersonPanel> panels;
  std::vector<std::size_t> radial_k;
  std::size_t microstate_k = 100;
  std::size_t std_half_window = 5;
};

struct DipolarSection {
  DipolarConfig base;
  std::vector<double> Q;
};

struct NamedEnsemble {
  std::string name;
  EnsembleConfig cfg;
};

struct EnsembleSection {
  std::vector<NamedEnsemble> ensembles;
  std::size_t seeds = 20;
  std::size_t scan_points = 2001;
  std::size_t propagation_n_min = 20;
  std::size_t propagation_n_step = 10;
  double propagation_mid_band = 0.25;
  std::size_t propagation_ref_window = 9;
};

struct ObservableSpec {
  std::string profile = "linear";  // "linear": 0.2 + x/n, "cosine": 1 + cos(pi x / n)/2
  double ell = 3.0;
  double a = 0.5;
  double jmax_fraction = 0.1;
};

struct EthSection {
  NamedEnsemble chaotic{"chaotic", {}};
  NamedEnsemble localized{"localized", {}};
  ObservableSpec observable;
  std::size_t seeds = 20;
  std::size_t q = 200;
};

struct SpectralSection {
  std::optional<TridiagonalMatrix> tri;
  std::optional<EnsembleConfig> ensemble;
  std::size_t order = 0;  // 0 = full size
};

struct CalculatorInput {
  double J = 1, W = 1, Delta = 1;
  std::optional<double> q;
};

struct RunConfig {
  Command command = Command::calculator;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  int figure = 0;
  std::string output_dir = "out";
  bool dump_vectors = false;  // binary Krylov-vector dumps next to the CSVs
  LanczosSection lanczos;
  DiagnosticsSection diagnostics;
  DynamicsSection dynamics;
  std::optional<AndersonSection> anderson;
  std::optional<DipolarSection> dipolar;
  std::optional<EnsembleSection> ensemble;
  std::optional<EthSection> eth;
  std::optional<SpectralSection> spectral;
  std::vector<CalculatorInput> calculator;
  nlohmann::json echo;
};

// Throws ConfigError on malformed or inconsistent input.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);

nlohmann::json preset_json(const std::string& name);
std::vector<std::string> preset_names();

std::string to_string(Command c);

}  // namespace kryloc
