#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brm/ensemble.hpp"
#include "brm/resolvent.hpp"

namespace brm {

enum class Subcommand { semicircle, correlation, scaling, local_scale, theory_table, pointwise };
enum class Model { band, goe };

std::string_view to_string(Subcommand s);
Subcommand parse_subcommand(std::string_view name);
std::string_view to_string(Model m);

/// A fully resolved experiment. Fields not used by the subcommand keep their
/// defaults and are still written back by to_config_text.
struct ExperimentSpec {
  Subcommand command = Subcommand::theory_table;
  Model model = Model::band;
  EnsembleConfig ensemble;
  /// Matrix size of the GOE model (any N >= 2).
  long goe_size = 0;

  long replicas = 1;
  int threads = 0;
  bool dense_oracle = false;

  std::vector<cplx> z1;
  std::vector<cplx> z2;
  /// Scaling grid (matrix sizes N, odd for the band model) and band widths.
  std::vector<long> sizes;
  std::vector<double> bands;
  double L = 2.0;
  std::vector<double> lambda;
  std::vector<double> delta;

  long matrix_size() const { return model == Model::goe ? goe_size : ensemble.N(); }
  /// Throws ConfigError with a one-line reason.
  void validate() const;
};

/// Parses the key-value format documented in the README. Throws ConfigError
/// naming the offending line. `command`, when given, supplies
/// experiment.command or must agree with it.
ExperimentSpec parse_config(std::string_view text, std::optional<Subcommand> command = std::nullopt);

/// Accepts either a config file or a run manifest (JSON with a "config"
/// member holding the effective config text).
ExperimentSpec load_config_file(const std::string& path,
                                std::optional<Subcommand> command = std::nullopt);

/// Canonical config text; parse_config(to_config_text(s)) reproduces s.
std::string to_config_text(const ExperimentSpec& s);

std::string format_double(double x);
std::string format_complex(cplx z);
cplx parse_complex(std::string_view text);

}  // namespace brm
