#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "photostat/inference.hpp"
#include "photostat/simulator.hpp"
#include "photostat/types.hpp"

namespace photostat {

enum class StreamFormat { kBinary, kCsv, kBoth };

/// Analysis settings of a run (correlation, g2 and HOM fit).
struct AnalysisSection {
  std::int64_t bin_width_ps = 50;
  std::int64_t window_ps = 52'000;
  double center_window = 2.0;   ///< g2 window, ns
  double norm_span = 300.0;     ///< g2 normalisation span, ns
  /// Fixed decay rate for the HOM fit; defaults to emitter.gamma_fast.
  std::optional<double> gamma;
  /// Fixed pulse separation; defaults to schedule.intra_delay.
  std::optional<double> delta;
  /// Coincidence IRF width; defaults to sqrt(2) * chain.irf_sigma.
  std::optional<double> irf_sigma;
  std::optional<double> exclusion_half_width;
  Weighting weighting = Weighting::kModel;
};

/// A complete run description as read from a YAML `.cfg` file with the
/// top-level sections emitter, schedule, chain, cavity, simulation, fit.
struct RunConfig {
  SimConfig sim;
  CavityCoupling cavity;
  AnalysisSection fit;
  std::string output_dir;  ///< empty: use the environment or "."
  StreamFormat format = StreamFormat::kBinary;
  unsigned threads = 1;

  /// HOM fit options implied by the config.
  HomFitOptions hom_fit_options() const;
};

/// Parses and validates a run configuration. Unknown keys, wrong types and
/// violated invariants throw InvalidArgument with "file:line: " prefix;
/// an unreadable file throws IoError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::string& source_name = "<config>");

}  // namespace photostat
