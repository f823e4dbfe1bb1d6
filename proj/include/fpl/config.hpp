#pragma once

// JSON run configuration. This is the only place where experimentalist
// units (Hz, us, mV, rad) are converted to the internal SI / rad-per-second
// representation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpl/experiments.hpp"
#include "fpl/model.hpp"
#include "json.hpp"

namespace fpl {

struct SweepAxis {
  std::string path;  // dotted path into the config, array indices as numbers
  std::vector<nlohmann::json> values;
  /// Column name used in exported tables (last path component).
  std::string column() const;
};

struct RunConfig {
  nlohmann::json document;  // as parsed; keys are kept sorted
  std::uint64_t hash = 0;   // FNV-1a over the canonical dump

  OscillatorNetwork network;
  DriveSchedule schedule;
  std::optional<IndexCalibration> calibration;
  std::optional<NoiseModel> noise;
  int shots = 200;
  AmplitudeState initial;
  Engine engine = Engine::Envelope;
  std::optional<std::uint64_t> seed;
  double step = 0.0;  // s
  std::string output_dir = ".";
  std::string output_name;
  std::optional<SweepAxis> sweep;

  /// Diagnostics that do not prevent parsing (schedule invariants, missing
  /// seed for noisy runs, calibration shape, sweep path).
  std::vector<Diagnostic> diagnostics;
};

/// Parses a configuration document. Structural problems (missing blocks,
/// wrong types, unknown units) throw Error(Config).
RunConfig parse_config(const nlohmann::json& document);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

std::uint64_t canonical_hash(const nlohmann::json& document);
std::uint64_t fnv1a(const std::string& bytes);

/// Copy of `document` with the value at `path` replaced; Error(Config) when
/// the path does not exist.
nlohmann::json with_path_value(const nlohmann::json& document, const std::string& path,
                               const nlohmann::json& value);
bool path_exists(const nlohmann::json& document, const std::string& path);

/// Options for a protocol run; `seed_override` wins over the config seed.
RunOptions run_options(const RunConfig& cfg, std::optional<Engine> engine_override,
                       std::optional<std::uint64_t> seed_override);

// Protocol blocks under "protocol.<name>".
SpectroscopySpec spectroscopy_spec(const RunConfig& cfg);
ExchangeSpec exchange_spec(const RunConfig& cfg);
PhaseRampSpec phase_ramp_spec(const RunConfig& cfg);
DualScanSpec dual_scan_spec(const RunConfig& cfg);
TwoPathSpec two_path_spec(const RunConfig& cfg);

}  // namespace fpl
