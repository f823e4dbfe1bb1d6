#pragma once

// CSV / JSON export and import. Numbers are written with 12 significant
// digits and LF line endings so that identical runs give identical bytes.

#include <map>
#include <string>
#include <vector>

#include "fpl/experiments.hpp"
#include "fpl/fit.hpp"
#include "fpl/floquet.hpp"
#include "fpl/rwa.hpp"
#include "fpl/state.hpp"
#include "json.hpp"

namespace fpl {

inline constexpr const char* kToolVersion = "0.3.0";

std::string format_number(double x);
std::string hex64(std::uint64_t x);

/// Header `time_us,site,re_alpha,im_alpha,nbar`; one row per sample and site.
std::string trajectory_csv(const Trajectory& traj);

/// Axis columns followed by `nbar` (and `nbar_sem` when shot noise was
/// averaged). Rows follow the row-major value order.
std::string protocol_csv(const ProtocolResult& result);

/// Prepends a sweep axis to per-value results of identical shape.
ProtocolResult stack_sweep(const std::string& column, const std::vector<double>& values,
                           const std::vector<ProtocolResult>& results);

/// Sidecar metadata: config hash, seed, engine, tool version, scalars,
/// warnings and analytic overlays.
nlohmann::json protocol_meta(const ProtocolResult& result);

nlohmann::json effective_model_json(const EffectiveModel& model);
nlohmann::json floquet_json(const FloquetResult& result);
nlohmann::json fit_json(const FitResult& result);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Values of one column; Error(Config) when missing.
  std::vector<double> column(const std::string& name) const;
  bool has(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Writes through a temporary file and a rename so that failures never
/// leave partial output. Throws Error(Io).
void write_file(const std::string& path, const std::string& content);

}  // namespace fpl
