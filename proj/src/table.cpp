#include "fpl/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpl/errors.hpp"

namespace fpl {

using nlohmann::json;

std::string format_number(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "time_us,site,re_alpha,im_alpha,nbar\n";
  for (const auto& s : traj.samples) {
    for (std::size_t j = 0; j < s.alphas.size(); ++j) {
      out += format_number(s.time * 1e6);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += format_number(s.alphas[j].real());
      out += ',';
      out += format_number(s.alphas[j].imag());
      out += ',';
      out += format_number(std::norm(s.alphas[j]));
      out += '\n';
    }
  }
  return out;
}

std::string protocol_csv(const ProtocolResult& result) {
  result.check();
  std::string out;
  for (const auto& a : result.axes) out += a.name + ",";
  out += "nbar";
  if (!result.sem.empty()) out += ",nbar_sem";
  out += '\n';
  const std::size_t n = result.point_count();
  std::vector<std::size_t> strides(result.axes.size(), 1);
  for (std::size_t k = result.axes.size(); k-- > 1;) {
    strides[k - 1] = strides[k] * result.axes[k].values.size();
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < result.axes.size(); ++k) {
      const auto& v = result.axes[k].values;
      out += format_number(v[(i / strides[k]) % v.size()]);
      out += ',';
    }
    out += format_number(result.values[i]);
    if (!result.sem.empty()) {
      out += ',';
      out += format_number(result.sem[i]);
    }
    out += '\n';
  }
  return out;
}

ProtocolResult stack_sweep(const std::string& column, const std::vector<double>& values,
                           const std::vector<ProtocolResult>& results) {
  if (results.empty() || results.size() != values.size()) {
    fail(ErrorKind::Misuse, "sweep needs one result per value");
  }
  ProtocolResult out = results.front();
  out.axes.insert(out.axes.begin(), Axis{column, values});
  out.values.clear();
  out.sem.clear();
  for (auto& [name, v] : out.overlays) v.clear();
  for (const auto& r : results) {
    if (r.values.size() != results.front().values.size() ||
        r.sem.size() != results.front().sem.size()) {
      fail(ErrorKind::Validation, "sweep results differ in shape");
    }
    out.values.insert(out.values.end(), r.values.begin(), r.values.end());
    out.sem.insert(out.sem.end(), r.sem.begin(), r.sem.end());
    for (auto& [name, v] : out.overlays) {
      const auto it = r.overlays.find(name);
      if (it == r.overlays.end()) fail(ErrorKind::Validation, "sweep results differ in overlays");
      v.insert(v.end(), it->second.begin(), it->second.end());
    }
  }
  // Per-value scalars are kept from the first point only when they agree.
  for (auto it = out.scalars.begin(); it != out.scalars.end();) {
    bool same = true;
    for (const auto& r : results) {
      const auto f = r.scalars.find(it->first);
      same = same && f != r.scalars.end() && f->second == it->second;
    }
    it = same ? std::next(it) : out.scalars.erase(it);
  }
  out.check();
  return out;
}

json protocol_meta(const ProtocolResult& result) {
  json meta;
  meta["tool_version"] = kToolVersion;
  meta["kind"] = to_string(result.kind);
  meta["engine"] = to_string(result.engine);
  meta["config_hash"] = hex64(result.config_hash);
  meta["seed"] = result.seed;
  json axes = json::array();
  for (const auto& a : result.axes) axes.push_back({{"name", a.name}, {"size", a.values.size()}});
  meta["axes"] = axes;
  meta["scalars"] = result.scalars;
  meta["warnings"] = result.warnings;
  meta["overlays"] = result.overlays;
  return meta;
}

json effective_model_json(const EffectiveModel& model) {
  json hops = json::array();
  for (const auto& [key, t] : model.hoppings) {
    hops.push_back({{"j", key.first},
                    {"k", key.second},
                    {"magnitude_Hz", std::abs(t) / kTwoPi},
                    {"phase_rad", std::arg(t)}});
  }
  json onsite = json::array();
  for (double d : model.onsite) onsite.push_back(d / kTwoPi);
  return {{"hoppings", hops}, {"onsite_Hz", onsite}, {"modulation_Hz", model.Omega_M / kTwoPi}};
}

json floquet_json(const FloquetResult& result) {
  json qe = json::array();
  for (double q : result.quasi_energies) qe.push_back(q / kTwoPi);
  json out{{"engine", result.engine == FloquetEngine::Envelope ? "envelope" : "position"},
           {"period_us", result.period * 1e6},
           {"quasi_energies_Hz", qe}};
  if (result.engine == FloquetEngine::Envelope) {
    out["unitarity_defect"] = result.unitarity_defect();
  } else {
    out["determinant"] = result.determinant();
  }
  return out;
}

json fit_json(const FitResult& result) {
  json params = json::object();
  for (const auto& p : result.params) {
    // JSON has no infinity; an unbounded value is reported as null.
    params[p.name] = {{"value", std::isfinite(p.value) ? json(p.value) : json(nullptr)},
                      {"sigma", p.sigma}};
  }
  return {{"params", params},
          {"residual_norm", result.residual_norm},
          {"converged", result.converged},
          {"iterations", result.iterations},
          {"flags", result.flags}};
}

bool CsvTable::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) fail(ErrorKind::Config, "CSV has no column '" + name + "'");
  const auto idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (header) {
      table.columns = cells;
      header = false;
      continue;
    }
    if (cells.size() != table.columns.size()) {
      fail(ErrorKind::Config, "CSV line " + std::to_string(lineno) + " has the wrong number of fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0') {
        fail(ErrorKind::Config, "CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) fail(ErrorKind::Config, "CSV is empty");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot move output into place at '" + path + "'");
  }
}

}  // namespace fpl
