// CSV and JSON encodings of simulation products. CSV files carry a one-line
// header and use '.' as decimal separator regardless of locale.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "noonsim/analysis.hpp"
#include "noonsim/histogram.hpp"
#include "noonsim/interferometer.hpp"
#include "noonsim/montecarlo.hpp"

namespace noonsim::io {

using nlohmann::json;

/// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, end);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

inline std::uint64_t parse_count(std::string_view text) {
  const double value = parse_double(text);
  if (!(value >= 0.0) || value != static_cast<double>(static_cast<std::uint64_t>(value)))
    throw std::invalid_argument("not a non-negative integer count: '" + std::string(text) + "'");
  return static_cast<std::uint64_t>(value);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto &f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial file behind.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- parameters ------------------------------------------------------------

inline json to_json(const ExperimentParams &p) {
  return json{{"v_hom", p.v_hom},
              {"eta_prime", p.eta_prime},
              {"eta_dprime", p.eta_dprime},
              {"g2", p.g2},
              {"delta_t_ns", p.delta_t_ns},
              {"rep_period_ns", p.rep_period_ns}};
}

inline ExperimentParams params_from_json(const json &j) {
  ExperimentParams p;
  p.v_hom = j.at("v_hom").get<double>();
  p.eta_prime = j.at("eta_prime").get<double>();
  p.eta_dprime = j.at("eta_dprime").get<double>();
  p.g2 = j.value("g2", 0.0);
  p.delta_t_ns = j.value("delta_t_ns", 4.4);
  p.rep_period_ns = j.value("rep_period_ns", 13.1);
  p.validate();
  return p;
}

inline json to_json(const AcquisitionConfig &a) {
  return json{{"pair_rate_at_max_per_min", a.pair_rate_at_max},
              {"single_rate_per_s", a.single_rate},
              {"integration_time_s", a.integration_time},
              {"seed", a.seed}};
}

inline AcquisitionConfig acquisition_from_json(const json &j) {
  AcquisitionConfig a;
  a.pair_rate_at_max = j.at("pair_rate_at_max_per_min").get<double>();
  a.single_rate = j.at("single_rate_per_s").get<double>();
  a.integration_time = j.at("integration_time_s").get<double>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.validate();
  return a;
}

// ---- count records ---------------------------------------------------------

inline constexpr std::string_view kCountHeader = "phase_rad,coincidences,singles_d1,singles_d2";

inline std::string count_records_csv(const std::vector<CountRecord> &records) {
  std::string out(kCountHeader);
  out += '\n';
  for (const auto &r : records) {
    out += format_double(r.phase) + ',' + std::to_string(r.coincidences) + ',' + std::to_string(r.singles_d1) + ',' +
           std::to_string(r.singles_d2) + '\n';
  }
  return out;
}

/// Accepts the count schema; singles columns are optional.
inline std::vector<CountRecord> parse_count_records_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("count CSV is empty");
  const auto header = split_csv_line(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto phase_col = column("phase_rad");
  const auto coinc_col = column("coincidences");
  if (!phase_col || !coinc_col) throw std::invalid_argument("count CSV needs phase_rad and coincidences columns");
  const auto d1_col = column("singles_d1");
  const auto d2_col = column("singles_d2");

  std::vector<CountRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("count CSV line " + std::to_string(line_no) + ": wrong number of fields");
    CountRecord r;
    r.phase = parse_double(fields[*phase_col]);
    r.coincidences = parse_count(fields[*coinc_col]);
    if (d1_col) r.singles_d1 = parse_count(fields[*d1_col]);
    if (d2_col) r.singles_d2 = parse_count(fields[*d2_col]);
    records.push_back(r);
  }
  if (records.empty()) throw std::invalid_argument("count CSV has no data rows");
  return records;
}

// ---- histograms ------------------------------------------------------------

inline std::string histogram_csv(const DelayHistogram &hist) {
  std::string out = "delay_ns,weight,phase_rad\n";
  for (const auto &b : hist.bins)
    out += format_double(b.delay_ns) + ',' + format_double(b.weight) + ',' + format_double(hist.phase_rad) + '\n';
  return out;
}

inline std::string histogram_csv(const std::vector<HistogramBin> &bins, double phase_rad) {
  std::string out = "delay_ns,weight,phase_rad\n";
  for (const auto &b : bins)
    out += format_double(b.delay_ns) + ',' + format_double(b.weight) + ',' + format_double(phase_rad) + '\n';
  return out;
}

/// One row per phase, one column per bin; bin and phase axes live in the JSON
/// header.
inline std::string phase_map_csv(const PhaseDelayMap &map) {
  std::string out;
  const auto delays = map.bin_delays();
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (i) out += ',';
    out += "bin_" + std::to_string(i);
  }
  out += '\n';
  for (const auto &row : map.rows) {
    for (std::size_t i = 0; i < row.bins.size(); ++i) {
      if (i) out += ',';
      out += format_double(row.bins[i].weight);
    }
    out += '\n';
  }
  return out;
}

inline json phase_map_header(const PhaseDelayMap &map) {
  return json{{"phases_rad", map.phases},
              {"bins_delay_ns", map.bin_delays()},
              {"bin_width_ns", map.rows.empty() ? kDefaultBinWidthNs : map.rows.front().bin_width_ns},
              {"rows", "phase"},
              {"columns", "delay bin"},
              {"weight_units", "coincidence probability per double pulse"}};
}

// ---- fits and inference ----------------------------------------------------

inline json to_json(const FringeFit &f) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"offset", f.offset},
              {"amplitude", f.amplitude},
              {"harmonic", f.harmonic},
              {"phase_offset_rad", f.phase_offset},
              {"visibility", f.visibility},
              {"sigma_offset", f.sigma_offset},
              {"sigma_amplitude", f.sigma_amplitude},
              {"sigma_phase_offset_rad", finite_or_null(f.sigma_phase_offset)},
              {"sigma_visibility", f.sigma_visibility},
              {"chi2", f.chi2},
              {"points", f.points},
              {"iterations", f.iterations}};
}

inline json to_json(const Estimate &e) {
  return json{{"value", e.value}, {"sigma", e.sigma}, {"physical", e.physical}};
}

inline json to_json(const InferenceResult &r) {
  auto margin = std::isfinite(r.verdict.margin) ? json(r.verdict.margin) : json(r.verdict.margin > 0 ? "inf" : "-inf");
  return json{{"v_hom", to_json(r.v_hom_est)},
              {"eta", to_json(r.eta_est)},
              {"eta_th", r.eta_th ? json(*r.eta_th) : json(nullptr)},
              {"sql_threshold", r.verdict.threshold},
              {"beats_sql", r.verdict.beats_sql},
              {"sql_margin_sigma", margin}};
}

// ---- visibility surface ----------------------------------------------------

/// First column is eta, remaining columns are v_hom grid values.
inline std::string surface_csv(const VisibilitySurface &s) {
  std::string out = "eta\\v_hom";
  for (double v : s.v_hom_grid) out += ',' + format_double(v);
  out += '\n';
  for (std::size_t r = 0; r < s.eta_grid.size(); ++r) {
    out += format_double(s.eta_grid[r]);
    for (double v : s.values[r]) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

inline json surface_marks(const VisibilitySurface &s) {
  json contour = json::array();
  for (std::size_t i = 0; i < s.v_hom_grid.size(); ++i)
    contour.push_back({{"v_hom", s.v_hom_grid[i]}, {"eta_th", s.contour[i] ? json(*s.contour[i]) : json(nullptr)}});
  json refs = json::array();
  for (const auto &r : s.references)
    refs.push_back({{"label", r.label},
                    {"v_hom", r.v_hom},
                    {"eta", r.eta},
                    {"v_n2", r.v_n2},
                    {"above_threshold", r.above_threshold}});
  return json{{"sql_threshold", s.threshold}, {"contour", contour}, {"reference_points", refs}};
}

} // namespace noonsim::io
