// noonsim: command-line front end for fringe tables, delay histograms,
// synthetic count data, fringe fits and visibility surfaces.
//
// Every command writes its outputs atomically plus a `<out>.config.json`
// sidecar; `--config <sidecar>` replays a run byte-for-byte.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noonsim/analysis.hpp"
#include "noonsim/histogram.hpp"
#include "noonsim/interferometer.hpp"
#include "noonsim/io.hpp"
#include "noonsim/montecarlo.hpp"

namespace {

using nlohmann::json;
using namespace noonsim;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct PhaseGrid {
  double min_rad = 0.0;
  double max_rad = 2.0 * std::numbers::pi;
  std::size_t points = 33;
  bool endpoint = true;

  std::vector<double> values() const {
    if (points == 0) throw std::invalid_argument("phase grid needs at least one point");
    if (!std::isfinite(min_rad) || !std::isfinite(max_rad)) throw std::invalid_argument("phase range must be finite");
    std::vector<double> out(points);
    if (points == 1) {
      out[0] = min_rad;
      return out;
    }
    const double span = max_rad - min_rad;
    const double steps = static_cast<double>(endpoint ? points - 1 : points);
    for (std::size_t i = 0; i < points; ++i) out[i] = min_rad + span * static_cast<double>(i) / steps;
    return out;
  }
};

struct RunConfig {
  std::string command;
  ExperimentParams params = biexciton_reference();
  AcquisitionConfig acquisition;
  PhaseGrid grid;
  // histogram
  double phi_rad = 0.0;
  std::size_t periods = 3;
  double bin_ns = kDefaultBinWidthNs;
  double jitter_ns = 0.0;
  std::size_t sweep_points = 0;
  // fit
  std::string input;
  std::string harmonic = "auto";
  unsigned photons = 2;
  bool eta_from_singles = false;
  // surface
  std::size_t vhom_points = 101;
  std::size_t eta_points = 101;
  bool mark_sql = false;

  std::string out;
};

json to_json(const RunConfig &c) {
  json j{{"command", c.command}, {"params", io::to_json(c.params)}, {"out", c.out}, {"units", {{"angles", "rad"}, {"times", "ns"}}}};
  const json grid{{"min_rad", c.grid.min_rad},
                  {"max_rad", c.grid.max_rad},
                  {"points", c.grid.points},
                  {"endpoint", c.grid.endpoint}};
  if (c.command == "fringe") j["grid"] = grid;
  if (c.command == "histogram")
    j["histogram"] = {{"phi_rad", c.phi_rad},
                      {"periods", c.periods},
                      {"bin_ns", c.bin_ns},
                      {"jitter_ns", c.jitter_ns},
                      {"sweep_points", c.sweep_points},
                      {"grid", grid}};
  if (c.command == "mc") {
    j["grid"] = grid;
    j["acquisition"] = io::to_json(c.acquisition);
  }
  if (c.command == "fit")
    j["fit"] = {{"input", c.input}, {"harmonic", c.harmonic}, {"photons", c.photons}, {"eta_from_singles", c.eta_from_singles}};
  if (c.command == "surface")
    j["surface"] = {{"vhom_points", c.vhom_points}, {"eta_points", c.eta_points}, {"mark_sql", c.mark_sql}, {"photons", c.photons}};
  return j;
}

PhaseGrid grid_from_json(const json &j) {
  PhaseGrid g;
  g.min_rad = j.at("min_rad").get<double>();
  g.max_rad = j.at("max_rad").get<double>();
  g.points = j.at("points").get<std::size_t>();
  g.endpoint = j.at("endpoint").get<bool>();
  return g;
}

RunConfig config_from_json(const json &j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.params = io::params_from_json(j.at("params"));
  c.out = j.at("out").get<std::string>();
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
  if (j.contains("acquisition")) c.acquisition = io::acquisition_from_json(j.at("acquisition"));
  if (j.contains("histogram")) {
    const auto &h = j.at("histogram");
    c.phi_rad = h.at("phi_rad").get<double>();
    c.periods = h.at("periods").get<std::size_t>();
    c.bin_ns = h.at("bin_ns").get<double>();
    c.jitter_ns = h.at("jitter_ns").get<double>();
    c.sweep_points = h.at("sweep_points").get<std::size_t>();
    c.grid = grid_from_json(h.at("grid"));
  }
  if (j.contains("fit")) {
    const auto &f = j.at("fit");
    c.input = f.at("input").get<std::string>();
    c.harmonic = f.at("harmonic").get<std::string>();
    c.photons = f.at("photons").get<unsigned>();
    c.eta_from_singles = f.at("eta_from_singles").get<bool>();
  }
  if (j.contains("surface")) {
    const auto &s = j.at("surface");
    c.vhom_points = s.at("vhom_points").get<std::size_t>();
    c.eta_points = s.at("eta_points").get<std::size_t>();
    c.mark_sql = s.at("mark_sql").get<bool>();
    c.photons = s.at("photons").get<unsigned>();
  }
  return c;
}

// Raw command-line values before unit conversion and defaults.
struct CliInputs {
  std::optional<double> vhom, eta, eta_prime, eta_dprime, g2, dt_ns, rep_ns;
  std::optional<std::uint64_t> seed;
  std::optional<double> phase_min, phase_max, phi;
  bool degrees = false;
  bool no_endpoint = false;
  std::string config;
  std::optional<std::string> out;
};

struct Output {
  std::filesystem::path path;
  std::string content;
};

std::vector<double> linspace01(std::size_t points) {
  if (points < 2) throw std::invalid_argument("surface grids need at least 2 points");
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) out[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

std::string sidecar_path(const std::string &out) { return out + ".config.json"; }

std::vector<Output> run_fringe(const RunConfig &c) {
  std::string csv = "phase_rad,p_exp,p_single_d1,p_single_d2\n";
  for (double phi : c.grid.values())
    csv += io::format_double(phi) + ',' + io::format_double(p_exp(phi, c.params)) + ',' +
           io::format_double(p_single(phi, c.params, DetectorId::D1)) + ',' +
           io::format_double(p_single(phi, c.params, DetectorId::D2)) + '\n';
  return {{c.out, csv}};
}

std::vector<Output> run_histogram(const RunConfig &c) {
  c.params.validate();
  const std::string header_path = c.out + ".header.json";
  if (c.sweep_points > 0) {
    auto grid = c.grid;
    grid.points = c.sweep_points;
    const auto phases = grid.values();
    const auto map = phase_sweep_map(phases, c.params, TrainOptions{c.periods, c.bin_ns});
    auto header = io::phase_map_header(map);
    header["periods"] = c.periods;
    return {{c.out, io::phase_map_csv(map)}, {header_path, header.dump(2) + "\n"}};
  }
  const auto hist = assemble_train(c.phi_rad, c.params, c.periods, c.bin_ns);
  json header{{"phase_rad", c.phi_rad},
              {"bin_width_ns", c.bin_ns},
              {"periods", c.periods},
              {"cluster_offsets", cluster_offsets(c.periods)},
              {"outer_peaks_merge", outer_peaks_merge(c.params, c.bin_ns)},
              {"jitter_ns", c.jitter_ns}};
  std::string csv;
  if (c.jitter_ns > 0.0) {
    const double reach = (static_cast<double>(c.periods) / 2.0 + 1.0) * c.params.rep_period_ns;
    csv = io::histogram_csv(rasterize(hist, c.bin_ns, -reach, reach, c.jitter_ns), c.phi_rad);
  } else {
    csv = io::histogram_csv(hist);
    std::vector<double> delays;
    for (const auto &b : hist.bins) delays.push_back(b.delay_ns);
    header["bins_delay_ns"] = delays;
  }
  return {{c.out, csv}, {header_path, header.dump(2) + "\n"}};
}

std::vector<Output> run_mc(const RunConfig &c) {
  const auto records = sample_fringe(c.grid.values(), c.params, c.acquisition);
  return {{c.out, io::count_records_csv(records)}};
}

std::vector<Output> run_fit(const RunConfig &c) {
  if (c.input.empty()) throw std::invalid_argument("fit: --in is required");
  const auto records = io::parse_count_records_csv(io::read_file(c.input));
  std::optional<int> harmonic;
  if (c.harmonic == "1" || c.harmonic == "2")
    harmonic = std::stoi(c.harmonic);
  else if (c.harmonic != "auto")
    throw std::invalid_argument("fit: --harmonic must be auto, 1 or 2");

  const auto fit = fit_fringe(records, harmonic);
  json report{{"input", c.input}, {"coincidences", io::to_json(fit)}, {"params", io::to_json(c.params)}};

  std::vector<double> phases, d1, d2;
  bool has_singles = false;
  for (const auto &r : records) {
    phases.push_back(r.phase);
    d1.push_back(static_cast<double>(r.singles_d1));
    d2.push_back(static_cast<double>(r.singles_d2));
    has_singles = has_singles || r.singles_d1 > 0 || r.singles_d2 > 0;
  }
  std::optional<FringeFit> single_fit;
  if (has_singles) {
    single_fit = fit_fringe(phases, d1, 1);
    report["singles_d1"] = io::to_json(*single_fit);
    report["singles_d2"] = io::to_json(fit_fringe(phases, d2, 1));
  }

  if (fit.harmonic == 2) {
    Estimate eta{c.params.eta(), 0.0, true};
    std::string eta_source = "params";
    if (c.eta_from_singles) {
      if (!single_fit) throw std::invalid_argument("fit: --eta-from-singles needs singles columns");
      eta = eta_from_single_fringe(*single_fit);
      eta_source = "singles_d1 visibility";
    }
    auto inference = io::to_json(infer(fit, eta, c.photons, c.params.g2));
    inference["eta_source"] = eta_source;
    report["inference"] = inference;
  } else {
    const auto verdict = sql_verdict(fit, c.photons);
    report["inference"] = {{"note", "harmonic 1 fringe: no N00N inference"},
                           {"sql_threshold", verdict.threshold},
                           {"beats_sql", verdict.beats_sql}};
  }
  report["super_resolution"] = fit.harmonic == 2;
  return {{c.out, report.dump(2) + "\n"}};
}

std::vector<Output> run_surface(const RunConfig &c) {
  const auto v_grid = linspace01(c.vhom_points);
  const auto e_grid = linspace01(c.eta_points);
  const auto surface = visibility_surface(v_grid, e_grid, c.photons);
  std::vector<Output> outputs{{c.out, io::surface_csv(surface)}};
  if (c.mark_sql) outputs.push_back({c.out + ".marks.json", io::surface_marks(surface).dump(2) + "\n"});
  return outputs;
}

std::vector<Output> dispatch(const RunConfig &c) {
  if (c.command == "fringe") return run_fringe(c);
  if (c.command == "histogram") return run_histogram(c);
  if (c.command == "mc") return run_mc(c);
  if (c.command == "fit") return run_fit(c);
  if (c.command == "surface") return run_surface(c);
  throw std::invalid_argument("unknown command '" + c.command + "'");
}

std::string default_out(const std::string &command) {
  if (command == "mc") return "counts.csv";
  if (command == "fit") return "fit.json";
  return command + ".csv";
}

void add_shared_options(CLI::App *sub, CliInputs &in) {
  sub->add_option("--vhom", in.vhom, "two-photon interference visibility V_HOM (default 0.76)");
  sub->add_option("--eta", in.eta, "combined mode overlap; sets eta' = eta'' (default 0.89)");
  sub->add_option("--eta-prime", in.eta_prime, "mode overlap at the first BS pass");
  sub->add_option("--eta-dprime", in.eta_dprime, "mode overlap at the recombining BS pass");
  sub->add_option("--g2", in.g2, "multi-photon background g2(0) (default 0)");
  sub->add_option("--dt-ns", in.dt_ns, "pulse separation in ns (default 4.4)");
  sub->add_option("--rep-ns", in.rep_ns, "laser repetition period in ns (default 13.1)");
  sub->add_option("--seed", in.seed, "random seed (fallback: NOONSIM_SEED, then 1)");
  sub->add_option("--out", in.out, "output path (default " + default_out(sub->get_name()) + ")");
  sub->add_flag("--degrees", in.degrees, "angles on the command line are in degrees");
  sub->add_option("--config", in.config, "replay a run from its config sidecar");
}

void add_grid_options(CLI::App *sub, CliInputs &in, RunConfig &cfg) {
  sub->add_option("--phase-points", cfg.grid.points, "number of phase points")->capture_default_str();
  sub->add_option("--phase-min", in.phase_min, "first phase (default 0)");
  sub->add_option("--phase-max", in.phase_max, "last phase (default 2 pi)");
  sub->add_flag("--no-endpoint", in.no_endpoint, "exclude the last phase from the grid");
}

RunConfig resolve(RunConfig cfg, const CliInputs &in, const std::string &command) {
  const double to_rad = in.degrees ? std::numbers::pi / 180.0 : 1.0;
  if (!in.config.empty()) {
    auto loaded = config_from_json(json::parse(io::read_file(in.config)));
    if (loaded.command != command)
      throw std::invalid_argument("config sidecar is for '" + loaded.command + "', not '" + command + "'");
    if (in.out) loaded.out = *in.out;
    return loaded;
  }
  cfg.command = command;
  cfg.out = in.out.value_or(default_out(command));
  auto &p = cfg.params;
  if (in.vhom) p.v_hom = *in.vhom;
  if (in.eta) p.eta_prime = p.eta_dprime = *in.eta;
  if (in.eta_prime) p.eta_prime = *in.eta_prime;
  if (in.eta_dprime) p.eta_dprime = *in.eta_dprime;
  if (in.g2) p.g2 = *in.g2;
  if (in.dt_ns) p.delta_t_ns = *in.dt_ns;
  if (in.rep_ns) p.rep_period_ns = *in.rep_ns;
  p.validate();

  if (in.seed) {
    cfg.acquisition.seed = *in.seed;
  } else if (const char *env = std::getenv("NOONSIM_SEED"); env && *env) {
    try {
      cfg.acquisition.seed = std::stoull(env);
    } catch (const std::exception &) {
      throw std::invalid_argument("NOONSIM_SEED is not an unsigned integer");
    }
  }

  if (in.phase_min) cfg.grid.min_rad = *in.phase_min * to_rad;
  if (in.phase_max) cfg.grid.max_rad = *in.phase_max * to_rad;
  else if (in.degrees) cfg.grid.max_rad = 2.0 * std::numbers::pi;
  cfg.grid.endpoint = !in.no_endpoint;
  if (in.phi) cfg.phi_rad = *in.phi * to_rad;
  return cfg;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"noonsim: two-photon N00N interferometer simulator"};
  app.require_subcommand(1);

  RunConfig cfg;
  CliInputs in;

  auto *fringe = app.add_subcommand("fringe", "coincidence and single-photon fringes over a phase grid");
  auto *histogram = app.add_subcommand("histogram", "time-delay coincidence histogram or phase-delay map");
  auto *mc = app.add_subcommand("mc", "Poisson-sampled count records over a phase grid");
  auto *fit = app.add_subcommand("fit", "fit a count CSV and report visibilities and inference");
  auto *surface = app.add_subcommand("surface", "N00N visibility over the (V_HOM, eta) plane");

  add_shared_options(fringe, in);
  add_grid_options(fringe, in, cfg);

  add_shared_options(histogram, in);
  add_grid_options(histogram, in, cfg);
  histogram->add_option("--phi", in.phi, "phase (default 0)");
  histogram->add_option("--periods", cfg.periods, "number of clusters")->capture_default_str();
  histogram->add_option("--bin-ns", cfg.bin_ns, "bin width in ns")->capture_default_str();
  histogram->add_option("--jitter-ns", cfg.jitter_ns, "Gaussian timing jitter sigma in ns")->capture_default_str();
  histogram->add_option("--sweep", cfg.sweep_points, "write a phase-delay map over this many phases");

  add_shared_options(mc, in);
  add_grid_options(mc, in, cfg);
  mc->add_option("--rate-per-min", cfg.acquisition.pair_rate_at_max, "zero-delay coincidences per minute at the maximum")
      ->capture_default_str();
  mc->add_option("--singles-per-s", cfg.acquisition.single_rate, "single-photon rate per second")->capture_default_str();
  mc->add_option("--integration-s", cfg.acquisition.integration_time, "seconds per phase point")->capture_default_str();

  add_shared_options(fit, in);
  fit->add_option("--in", cfg.input, "count CSV (phase_rad, coincidences[, singles_d1, singles_d2])");
  fit->add_option("--harmonic", cfg.harmonic, "auto, 1 or 2")->capture_default_str();
  fit->add_option("--photons", cfg.photons, "photon number for the SQL verdict")->capture_default_str();
  fit->add_flag("--eta-from-singles", cfg.eta_from_singles, "take eta from the singles_d1 fringe visibility");

  add_shared_options(surface, in);
  surface->add_option("--vhom-points", cfg.vhom_points, "grid points along V_HOM")->capture_default_str();
  surface->add_option("--eta-points", cfg.eta_points, "grid points along eta")->capture_default_str();
  surface->add_option("--photons", cfg.photons, "photon number for the SQL threshold")->capture_default_str();
  surface->add_flag("--mark-sql", cfg.mark_sql, "write the SQL contour and reference points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  std::string command;
  for (auto *sub : {fringe, histogram, mc, fit, surface})
    if (sub->parsed()) command = sub->get_name();

  try {
    const RunConfig run = resolve(cfg, in, command);
    auto outputs = dispatch(run);
    outputs.push_back({sidecar_path(run.out), to_json(run).dump(2) + "\n"});
    for (const auto &o : outputs) io::write_atomic(o.path, o.content);
    for (const auto &o : outputs) std::cout << o.path.string() << '\n';
  } catch (const std::invalid_argument &e) {
    std::cerr << "noonsim: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "noonsim: bad config: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "noonsim: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
