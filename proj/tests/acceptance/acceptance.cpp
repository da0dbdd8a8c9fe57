// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "noonsim/analysis.hpp"
#include "noonsim/fock.hpp"
#include "noonsim/histogram.hpp"
#include "noonsim/interferometer.hpp"
#include "noonsim/montecarlo.hpp"
#include "noonsim/sagnac_circuit.hpp"

using namespace noonsim;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSql = 1.0 / std::numbers::sqrt2;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string &text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char *format, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, format, a, b, c);
  return buffer;
}

std::vector<double> uniform_phases(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
  return out;
}

Outcome reference_visibilities() {
  Outcome o;
  const double xx = v_n2(0.76, 0.89), x = v_n2(0.50, 0.90);
  o.require(std::abs(xx - 0.54) <= 0.01, "XX visibility");
  o.require(std::abs(x - 0.46) <= 0.01, "X visibility");
  o.note(fmt("V_XX=%.4f V_X=%.4f", xx, x));
  return o;
}

Outcome thresholds() {
  Outcome o;
  const auto xx = eta_threshold(0.76, kSql);
  const auto remote = eta_threshold(0.82, kSql);
  o.require(xx && std::abs(*xx - 0.97) <= 0.005, "eta_th(0.76)");
  o.require(remote && std::abs(*remote - 0.95) <= 0.01, "eta_th(0.82)");
  if (xx && remote) o.note(fmt("eta_th(0.76)=%.4f eta_th(0.82)=%.4f", *xx, *remote));
  return o;
}

Outcome limiting_cases() {
  Outcome o;
  o.require(v_n2_perfect_overlap(0.0) == 1.0 / 3.0, "V(V_HOM=0, eta=1) == 1/3");
  const auto ideal = ExperimentParams::with_eta(1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double phi = 2.0 * kPi * i / 20.0;
    worst = std::max(worst, std::abs(p_exp(phi, ideal) - 0.5 * (1.0 + std::cos(2.0 * phi))));
  }
  o.require(worst <= 1e-12, "ideal reduction");
  o.note(fmt("max deviation %.2e over 20 phases", worst));
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  double worst = 0.0;
  int cells = 0;
  for (int i = 0; i <= 8; ++i) {
    const double phi = kPi * i / 4.0;
    for (double v : {0.0, 0.25, 0.5, 0.75, 1.0})
      for (double eta : {0.7, 0.85, 1.0}) {
        const double brute = fock::mixed_pair_coincidence(phi, v, eta, eta);
        worst = std::max(worst, std::abs(brute - p_exp(phi, ExperimentParams::with_eta(v, eta))));
        ++cells;
      }
  }
  o.require(worst <= 1e-10, "fock pipeline vs closed form");
  o.note(fmt("%g grid cells, max |diff| %.2e", cells, worst));
  return o;
}

Outcome histogram_structure() {
  Outcome o;
  const auto ideal = ExperimentParams::with_eta(1.0, 1.0);
  const auto cluster = assemble_train(kPi / 2.0, ideal, 1);
  o.require(cluster.bins.size() == 5, "five peaks per isolated cluster");
  o.require(std::abs(cluster.weight_at(0.0)) <= 1e-15, "zero-delay suppression at pi/2");

  // Harmonics per delay on an isolated-cluster sweep. In the assembled train
  // the +-dt bins also collect the neighbouring clusters' outer peaks.
  const auto phases = uniform_phases(32);
  for (const auto &params : {ideal, biexciton_reference()}) {
    const auto map = phase_sweep_map(phases, params, TrainOptions{1, kDefaultBinWidthNs});
    const double dt = params.delta_t_ns;
    const std::vector<std::pair<double, int>> expected{{-2 * dt, 1}, {-dt, 2}, {0.0, 2}, {dt, 2}, {2 * dt, 1}};
    std::string found;
    for (const auto &[delay, k] : expected) {
      const int got = dominant_harmonic(harmonic_spectrum(phases, map.column(delay), 4));
      o.require(got == k, fmt("harmonic at %.1f ns", delay));
      found += std::to_string(got);
    }
    o.note("harmonics(-2dt..2dt)=" + found);
  }
  // Zero-delay column of the full three-cluster train.
  const auto train = phase_sweep_map(phases, biexciton_reference());
  o.require(dominant_harmonic(harmonic_spectrum(phases, train.column(0.0), 4)) == 2, "train zero-delay harmonic");
  return o;
}

Outcome statistical_round_trip() {
  Outcome o;
  const auto params = biexciton_reference();
  const auto phases = uniform_phases(16);
  AcquisitionConfig acq; // 300 per minute at the maximum, 60 s per point
  const int trials = 200;
  int near_quoted = 0, near_truth = 0;
  const double truth = v_n2(params);
  for (int t = 0; t < trials; ++t) {
    acq.seed = 20000 + static_cast<std::uint64_t>(t);
    const auto fit = fit_fringe(sample_fringe(phases, params, acq));
    if (fit.harmonic == 2 && std::abs(fit.visibility - 0.54) <= 3.0 * fit.sigma_visibility) ++near_quoted;
    if (fit.harmonic == 2 && std::abs(fit.visibility - truth) <= 3.0 * fit.sigma_visibility) ++near_truth;
  }
  o.require(near_quoted >= 190, "within 3 sigma of 0.54 in >= 95%");
  o.require(near_truth >= 190, "within 3 sigma of the generating visibility in >= 95%");
  o.note(fmt("%g/200 within 3 sigma of 0.54, %g/200 of %.4f", near_quoted, near_truth, truth));
  return o;
}

Outcome property_suite() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_state = [&](unsigned photons) {
    std::uniform_int_distribution<unsigned> mode(0, 3), tag(0, 1);
    fock::PhotonState::Terms raw;
    for (int t = 0; t < 3; ++t) {
      std::vector<fock::Occupant> occ;
      for (unsigned p = 0; p < photons; ++p) occ.push_back({{mode(rng)}, {tag(rng)}});
      raw[fock::FockBasisState(occ)] += fock::Complex{u(rng) - 0.5, u(rng) - 0.5};
    }
    double norm = 0.0;
    for (const auto &[b, a] : raw) norm += std::norm(a);
    fock::PhotonState s;
    for (const auto &[b, a] : raw) s.add(b, a / std::sqrt(norm));
    return s;
  };
  auto random_element = [&]() {
    std::uniform_int_distribution<unsigned> pick(0, 3);
    unsigned m0 = pick(rng), m1 = pick(rng);
    while (m1 == m0) m1 = pick(rng);
    switch (static_cast<int>(u(rng) * 3.0)) {
    case 0: return fock::make_beamsplitter({m0}, {m1});
    case 1: return fock::make_phase(2.0 * kPi * u(rng), {m0}, {m1});
    default: return fock::make_overlap(u(rng), {m0}, {m1});
    }
  };

  double unitarity = 0.0, norm = 0.0, sector = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto state = random_state(1 + trial % 4);
    const auto before = state.sector_weights();
    for (int step = 0; step < 8; ++step) {
      const auto elem = random_element();
      unitarity = std::max(unitarity, elem.unitarity_defect());
      state = fock::apply_element(state, elem);
      norm = std::max(norm, std::abs(state.norm_squared() - 1.0));
    }
    const auto after = state.sector_weights();
    for (const auto &[key, w] : before) {
      const auto it = after.find(key);
      sector = std::max(sector, std::abs((it == after.end() ? 0.0 : it->second) - w));
    }
  }
  o.require(unitarity <= fock::kUnitaryTolerance, "unitarity");
  o.require(norm <= fock::kNormTolerance, "norm conservation");
  o.require(sector <= 1e-10, "tag superselection");

  const auto hom = fock::apply_element(fock::PhotonState::create({{{0}, {0}}, {{1}, {0}}}), fock::make_beamsplitter());
  o.require(fock::coincidence_probability(hom, fock::Detector{{{0}}}, fock::Detector{{{1}}}) == 0.0, "HOM dip exact");

  double inversion = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double v = u(rng), eta = 0.3 + 0.7 * u(rng);
    const double minimum = p_exp(kPi / 2.0, ExperimentParams::with_eta(v, eta));
    inversion = std::max(inversion, std::abs((1.0 - 2.0 * minimum) / std::pow(eta, 4) - v));
  }
  o.require(inversion <= 1e-10, "minima inversion");

  AcquisitionConfig acq;
  acq.seed = 99;
  const auto records = sample_fringe(uniform_phases(16), biexciton_reference(), acq);
  const auto a = fit_fringe(records), b = fit_fringe(records);
  o.require(a.offset == b.offset && a.amplitude == b.amplitude && a.phase_offset == b.phase_offset &&
                a.sigma_visibility == b.sigma_visibility,
            "fit determinism");
  o.require(sample_fringe(uniform_phases(16), biexciton_reference(), acq) == records, "sampling determinism");
  o.note(fmt("unitarity %.1e, norm %.1e, sectors %.1e", unitarity, norm, sector));
  return o;
}

struct Criterion {
  int id;
  const char *name;
  double time_limit_s;
  std::function<Outcome()> check;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "reference visibilities", 1.0, reference_visibilities},
      {2, "overlap thresholds", 1.0, thresholds},
      {3, "limiting cases", 1.0, limiting_cases},
      {4, "oracle equivalence", 10.0, oracle_equivalence},
      {5, "histogram structure", 30.0, histogram_structure},
      {6, "statistical round trip", 120.0, statistical_round_trip},
      {7, "property suite", 60.0, property_suite},
  };

  int failed = 0;
  for (const auto &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception &e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.time_limit_s) outcome.require(false, fmt("runtime %.2f s over %.0f s", seconds, c.time_limit_s));
    if (!outcome.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.3f s]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), seconds);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
