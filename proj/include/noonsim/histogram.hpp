// Time-resolved D1 x D2 coincidence histogram of the double-pulse
// experiment.
//
// Two photons are emitted dt apart. Each takes the short arm (input port a)
// or the long arm (+dt, port b) of the unbalanced MZI with probability 1/2,
// giving four path combinations and five arrival-time differences
// {-2, -1, 0, +1, +2} dt. Each combination is propagated through the
// Sagnac circuit with time-tagged photons; only simultaneous arrivals from
// the same double pulse can interfere. Delay sign: t(D2) - t(D1).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "noonsim/fock.hpp"
#include "noonsim/interferometer.hpp"
#include "noonsim/sagnac_circuit.hpp"

namespace noonsim {

inline constexpr double kDefaultBinWidthNs = 0.5;

struct PulsePair {
  double t0_ns = 0.0;
  double dt_ns = 4.4;

  void validate() const {
    if (!(dt_ns > 0.0)) throw std::invalid_argument("PulsePair: dt must be > 0");
  }
};

struct Peak {
  double delay_ns = 0.0;
  double weight = 0.0;
};

using ClusterPeaks = std::array<Peak, 5>;

enum class ClusterKind {
  SameCycle,  // both photons from one double pulse; simultaneous arrivals interfere
  CrossCycle, // photons from different excitation cycles; no two-photon interference
};

struct ClusterTotals {
  double coincidences = 0.0;  // one photon on each detector, all delays
  double same_detector = 0.0; // both photons on D1 or both on D2
};

namespace detail {

// Arrival slot (units of dt) and input port of one photon.
struct Arrival {
  int slot;
  fock::SpatialMode port;
};

// Tag label encodes the arrival slot; `copy` separates distinguishable
// photons that share a slot.
inline fock::DistTag time_tag(int slot, unsigned copy) { return fock::DistTag{static_cast<unsigned>(2 * slot) + copy}; }
inline int tag_slot(fock::DistTag tag) { return static_cast<int>(tag.label / 2); }

template <class Visit>
void for_each_path_combination(const fock::SagnacCircuit &circuit, Visit &&visit) {
  for (int long1 = 0; long1 < 2; ++long1)
    for (int long2 = 0; long2 < 2; ++long2) {
      Arrival first{0 + long1, long1 ? circuit.port_b : circuit.port_a};
      Arrival second{1 + long2, long2 ? circuit.port_b : circuit.port_a};
      visit(first, second, 0.25);
    }
}

// Accumulates delay-resolved coincidences of a propagated two-photon state.
inline void bin_coincidences(const fock::PhotonState &out, const fock::SagnacCircuit &circuit, double weight,
                             std::array<double, 5> &delays, ClusterTotals &totals) {
  for (const auto &[basis, amp] : out.terms()) {
    const double p = weight * std::norm(amp);
    const auto photons = basis.photons();
    if (photons.size() != 2) continue;
    const bool first_d1 = circuit.d1.covers(photons[0].mode);
    const bool second_d1 = circuit.d1.covers(photons[1].mode);
    if (first_d1 == second_d1) {
      totals.same_detector += p;
      continue;
    }
    const auto &on_d1 = first_d1 ? photons[0] : photons[1];
    const auto &on_d2 = first_d1 ? photons[1] : photons[0];
    const int delay = tag_slot(on_d2.tag) - tag_slot(on_d1.tag);
    delays[static_cast<std::size_t>(delay + 2)] += p;
    totals.coincidences += p;
  }
}

} // namespace detail

/// Five-peak cluster on an arbitrary circuit (used for the Sagnac network and
/// for the single-beamsplitter reference).
inline ClusterPeaks cluster_peaks_on(const fock::SagnacCircuit &circuit, double v_hom, double delta_t_ns,
                                     ClusterKind kind = ClusterKind::SameCycle, ClusterTotals *totals = nullptr) {
  std::array<double, 5> delays{};
  ClusterTotals sums;
  detail::for_each_path_combination(circuit, [&](detail::Arrival first, detail::Arrival second, double weight) {
    auto run = [&](unsigned copy_second, double mixture) {
      if (mixture == 0.0) return;
      auto in = fock::PhotonState::create(
          {{first.port, detail::time_tag(first.slot, 0)}, {second.port, detail::time_tag(second.slot, copy_second)}});
      detail::bin_coincidences(fock::propagate(circuit, std::move(in)), circuit, weight * mixture, delays, sums);
    };
    if (first.slot == second.slot && kind == ClusterKind::SameCycle) {
      run(0, v_hom);
      run(1, 1.0 - v_hom);
    } else {
      run(1, 1.0);
    }
  });

  if (totals) *totals = sums;
  ClusterPeaks peaks;
  for (std::size_t i = 0; i < 5; ++i)
    peaks[i] = Peak{(static_cast<double>(i) - 2.0) * delta_t_ns, delays[i]};
  return peaks;
}

/// Five (delay, weight) peaks of one isolated cluster. The g2 floor, when
/// enabled, lands on the zero-delay peak of same-cycle clusters.
inline ClusterPeaks cluster_peaks(double phi, const ExperimentParams &params,
                                  ClusterKind kind = ClusterKind::SameCycle, ClusterTotals *totals = nullptr) {
  require_finite(phi);
  params.validate();
  const auto circuit = fock::build_sagnac_circuit(phi, params.eta_prime, params.eta_dprime);
  auto peaks = cluster_peaks_on(circuit, params.v_hom, params.delta_t_ns, kind, totals);
  if (kind == ClusterKind::SameCycle) peaks[2].weight += 0.25 * background_floor(params);
  return peaks;
}

struct HistogramBin {
  double delay_ns = 0.0;
  double weight = 0.0;
};

struct DelayHistogram {
  double bin_width_ns = kDefaultBinWidthNs;
  double phase_rad = 0.0;
  std::vector<HistogramBin> bins; // sorted by delay

  double total() const {
    double sum = 0.0;
    for (const auto &b : bins) sum += b.weight;
    return sum;
  }

  /// Bin whose center lies within half a bin width of `delay_ns`.
  const HistogramBin *find(double delay_ns) const {
    const HistogramBin *best = nullptr;
    for (const auto &b : bins)
      if (std::abs(b.delay_ns - delay_ns) < bin_width_ns &&
          (!best || std::abs(b.delay_ns - delay_ns) < std::abs(best->delay_ns - delay_ns)))
        best = &b;
    return best;
  }

  double weight_at(double delay_ns) const {
    const auto *b = find(delay_ns);
    return b ? b->weight : 0.0;
  }
};

/// Groups peaks closer than `bin_width_ns` (single linkage on sorted delays).
/// Bin position is the unweighted mean of its members, so it does not move
/// with phase.
inline DelayHistogram bin_peaks(std::vector<Peak> peaks, double bin_width_ns, double phase_rad = 0.0) {
  if (!(bin_width_ns > 0.0)) throw std::invalid_argument("bin width must be > 0");
  std::sort(peaks.begin(), peaks.end(), [](const Peak &a, const Peak &b) { return a.delay_ns < b.delay_ns; });
  DelayHistogram hist{bin_width_ns, phase_rad, {}};
  std::size_t i = 0;
  while (i < peaks.size()) {
    std::size_t j = i + 1;
    while (j < peaks.size() && peaks[j].delay_ns - peaks[j - 1].delay_ns < bin_width_ns) ++j;
    double delay = 0.0, weight = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      delay += peaks[k].delay_ns;
      weight += peaks[k].weight;
    }
    hist.bins.push_back({delay / static_cast<double>(j - i), weight});
    i = j;
  }
  return hist;
}

/// Cluster offsets in repetition periods: n=1 -> {0}, n=2 -> {0, 1},
/// n=3 -> {-1, 0, 1}, ...
inline std::vector<int> cluster_offsets(std::size_t n_periods) {
  if (n_periods == 0) throw std::invalid_argument("n_periods must be >= 1");
  const int n = static_cast<int>(n_periods);
  std::vector<int> offsets;
  for (int k = -((n - 1) / 2); k <= n / 2; ++k) offsets.push_back(k);
  return offsets;
}

/// True when the outer peak of one cluster and the inner peak of its
/// neighbour fall into one bin.
inline bool outer_peaks_merge(const ExperimentParams &params, double bin_width_ns = kDefaultBinWidthNs) {
  return std::abs(2.0 * params.delta_t_ns - (params.rep_period_ns - params.delta_t_ns)) < bin_width_ns;
}

/// Train of clusters spaced by the repetition period and summed. The central
/// cluster carries the two-photon interference; the others are cross-cycle
/// accidentals.
inline DelayHistogram assemble_train(double phi, const ExperimentParams &params, std::size_t n_periods,
                                     double bin_width_ns = kDefaultBinWidthNs) {
  const auto offsets = cluster_offsets(n_periods);
  const auto same = cluster_peaks(phi, params, ClusterKind::SameCycle);
  std::vector<Peak> all;
  bool need_cross = offsets.size() > 1;
  ClusterPeaks cross{};
  if (need_cross) cross = cluster_peaks(phi, params, ClusterKind::CrossCycle);
  for (int k : offsets) {
    const auto &cluster = k == 0 ? same : cross;
    for (const auto &p : cluster) all.push_back({p.delay_ns + k * params.rep_period_ns, p.weight});
  }
  return bin_peaks(std::move(all), bin_width_ns, phi);
}

struct TrainOptions {
  std::size_t n_periods = 3;
  double bin_width_ns = kDefaultBinWidthNs;
};

struct PhaseDelayMap {
  std::vector<double> phases;
  std::vector<DelayHistogram> rows;

  std::vector<double> bin_delays() const {
    std::vector<double> delays;
    if (!rows.empty())
      for (const auto &b : rows.front().bins) delays.push_back(b.delay_ns);
    return delays;
  }

  /// Weight of the bin near `delay_ns` for every phase.
  std::vector<double> column(double delay_ns) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &row : rows) out.push_back(row.weight_at(delay_ns));
    return out;
  }
};

inline PhaseDelayMap phase_sweep_map(std::span<const double> phases, const ExperimentParams &params,
                                     const TrainOptions &options = {}) {
  if (phases.empty()) throw std::invalid_argument("phase_sweep_map: phase list is empty");
  PhaseDelayMap map;
  map.phases.assign(phases.begin(), phases.end());
  map.rows.reserve(phases.size());
  for (double phi : phases) map.rows.push_back(assemble_train(phi, params, options.n_periods, options.bin_width_ns));
  return map;
}

/// Renders a histogram on a uniform grid [lo, hi) of width `grid_ns`,
/// optionally smeared by Gaussian timing jitter `sigma_ns`.
inline std::vector<HistogramBin> rasterize(const DelayHistogram &hist, double grid_ns, double lo_ns, double hi_ns,
                                           double sigma_ns = 0.0) {
  if (!(grid_ns > 0.0) || !(hi_ns > lo_ns)) throw std::invalid_argument("rasterize: invalid grid");
  if (!(sigma_ns >= 0.0)) throw std::invalid_argument("rasterize: jitter must be >= 0");
  const auto cells = static_cast<std::size_t>(std::ceil((hi_ns - lo_ns) / grid_ns));
  std::vector<HistogramBin> grid(cells);
  for (std::size_t i = 0; i < cells; ++i) grid[i].delay_ns = lo_ns + (static_cast<double>(i) + 0.5) * grid_ns;

  for (const auto &b : hist.bins) {
    if (sigma_ns == 0.0) {
      const double pos = (b.delay_ns - lo_ns) / grid_ns;
      if (pos >= 0.0 && pos < static_cast<double>(cells)) grid[static_cast<std::size_t>(pos)].weight += b.weight;
      continue;
    }
    const double scale = 1.0 / (sigma_ns * std::numbers::sqrt2);
    for (std::size_t i = 0; i < cells; ++i) {
      const double left = lo_ns + static_cast<double>(i) * grid_ns - b.delay_ns;
      const double frac = 0.5 * (std::erf((left + grid_ns) * scale) - std::erf(left * scale));
      grid[i].weight += b.weight * frac;
    }
  }
  return grid;
}

} // namespace noonsim
