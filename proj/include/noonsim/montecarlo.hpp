// Synthetic finite-statistics detector data drawn from the closed-form laws.
//
// Every phase point (or histogram bin) owns its own engine seeded from
// (seed, stream, index), so results do not depend on evaluation order.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "noonsim/histogram.hpp"
#include "noonsim/interferometer.hpp"

namespace noonsim {

struct AcquisitionConfig {
  double pair_rate_at_max = 300.0;  // zero-delay coincidences per minute at the fringe maximum
  double single_rate = 1.0e4;       // single-photon counts per second, D1 + D2
  double integration_time = 60.0;   // seconds per phase point
  std::uint64_t seed = 1;

  void validate() const {
    if (!(pair_rate_at_max > 0.0) || !(single_rate > 0.0) || !(integration_time > 0.0) ||
        !std::isfinite(pair_rate_at_max) || !std::isfinite(single_rate) || !std::isfinite(integration_time))
      throw std::invalid_argument("AcquisitionConfig: rates and integration time must be positive");
  }

  double expected_pairs_at_max() const { return pair_rate_at_max / 60.0 * integration_time; }
};

struct CountRecord {
  double phase = 0.0;
  std::uint64_t coincidences = 0;
  std::uint64_t singles_d1 = 0;
  std::uint64_t singles_d2 = 0;

  friend bool operator==(const CountRecord &, const CountRecord &) = default;
};

namespace detail {

enum class Stream : std::uint32_t { Fringe = 1, Histogram = 2 };

inline std::mt19937_64 point_engine(std::uint64_t seed, Stream stream, std::size_t index, std::uint64_t salt = 0) {
  const auto wide = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(wide), static_cast<std::uint32_t>(wide >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

inline std::uint64_t draw_poisson(std::mt19937_64 &engine, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(engine);
}

} // namespace detail

/// Expected zero-delay coincidences at phase phi for one phase point.
inline double expected_coincidences(double phi, const ExperimentParams &params, const AcquisitionConfig &acq) {
  const auto law = p_exp_law(params);
  return acq.expected_pairs_at_max() * law(phi) / law.maximum();
}

inline std::vector<CountRecord> sample_fringe(std::span<const double> phases, const ExperimentParams &params,
                                              const AcquisitionConfig &acq) {
  if (phases.empty()) throw std::invalid_argument("sample_fringe: phase list is empty");
  params.validate();
  acq.validate();
  const auto law = p_exp_law(params);
  const double singles = acq.single_rate * acq.integration_time;

  std::vector<CountRecord> records;
  records.reserve(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double phi = phases[i];
    require_finite(phi);
    auto engine = detail::point_engine(acq.seed, detail::Stream::Fringe, i);
    CountRecord r;
    r.phase = phi;
    r.coincidences = detail::draw_poisson(engine, acq.expected_pairs_at_max() * law(phi) / law.maximum());
    r.singles_d1 = detail::draw_poisson(engine, singles * p_single(phi, params, DetectorId::D1));
    r.singles_d2 = detail::draw_poisson(engine, singles * p_single(phi, params, DetectorId::D2));
    records.push_back(r);
  }
  return records;
}

/// Expected-count histogram: the assembled train scaled so that the zero-delay
/// peak at the fringe maximum holds acq.expected_pairs_at_max() counts.
inline DelayHistogram expected_histogram(double phi, const ExperimentParams &params, const AcquisitionConfig &acq,
                                         const TrainOptions &options = {}) {
  acq.validate();
  auto hist = assemble_train(phi, params, options.n_periods, options.bin_width_ns);
  const double peak_at_max = cluster_peaks(0.0, params)[2].weight;
  const double scale = peak_at_max > 0.0 ? acq.expected_pairs_at_max() / peak_at_max : 0.0;
  for (auto &b : hist.bins) b.weight *= scale;
  return hist;
}

/// Poisson-sampled histogram; weights hold integer counts.
inline DelayHistogram sample_histogram(double phi, const ExperimentParams &params, const AcquisitionConfig &acq,
                                       const TrainOptions &options = {}) {
  auto hist = expected_histogram(phi, params, acq, options);
  for (std::size_t i = 0; i < hist.bins.size(); ++i) {
    // Salted with the phase so different phases draw independent noise.
    auto engine = detail::point_engine(acq.seed, detail::Stream::Histogram, i, std::bit_cast<std::uint64_t>(phi));
    hist.bins[i].weight = static_cast<double>(detail::draw_poisson(engine, hist.bins[i].weight));
  }
  return hist;
}

} // namespace noonsim
