#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "noonsim/montecarlo.hpp"
#include "test_support.hpp"

using namespace noonsim;
using noonsim::testing::kPi;

TEST(Fringe, ZeroRateAtIdealMinimum) {
  const std::vector<double> phases(20, kPi / 2.0);
  AcquisitionConfig acq;
  const auto ideal = ExperimentParams::with_eta(1.0, 1.0);
  EXPECT_NEAR(expected_coincidences(kPi / 2.0, ideal, acq), 0.0, 1e-12);
  for (const auto &r : sample_fringe(phases, ideal, acq)) EXPECT_EQ(r.coincidences, 0u);
}

TEST(Fringe, MeanAtMaximumIsConfiguredRate) {
  AcquisitionConfig acq; // 300 / min, 60 s
  EXPECT_DOUBLE_EQ(expected_coincidences(0.0, biexciton_reference(), acq), 300.0);
  const std::vector<double> phases(2000, 0.0);
  const auto records = sample_fringe(phases, biexciton_reference(), acq);
  double sum = 0.0;
  for (const auto &r : records) sum += static_cast<double>(r.coincidences);
  const double mean = sum / static_cast<double>(records.size());
  EXPECT_NEAR(mean, 300.0, 3.0 * std::sqrt(300.0 / 2000.0));
}

TEST(Fringe, SameSeedSameRecords) {
  const auto phases = noonsim::testing::full_period(16);
  AcquisitionConfig acq;
  acq.seed = 7;
  EXPECT_EQ(sample_fringe(phases, biexciton_reference(), acq), sample_fringe(phases, biexciton_reference(), acq));
  auto other = acq;
  other.seed = 8;
  EXPECT_NE(sample_fringe(phases, biexciton_reference(), acq), sample_fringe(phases, biexciton_reference(), other));
}

TEST(Fringe, PointDrawDoesNotDependOnNeighbours) {
  const auto phases = noonsim::testing::full_period(16);
  AcquisitionConfig acq;
  const auto full = sample_fringe(phases, biexciton_reference(), acq);
  const std::vector<double> prefix(phases.begin(), phases.begin() + 5);
  const auto part = sample_fringe(prefix, biexciton_reference(), acq);
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], full[i]);
}

TEST(Fringe, MeanConvergesAcrossRepetitions) {
  const std::vector<double> phases{0.0, 0.6, kPi / 2.0, 2.2};
  const auto p = biexciton_reference();
  AcquisitionConfig acq;
  acq.pair_rate_at_max = 30.0;
  std::vector<double> sums(phases.size(), 0.0), singles(phases.size(), 0.0);
  const int reps = 10000;
  for (int rep = 0; rep < reps; ++rep) {
    acq.seed = 1000 + static_cast<std::uint64_t>(rep);
    const auto records = sample_fringe(phases, p, acq);
    for (std::size_t i = 0; i < phases.size(); ++i) {
      sums[i] += static_cast<double>(records[i].coincidences);
      singles[i] += static_cast<double>(records[i].singles_d1);
    }
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double lambda = expected_coincidences(phases[i], p, acq);
    EXPECT_NEAR(sums[i] / reps, lambda, 3.0 * std::sqrt(lambda / reps)) << "phase " << phases[i];
    const double lambda_s = acq.single_rate * acq.integration_time * p_single(phases[i], p, DetectorId::D1);
    EXPECT_NEAR(singles[i] / reps, lambda_s, 3.0 * std::sqrt(lambda_s / reps));
  }
}

TEST(Fringe, Validation) {
  const std::vector<double> phases{0.0};
  AcquisitionConfig acq;
  acq.integration_time = 0.0;
  EXPECT_THROW(sample_fringe(phases, biexciton_reference(), acq), std::invalid_argument);
  EXPECT_THROW(sample_fringe(std::vector<double>{}, biexciton_reference(), AcquisitionConfig{}),
               std::invalid_argument);
  EXPECT_THROW(sample_fringe(std::vector<double>{NAN}, biexciton_reference(), AcquisitionConfig{}),
               std::invalid_argument);
}

TEST(Histogram, TinyIntegrationGivesZeros) {
  AcquisitionConfig acq;
  acq.integration_time = 1e-12;
  const auto hist = sample_histogram(0.3, biexciton_reference(), acq);
  EXPECT_FALSE(hist.bins.empty());
  for (const auto &b : hist.bins) EXPECT_EQ(b.weight, 0.0);
}

TEST(Histogram, ExpectedScaleMatchesFringeRate) {
  AcquisitionConfig acq;
  const auto hist = expected_histogram(0.0, biexciton_reference(), acq);
  EXPECT_NEAR(hist.weight_at(0.0), 300.0, 1e-9);
}

TEST(Histogram, LargeCountFractionsConverge) {
  const auto p = biexciton_reference();
  AcquisitionConfig acq;
  const auto weights = assemble_train(0.9, p, 3);
  // scale the acquisition so the whole train expects 10^6 counts
  const double peak_at_max = cluster_peaks(0.0, p)[2].weight;
  acq.integration_time = 60.0 * 1e6 / (acq.pair_rate_at_max * weights.total() / peak_at_max);
  const auto sampled = sample_histogram(0.9, p, acq);
  ASSERT_EQ(sampled.bins.size(), weights.bins.size());
  const double total = sampled.total();
  EXPECT_NEAR(total, 1e6, 5.0 * std::sqrt(1e6));
  for (std::size_t i = 0; i < sampled.bins.size(); ++i) {
    const double expected = weights.bins[i].weight / weights.total();
    EXPECT_NEAR(sampled.bins[i].weight / total, expected, 0.01 * expected) << "bin " << i;
  }
}

TEST(Histogram, Deterministic) {
  AcquisitionConfig acq;
  acq.seed = 42;
  const auto a = sample_histogram(1.1, biexciton_reference(), acq);
  const auto b = sample_histogram(1.1, biexciton_reference(), acq);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) EXPECT_EQ(a.bins[i].weight, b.bins[i].weight);
}
