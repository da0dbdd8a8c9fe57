// Closed-form coincidence laws, visibilities and thresholds for the
// two-photon N00N interferometer.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace noonsim {

/// Scalars of the imperfect-N00N coincidence model. Times in nanoseconds.
struct ExperimentParams {
  double v_hom = 1.0;       // two-photon interference visibility
  double eta_prime = 1.0;   // mode overlap at the first BS pass
  double eta_dprime = 1.0;  // mode overlap at the recombining BS pass
  double g2 = 0.0;          // optional multi-photon background
  double delta_t_ns = 4.4;  // double-pulse / MZI delay
  double rep_period_ns = 13.1;

  /// Combined overlap sqrt(eta' * eta'').
  double eta() const { return std::sqrt(eta_prime * eta_dprime); }

  /// Equal split eta' = eta'' = eta.
  static ExperimentParams with_eta(double v_hom, double eta) {
    ExperimentParams p;
    p.v_hom = v_hom;
    p.eta_prime = eta;
    p.eta_dprime = eta;
    return p;
  }

  void validate() const {
    auto unit = [](double value, const char *name) {
      if (!(value >= 0.0 && value <= 1.0))
        throw std::invalid_argument(std::string("ExperimentParams: ") + name + " must lie in [0, 1]");
    };
    unit(v_hom, "v_hom");
    unit(eta_prime, "eta_prime");
    unit(eta_dprime, "eta_dprime");
    if (!(g2 >= 0.0) || !std::isfinite(g2)) throw std::invalid_argument("ExperimentParams: g2 must be >= 0");
    if (!(delta_t_ns > 0.0) || !std::isfinite(delta_t_ns))
      throw std::invalid_argument("ExperimentParams: delta_t must be > 0");
    if (!(rep_period_ns > delta_t_ns) || !std::isfinite(rep_period_ns))
      throw std::invalid_argument("ExperimentParams: rep_period must exceed delta_t");
  }
};

/// Measured biexciton (XX) and exciton (X) settings.
inline ExperimentParams biexciton_reference() { return ExperimentParams::with_eta(0.76, 0.89); }

inline ExperimentParams exciton_reference() { return ExperimentParams::with_eta(0.50, 0.90); }

/// P(phi) = offset + amplitude * cos(harmonic * phi)
struct CoincidenceLaw {
  double offset = 0.0;
  double amplitude = 0.0;
  int harmonic = 2;

  double operator()(double phi) const { return offset + amplitude * std::cos(harmonic * phi); }
  double maximum() const { return offset + std::abs(amplitude); }
  double minimum() const { return offset - std::abs(amplitude); }
  double visibility() const { return offset > 0.0 ? std::abs(amplitude) / offset : 0.0; }
  bool is_probability() const { return minimum() >= -1e-15 && maximum() <= 1.0 + 1e-15; }
};

inline void require_unit(double value, const char *what) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

inline void require_finite(double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("phase must be finite");
}

/// Ideal N00N coincidence probability 1/2 (1 + cos 2 phi).
inline double p_noon_ideal(double phi) {
  require_finite(phi);
  return 0.5 * (1.0 + std::cos(2.0 * phi));
}

/// Identical/distinguishable mixture at perfect overlap.
inline double p_mixed(double phi, double v_hom) {
  require_finite(phi);
  require_unit(v_hom, "v_hom");
  return 0.25 * ((3.0 - v_hom) + (1.0 + v_hom) * std::cos(2.0 * phi));
}

/// Background floor added to the coincidence law when g2 > 0.
inline double background_floor(const ExperimentParams &params) { return params.g2 / 4.0; }

inline CoincidenceLaw p_exp_law(const ExperimentParams &params) {
  params.validate();
  const double eta2 = params.eta_prime * params.eta_dprime;
  CoincidenceLaw law;
  law.offset = 0.25 * (2.0 + eta2 * (1.0 - eta2 * params.v_hom)) + background_floor(params);
  law.amplitude = 0.25 * eta2 * (1.0 + eta2 * params.v_hom);
  law.harmonic = 2;
  return law;
}

/// Coincidence probability with partial indistinguishability and imperfect
/// mode overlap (plus the optional g2 floor). Not clamped.
inline double p_exp(double phi, const ExperimentParams &params) {
  require_finite(phi);
  return p_exp_law(params)(phi);
}

/// N00N fringe visibility (max - min) / (max + min) of p_exp.
inline double v_n2(const ExperimentParams &params) { return p_exp_law(params).visibility(); }

inline double v_n2(double v_hom, double eta) { return v_n2(ExperimentParams::with_eta(v_hom, eta)); }

inline double v_n2_perfect_overlap(double v_hom) {
  require_unit(v_hom, "v_hom");
  return (1.0 + v_hom) / (3.0 - v_hom);
}

/// Smallest combined overlap reaching v_target, or nullopt when even perfect
/// overlap falls short. Bisection on the monotone map eta -> v_n2.
inline std::optional<double> eta_threshold(double v_hom, double v_target, double tolerance = 1e-6) {
  require_unit(v_hom, "v_hom");
  if (!(v_target > 0.0 && v_target < 1.0)) throw std::invalid_argument("eta_threshold: v_target must lie in (0, 1)");
  if (v_n2(v_hom, 1.0) < v_target) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (v_n2(v_hom, mid) >= v_target ? hi : lo) = mid;
  }
  return hi;
}

/// Visibility an n-photon fringe must exceed to beat the standard quantum limit.
inline double supersensitivity_threshold(unsigned n) {
  if (n == 0) throw std::invalid_argument("supersensitivity_threshold: n must be >= 1");
  return 1.0 / std::sqrt(static_cast<double>(n));
}

enum class DetectorId { D1, D2 };

/// Single photon launched into the second input port. Only the recombining
/// overlap eta'' limits its fringe.
inline double p_single(double phi, const ExperimentParams &params, DetectorId detector) {
  require_finite(phi);
  params.validate();
  const double sign = detector == DetectorId::D1 ? 1.0 : -1.0;
  return 0.5 * (1.0 + sign * params.eta_dprime * std::cos(phi));
}

inline CoincidenceLaw p_single_law(const ExperimentParams &params, DetectorId detector) {
  params.validate();
  const double sign = detector == DetectorId::D1 ? 1.0 : -1.0;
  return CoincidenceLaw{0.5, 0.5 * sign * params.eta_dprime, 1};
}

} // namespace noonsim
