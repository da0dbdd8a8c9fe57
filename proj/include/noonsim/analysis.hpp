// Fringe fitting and the inference chain from fitted visibilities to source
// indistinguishability, overlap thresholds and super-sensitivity verdicts.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noonsim/interferometer.hpp"
#include "noonsim/montecarlo.hpp"

namespace noonsim {

/// A +- B cos(k phi + phi0) fit. B is kept non-negative.
struct FringeFit {
  double offset = 0.0;
  double amplitude = 0.0;
  int harmonic = 1;
  double phase_offset = 0.0;
  double visibility = 0.0;

  double sigma_offset = 0.0;
  double sigma_amplitude = 0.0;
  double sigma_phase_offset = 0.0;
  double sigma_visibility = 0.0;
  double cov_offset_amplitude = 0.0;

  double chi2 = 0.0;
  std::size_t points = 0;
  int iterations = 0;

  double operator()(double phi) const { return offset + amplitude * std::cos(harmonic * phi + phase_offset); }
};

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
  bool physical = true; // within [0, 1] up to 2 sigma
};

struct SqlVerdict {
  double threshold = 0.0;
  bool beats_sql = false;
  double margin = 0.0; // (visibility - threshold) / sigma_visibility
};

struct InferenceResult {
  Estimate v_hom_est;
  Estimate eta_est;
  std::optional<double> eta_th;
  SqlVerdict verdict;
};

namespace detail {

// Gaussian elimination with partial pivoting; returns false when singular.
template <std::size_t N>
bool solve(std::array<std::array<double, N>, N> a, std::array<double, N> b, std::array<double, N> &x) {
  double scale = 0.0;
  for (const auto &row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) <= 1e-13 * scale) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

template <std::size_t N>
bool invert(const std::array<std::array<double, N>, N> &a, std::array<std::array<double, N>, N> &inv) {
  for (std::size_t c = 0; c < N; ++c) {
    std::array<double, N> e{}, col{};
    e[c] = 1.0;
    if (!solve(a, e, col)) return false;
    for (std::size_t r = 0; r < N; ++r) inv[r][c] = col[r];
  }
  return true;
}

inline double wrap_phase(double phi) {
  phi = std::remainder(phi, 2.0 * std::numbers::pi);
  return phi <= -std::numbers::pi ? phi + 2.0 * std::numbers::pi : phi;
}

inline double poisson_weight(double count) { return 1.0 / std::max(count, 1.0); }

inline double weighted_chi2(std::span<const double> phases, std::span<const double> values, int k, double a,
                            double b, double phi0) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double r = values[i] - (a + b * std::cos(k * phases[i] + phi0));
    chi2 += poisson_weight(values[i]) * r * r;
  }
  return chi2;
}

inline FringeFit fit_fixed_harmonic(std::span<const double> phases, std::span<const double> values, int k) {
  const std::size_t n = phases.size();

  // Linear normal matrix for (A, C, S): conditioning check and covariance.
  std::array<std::array<double, 3>, 3> normal{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> row{1.0, std::cos(k * phases[i]), std::sin(k * phases[i])};
    const double w = poisson_weight(values[i]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) normal[r][c] += w * row[r] * row[c];
  }
  std::array<std::array<double, 3>, 3> cov{};
  if (!invert(normal, cov)) throw std::invalid_argument("fit_fringe: degenerate phase design");

  // Discrete Fourier projection as the starting point.
  double a = 0.0, c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a += values[i];
    c += values[i] * std::cos(k * phases[i]);
    s += values[i] * std::sin(k * phases[i]);
  }
  a /= static_cast<double>(n);
  c *= 2.0 / static_cast<double>(n);
  s *= 2.0 / static_cast<double>(n);
  double b = std::hypot(c, s);
  double phi0 = std::atan2(-s, c);

  // Levenberg-Marquardt on (A, B, phi0).
  double chi2 = weighted_chi2(phases, values, k, a, b, phi0);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;
  constexpr int kMaxIterations = 200;
  while (iterations < kMaxIterations) {
    ++iterations;
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = k * phases[i] + phi0;
      const std::array<double, 3> jac{1.0, std::cos(arg), -b * std::sin(arg)};
      const double r = values[i] - (a + b * std::cos(arg));
      const double w = poisson_weight(values[i]);
      for (int p = 0; p < 3; ++p) {
        jtr[p] += w * jac[p] * r;
        for (int q = 0; q < 3; ++q) jtj[p][q] += w * jac[p] * jac[q];
      }
    }
    const double trace = jtj[0][0] + jtj[1][1] + jtj[2][2];

    bool improved = false;
    while (lambda < 1e16) {
      auto damped = jtj;
      for (int p = 0; p < 3; ++p) damped[p][p] += lambda * std::max(jtj[p][p], 1e-12 * trace);
      std::array<double, 3> step{};
      if (!solve(damped, jtr, step)) {
        lambda *= 10.0;
        continue;
      }
      const double trial = weighted_chi2(phases, values, k, a + step[0], b + step[1], phi0 + step[2]);
      if (trial <= chi2) {
        const double gain = chi2 - trial;
        a += step[0];
        b += step[1];
        phi0 += step[2];
        chi2 = trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        const double step_size = std::abs(step[0]) + std::abs(step[1]) + std::abs(step[2]);
        if (gain <= 1e-14 * (chi2 + 1e-300) || step_size <= 1e-14 * (std::abs(a) + std::abs(b) + 1.0))
          converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) converged = true; // no downhill step left: at the minimum
    if (converged) break;
  }
  if (!converged) throw std::runtime_error("fit_fringe: Levenberg-Marquardt did not converge");

  if (b < 0.0) {
    b = -b;
    phi0 += std::numbers::pi;
  }
  phi0 = wrap_phase(phi0);

  FringeFit fit;
  fit.offset = a;
  fit.amplitude = b;
  fit.harmonic = k;
  fit.phase_offset = phi0;
  fit.chi2 = chi2;
  fit.points = n;
  fit.iterations = iterations;

  // Covariance transport (A, C, S) -> (A, B, phi0), with C = B cos phi0 and
  // S = -B sin phi0.
  const double cc = b * std::cos(phi0), ss = -b * std::sin(phi0);
  fit.sigma_offset = std::sqrt(cov[0][0]);
  if (b > 1e-300) {
    const std::array<double, 3> gb{0.0, cc / b, ss / b};
    const std::array<double, 3> gp{0.0, ss / (b * b), -cc / (b * b)};
    auto quad = [&](const std::array<double, 3> &u, const std::array<double, 3> &v) {
      double sum = 0.0;
      for (int r = 0; r < 3; ++r)
        for (int q = 0; q < 3; ++q) sum += u[r] * cov[r][q] * v[q];
      return sum;
    };
    const std::array<double, 3> ga{1.0, 0.0, 0.0};
    fit.sigma_amplitude = std::sqrt(std::max(quad(gb, gb), 0.0));
    fit.sigma_phase_offset = std::sqrt(std::max(quad(gp, gp), 0.0));
    fit.cov_offset_amplitude = quad(ga, gb);
  } else {
    fit.sigma_amplitude = std::sqrt(0.5 * (cov[1][1] + cov[2][2]));
    fit.sigma_phase_offset = std::numeric_limits<double>::infinity();
  }

  if (a > 0.0) {
    fit.visibility = std::clamp(b / a, 0.0, 1.0);
    const double dv_db = 1.0 / a, dv_da = -b / (a * a);
    const double var = dv_db * dv_db * fit.sigma_amplitude * fit.sigma_amplitude +
                       dv_da * dv_da * fit.sigma_offset * fit.sigma_offset +
                       2.0 * dv_da * dv_db * fit.cov_offset_amplitude;
    fit.sigma_visibility = std::sqrt(std::max(var, 0.0));
  }
  return fit;
}

} // namespace detail

/// Weighted least-squares fit of A + B cos(k phi + phi0) with Poisson weights
/// 1 / max(count, 1). With no harmonic given, k = 1 and k = 2 are both tried
/// and the lower chi^2 wins.
inline FringeFit fit_fringe(std::span<const double> phases, std::span<const double> values,
                            std::optional<int> harmonic = std::nullopt) {
  if (phases.size() != values.size()) throw std::invalid_argument("fit_fringe: phase/value size mismatch");
  for (std::size_t i = 0; i < phases.size(); ++i)
    if (!std::isfinite(phases[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("fit_fringe: non-finite input");
  std::vector<double> distinct(phases.begin(), phases.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end(),
                             [](double x, double y) { return std::abs(x - y) <= 1e-12; }),
                 distinct.end());
  if (distinct.size() < 5) throw std::invalid_argument("fit_fringe: need at least 5 distinct phases");
  if (harmonic && *harmonic < 1) throw std::invalid_argument("fit_fringe: harmonic must be >= 1");

  if (harmonic) return detail::fit_fixed_harmonic(phases, values, *harmonic);
  auto first = detail::fit_fixed_harmonic(phases, values, 1);
  auto second = detail::fit_fixed_harmonic(phases, values, 2);
  return second.chi2 < first.chi2 ? second : first;
}

inline FringeFit fit_fringe(std::span<const CountRecord> records, std::optional<int> harmonic = std::nullopt) {
  std::vector<double> phases, counts;
  for (const auto &r : records) {
    phases.push_back(r.phase);
    counts.push_back(static_cast<double>(r.coincidences));
  }
  return fit_fringe(phases, counts, harmonic);
}

/// V_HOM from the fitted fringe minimum. The N00N law peaks at (1 + eta^2)/2
/// independently of V_HOM, which fixes the count-to-probability scale.
inline Estimate infer_vhom(const FringeFit &fit, double eta, double eta_sigma = 0.0, double g2 = 0.0) {
  if (fit.harmonic != 2) throw std::invalid_argument("infer_vhom: fit must have harmonic 2");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("infer_vhom: eta must lie in (0, 1]");
  const double a = fit.offset, b = fit.amplitude;
  if (!(a + b > 0.0)) throw std::invalid_argument("infer_vhom: fringe maximum must be positive");

  const double floor = g2 / 4.0;
  const double eta2 = eta * eta, eta4 = eta2 * eta2;
  const double ratio = (a - b) / (a + b); // min / max
  const double p_max = 0.5 * (1.0 + eta2) + floor;
  const double p_min = ratio * p_max;

  Estimate est;
  est.value = (1.0 - 2.0 * (p_min - floor)) / eta4;

  const double denom = (a + b) * (a + b);
  const double dr_da = 2.0 * b / denom, dr_db = -2.0 * a / denom;
  const double var_r = dr_da * dr_da * fit.sigma_offset * fit.sigma_offset +
                       dr_db * dr_db * fit.sigma_amplitude * fit.sigma_amplitude +
                       2.0 * dr_da * dr_db * fit.cov_offset_amplitude;
  const double dv_dr = -2.0 * p_max / eta4;
  const double numerator = 1.0 - 2.0 * (p_min - floor);
  const double dv_deta = -2.0 * ratio * eta / eta4 - 4.0 * numerator / (eta4 * eta);
  est.sigma = std::sqrt(std::max(dv_dr * dv_dr * var_r + dv_deta * dv_deta * eta_sigma * eta_sigma, 0.0));
  est.physical = est.value >= -2.0 * est.sigma && est.value <= 1.0 + 2.0 * est.sigma;
  return est;
}

/// Combined overlap from a single-photon fringe (its visibility is eta''),
/// under the equal-split assumption eta' = eta''.
inline Estimate eta_from_single_fringe(const FringeFit &fit_n1) {
  if (fit_n1.harmonic != 1) throw std::invalid_argument("eta_from_single_fringe: fit must have harmonic 1");
  Estimate est{fit_n1.visibility, fit_n1.sigma_visibility, true};
  est.physical = est.value >= -2.0 * est.sigma && est.value <= 1.0 + 2.0 * est.sigma;
  return est;
}

inline SqlVerdict sql_verdict(const FringeFit &fit, unsigned n) {
  SqlVerdict v;
  v.threshold = supersensitivity_threshold(n);
  v.beats_sql = fit.visibility > v.threshold;
  const double diff = fit.visibility - v.threshold;
  if (fit.sigma_visibility > 0.0)
    v.margin = diff / fit.sigma_visibility;
  else
    v.margin = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return v;
}

inline InferenceResult infer(const FringeFit &fit_n2, const Estimate &eta, unsigned n = 2, double g2 = 0.0) {
  InferenceResult result;
  result.eta_est = eta;
  result.v_hom_est = infer_vhom(fit_n2, eta.value, eta.sigma, g2);
  result.verdict = sql_verdict(fit_n2, n);
  const double v_hom = std::clamp(result.v_hom_est.value, 0.0, 1.0);
  const double threshold = supersensitivity_threshold(n);
  if (threshold < 1.0) result.eta_th = eta_threshold(v_hom, threshold);
  return result;
}

struct ReferencePoint {
  std::string label;
  double v_hom = 0.0;
  double eta = 0.0;
  double v_n2 = 0.0;
  bool above_threshold = false;
};

struct VisibilitySurface {
  std::vector<double> v_hom_grid;
  std::vector<double> eta_grid;
  std::vector<std::vector<double>> values; // values[eta index][v_hom index]
  double threshold = 0.0;
  // For each v_hom grid point: smallest eta reaching the threshold.
  std::vector<std::optional<double>> contour;
  std::vector<ReferencePoint> references;
};

/// Reference points: the two measured transitions and the remote-source
/// projection.
inline std::vector<ReferencePoint> default_reference_points() {
  return {{"X", 0.50, 0.90, 0.0, false}, {"XX", 0.76, 0.89, 0.0, false}, {"remote", 0.82, 0.95, 0.0, false}};
}

inline VisibilitySurface visibility_surface(std::span<const double> v_hom_grid, std::span<const double> eta_grid,
                                            unsigned n = 2,
                                            std::vector<ReferencePoint> references = default_reference_points()) {
  for (double v : v_hom_grid) require_unit(v, "v_hom grid value");
  for (double e : eta_grid) require_unit(e, "eta grid value");
  VisibilitySurface surface;
  surface.v_hom_grid.assign(v_hom_grid.begin(), v_hom_grid.end());
  surface.eta_grid.assign(eta_grid.begin(), eta_grid.end());
  surface.threshold = supersensitivity_threshold(n);
  for (double eta : eta_grid) {
    std::vector<double> row;
    row.reserve(v_hom_grid.size());
    for (double v : v_hom_grid) row.push_back(v_n2(v, eta));
    surface.values.push_back(std::move(row));
  }
  for (double v : v_hom_grid)
    surface.contour.push_back(surface.threshold < 1.0 ? eta_threshold(v, surface.threshold) : std::nullopt);
  for (auto &ref : references) {
    ref.v_n2 = v_n2(ref.v_hom, ref.eta);
    ref.above_threshold = ref.v_n2 > surface.threshold;
  }
  surface.references = std::move(references);
  return surface;
}

/// Least-squares Fourier amplitudes |c_k| for k = 0..k_max.
inline std::vector<double> harmonic_spectrum(std::span<const double> phases, std::span<const double> values,
                                             int k_max) {
  if (phases.size() != values.size()) throw std::invalid_argument("harmonic_spectrum: size mismatch");
  if (k_max < 1 || phases.size() < static_cast<std::size_t>(2 * k_max + 1))
    throw std::invalid_argument("harmonic_spectrum: too few samples");
  const std::size_t m = static_cast<std::size_t>(2 * k_max + 1);
  std::vector<std::vector<double>> normal(m, std::vector<double>(m, 0.0));
  std::vector<double> rhs(m, 0.0);
  std::vector<double> row(m);
  for (std::size_t i = 0; i < phases.size(); ++i) {
    row[0] = 1.0;
    for (int k = 1; k <= k_max; ++k) {
      row[static_cast<std::size_t>(2 * k - 1)] = std::cos(k * phases[i]);
      row[static_cast<std::size_t>(2 * k)] = std::sin(k * phases[i]);
    }
    for (std::size_t r = 0; r < m; ++r) {
      rhs[r] += row[r] * values[i];
      for (std::size_t c = 0; c < m; ++c) normal[r][c] += row[r] * row[c];
    }
  }
  // Dense elimination; m is tiny.
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(normal[r][col]) > std::abs(normal[pivot][col])) pivot = r;
    if (std::abs(normal[pivot][col]) < 1e-12) throw std::invalid_argument("harmonic_spectrum: degenerate phases");
    std::swap(normal[pivot], normal[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = normal[r][col] / normal[col][col];
      for (std::size_t c = col; c < m; ++c) normal[r][c] -= f * normal[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> amplitudes(static_cast<std::size_t>(k_max + 1));
  amplitudes[0] = rhs[0] / normal[0][0];
  for (int k = 1; k <= k_max; ++k) {
    const auto ic = static_cast<std::size_t>(2 * k - 1), is = static_cast<std::size_t>(2 * k);
    amplitudes[static_cast<std::size_t>(k)] = std::hypot(rhs[ic] / normal[ic][ic], rhs[is] / normal[is][is]);
  }
  return amplitudes;
}

/// Index k >= 1 of the largest oscillating component.
inline int dominant_harmonic(std::span<const double> spectrum) {
  int best = 1;
  for (std::size_t k = 1; k < spectrum.size(); ++k)
    if (spectrum[k] > spectrum[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

} // namespace noonsim
