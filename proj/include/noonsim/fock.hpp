// Amplitude-level evolution of few-photon Fock states through two-mode
// linear optical elements (beam splitters, phase shifters, overlap
// couplers).
//
// Kets are stored normalized: a basis state with occupations n_k stands for
//   prod_k (a_k^dag)^{n_k} / sqrt(n_k!) |vac>,
// so <psi|psi> is the plain sum of |amplitude|^2.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace noonsim::fock {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxPhotons = 4;
inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kUnitaryTolerance = 1e-12;
// Amplitudes below this magnitude are dropped after each element.
inline constexpr double kPruneAmplitude = 1e-15;

/// One optical path.
struct SpatialMode {
  unsigned index = 0;
  friend constexpr auto operator<=>(const SpatialMode &, const SpatialMode &) = default;
};

/// Internal label (arrival time bin, spectral or temporal mode). Photons with
/// different labels never interfere.
struct DistTag {
  unsigned label = 0;
  friend constexpr auto operator<=>(const DistTag &, const DistTag &) = default;
};

struct Occupant {
  SpatialMode mode;
  DistTag tag;
  friend constexpr auto operator<=>(const Occupant &, const Occupant &) = default;
};

/// Multiset of (mode, tag) pairs kept sorted, so equal states compare equal.
class FockBasisState {
public:
  FockBasisState() = default;

  explicit FockBasisState(std::vector<Occupant> photons) : photons_(std::move(photons)) {
    if (photons_.size() > kMaxPhotons)
      throw std::invalid_argument("FockBasisState: at most " + std::to_string(kMaxPhotons) +
                                  " photons are supported");
    std::sort(photons_.begin(), photons_.end());
  }

  FockBasisState(std::initializer_list<Occupant> photons)
      : FockBasisState(std::vector<Occupant>(photons)) {}

  std::size_t total_photons() const { return photons_.size(); }
  std::span<const Occupant> photons() const { return photons_; }

  std::size_t occupation(SpatialMode mode, DistTag tag) const {
    return static_cast<std::size_t>(std::count(photons_.begin(), photons_.end(), Occupant{mode, tag}));
  }

  std::size_t occupation(SpatialMode mode) const {
    return static_cast<std::size_t>(
        std::count_if(photons_.begin(), photons_.end(), [&](const Occupant &o) { return o.mode == mode; }));
  }

  /// Sorted tag multiset; identifies the superselection sector.
  std::vector<DistTag> tag_sector() const {
    std::vector<DistTag> tags;
    tags.reserve(photons_.size());
    for (const auto &o : photons_) tags.push_back(o.tag);
    std::sort(tags.begin(), tags.end());
    return tags;
  }

  /// prod_k sqrt(n_k!) over distinct (mode, tag) occupations.
  double factorial_norm() const {
    double norm = 1.0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < photons_.size(); ++i) {
      run = (i > 0 && photons_[i] == photons_[i - 1]) ? run + 1 : 1;
      norm *= std::sqrt(static_cast<double>(run));
    }
    return norm;
  }

  friend auto operator<=>(const FockBasisState &, const FockBasisState &) = default;
  friend bool operator==(const FockBasisState &, const FockBasisState &) = default;

private:
  std::vector<Occupant> photons_;
};

/// Superposition of basis states with a common photon number.
class PhotonState {
public:
  using Terms = std::map<FockBasisState, Complex>;

  PhotonState() = default;

  /// Normalized product of creation operators acting on vacuum, in the order
  /// given. Repeated occupants produce the bosonic sqrt(n!) enhancement.
  static PhotonState create(std::initializer_list<Occupant> photons) {
    return create(std::vector<Occupant>(photons));
  }

  static PhotonState create(const std::vector<Occupant> &photons) {
    PhotonState state;
    FockBasisState basis(photons);
    state.add(basis, Complex{1.0, 0.0});
    return state;
  }

  void add(const FockBasisState &basis, Complex amplitude) {
    if (!terms_.empty() && terms_.begin()->first.total_photons() != basis.total_photons())
      throw std::invalid_argument("PhotonState: all basis states must share the photon number");
    terms_[basis] += amplitude;
  }

  Complex amplitude(const FockBasisState &basis) const {
    auto it = terms_.find(basis);
    return it == terms_.end() ? Complex{} : it->second;
  }

  std::size_t total_photons() const { return terms_.empty() ? 0 : terms_.begin()->first.total_photons(); }
  const Terms &terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  double norm_squared() const {
    double total = 0.0;
    for (const auto &[basis, amp] : terms_) total += std::norm(amp);
    return total;
  }

  bool is_normalized(double tolerance = kNormTolerance) const {
    return std::abs(norm_squared() - 1.0) <= tolerance;
  }

  /// Probability mass per tag sector.
  std::map<std::vector<DistTag>, double> sector_weights() const {
    std::map<std::vector<DistTag>, double> weights;
    for (const auto &[basis, amp] : terms_) weights[basis.tag_sector()] += std::norm(amp);
    return weights;
  }

  friend PhotonState operator*(Complex factor, PhotonState state) {
    for (auto &[basis, amp] : state.terms_) amp *= factor;
    return state;
  }

private:
  Terms terms_;
};

using Matrix2 = std::array<std::array<Complex, 2>, 2>;

/// 2x2 unitary acting on an ordered pair of distinct spatial modes. Column j
/// gives the image of the creation operator of modes()[j].
class OpticalElement {
public:
  OpticalElement(const Matrix2 &matrix, SpatialMode first, SpatialMode second)
      : matrix_(matrix), modes_{first, second} {
    if (first == second) throw std::invalid_argument("OpticalElement: modes must be distinct");
    for (const auto &row : matrix_)
      for (const auto &entry : row)
        if (!std::isfinite(entry.real()) || !std::isfinite(entry.imag()))
          throw std::invalid_argument("OpticalElement: non-finite matrix entry");
    if (unitarity_defect() >= kUnitaryTolerance)
      throw std::invalid_argument("OpticalElement: matrix is not unitary");
  }

  const Matrix2 &matrix() const { return matrix_; }
  const std::array<SpatialMode, 2> &modes() const { return modes_; }

  /// max |(M^dag M - I)_ij|
  double unitarity_defect() const {
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Complex sum = std::conj(matrix_[0][i]) * matrix_[0][j] + std::conj(matrix_[1][i]) * matrix_[1][j];
        if (i == j) sum -= 1.0;
        worst = std::max(worst, std::abs(sum));
      }
    return worst;
  }

private:
  Matrix2 matrix_;
  std::array<SpatialMode, 2> modes_;
};

inline Matrix2 multiply(const Matrix2 &lhs, const Matrix2 &rhs) {
  Matrix2 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out[i][j] = lhs[i][0] * rhs[0][j] + lhs[i][1] * rhs[1][j];
  return out;
}

/// Lossless 50:50 beam splitter (1/sqrt2) [[1, i], [i, 1]].
inline OpticalElement make_beamsplitter(SpatialMode first = {0}, SpatialMode second = {1}) {
  const double r = std::numbers::sqrt2 / 2.0;
  const Complex i{0.0, 1.0};
  return OpticalElement({{{r, i * r}, {i * r, r}}}, first, second);
}

/// diag(e^{i phi}, 1): phase picked up by the first mode of the pair.
inline OpticalElement make_phase(double phi, SpatialMode first = {0}, SpatialMode second = {1}) {
  if (!std::isfinite(phi)) throw std::invalid_argument("make_phase: phase must be finite");
  return OpticalElement({{{std::polar(1.0, phi), Complex{}}, {Complex{}, Complex{1.0, 0.0}}}}, first, second);
}

/// Imperfect spatial overlap modeled as a (1-eta):eta splitter that leaks the
/// non-overlapping part of `signal` into `ancilla`.
inline OpticalElement make_overlap(double eta, SpatialMode signal = {0}, SpatialMode ancilla = {1}) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("make_overlap: eta must lie in [0, 1]");
  const double t = std::sqrt(eta);
  const Complex r{0.0, std::sqrt(1.0 - eta)};
  return OpticalElement({{{t, r}, {r, t}}}, signal, ancilla);
}

/// Substitutes every creation operator on the element's modes by its image and
/// re-expands into normalized kets. Tags ride along with each photon.
inline PhotonState apply_element(const PhotonState &state, const OpticalElement &elem) {
  if (!state.is_normalized())
    throw std::invalid_argument("apply_element: input state is not normalized");

  const auto &m = elem.matrix();
  const auto &modes = elem.modes();

  struct Partial {
    std::vector<Occupant> photons;
    Complex coeff;
  };

  std::map<FockBasisState, Complex> accumulated;
  std::vector<Partial> partials, next;
  for (const auto &[basis, amp] : state.terms()) {
    partials.assign(1, Partial{{}, amp / basis.factorial_norm()});
    for (const auto &photon : basis.photons()) {
      int column = photon.mode == modes[0] ? 0 : (photon.mode == modes[1] ? 1 : -1);
      next.clear();
      for (auto &p : partials) {
        if (column < 0) {
          p.photons.push_back(photon);
          next.push_back(std::move(p));
          continue;
        }
        for (int row = 0; row < 2; ++row) {
          const Complex entry = m[row][column];
          if (entry == Complex{}) continue;
          Partial q{p.photons, p.coeff * entry};
          q.photons.push_back({modes[row], photon.tag});
          next.push_back(std::move(q));
        }
      }
      std::swap(partials, next);
    }
    for (auto &p : partials) {
      FockBasisState out(std::move(p.photons));
      accumulated[out] += p.coeff * out.factorial_norm();
    }
  }

  PhotonState result;
  for (const auto &[basis, amp] : accumulated)
    if (std::abs(amp) > kPruneAmplitude) result.add(basis, amp);
  return result;
}

inline PhotonState apply_elements(PhotonState state, std::span<const OpticalElement> elements) {
  for (const auto &elem : elements) state = apply_element(state, elem);
  return state;
}

/// A detector integrates every spatial mode it covers, regardless of tag.
struct Detector {
  std::vector<SpatialMode> modes;

  bool covers(SpatialMode mode) const { return std::find(modes.begin(), modes.end(), mode) != modes.end(); }
};

/// Required photon count per detector; modes outside every detector are
/// traced out.
struct DetectionPattern {
  std::vector<std::pair<Detector, std::size_t>> counts;
};

inline bool matches(const FockBasisState &basis, const DetectionPattern &pattern) {
  for (const auto &[detector, wanted] : pattern.counts) {
    std::size_t seen = 0;
    for (const auto &photon : basis.photons())
      if (detector.covers(photon.mode)) ++seen;
    if (seen != wanted) return false;
  }
  return true;
}

inline double detection_probability(const PhotonState &state, const DetectionPattern &pattern) {
  if (!state.is_normalized())
    throw std::invalid_argument("detection_probability: state is not normalized");
  std::size_t requested = 0;
  for (const auto &entry : pattern.counts) requested += entry.second;
  if (requested > state.total_photons()) return 0.0;

  double probability = 0.0;
  for (const auto &[basis, amp] : state.terms())
    if (matches(basis, pattern)) probability += std::norm(amp);
  return std::clamp(probability, 0.0, 1.0);
}

/// One photon on each of two detectors.
inline double coincidence_probability(const PhotonState &state, const Detector &first, const Detector &second) {
  return detection_probability(state, DetectionPattern{{{first, 1}, {second, 1}}});
}

} // namespace noonsim::fock
