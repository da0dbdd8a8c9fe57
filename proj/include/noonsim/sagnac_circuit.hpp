// Unfolded Sagnac / Mach-Zehnder network built from fock elements:
//
//   overlap(eta_first) on both inputs -> BS -> phase -> overlap(eta_second)
//   on both arms -> BS -> detectors D1, D2
//
// Every overlap coupler leaks into a fresh "layer": a private copy of the
// two-arm geometry. Photons in a leaked layer still split at every later
// beam splitter and take the phase, but they never meet photons from another
// layer, so they only add classical coincidences. D1 collects the first slot
// of every layer, D2 the second.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "noonsim/fock.hpp"

namespace noonsim::fock {

struct SagnacCircuit {
  std::vector<OpticalElement> elements;
  SpatialMode port_a{0};
  SpatialMode port_b{1};
  Detector d1;
  Detector d2;
  std::size_t layer_count = 0;
};

namespace detail {

using Layer = std::pair<SpatialMode, SpatialMode>;

inline void leak_layers(std::vector<Layer> &layers, std::vector<OpticalElement> &elements, unsigned &next_mode,
                        double eta) {
  if (eta >= 1.0) return;
  const std::size_t existing = layers.size();
  for (std::size_t l = 0; l < existing; ++l) {
    const Layer source = layers[l];
    for (int arm = 0; arm < 2; ++arm) {
      Layer fresh{SpatialMode{next_mode}, SpatialMode{next_mode + 1}};
      next_mode += 2;
      const SpatialMode signal = arm == 0 ? source.first : source.second;
      const SpatialMode ancilla = arm == 0 ? fresh.first : fresh.second;
      elements.push_back(make_overlap(eta, signal, ancilla));
      layers.push_back(fresh);
    }
  }
}

} // namespace detail

/// eta_first: overlap at the first pass (where the two-photon HOM happens);
/// eta_second: overlap at the recombining pass.
inline SagnacCircuit build_sagnac_circuit(double phi, double eta_first, double eta_second) {
  SagnacCircuit circuit;
  std::vector<detail::Layer> layers{{SpatialMode{0}, SpatialMode{1}}};
  unsigned next_mode = 2;

  detail::leak_layers(layers, circuit.elements, next_mode, eta_first);
  for (const auto &[c, d] : layers) circuit.elements.push_back(make_beamsplitter(c, d));
  for (const auto &[c, d] : layers) circuit.elements.push_back(make_phase(phi, c, d));
  detail::leak_layers(layers, circuit.elements, next_mode, eta_second);
  for (const auto &[e, f] : layers) circuit.elements.push_back(make_beamsplitter(e, f));

  for (const auto &[e, f] : layers) {
    circuit.d1.modes.push_back(e);
    circuit.d2.modes.push_back(f);
  }
  circuit.layer_count = layers.size();
  return circuit;
}

/// Single 50:50 splitter with the same port/detector naming.
inline SagnacCircuit build_single_beamsplitter() {
  SagnacCircuit circuit;
  circuit.elements.push_back(make_beamsplitter(SpatialMode{0}, SpatialMode{1}));
  circuit.d1.modes = {SpatialMode{0}};
  circuit.d2.modes = {SpatialMode{1}};
  circuit.layer_count = 1;
  return circuit;
}

inline PhotonState propagate(const SagnacCircuit &circuit, PhotonState state) {
  return apply_elements(std::move(state), circuit.elements);
}

/// Coincidence probability for one photon in each input port. Identical tags
/// interfere, different tags do not.
inline double pair_coincidence(const SagnacCircuit &circuit, DistTag tag_a, DistTag tag_b) {
  auto out = propagate(circuit, PhotonState::create({{circuit.port_a, tag_a}, {circuit.port_b, tag_b}}));
  return coincidence_probability(out, circuit.d1, circuit.d2);
}

/// Brute-force coincidence probability for a partially indistinguishable pair:
/// weight v_hom on identical tags, 1 - v_hom on distinguishable tags.
inline double mixed_pair_coincidence(double phi, double v_hom, double eta_first, double eta_second) {
  const auto circuit = build_sagnac_circuit(phi, eta_first, eta_second);
  return v_hom * pair_coincidence(circuit, DistTag{0}, DistTag{0}) +
         (1.0 - v_hom) * pair_coincidence(circuit, DistTag{0}, DistTag{1});
}

} // namespace noonsim::fock
