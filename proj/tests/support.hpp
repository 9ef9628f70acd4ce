#pragma once

#include <random>

#include "hybrid_routh/models.hpp"
#include "hybrid_routh/scenario.hpp"

namespace support {

using namespace hybrid_routh;

/// x' = v, v' = 0 with guard x - 1.
inline HybridSystemSpec unit_flow(StateMap reset = {}) {
  HybridSystemSpec spec;
  spec.vector_field = [](const Vec& s) {
    Vec out(2);
    out << s[1], 0.0;
    return out;
  };
  spec.guard = [](const Vec& s) { return s[0] - 1.0; };
  spec.reset = std::move(reset);
  return spec;
}

/// Unit-speed sawtooth: reset x -> 0.
inline HybridSystemSpec sawtooth() {
  return unit_flow([](const Vec& s) {
    Vec out = s;
    out[0] = 0.0;
    return out;
  });
}

inline Vec state(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Scenario fixture(const char* name) {
  return load_scenario(std::string(HR_SCENARIO_DIR) + "/" + name);
}

inline Vec initial(const Scenario& s) {
  return Eigen::Map<const Vec>(s.initial_state.data(),
                               static_cast<Eigen::Index>(s.initial_state.size()));
}

/// Uniform samples in the box used for SLIP property checks.
inline Vec random_slip_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xi(0.5, 1.5), phi(-1.0, 1.0), v(-3.0, 3.0);
  Vec s(4);
  s << xi(rng), phi(rng), v(rng), v(rng);
  return s;
}

}  // namespace support
