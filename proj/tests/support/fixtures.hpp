#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "countssm/io.hpp"

namespace countssm::testing {

/// Intercept-only synthetic panel with unit intensities.
inline SynthResult simple_panel(std::size_t n_series, std::size_t horizon,
                                const RegimeSpec& regime, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_series = n_series;
  spec.horizon = horizon;
  spec.regime = regime;
  return synth_panel(spec, seed);
}

/// Panel with one standard-normal covariate and intercept.
inline SynthResult covariate_panel(std::size_t n_series, std::size_t horizon,
                                   const RegimeSpec& regime, double eta0, double eta1,
                                   std::uint64_t seed) {
  SynthSpec spec;
  spec.n_series = n_series;
  spec.horizon = horizon;
  spec.regime = regime;
  spec.eta = Eigen::Vector2d(eta0, eta1);
  return synth_panel(spec, seed);
}

}  // namespace countssm::testing
