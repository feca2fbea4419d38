#pragma once

#include <utility>

#include "adanet/data/patches.hpp"
#include "adanet/rng.hpp"

namespace adanet::data {

struct AugmentConfig {
  double flip_h = 0.5;  // probabilities
  double flip_v = 0.5;
  bool rot90 = true;    // uniform over {0, 90, 180, 270}
  std::pair<double, double> brightness{0.8, 1.2};
  std::pair<double, double> contrast{0.8, 1.2};
  std::pair<double, double> noise{0.9, 1.1};  // per-pixel multiplicative
  std::pair<double, double> gamma{0.8, 1.2};
  bool enable_geometric = true;
  bool enable_photometric = true;

  // Everything off: augment() returns the patch unchanged.
  static AugmentConfig none();
  void validate() const;
};

// Geometric transforms on a C x P x P tensor (and a P x P label).
Patch flip_horizontal(const Patch& p);
Patch flip_vertical(const Patch& p);
Patch rotate90(const Patch& p, int quarter_turns);  // counter-clockwise

// Geometric ops act on image and label alike; photometric ops act on the
// image only, in the [0, 1] remapped signal, followed by a clamp to [-1, 1].
// A photometric factor that comes out exactly 1 leaves the image untouched.
Patch augment(const Patch& patch, const AugmentConfig& cfg, Rng& rng);

}  // namespace adanet::data
