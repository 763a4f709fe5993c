#pragma once

// Reproducible default inputs for d = 3 experiments.

#include <cmath>
#include <numbers>

#include "measures.hpp"

namespace isomlab {

// golden-ratio angle 2 pi (sqrt5 - 1)/2
inline double golden_angle() { return 2.0 * std::numbers::pi * (std::sqrt(5.0) - 1.0) / 2.0; }

inline Vec unit3(int i) {
    Vec v = Vec::Zero(3);
    v(i) = 1;
    return v;
}

// {(e3, Rx(theta_g)), (e1, Rz(theta_g))}, weights 1/2
inline IsometryMeasure default_gap_measure() {
    const double a = golden_angle();
    return IsometryMeasure({{Isometry(unit3(2), Rotation::rx(a)), 0.5}, {Isometry(unit3(0), Rotation::rz(a)), 0.5}});
}

// symmetrize(mu) of a two-atom measure is supported on the cyclic group generated by g1^{-1} g2,
// so the spectral experiments self-convolve first. power 3 brings ||T|| on L2_0 to about 0.52
inline constexpr int kGapPower = 3;

inline IsometryMeasure prepare_gap_measure(const IsometryMeasure& mu0, int power = kGapPower) {
    return normalize(symmetrize(convolution_power(mu0, power))).mu;
}

inline IsometryMeasure prepared_gap_measure() { return prepare_gap_measure(default_gap_measure()); }

}  // namespace isomlab
