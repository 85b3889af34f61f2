#pragma once

// Closed-form Landau-Zener reference values.

#include <functional>

namespace retinal {

/// Diabatic passage probability of one coherent transit, exp(-2 pi delta).
double diabatic_prob(double delta);

struct DephasedLimits {
  double tunnel_limit = 0.0;       // (1 - exp(-4 pi delta)) / 2
  double passage_threshold = 0.0;  // (1 + exp(-4 pi delta)) / 2
};

/// Infinitely strong dephasing during a linear sweep.
DephasedLimits dephased_limit_prob(double delta);

/// Trans yield after n (odd) coherent transits:
/// q sum_{i=0}^{(n-1)/2} (1 - q)^{2i} with q = diabatic_prob(delta).
/// Throws invalid_n for even or non-positive n.
double sequential_yield(int n, double delta);

/// n -> infinity limit of sequential_yield, q / (1 - (1 - q)^2).
double sequential_yield_limit(double delta);

/// Single-transit diabatic probability as a function of (gamma, delta).
using TransitModel = std::function<double(double gamma, double delta)>;

/// gamma-independent coherent value.
TransitModel coherent_transit();

/// Smooth interpolation from diabatic_prob at gamma = 0 to the passage
/// threshold at gamma -> infinity, logistic in log(gamma) with midpoint
/// `gamma_mid` and slope `steepness`. A placeholder shape with no physical
/// derivation; plug a proper open Landau-Zener formula in its place.
TransitModel logistic_placeholder(double gamma_mid = 1.0, double steepness = 1.0);

/// Yield when the left-to-right transits (n_windows of them) pass with
/// probability `measured` and the returning transits in between keep the
/// coherent probability `coherent`:
/// measured * sum_{i < n_windows} ((1 - measured) (1 - coherent))^i.
double controlled_yield(double measured, double coherent, int n_windows);

}  // namespace retinal
