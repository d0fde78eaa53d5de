#pragma once

#include <array>
#include <cstdint>

#include "mdpfact/dataset.hpp"
#include "mdpfact/factorizer.hpp"
#include "mdpfact/rng.hpp"

namespace mdpfact::synthetic {

// Benchmark MDP with 5 state and 3 action components in [0,1] and a known
// two-cluster factorization: {s1,s3,s5,a1,a2} and {s2,s4,a3}. Each next-state
// component copies one value drawn uniformly from its own cluster's pooled
// state and action components.

inline constexpr int kStateCount = 5;
inline constexpr int kActionCount = 3;

std::array<double, 5> step(const std::array<double, 5>& state,
                           const std::array<double, 3>& action, Rng& rng);

// T chained transitions (row t starts from row t-1's next state) unless
// iid_resets is set, in which case every row draws a fresh uniform state.
TransitionDataset generate(std::size_t samples, std::uint64_t seed, bool iid_resets = false);

// 5x8 binary matrix marking each next-state row's true cluster inputs.
AdjacencyMatrix ground_truth_adjacency();

}  // namespace mdpfact::synthetic
