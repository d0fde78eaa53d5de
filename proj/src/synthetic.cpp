#include "mdpfact/synthetic.hpp"

#include <string>

#include "mdpfact/error.hpp"

namespace mdpfact::synthetic {
namespace {

// Pool member indices into the concatenated (s1..s5, a1..a3) vector.
constexpr std::array<std::array<int, 5>, 2> kPools = {{
    {0, 2, 4, 5, 6},  // cluster 1: s1, s3, s5, a1, a2
    {1, 3, 7, -1, -1},  // cluster 2: s2, s4, a3
}};
constexpr std::array<int, 2> kPoolSizes = {5, 3};
constexpr std::array<int, 5> kClusterOfState = {0, 1, 0, 1, 0};

}  // namespace

std::array<double, 5> step(const std::array<double, 5>& state,
                           const std::array<double, 3>& action, Rng& rng) {
  for (double v : state)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("synthetic: state component " + std::to_string(v) + " outside [0,1]");
  for (double v : action)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("synthetic: action component " + std::to_string(v) + " outside [0,1]");

  std::array<double, 8> pool_values{};
  for (int i = 0; i < kStateCount; ++i) pool_values[i] = state[i];
  for (int i = 0; i < kActionCount; ++i) pool_values[kStateCount + i] = action[i];

  std::array<double, 5> next{};
  for (int i = 0; i < kStateCount; ++i) {
    const int cluster = kClusterOfState[i];
    const auto pick = rng.uniform_below(static_cast<std::uint64_t>(kPoolSizes[cluster]));
    next[i] = pool_values[kPools[cluster][pick]];
  }
  return next;
}

TransitionDataset generate(std::size_t samples, std::uint64_t seed, bool iid_resets) {
  if (samples == 0) throw Error("synthetic: sample count must be >= 1");
  Rng rng(seed);

  std::vector<VariableSpec> schema;
  for (int i = 0; i < kStateCount; ++i)
    schema.push_back({"s" + std::to_string(i + 1), VarRole::State, VarKind::Continuous, i});
  for (int i = 0; i < kActionCount; ++i)
    schema.push_back({"a" + std::to_string(i + 1), VarRole::Action, VarKind::Continuous, i});
  for (int i = 0; i < kStateCount; ++i)
    schema.push_back(
        {"next_s" + std::to_string(i + 1), VarRole::NextState, VarKind::Continuous, i});

  std::vector<std::vector<double>> columns(13);
  for (auto& column : columns) column.reserve(samples);

  std::array<double, 5> state{};
  for (double& v : state) v = rng.uniform01();
  for (std::size_t t = 0; t < samples; ++t) {
    if (iid_resets && t > 0)
      for (double& v : state) v = rng.uniform01();
    std::array<double, 3> action{};
    for (double& v : action) v = rng.uniform01();
    const std::array<double, 5> next = step(state, action, rng);
    for (int i = 0; i < kStateCount; ++i) columns[i].push_back(state[i]);
    for (int i = 0; i < kActionCount; ++i) columns[kStateCount + i].push_back(action[i]);
    for (int i = 0; i < kStateCount; ++i)
      columns[kStateCount + kActionCount + i].push_back(next[i]);
    state = next;
  }
  return TransitionDataset(std::move(schema), std::move(columns));
}

AdjacencyMatrix ground_truth_adjacency() {
  AdjacencyMatrix adj;
  for (int i = 0; i < kStateCount; ++i) adj.row_labels.push_back("next_s" + std::to_string(i + 1));
  for (int i = 0; i < kStateCount; ++i) adj.col_labels.push_back("s" + std::to_string(i + 1));
  for (int i = 0; i < kActionCount; ++i) adj.col_labels.push_back("a" + std::to_string(i + 1));
  adj.values.assign(adj.rows() * adj.cols(), 0);
  for (int i = 0; i < kStateCount; ++i) {
    const int cluster = kClusterOfState[i];
    for (int p = 0; p < kPoolSizes[cluster]; ++p)
      adj.at(static_cast<std::size_t>(i), static_cast<std::size_t>(kPools[cluster][p])) = 1;
  }
  return adj;
}

}  // namespace mdpfact::synthetic
