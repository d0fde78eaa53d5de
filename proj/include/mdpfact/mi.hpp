#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdpfact/dataset.hpp"

namespace mdpfact {

struct ColumnData {
  std::span<const double> values;
  VarKind kind = VarKind::Continuous;
};

struct EstimatorParams {
  int k = 3;
  int shuffles = 1;
  std::uint64_t seed = 0;
};

// Real-valued matrix of bias-corrected mutual information estimates, in nats.
// Rows are next-state variables, columns the input (state then action)
// variables they are estimated against.
struct MiMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<double> values;  // row-major, rows() x cols()
  EstimatorParams params;

  std::size_t rows() const { return row_labels.size(); }
  std::size_t cols() const { return col_labels.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
};

// Mixed discrete-continuous k-nearest-neighbor MI estimate between two scalar
// columns, in nats, clipped at 0. For each sample, the k-th neighbor distance
// is taken in the joint space under the max-norm (self excluded). A sample
// whose k-th neighbor distance is zero uses the count of samples tied with it
// at distance zero in place of k. Marginal neighborhood counts exclude the
// sample itself. Columns with a single distinct value short-circuit to 0.
//
// The implementation accelerates the neighbor search by scanning a sorted
// order; mi_pair_bruteforce below is the plain O(N^2) reference, and the two
// agree bit-for-bit.
double estimate_pair_mi(ColumnData x, ColumnData y, int k);

// O(N^2) reference implementation of the same estimate.
double mi_pair_bruteforce(ColumnData x, ColumnData y, int k);

// max(0, raw MI - mean over `shuffles` input-column permutations). Permutation
// seeds derive from (seed, input, target, shuffle index), so results do not
// depend on evaluation order.
double bias_corrected_mi(const TransitionDataset& dataset, std::string_view input,
                         std::string_view target, int k, int shuffles, std::uint64_t seed);

// Full matrix of bias-corrected estimates: one row per next-state variable,
// one column per input variable (or per entry of column_subset, in the given
// order). Entries are evaluated in parallel; the result is a pure function of
// the arguments. thread_count 0 means "use the hardware concurrency".
MiMatrix compute_mi_matrix(const TransitionDataset& dataset, int k, int shuffles,
                           std::uint64_t seed,
                           const std::optional<std::vector<std::string>>& column_subset = {},
                           unsigned thread_count = 0);

// CSV with row/column labels plus a JSON sidecar holding the estimator
// parameters (same naming convention as datasets: extension -> .json).
void save_mi_matrix(const MiMatrix& matrix, const std::filesystem::path& csv_path);
MiMatrix load_mi_matrix(const std::filesystem::path& csv_path);

double digamma(double x);

}  // namespace mdpfact
