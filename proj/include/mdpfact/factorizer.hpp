#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdpfact/mi.hpp"

namespace mdpfact {

struct ThresholdSpec {
  double q = 0.0;
  std::vector<std::string> col_labels;
  std::vector<double> delta_per_column;  // aligned with col_labels above
};

// Binary dependency matrix obtained by per-column quantile thresholding.
struct AdjacencyMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::uint8_t> values;  // row-major, entries 0/1
  std::optional<ThresholdSpec> threshold;

  std::size_t rows() const { return row_labels.size(); }
  std::size_t cols() const { return col_labels.size(); }
  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
};

struct Cluster {
  int id = 0;
  std::vector<std::string> state_rows;
  std::vector<std::string> input_columns;
};

// Partition of rows/columns into bipartite connected components, plus the
// permutations that expose the block structure. Labels with no edges are
// reported as unassigned instead of being forced into singleton clusters.
struct Factorization {
  std::vector<Cluster> clusters;
  std::vector<std::string> row_order;
  std::vector<std::string> col_order;
  std::vector<std::string> unassigned_rows;
  std::vector<std::string> unassigned_columns;
  std::optional<ThresholdSpec> threshold;
};

// Interpolated empirical quantile (the usual (n-1)*q order-statistic rule) of
// the values in `sorted`, which must be ascending and non-empty.
double empirical_quantile(const std::vector<double>& sorted, double q);

// Per column j: delta_j = q-quantile of the column; entry = 1 iff value >= delta_j.
AdjacencyMatrix threshold_matrix(const MiMatrix& mi, double q);

// Connected components of the bipartite row/column graph whose edges are the
// 1-entries, via depth-first search alternating between row and column
// expansion. Cluster ids are ordered by smallest original column index (ties:
// smallest row index); the output is invariant under input permutations.
Factorization block_diagonalize(const AdjacencyMatrix& adj);

struct TuneReportRow {
  double q = 0.0;
  std::size_t cluster_count = 0;
  double largest_cluster_fraction = 0.0;  // share of all labels in the largest cluster
  double delta_min = 0.0;
  double delta_max = 0.0;
};

// Diagnostics for each quantile level; no automatic selection.
std::vector<TuneReportRow> tune_threshold(const MiMatrix& mi, const std::vector<double>& q_grid);

// Squared-difference count divided by matrix size; for binary matrices this is
// the fraction of differing entries. Requires identical shapes and labels.
double frobenius_error(const AdjacencyMatrix& predicted, const AdjacencyMatrix& truth);

enum class ExportFormat { Json, Dot, Svg, Csv };
ExportFormat parse_export_format(const std::string& name);

// Renders the factorization: json = cluster listing, dot = bipartite graph
// with clusters as subgraphs, svg = reordered matrix heatmap with block
// outlines, csv = the reordered binary matrix. `f` must describe `adj`.
std::string export_factorization(const Factorization& f, const AdjacencyMatrix& adj,
                                 ExportFormat format);

void save_adjacency(const AdjacencyMatrix& adj, const std::filesystem::path& csv_path);
AdjacencyMatrix load_adjacency(const std::filesystem::path& csv_path);

void save_factorization(const Factorization& f, const std::filesystem::path& json_path);
Factorization load_factorization(const std::filesystem::path& json_path);

}  // namespace mdpfact
