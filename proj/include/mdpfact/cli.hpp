#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdpfact/dataset.hpp"
#include "mdpfact/gridsim.hpp"

namespace mdpfact::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Command implementations behind the flag parser. Each writes its outputs and
// a run.json manifest (command, parameters, tool version, input digests) into
// the output directory, and throws mdpfact::Error on any failure.

struct GenSyntheticOptions {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool iid_resets = false;
};
void cmd_gen_synthetic(const GenSyntheticOptions& options);

struct GenGridOptions {
  std::string grid = "ieee14";  // "ieee14" or a path to a grid model JSON
  std::string substations = "all-qualifying";  // or comma-separated ids
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};
void cmd_gen_grid(const GenGridOptions& options);

struct EstimateOptions {
  std::vector<std::filesystem::path> datasets;
  int k = 3;
  int shuffles = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;  // optional input-column subset
  std::filesystem::path out;
  unsigned threads = 0;
};
void cmd_estimate(const EstimateOptions& options);

struct FactorizeOptions {
  std::filesystem::path mi_path;
  double quantile = 0.5;
  std::filesystem::path out;
};
void cmd_factorize(const FactorizeOptions& options);

struct TuneOptions {
  std::filesystem::path mi_path;
  std::vector<double> quantile_grid;
};
void cmd_tune(const TuneOptions& options, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path pred;
  std::filesystem::path truth;
};
void cmd_evaluate(const EvaluateOptions& options, std::ostream& out);

struct ExportOptions {
  std::filesystem::path factorization;  // adjacency.csv must sit next to it
  std::string format = "json";
  std::filesystem::path out;  // defaults to export.<format> next to the input
};
void cmd_export(const ExportOptions& options);

struct DumpGridOptions {
  std::string grid = "ieee14";
  std::filesystem::path out;
};
void cmd_dump_grid(const DumpGridOptions& options);

// "ieee14" or a model JSON path.
grid::GridModel resolve_grid(const std::string& grid);

std::string sha256_file(const std::filesystem::path& path);

// Min-max rescales continuous columns that fall outside [0,1] (the MI
// estimate is invariant under per-variable monotone maps). Returns the
// rescaled dataset; `record` receives {"column": {"min":..., "max":...}} for
// every rescaled column.
TransitionDataset normalize_continuous_columns(const TransitionDataset& dataset,
                                               std::string& record_json);

}  // namespace mdpfact::cli
