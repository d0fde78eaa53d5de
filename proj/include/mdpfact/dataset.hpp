#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdpfact {

enum class VarRole { State, Action, NextState };
enum class VarKind { Continuous, Discrete };

std::string to_string(VarRole role);
std::string to_string(VarKind kind);

struct VariableSpec {
  std::string name;
  VarRole role = VarRole::State;
  VarKind kind = VarKind::Continuous;
  int index = 0;  // position within its role group, 0-based
};

// Immutable table of logged transitions. Columns are stored column-major in
// schema order: all state variables, then all actions, then all next-state
// variables. Discrete variables hold non-negative integer category codes
// (stored as doubles, validated to be integral). Construction validates every
// invariant; instances are safe to share across threads.
class TransitionDataset {
public:
  TransitionDataset(std::vector<VariableSpec> schema,
                    std::vector<std::vector<double>> columns);

  const std::vector<VariableSpec>& schema() const { return schema_; }
  std::size_t sample_count() const { return rows_; }   // T
  std::size_t state_count() const { return states_; }  // n
  std::size_t action_count() const { return actions_; }  // m
  std::size_t column_count() const { return schema_.size(); }

  std::size_t column_index(std::string_view name) const;  // throws on unknown name
  const VariableSpec& variable(std::size_t column) const { return schema_.at(column); }
  std::span<const double> column(std::size_t index) const;
  std::span<const double> column(std::string_view name) const;

  // State followed by action names; the candidate inputs X of the MI matrix.
  std::vector<std::string> input_names() const;
  // Next-state names; the MI matrix targets.
  std::vector<std::string> target_names() const;

private:
  std::vector<VariableSpec> schema_;
  std::vector<std::vector<double>> columns_;
  std::size_t rows_ = 0;
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
};

// The manifest lives next to the CSV with the extension replaced by ".json".
std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path);

TransitionDataset load_dataset(const std::filesystem::path& csv_path);
void save_dataset(const TransitionDataset& dataset, const std::filesystem::path& csv_path);

// Copy of `dataset` with the named column's values permuted uniformly at
// random, deterministically in `seed`. Everything else is bit-identical.
TransitionDataset shuffle_column(const TransitionDataset& dataset,
                                 std::string_view column, std::uint64_t seed);

// In-place Fisher-Yates permutation of `values`, deterministic in `seed`.
// Shared by shuffle_column and the MI bias correction so both see the same
// permutation for the same seed.
void shuffle_values(std::vector<double>& values, std::uint64_t seed);

// Serializes a value for CSV output, locale independent. Continuous values
// use 17 significant digits so parsing recovers the exact double; discrete
// codes are written as plain integers.
std::string format_value(double value, VarKind kind);

}  // namespace mdpfact
