#include "mdpfact/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "mdpfact/error.hpp"
#include "mdpfact/rng.hpp"

namespace mdpfact {
namespace {

bool valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

double parse_number(std::string_view text, std::size_t row, std::size_t col,
                    const std::filesystem::path& path) {
  const auto cell = [&] {
    std::ostringstream os;
    os << path.string() << ": row " << row << ", column " << col;
    return os.str();
  };
  if (text.empty()) throw Error(cell() + ": blank cell (missing values are not supported)");
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw Error(cell() + ": not a number: '" + std::string(text) + "'");
  if (!std::isfinite(value))
    throw Error(cell() + ": non-finite value '" + std::string(text) + "'");
  return value;
}

VarKind parse_kind(const std::string& text) {
  if (text == "continuous") return VarKind::Continuous;
  if (text == "discrete") return VarKind::Discrete;
  throw Error("manifest: unknown kind '" + text + "' (expected continuous|discrete)");
}

constexpr double kMaxDiscreteCode = 9007199254740992.0;  // 2^53

}  // namespace

std::string to_string(VarRole role) {
  switch (role) {
    case VarRole::State: return "state";
    case VarRole::Action: return "action";
    case VarRole::NextState: return "next_state";
  }
  return "?";
}

std::string to_string(VarKind kind) {
  return kind == VarKind::Continuous ? "continuous" : "discrete";
}

TransitionDataset::TransitionDataset(std::vector<VariableSpec> schema,
                                     std::vector<std::vector<double>> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (schema_.empty()) throw Error("dataset: empty schema");
  if (columns_.size() != schema_.size())
    throw Error("dataset: " + std::to_string(columns_.size()) + " columns for " +
                std::to_string(schema_.size()) + " schema entries");

  // Schema must be grouped state..., action..., next_state... with contiguous
  // 0-based indices inside each group.
  std::size_t pos = 0;
  for (VarRole role : {VarRole::State, VarRole::Action, VarRole::NextState}) {
    int index = 0;
    while (pos < schema_.size() && schema_[pos].role == role) {
      if (schema_[pos].index != index)
        throw Error("dataset: variable '" + schema_[pos].name + "' has index " +
                    std::to_string(schema_[pos].index) + ", expected " + std::to_string(index));
      if (role == VarRole::State) ++states_;
      if (role == VarRole::Action) ++actions_;
      ++index;
      ++pos;
    }
  }
  if (pos != schema_.size())
    throw Error("dataset: schema must list state, then action, then next_state variables");

  const std::size_t next_states = schema_.size() - states_ - actions_;
  if (states_ == 0) throw Error("dataset: at least one state variable required");
  if (next_states != states_)
    throw Error("dataset: " + std::to_string(next_states) + " next_state variables for " +
                std::to_string(states_) + " state variables");
  for (std::size_t i = 0; i < states_; ++i) {
    const VariableSpec& s = schema_[i];
    const VariableSpec& ns = schema_[states_ + actions_ + i];
    if (ns.name != "next_" + s.name)
      throw Error("dataset: next_state variable '" + ns.name + "' does not mirror state '" +
                  s.name + "'");
    if (ns.kind != s.kind)
      throw Error("dataset: kind mismatch between '" + s.name + "' and '" + ns.name + "'");
  }

  for (const VariableSpec& spec : schema_) {
    if (!valid_identifier(spec.name))
      throw Error("dataset: invalid variable name '" + spec.name + "'");
  }
  {
    std::vector<std::string> names;
    names.reserve(schema_.size());
    for (const VariableSpec& spec : schema_) names.push_back(spec.name);
    std::sort(names.begin(), names.end());
    const auto dup = std::adjacent_find(names.begin(), names.end());
    if (dup != names.end()) throw Error("dataset: duplicate variable name '" + *dup + "'");
  }

  rows_ = columns_.front().size();
  if (rows_ == 0) throw Error("dataset: T >= 1 required (no rows)");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != rows_)
      throw Error("dataset: column '" + schema_[c].name + "' has " +
                  std::to_string(columns_[c].size()) + " rows, expected " + std::to_string(rows_));
    for (std::size_t r = 0; r < rows_; ++r) {
      const double v = columns_[c][r];
      if (!std::isfinite(v))
        throw Error("dataset: non-finite value in column '" + schema_[c].name + "', row " +
                    std::to_string(r + 1));
      if (schema_[c].kind == VarKind::Discrete) {
        if (v < 0.0 || v != std::floor(v) || v > kMaxDiscreteCode)
          throw Error("dataset: discrete column '" + schema_[c].name + "', row " +
                      std::to_string(r + 1) + ": value " + std::to_string(v) +
                      " is not a non-negative integer code");
      }
    }
  }
}

std::size_t TransitionDataset::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return i;
  throw Error("dataset: unknown column '" + std::string(name) + "'");
}

std::span<const double> TransitionDataset::column(std::size_t index) const {
  if (index >= columns_.size()) throw Error("dataset: column index out of range");
  return columns_[index];
}

std::span<const double> TransitionDataset::column(std::string_view name) const {
  return columns_[column_index(name)];
}

std::vector<std::string> TransitionDataset::input_names() const {
  std::vector<std::string> names;
  names.reserve(states_ + actions_);
  for (std::size_t i = 0; i < states_ + actions_; ++i) names.push_back(schema_[i].name);
  return names;
}

std::vector<std::string> TransitionDataset::target_names() const {
  std::vector<std::string> names;
  names.reserve(states_);
  for (std::size_t i = states_ + actions_; i < schema_.size(); ++i)
    names.push_back(schema_[i].name);
  return names;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

std::string format_value(double value, VarKind kind) {
  char buf[40];
  if (kind == VarKind::Discrete) {
    const auto code = static_cast<long long>(value);
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), code);
    return std::string(buf, ptr);
  }
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

TransitionDataset load_dataset(const std::filesystem::path& csv_path) {
  const std::filesystem::path manifest_path = manifest_path_for(csv_path);
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in)
    throw Error("cannot open manifest '" + manifest_path.string() + "'");
  nlohmann::json manifest;
  try {
    manifest_in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + manifest_path.string() + "': " + e.what());
  }

  std::vector<VariableSpec> schema;
  const auto read_group = [&](const char* key, VarRole role) {
    if (!manifest.contains(key) || !manifest[key].is_array())
      throw Error("manifest '" + manifest_path.string() + "': missing array '" +
                  std::string(key) + "'");
    int index = 0;
    for (const auto& entry : manifest[key]) {
      if (!entry.contains("name") || !entry.contains("kind"))
        throw Error("manifest '" + manifest_path.string() + "': " + key +
                    " entries need 'name' and 'kind'");
      schema.push_back(VariableSpec{entry["name"].get<std::string>(), role,
                                    parse_kind(entry["kind"].get<std::string>()), index});
      ++index;
    }
  };
  read_group("state", VarRole::State);
  read_group("action", VarRole::Action);
  read_group("next_state", VarRole::NextState);

  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open dataset '" + csv_path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(csv_path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      header.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (header.size() != schema.size()) {
    throw Error(csv_path.string() + ": column mismatch: manifest lists " +
                std::to_string(schema.size()) + " variables but CSV header has " +
                std::to_string(header.size()) + " columns");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i] != schema[i].name)
      throw Error(csv_path.string() + ": header column " + std::to_string(i + 1) + " is '" +
                  header[i] + "' but manifest expects '" + schema[i].name + "'");
  }

  std::vector<std::vector<double>> columns(schema.size());
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;  // trailing newline
    std::size_t start = 0;
    std::size_t col = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell =
          std::string_view(line).substr(start, comma == std::string::npos ? comma : comma - start);
      if (col >= schema.size())
        throw Error(csv_path.string() + ": row " + std::to_string(row) + " has extra columns");
      const double value = parse_number(cell, row, col + 1, csv_path);
      if (schema[col].kind == VarKind::Discrete &&
          (value < 0.0 || value != std::floor(value)))
        throw Error(csv_path.string() + ": row " + std::to_string(row) + ", column " +
                    std::to_string(col + 1) + " ('" + schema[col].name +
                    "'): discrete column requires a non-negative integer code, got '" +
                    std::string(cell) + "'");
      columns[col].push_back(value);
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != schema.size())
      throw Error(csv_path.string() + ": row " + std::to_string(row) + " has " +
                  std::to_string(col) + " columns, expected " + std::to_string(schema.size()));
  }
  if (columns.front().empty()) throw Error(csv_path.string() + ": no data rows (T >= 1 required)");

  return TransitionDataset(std::move(schema), std::move(columns));
}

void save_dataset(const TransitionDataset& dataset, const std::filesystem::path& csv_path) {
  const std::filesystem::path manifest_path = manifest_path_for(csv_path);
  nlohmann::json manifest;
  manifest["state"] = nlohmann::json::array();
  manifest["action"] = nlohmann::json::array();
  manifest["next_state"] = nlohmann::json::array();
  for (const VariableSpec& spec : dataset.schema()) {
    manifest[to_string(spec.role)].push_back(
        {{"name", spec.name}, {"kind", to_string(spec.kind)}});
  }

  std::ofstream manifest_out(manifest_path);
  if (!manifest_out) throw Error("cannot write manifest '" + manifest_path.string() + "'");
  manifest_out << manifest.dump(2) << '\n';
  if (!manifest_out) throw Error("failed writing '" + manifest_path.string() + "'");

  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write dataset '" + csv_path.string() + "'");
  for (std::size_t c = 0; c < dataset.column_count(); ++c) {
    if (c) out << ',';
    out << dataset.schema()[c].name;
  }
  out << '\n';
  std::string buffer;
  for (std::size_t r = 0; r < dataset.sample_count(); ++r) {
    buffer.clear();
    for (std::size_t c = 0; c < dataset.column_count(); ++c) {
      if (c) buffer += ',';
      buffer += format_value(dataset.column(c)[r], dataset.schema()[c].kind);
    }
    buffer += '\n';
    out << buffer;
  }
  if (!out) throw Error("failed writing '" + csv_path.string() + "'");
}

void shuffle_values(std::vector<double>& values, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_below(i);
    std::swap(values[i - 1], values[j]);
  }
}

TransitionDataset shuffle_column(const TransitionDataset& dataset, std::string_view column,
                                 std::uint64_t seed) {
  const std::size_t target = dataset.column_index(column);
  std::vector<std::vector<double>> columns;
  columns.reserve(dataset.column_count());
  for (std::size_t c = 0; c < dataset.column_count(); ++c) {
    auto view = dataset.column(c);
    columns.emplace_back(view.begin(), view.end());
  }
  shuffle_values(columns[target], seed);
  return TransitionDataset(dataset.schema(), std::move(columns));
}

}  // namespace mdpfact
