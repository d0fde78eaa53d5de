#include "mdpfact/factorizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mdpfact/error.hpp"

namespace mdpfact {
namespace {

void check_labels_unique(const std::vector<std::string>& labels, const char* what) {
  std::vector<std::string> copy = labels;
  std::sort(copy.begin(), copy.end());
  if (std::adjacent_find(copy.begin(), copy.end()) != copy.end())
    throw Error(std::string("factorizer: duplicate ") + what + " label");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

nlohmann::json threshold_to_json(const std::optional<ThresholdSpec>& threshold) {
  if (!threshold) return nullptr;
  nlohmann::json deltas = nlohmann::json::object();
  for (std::size_t c = 0; c < threshold->col_labels.size(); ++c)
    deltas[threshold->col_labels[c]] = threshold->delta_per_column[c];
  return nlohmann::json{{"q", threshold->q}, {"delta_per_column", deltas}};
}

}  // namespace

double empirical_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error("quantile of empty range");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must be in [0,1]");
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

AdjacencyMatrix threshold_matrix(const MiMatrix& mi, double q) {
  if (mi.rows() == 0 || mi.cols() == 0) throw Error("threshold_matrix: empty matrix");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("threshold_matrix: q must be in [0,1]");

  AdjacencyMatrix adj;
  adj.row_labels = mi.row_labels;
  adj.col_labels = mi.col_labels;
  adj.values.assign(mi.rows() * mi.cols(), 0);
  ThresholdSpec spec;
  spec.q = q;
  spec.col_labels = mi.col_labels;
  spec.delta_per_column.resize(mi.cols());

  std::vector<double> column(mi.rows());
  for (std::size_t c = 0; c < mi.cols(); ++c) {
    for (std::size_t r = 0; r < mi.rows(); ++r) column[r] = mi.at(r, c);
    std::sort(column.begin(), column.end());
    const double delta = empirical_quantile(column, q);
    spec.delta_per_column[c] = delta;
    for (std::size_t r = 0; r < mi.rows(); ++r)
      if (mi.at(r, c) >= delta) adj.at(r, c) = 1;
  }
  adj.threshold = std::move(spec);
  return adj;
}

Factorization block_diagonalize(const AdjacencyMatrix& adj) {
  const std::size_t R = adj.rows();
  const std::size_t C = adj.cols();
  if (R == 0 || C == 0) throw Error("block_diagonalize: empty matrix");
  if (adj.values.size() != R * C) throw Error("block_diagonalize: shape mismatch");
  check_labels_unique(adj.row_labels, "row");
  check_labels_unique(adj.col_labels, "column");
  for (std::uint8_t v : adj.values)
    if (v > 1) throw Error("block_diagonalize: matrix entries must be 0 or 1");

  std::vector<std::vector<std::size_t>> row_edges(R), col_edges(C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      if (adj.at(r, c)) {
        row_edges[r].push_back(c);
        col_edges[c].push_back(r);
      }

  // Depth-first search over the bipartite graph; pushing a row expands into
  // its columns and vice versa, so the walk alternates sides.
  constexpr int kUnvisited = -1;
  std::vector<int> row_comp(R, kUnvisited), col_comp(C, kUnvisited);
  int components = 0;
  struct Node {
    bool is_row;
    std::size_t index;
  };
  std::vector<Node> stack;
  for (std::size_t seed = 0; seed < R; ++seed) {
    if (row_comp[seed] != kUnvisited || row_edges[seed].empty()) continue;
    const int comp = components++;
    row_comp[seed] = comp;
    stack.push_back({true, seed});
    while (!stack.empty()) {
      const Node node = stack.back();
      stack.pop_back();
      if (node.is_row) {
        for (std::size_t c : row_edges[node.index]) {
          if (col_comp[c] == kUnvisited) {
            col_comp[c] = comp;
            stack.push_back({false, c});
          }
        }
      } else {
        for (std::size_t r : col_edges[node.index]) {
          if (row_comp[r] == kUnvisited) {
            row_comp[r] = comp;
            stack.push_back({true, r});
          }
        }
      }
    }
  }

  // Order components by smallest contained column index, ties by row index.
  struct ComponentKey {
    std::size_t min_col;
    std::size_t min_row;
    int comp;
  };
  std::vector<ComponentKey> keys(static_cast<std::size_t>(components));
  for (int k = 0; k < components; ++k) keys[k] = {C, R, k};
  for (std::size_t c = 0; c < C; ++c)
    if (col_comp[c] != kUnvisited) {
      auto& key = keys[col_comp[c]];
      key.min_col = std::min(key.min_col, c);
    }
  for (std::size_t r = 0; r < R; ++r)
    if (row_comp[r] != kUnvisited) {
      auto& key = keys[row_comp[r]];
      key.min_row = std::min(key.min_row, r);
    }
  std::sort(keys.begin(), keys.end(), [](const ComponentKey& a, const ComponentKey& b) {
    if (a.min_col != b.min_col) return a.min_col < b.min_col;
    return a.min_row < b.min_row;
  });

  Factorization f;
  f.threshold = adj.threshold;
  std::vector<int> rank(static_cast<std::size_t>(components));
  for (std::size_t i = 0; i < keys.size(); ++i) rank[keys[i].comp] = static_cast<int>(i);

  f.clusters.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) f.clusters[i].id = static_cast<int>(i);
  for (std::size_t r = 0; r < R; ++r) {
    if (row_comp[r] == kUnvisited)
      f.unassigned_rows.push_back(adj.row_labels[r]);
    else
      f.clusters[rank[row_comp[r]]].state_rows.push_back(adj.row_labels[r]);
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (col_comp[c] == kUnvisited)
      f.unassigned_columns.push_back(adj.col_labels[c]);
    else
      f.clusters[rank[col_comp[c]]].input_columns.push_back(adj.col_labels[c]);
  }

  for (const Cluster& cluster : f.clusters) {
    f.row_order.insert(f.row_order.end(), cluster.state_rows.begin(), cluster.state_rows.end());
    f.col_order.insert(f.col_order.end(), cluster.input_columns.begin(),
                       cluster.input_columns.end());
  }
  f.row_order.insert(f.row_order.end(), f.unassigned_rows.begin(), f.unassigned_rows.end());
  f.col_order.insert(f.col_order.end(), f.unassigned_columns.begin(),
                     f.unassigned_columns.end());
  return f;
}

std::vector<TuneReportRow> tune_threshold(const MiMatrix& mi, const std::vector<double>& q_grid) {
  if (q_grid.empty()) throw Error("tune_threshold: empty quantile grid");
  std::vector<TuneReportRow> report;
  report.reserve(q_grid.size());
  const double total_labels = static_cast<double>(mi.rows() + mi.cols());
  for (double q : q_grid) {
    const AdjacencyMatrix adj = threshold_matrix(mi, q);
    const Factorization f = block_diagonalize(adj);
    TuneReportRow row;
    row.q = q;
    row.cluster_count = f.clusters.size();
    std::size_t largest = 0;
    for (const Cluster& cluster : f.clusters)
      largest = std::max(largest, cluster.state_rows.size() + cluster.input_columns.size());
    row.largest_cluster_fraction = static_cast<double>(largest) / total_labels;
    const auto& deltas = adj.threshold->delta_per_column;
    row.delta_min = *std::min_element(deltas.begin(), deltas.end());
    row.delta_max = *std::max_element(deltas.begin(), deltas.end());
    report.push_back(row);
  }
  return report;
}

double frobenius_error(const AdjacencyMatrix& predicted, const AdjacencyMatrix& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw Error("frobenius_error: shape mismatch (" + std::to_string(predicted.rows()) + "x" +
                std::to_string(predicted.cols()) + " vs " + std::to_string(truth.rows()) + "x" +
                std::to_string(truth.cols()) + ")");
  if (predicted.row_labels != truth.row_labels || predicted.col_labels != truth.col_labels)
    throw Error("frobenius_error: label mismatch between matrices");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.values.size(); ++i) {
    const double d = static_cast<double>(truth.values[i]) - static_cast<double>(predicted.values[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.values.size());
}

ExportFormat parse_export_format(const std::string& name) {
  if (name == "json") return ExportFormat::Json;
  if (name == "dot") return ExportFormat::Dot;
  if (name == "svg") return ExportFormat::Svg;
  if (name == "csv") return ExportFormat::Csv;
  throw Error("unknown export format '" + name + "' (expected json|dot|svg|csv)");
}

namespace {

void check_factorization_matches(const Factorization& f, const AdjacencyMatrix& adj) {
  std::map<std::string, int> row_cluster, col_cluster;
  for (const Cluster& cluster : f.clusters) {
    for (const std::string& r : cluster.state_rows) row_cluster[r] = cluster.id;
    for (const std::string& c : cluster.input_columns) col_cluster[c] = cluster.id;
  }
  for (const std::string& r : f.unassigned_rows) row_cluster[r] = -1;
  for (const std::string& c : f.unassigned_columns) col_cluster[c] = -1;

  if (row_cluster.size() != adj.rows() || col_cluster.size() != adj.cols())
    throw Error("export: factorization does not cover the adjacency matrix labels");
  for (const std::string& r : adj.row_labels)
    if (!row_cluster.count(r)) throw Error("export: row '" + r + "' missing from factorization");
  for (const std::string& c : adj.col_labels)
    if (!col_cluster.count(c))
      throw Error("export: column '" + c + "' missing from factorization");

  for (std::size_t r = 0; r < adj.rows(); ++r)
    for (std::size_t c = 0; c < adj.cols(); ++c)
      if (adj.at(r, c)) {
        const int rc = row_cluster[adj.row_labels[r]];
        const int cc = col_cluster[adj.col_labels[c]];
        if (rc < 0 || rc != cc)
          throw Error("export: edge (" + adj.row_labels[r] + ", " + adj.col_labels[c] +
                      ") falls outside the factorization's blocks");
      }
}

nlohmann::json factorization_to_json(const Factorization& f) {
  nlohmann::json doc;
  doc["clusters"] = nlohmann::json::array();
  for (const Cluster& cluster : f.clusters) {
    doc["clusters"].push_back({{"id", cluster.id},
                               {"state_rows", cluster.state_rows},
                               {"input_columns", cluster.input_columns}});
  }
  doc["row_order"] = f.row_order;
  doc["col_order"] = f.col_order;
  doc["unassigned_rows"] = f.unassigned_rows;
  doc["unassigned_columns"] = f.unassigned_columns;
  doc["threshold"] = threshold_to_json(f.threshold);
  return doc;
}

std::string export_csv(const Factorization& f, const AdjacencyMatrix& adj) {
  std::map<std::string, std::size_t> row_index, col_index;
  for (std::size_t r = 0; r < adj.rows(); ++r) row_index[adj.row_labels[r]] = r;
  for (std::size_t c = 0; c < adj.cols(); ++c) col_index[adj.col_labels[c]] = c;
  std::ostringstream out;
  for (const std::string& c : f.col_order) out << ',' << c;
  out << '\n';
  for (const std::string& r : f.row_order) {
    out << r;
    for (const std::string& c : f.col_order)
      out << ',' << int(adj.at(row_index[r], col_index[c]));
    out << '\n';
  }
  return out.str();
}

std::string export_dot(const Factorization& f, const AdjacencyMatrix& adj) {
  std::ostringstream out;
  out << "graph factorization {\n";
  out << "  rankdir=LR;\n";
  for (const Cluster& cluster : f.clusters) {
    out << "  subgraph cluster_" << cluster.id << " {\n";
    out << "    label=" << quote("cluster " + std::to_string(cluster.id)) << ";\n";
    for (const std::string& r : cluster.state_rows)
      out << "    " << quote(r) << " [shape=box];\n";
    for (const std::string& c : cluster.input_columns) out << "    " << quote(c) << ";\n";
    out << "  }\n";
  }
  for (const std::string& r : f.unassigned_rows) out << "  " << quote(r) << " [shape=box];\n";
  for (const std::string& c : f.unassigned_columns) out << "  " << quote(c) << ";\n";
  for (std::size_t r = 0; r < adj.rows(); ++r)
    for (std::size_t c = 0; c < adj.cols(); ++c)
      if (adj.at(r, c))
        out << "  " << quote(adj.row_labels[r]) << " -- " << quote(adj.col_labels[c]) << ";\n";
  out << "}\n";
  return out.str();
}

std::string export_svg(const Factorization& f, const AdjacencyMatrix& adj) {
  std::map<std::string, std::size_t> row_index, col_index;
  for (std::size_t r = 0; r < adj.rows(); ++r) row_index[adj.row_labels[r]] = r;
  for (std::size_t c = 0; c < adj.cols(); ++c) col_index[adj.col_labels[c]] = c;

  const int cell = 18;
  const int left = 140, top = 120;
  const int width = left + cell * static_cast<int>(adj.cols()) + 10;
  const int height = top + cell * static_cast<int>(adj.rows()) + 10;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  for (std::size_t i = 0; i < f.row_order.size(); ++i) {
    out << "  <text x=\"" << (left - 6) << "\" y=\"" << (top + cell * (i + 0.5) + 4)
        << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">"
        << xml_escape(f.row_order[i]) << "</text>\n";
  }
  for (std::size_t j = 0; j < f.col_order.size(); ++j) {
    const double x = left + cell * (j + 0.5) + 4;
    out << "  <text x=\"" << x << "\" y=\"" << (top - 6)
        << "\" text-anchor=\"start\" font-family=\"monospace\" font-size=\"11\" transform=\"rotate(-90 "
        << x << ' ' << (top - 6) << ")\">" << xml_escape(f.col_order[j]) << "</text>\n";
  }

  for (std::size_t i = 0; i < f.row_order.size(); ++i) {
    for (std::size_t j = 0; j < f.col_order.size(); ++j) {
      const bool on = adj.at(row_index[f.row_order[i]], col_index[f.col_order[j]]) != 0;
      out << "  <rect x=\"" << (left + cell * j) << "\" y=\"" << (top + cell * i) << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\"" << (on ? "#1f4e8c" : "#f2f2f2")
          << "\" stroke=\"#cccccc\"/>\n";
    }
  }

  // Outline each cluster's block in the reordered matrix.
  std::size_t row_at = 0, col_at = 0;
  for (const Cluster& cluster : f.clusters) {
    const std::size_t nr = cluster.state_rows.size();
    const std::size_t nc = cluster.input_columns.size();
    out << "  <rect x=\"" << (left + cell * col_at) << "\" y=\"" << (top + cell * row_at)
        << "\" width=\"" << cell * nc << "\" height=\"" << cell * nr
        << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2.5\"/>\n";
    row_at += nr;
    col_at += nc;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::string export_factorization(const Factorization& f, const AdjacencyMatrix& adj,
                                 ExportFormat format) {
  check_factorization_matches(f, adj);
  switch (format) {
    case ExportFormat::Json:
      return factorization_to_json(f).dump(2) + "\n";
    case ExportFormat::Dot:
      return export_dot(f, adj);
    case ExportFormat::Svg:
      return export_svg(f, adj);
    case ExportFormat::Csv:
      return export_csv(f, adj);
  }
  throw Error("unreachable export format");
}

void save_adjacency(const AdjacencyMatrix& adj, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write '" + csv_path.string() + "'");
  for (const std::string& label : adj.col_labels) out << ',' << label;
  out << '\n';
  for (std::size_t r = 0; r < adj.rows(); ++r) {
    out << adj.row_labels[r];
    for (std::size_t c = 0; c < adj.cols(); ++c) out << ',' << int(adj.at(r, c));
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + csv_path.string() + "'");

  if (adj.threshold) {
    nlohmann::json meta = threshold_to_json(adj.threshold);
    std::ofstream meta_out(manifest_path_for(csv_path));
    if (!meta_out)
      throw Error("cannot write '" + manifest_path_for(csv_path).string() + "'");
    meta_out << meta.dump(2) << '\n';
  }
}

AdjacencyMatrix load_adjacency(const std::filesystem::path& csv_path) {
  const MiMatrix raw = load_mi_matrix(csv_path);
  AdjacencyMatrix adj;
  adj.row_labels = raw.row_labels;
  adj.col_labels = raw.col_labels;
  adj.values.resize(raw.values.size());
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    if (raw.values[i] == 0.0)
      adj.values[i] = 0;
    else if (raw.values[i] == 1.0)
      adj.values[i] = 1;
    else
      throw Error(csv_path.string() + ": adjacency entries must be 0 or 1, found " +
                  std::to_string(raw.values[i]));
  }

  const std::filesystem::path meta_path = manifest_path_for(csv_path);
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    nlohmann::json meta;
    try {
      meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw Error(meta_path.string() + ": " + e.what());
    }
    if (meta.contains("q")) {
      ThresholdSpec spec;
      spec.q = meta["q"].get<double>();
      if (meta.contains("delta_per_column")) {
        for (const auto& [label, delta] : meta["delta_per_column"].items()) {
          spec.col_labels.push_back(label);
          spec.delta_per_column.push_back(delta.get<double>());
        }
      }
      adj.threshold = std::move(spec);
    }
  }
  return adj;
}

void save_factorization(const Factorization& f, const std::filesystem::path& json_path) {
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write '" + json_path.string() + "'");
  out << factorization_to_json(f).dump(2) << '\n';
  if (!out) throw Error("failed writing '" + json_path.string() + "'");
}

Factorization load_factorization(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error("cannot open '" + json_path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
  Factorization f;
  try {
    for (const auto& entry : doc.at("clusters")) {
      Cluster cluster;
      cluster.id = entry.at("id").get<int>();
      cluster.state_rows = entry.at("state_rows").get<std::vector<std::string>>();
      cluster.input_columns = entry.at("input_columns").get<std::vector<std::string>>();
      f.clusters.push_back(std::move(cluster));
    }
    f.row_order = doc.at("row_order").get<std::vector<std::string>>();
    f.col_order = doc.at("col_order").get<std::vector<std::string>>();
    f.unassigned_rows = doc.at("unassigned_rows").get<std::vector<std::string>>();
    f.unassigned_columns = doc.at("unassigned_columns").get<std::vector<std::string>>();
    if (doc.contains("threshold") && !doc["threshold"].is_null()) {
      ThresholdSpec spec;
      spec.q = doc["threshold"].at("q").get<double>();
      for (const auto& [label, delta] : doc["threshold"].at("delta_per_column").items()) {
        spec.col_labels.push_back(label);
        spec.delta_per_column.push_back(delta.get<double>());
      }
      f.threshold = std::move(spec);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
  return f;
}

}  // namespace mdpfact
