#include "mdpfact/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "mdpfact/error.hpp"
#include "mdpfact/factorizer.hpp"
#include "mdpfact/mi.hpp"
#include "mdpfact/rng.hpp"
#include "mdpfact/synthetic.hpp"

namespace mdpfact::cli {
namespace {

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_run_manifest(const std::filesystem::path& dir, const std::string& command,
                        const nlohmann::json& parameters,
                        const std::vector<std::filesystem::path>& inputs,
                        const nlohmann::json& extra = nullptr) {
  nlohmann::json doc;
  doc["command"] = command;
  doc["parameters"] = parameters;
  doc["tool_version"] = kToolVersion;
  doc["inputs"] = nlohmann::json::object();
  for (const auto& path : inputs) doc["inputs"][path.string()] = sha256_file(path);
  if (!extra.is_null())
    for (const auto& [key, value] : extra.items()) doc[key] = value;
  const std::filesystem::path path = dir / "run.json";
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string shortest_decimal(double value) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<int> parse_substation_list(const std::string& text) {
  std::vector<int> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string token =
        text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (token.empty()) throw Error("empty substation id in '" + text + "'");
    int id = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw Error("bad substation id '" + token + "'");
    ids.push_back(id);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for digest");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("digest init failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("digest init failed");
  }
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    if (EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount())) != 1) {
      EVP_MD_CTX_free(ctx);
      throw Error("digest update failed");
    }
    if (!in) break;
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("digest final failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < length; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

grid::GridModel resolve_grid(const std::string& grid) {
  if (grid == "ieee14") return grid::build_ieee14();
  return grid::load_grid_model(grid);
}

TransitionDataset normalize_continuous_columns(const TransitionDataset& dataset,
                                               std::string& record_json) {
  nlohmann::json record = nlohmann::json::object();
  std::vector<std::vector<double>> columns;
  columns.reserve(dataset.column_count());
  for (std::size_t c = 0; c < dataset.column_count(); ++c) {
    auto view = dataset.column(c);
    columns.emplace_back(view.begin(), view.end());
  }
  for (std::size_t c = 0; c < dataset.column_count(); ++c) {
    if (dataset.schema()[c].kind != VarKind::Continuous) continue;
    const auto [lo_it, hi_it] = std::minmax_element(columns[c].begin(), columns[c].end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo >= 0.0 && hi <= 1.0) continue;
    if (lo == hi) continue;  // constant column, the estimator short-circuits anyway
    for (double& v : columns[c]) v = (v - lo) / (hi - lo);
    record[dataset.schema()[c].name] = {{"min", lo}, {"max", hi}};
  }
  record_json = record.dump();
  return TransitionDataset(dataset.schema(), std::move(columns));
}

void cmd_gen_synthetic(const GenSyntheticOptions& options) {
  if (options.samples == 0) throw Error("--samples must be >= 1");
  ensure_directory(options.out);
  const TransitionDataset dataset =
      synthetic::generate(options.samples, options.seed, options.iid_resets);
  const std::filesystem::path csv = options.out / "dataset.csv";
  save_dataset(dataset, csv);
  const std::filesystem::path truth = options.out / "ground_truth.csv";
  save_adjacency(synthetic::ground_truth_adjacency(), truth);
  write_run_manifest(options.out, "gen-synthetic",
                     {{"samples", options.samples},
                      {"seed", options.seed},
                      {"iid_resets", options.iid_resets}},
                     {csv, manifest_path_for(csv), truth});
}

void cmd_gen_grid(const GenGridOptions& options) {
  if (options.samples == 0) throw Error("--samples must be >= 1");
  const grid::GridModel model = resolve_grid(options.grid);
  const std::vector<int> qualifying = model.qualifying_substations();

  std::vector<int> targets;
  if (options.substations == "all-qualifying") {
    targets = qualifying;
  } else {
    targets = parse_substation_list(options.substations);
    for (int id : targets) {
      if (std::find(qualifying.begin(), qualifying.end(), id) == qualifying.end())
        throw Error("substation " + std::to_string(id) +
                    " does not qualify for topology actions; qualifying substations: " +
                    join_ints(qualifying));
    }
  }
  if (targets.empty()) throw Error("no qualifying substations selected");

  ensure_directory(options.out);
  std::vector<std::filesystem::path> outputs;
  for (int id : targets) {
    const std::uint64_t sub_seed =
        mix_seed(mix_seed(options.seed, "gen-grid"), static_cast<std::uint64_t>(id));
    const TransitionDataset dataset = grid::gen_grid_dataset(model, id, options.samples, sub_seed);
    const std::filesystem::path csv = options.out / ("sub_" + std::to_string(id) + ".csv");
    save_dataset(dataset, csv);
    outputs.push_back(csv);
    outputs.push_back(manifest_path_for(csv));
  }
  write_run_manifest(options.out, "gen-grid",
                     {{"grid", options.grid},
                      {"substations", join_ints(targets)},
                      {"samples", options.samples},
                      {"seed", options.seed}},
                     outputs);
}

void cmd_estimate(const EstimateOptions& options) {
  if (options.datasets.empty()) throw Error("at least one --dataset is required");
  ensure_directory(options.out);

  nlohmann::json normalization = nlohmann::json::object();
  MiMatrix matrix;
  if (options.datasets.size() == 1) {
    const TransitionDataset raw = load_dataset(options.datasets.front());
    std::string record;
    const TransitionDataset dataset = normalize_continuous_columns(raw, record);
    normalization[options.datasets.front().string()] = nlohmann::json::parse(record);
    std::optional<std::vector<std::string>> subset;
    if (!options.columns.empty()) subset = options.columns;
    matrix = compute_mi_matrix(dataset, options.k, options.shuffles, options.seed, subset,
                               options.threads);
  } else {
    if (!options.columns.empty())
      throw Error("--columns applies to single-dataset estimation only");
    // Per-substation grid logs: estimate each action column against its rho
    // targets, then assemble the columns by ascending substation id.
    std::vector<std::pair<int, MiMatrix>> parts;
    for (const auto& path : options.datasets) {
      const TransitionDataset raw = load_dataset(path);
      if (raw.action_count() != 1)
        throw Error(path.string() +
                    ": multi-dataset estimation expects one action column per dataset");
      std::string record;
      const TransitionDataset dataset = normalize_continuous_columns(raw, record);
      normalization[path.string()] = nlohmann::json::parse(record);
      const std::string action = dataset.schema()[dataset.state_count()].name;
      const int substation = grid::substation_of_action_column(action);
      parts.emplace_back(substation,
                         compute_mi_matrix(dataset, options.k, options.shuffles, options.seed,
                                           std::vector<std::string>{action}, options.threads));
    }
    matrix = grid::assemble_grid_matrix(std::move(parts));
  }

  const std::filesystem::path csv = options.out / "mi.csv";
  save_mi_matrix(matrix, csv);
  std::vector<std::filesystem::path> inputs = options.datasets;
  for (const auto& path : options.datasets) inputs.push_back(manifest_path_for(path));
  write_run_manifest(options.out, "estimate",
                     {{"k", options.k},
                      {"shuffles", options.shuffles},
                      {"seed", options.seed},
                      {"columns", options.columns}},
                     inputs, {{"normalization", normalization}});
}

void cmd_factorize(const FactorizeOptions& options) {
  const MiMatrix mi = load_mi_matrix(options.mi_path);
  const AdjacencyMatrix adj = threshold_matrix(mi, options.quantile);
  const Factorization f = block_diagonalize(adj);
  ensure_directory(options.out);
  save_adjacency(adj, options.out / "adjacency.csv");
  save_factorization(f, options.out / "factorization.json");
  write_run_manifest(options.out, "factorize",
                     {{"quantile", options.quantile}, {"mi", options.mi_path.string()}},
                     {options.mi_path});
}

void cmd_tune(const TuneOptions& options, std::ostream& out) {
  if (options.quantile_grid.empty()) throw Error("--quantile-grid must list at least one level");
  const MiMatrix mi = load_mi_matrix(options.mi_path);
  const std::vector<TuneReportRow> report = tune_threshold(mi, options.quantile_grid);
  out << "q,clusters,largest_cluster_fraction,delta_min,delta_max\n";
  for (const TuneReportRow& row : report) {
    out << shortest_decimal(row.q) << ',' << row.cluster_count << ','
        << shortest_decimal(row.largest_cluster_fraction) << ',' << shortest_decimal(row.delta_min)
        << ',' << shortest_decimal(row.delta_max) << '\n';
  }
}

void cmd_evaluate(const EvaluateOptions& options, std::ostream& out) {
  const AdjacencyMatrix pred = load_adjacency(options.pred);
  const AdjacencyMatrix truth = load_adjacency(options.truth);
  out << shortest_decimal(frobenius_error(pred, truth)) << '\n';
}

void cmd_export(const ExportOptions& options) {
  const Factorization f = load_factorization(options.factorization);
  const std::filesystem::path adj_path = options.factorization.parent_path() / "adjacency.csv";
  const AdjacencyMatrix adj = load_adjacency(adj_path);
  const ExportFormat format = parse_export_format(options.format);
  const std::string document = export_factorization(f, adj, format);

  std::filesystem::path out_path = options.out;
  if (out_path.empty())
    out_path = options.factorization.parent_path() / ("export." + options.format);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write '" + out_path.string() + "'");
  out << document;
  if (!out) throw Error("failed writing '" + out_path.string() + "'");
}

void cmd_dump_grid(const DumpGridOptions& options) {
  const grid::GridModel model = resolve_grid(options.grid);
  if (options.out.has_parent_path()) ensure_directory(options.out.parent_path());
  grid::save_grid_model(model, options.out);
}

}  // namespace mdpfact::cli
