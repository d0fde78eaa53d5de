#include "mdpfact/mi.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/special_functions/digamma.hpp>
#include <json.hpp>

#include "mdpfact/error.hpp"
#include "mdpfact/rng.hpp"

namespace mdpfact {
namespace {

void validate_pair(const ColumnData& x, const ColumnData& y, int k) {
  if (x.values.size() != y.values.size())
    throw Error("mi: columns have different lengths (" + std::to_string(x.values.size()) +
                " vs " + std::to_string(y.values.size()) + ")");
  if (k < 1) throw Error("mi: k >= 1 required");
  const std::size_t n = x.values.size();
  if (n <= static_cast<std::size_t>(k))
    throw Error("mi: too few samples (N=" + std::to_string(n) + ", need N >= k+1 with k=" +
                std::to_string(k) + ")");
  for (double v : x.values)
    if (!std::isfinite(v)) throw Error("mi: non-finite value in input column");
  for (double v : y.values)
    if (!std::isfinite(v)) throw Error("mi: non-finite value in input column");
}

bool is_constant(std::span<const double> values) {
  for (double v : values)
    if (v != values.front()) return false;
  return true;
}

double log_count(std::size_t n) { return std::log(static_cast<double>(n) + 1.0); }

// Count of entries of `sorted` with |v - center| <= radius. `center` must be
// present in the array. Comparisons evaluate the same |a - b| <= r expression
// the brute-force reference uses, so the two counts agree exactly.
std::size_t count_within(const std::vector<double>& sorted, double center, double radius) {
  const std::size_t n = sorted.size();
  const std::size_t split =
      std::lower_bound(sorted.begin(), sorted.end(), center) - sorted.begin();
  std::size_t lo = 0, hi = split;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (std::abs(sorted[mid] - center) <= radius)
      hi = mid;
    else
      lo = mid + 1;
  }
  const std::size_t left = lo;
  lo = split;
  hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (std::abs(sorted[mid] - center) <= radius)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo - left;
}

// Per-sample count of other samples sharing the exact same (x, y) value.
std::vector<std::size_t> joint_tie_counts(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<std::size_t> ties(n, 0);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && x[order[end]] == x[order[start]] && y[order[end]] == y[order[start]]) ++end;
    for (std::size_t t = start; t < end; ++t) ties[order[t]] = end - start - 1;
    start = end;
  }
  return ties;
}

// Order-independent reduction: summing the sorted per-sample terms makes the
// estimate exactly invariant under joint row permutations of the input.
double mean_of(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

}  // namespace

double digamma(double x) { return boost::math::digamma(x); }

double estimate_pair_mi(ColumnData x, ColumnData y, int k) {
  validate_pair(x, y, k);
  if (is_constant(x.values) || is_constant(y.values)) return 0.0;

  const std::size_t n = x.values.size();
  const double log_n = std::log(static_cast<double>(n));
  const std::size_t kk = static_cast<std::size_t>(k);

  std::vector<double> xs(x.values.begin(), x.values.end());
  std::vector<double> ys(y.values.begin(), y.values.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x.values[a] != x.values[b]) return x.values[a] < x.values[b];
    return a < b;
  });
  std::vector<std::size_t> pos(n);
  for (std::size_t p = 0; p < n; ++p) pos[order[p]] = p;

  const std::vector<std::size_t> ties = joint_tie_counts(x.values, y.values);

  std::vector<double> heap;
  heap.reserve(kk);
  std::vector<double> terms(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x.values[i];
    const double yi = y.values[i];
    heap.clear();

    // Expand outward from i in x-order; any sample further than the current
    // k-th smallest joint distance in |dx| alone cannot improve the top-k.
    std::size_t left = pos[i];
    std::size_t right = pos[i] + 1;
    const auto consider = [&](std::size_t p) {
      const std::size_t j = order[p];
      const double d = std::max(std::abs(x.values[j] - xi), std::abs(y.values[j] - yi));
      if (heap.size() < kk) {
        heap.push_back(d);
        std::push_heap(heap.begin(), heap.end());
      } else if (d < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = d;
        std::push_heap(heap.begin(), heap.end());
      }
    };
    while (true) {
      const bool has_left = left > 0;
      const bool has_right = right < n;
      if (!has_left && !has_right) break;
      const double dl = has_left ? std::abs(x.values[order[left - 1]] - xi)
                                 : std::numeric_limits<double>::infinity();
      const double dr = has_right ? std::abs(x.values[order[right]] - xi)
                                  : std::numeric_limits<double>::infinity();
      if (heap.size() == kk && std::min(dl, dr) > heap.front()) break;
      if (dl <= dr) {
        consider(left - 1);
        --left;
      } else {
        consider(right);
        ++right;
      }
    }

    const double d = heap.front();
    const double kt = d == 0.0 ? static_cast<double>(ties[i]) : static_cast<double>(kk);
    const std::size_t nx = count_within(xs, xi, d) - 1;
    const std::size_t ny = count_within(ys, yi, d) - 1;
    terms[i] = digamma(kt) + log_n - (log_count(nx) + log_count(ny));
  }

  return std::max(0.0, mean_of(terms));
}

double mi_pair_bruteforce(ColumnData x, ColumnData y, int k) {
  validate_pair(x, y, k);
  if (is_constant(x.values) || is_constant(y.values)) return 0.0;

  const std::size_t n = x.values.size();
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> dist;
  dist.reserve(n - 1);
  std::vector<double> terms(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x.values[i];
    const double yi = y.values[i];
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.push_back(std::max(std::abs(x.values[j] - xi), std::abs(y.values[j] - yi)));
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    const double d = dist[k - 1];

    double kt;
    if (d == 0.0) {
      std::size_t zeros = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (std::max(std::abs(x.values[j] - xi), std::abs(y.values[j] - yi)) == 0.0) ++zeros;
      }
      kt = static_cast<double>(zeros);
    } else {
      kt = static_cast<double>(k);
    }

    std::size_t nx = 0, ny = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (std::abs(x.values[j] - xi) <= d) ++nx;
      if (std::abs(y.values[j] - yi) <= d) ++ny;
    }
    terms[i] = digamma(kt) + log_n - (log_count(nx) + log_count(ny));
  }

  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return std::max(0.0, sum / static_cast<double>(n));
}

double bias_corrected_mi(const TransitionDataset& dataset, std::string_view input,
                         std::string_view target, int k, int shuffles, std::uint64_t seed) {
  if (shuffles < 1) throw Error("mi: shuffles >= 1 required");
  const std::size_t input_idx = dataset.column_index(input);
  const std::size_t target_idx = dataset.column_index(target);
  const ColumnData x{dataset.column(input_idx), dataset.variable(input_idx).kind};
  const ColumnData y{dataset.column(target_idx), dataset.variable(target_idx).kind};

  const double raw = estimate_pair_mi(x, y, k);

  std::uint64_t base = mix_seed(seed, "bias-correction");
  base = mix_seed(base, input);
  base = mix_seed(base, target);

  double shuffled_sum = 0.0;
  std::vector<double> permuted(x.values.begin(), x.values.end());
  for (int s = 0; s < shuffles; ++s) {
    permuted.assign(x.values.begin(), x.values.end());
    shuffle_values(permuted, mix_seed(base, static_cast<std::uint64_t>(s)));
    shuffled_sum += estimate_pair_mi(ColumnData{permuted, x.kind}, y, k);
  }
  return std::max(0.0, raw - shuffled_sum / shuffles);
}

MiMatrix compute_mi_matrix(const TransitionDataset& dataset, int k, int shuffles,
                           std::uint64_t seed,
                           const std::optional<std::vector<std::string>>& column_subset,
                           unsigned thread_count) {
  const std::vector<std::string> inputs = dataset.input_names();
  std::vector<std::string> cols;
  if (column_subset) {
    if (column_subset->empty()) throw Error("mi: empty column subset");
    for (const std::string& name : *column_subset) {
      if (std::find(inputs.begin(), inputs.end(), name) == inputs.end())
        throw Error("mi: '" + name + "' is not an input (state or action) column");
      cols.push_back(name);
    }
  } else {
    cols = inputs;
  }

  MiMatrix matrix;
  matrix.row_labels = dataset.target_names();
  matrix.col_labels = cols;
  matrix.values.assign(matrix.rows() * matrix.cols(), 0.0);
  matrix.params = EstimatorParams{k, shuffles, seed};

  const std::size_t total = matrix.rows() * matrix.cols();
  unsigned workers = thread_count ? thread_count : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      const std::size_t r = idx / matrix.cols();
      const std::size_t c = idx % matrix.cols();
      try {
        matrix.values[idx] =
            bias_corrected_mi(dataset, matrix.col_labels[c], matrix.row_labels[r], k, shuffles,
                              seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return matrix;
}

void save_mi_matrix(const MiMatrix& matrix, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write '" + csv_path.string() + "'");
  for (const std::string& label : matrix.col_labels) out << ',' << label;
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << matrix.row_labels[r];
    for (std::size_t c = 0; c < matrix.cols(); ++c)
      out << ',' << format_value(matrix.at(r, c), VarKind::Continuous);
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + csv_path.string() + "'");

  nlohmann::json meta;
  meta["k"] = matrix.params.k;
  meta["shuffles"] = matrix.params.shuffles;
  meta["seed"] = matrix.params.seed;
  const std::filesystem::path meta_path = manifest_path_for(csv_path);
  std::ofstream meta_out(meta_path);
  if (!meta_out) throw Error("cannot write '" + meta_path.string() + "'");
  meta_out << meta.dump(2) << '\n';
}

MiMatrix load_mi_matrix(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open '" + csv_path.string() + "'");
  MiMatrix matrix;

  std::string line;
  if (!std::getline(in, line)) throw Error(csv_path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::size_t start = line.find(',');
    if (start == std::string::npos)
      throw Error(csv_path.string() + ": header must list column labels");
    while (start != std::string::npos) {
      const std::size_t comma = line.find(',', start + 1);
      matrix.col_labels.push_back(
          line.substr(start + 1, comma == std::string::npos ? comma : comma - start - 1));
      start = comma;
    }
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(csv_path.string() + ": row " + std::to_string(row) + ": missing values");
    matrix.row_labels.push_back(line.substr(0, comma));
    std::size_t count = 0;
    std::size_t start = comma + 1;
    while (true) {
      comma = line.find(',', start);
      const std::string_view cell =
          std::string_view(line).substr(start, comma == std::string::npos ? comma : comma - start);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw Error(csv_path.string() + ": row " + std::to_string(row) + ": bad number '" +
                    std::string(cell) + "'");
      matrix.values.push_back(value);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (count != matrix.col_labels.size())
      throw Error(csv_path.string() + ": row " + std::to_string(row) + " has " +
                  std::to_string(count) + " values, expected " +
                  std::to_string(matrix.col_labels.size()));
  }
  if (matrix.row_labels.empty()) throw Error(csv_path.string() + ": no rows");

  const std::filesystem::path meta_path = manifest_path_for(csv_path);
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    nlohmann::json meta;
    try {
      meta_in >> meta;
      matrix.params.k = meta.value("k", 3);
      matrix.params.shuffles = meta.value("shuffles", 1);
      matrix.params.seed = meta.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(meta_path.string() + ": " + e.what());
    }
  }
  return matrix;
}

}  // namespace mdpfact
