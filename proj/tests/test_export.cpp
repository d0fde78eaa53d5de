#include <doctest.h>

#include <json.hpp>

#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdpfact/error.hpp"
#include "mdpfact/factorizer.hpp"
#include "mdpfact/synthetic.hpp"
#include "test_util.hpp"

using namespace mdpfact;

namespace {

// Minimal DOT checker: tokenizes the document and validates it against the
// graph-grammar subset we emit (graph ID { stmt... } with subgraphs, node
// statements with optional attribute lists, and "--" edges).
class DotChecker {
public:
  explicit DotChecker(const std::string& text) : text_(text) { tokenize(); }

  bool valid() {
    at_ = 0;
    if (!accept("graph")) return false;
    if (!accept_id()) return false;
    return block() && at_ == tokens_.size();
  }

private:
  void tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '"') {
        std::string token = "\"";
        ++i;
        while (i < text_.size() && text_[i] != '"') {
          if (text_[i] == '\\') token += text_[i++];
          if (i < text_.size()) token += text_[i++];
        }
        token += '"';
        ++i;
        tokens_.push_back(token);
      } else if (std::string("{}[];=,").find(c) != std::string::npos) {
        tokens_.push_back(std::string(1, c));
        ++i;
      } else if (c == '-' && i + 1 < text_.size() && text_[i + 1] == '-') {
        tokens_.push_back("--");
        i += 2;
      } else {
        std::string token;
        while (i < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[i])) ||
                                    text_[i] == '_' || text_[i] == '.')) {
          token += text_[i++];
        }
        if (token.empty()) {
          tokens_.push_back("?");
          ++i;
        } else {
          tokens_.push_back(token);
        }
      }
    }
  }

  bool accept(const std::string& token) {
    if (at_ < tokens_.size() && tokens_[at_] == token) {
      ++at_;
      return true;
    }
    return false;
  }

  bool peek(const std::string& token) const {
    return at_ < tokens_.size() && tokens_[at_] == token;
  }

  bool accept_id() {
    if (at_ >= tokens_.size()) return false;
    const std::string& t = tokens_[at_];
    if (t == "{" || t == "}" || t == "[" || t == "]" || t == ";" || t == "=" || t == "--" ||
        t == "?")
      return false;
    ++at_;
    return true;
  }

  bool attr_list() {
    if (!accept("[")) return true;  // optional
    while (!peek("]")) {
      if (!accept_id()) return false;
      if (!accept("=")) return false;
      if (!accept_id()) return false;
      accept(",");
    }
    return accept("]");
  }

  bool statement() {
    if (peek("subgraph")) {
      ++at_;
      if (!accept_id()) return false;
      return block();
    }
    if (!accept_id()) return false;
    if (accept("=")) return accept_id() && accept(";");  // graph attribute
    if (accept("--")) {
      if (!accept_id()) return false;
      return attr_list() && accept(";");
    }
    return attr_list() && accept(";");
  }

  bool block() {
    if (!accept("{")) return false;
    while (!peek("}")) {
      if (at_ >= tokens_.size()) return false;
      if (!statement()) return false;
    }
    return accept("}");
  }

  std::string text_;
  std::vector<std::string> tokens_;
  std::size_t at_ = 0;
};

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0, at = 0;
  while ((at = text.find(needle, at)) != std::string::npos) {
    ++count;
    at += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("csv export follows the factorization's row and column orders") {
  const AdjacencyMatrix adj = synthetic::ground_truth_adjacency();
  const Factorization f = block_diagonalize(adj);
  const std::string csv = export_factorization(f, adj, ExportFormat::Csv);

  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  std::string expected_header;
  for (const std::string& c : f.col_order) expected_header += "," + c;
  CHECK(header == expected_header);

  std::vector<std::string> row_names;
  std::string line;
  while (std::getline(lines, line))
    row_names.push_back(line.substr(0, line.find(',')));
  CHECK(row_names == f.row_order);
}

TEST_CASE("json export carries the two known clusters for the ground truth") {
  const AdjacencyMatrix adj = synthetic::ground_truth_adjacency();
  const Factorization f = block_diagonalize(adj);
  const auto doc = nlohmann::json::parse(export_factorization(f, adj, ExportFormat::Json));

  REQUIRE(doc["clusters"].size() == 2);
  std::set<std::set<std::string>> clusters;
  for (const auto& cluster : doc["clusters"]) {
    std::set<std::string> members;
    for (const auto& r : cluster["state_rows"]) members.insert(r.get<std::string>());
    for (const auto& c : cluster["input_columns"]) members.insert(c.get<std::string>());
    clusters.insert(members);
  }
  CHECK(clusters.count({"next_s1", "next_s3", "next_s5", "s1", "s3", "s5", "a1", "a2"}) == 1);
  CHECK(clusters.count({"next_s2", "next_s4", "s2", "s4", "a3"}) == 1);
  CHECK(doc["unassigned_rows"].empty());
  CHECK(doc["unassigned_columns"].empty());
}

TEST_CASE("dot export parses under the graph grammar") {
  const AdjacencyMatrix adj = synthetic::ground_truth_adjacency();
  const Factorization f = block_diagonalize(adj);
  const std::string dot = export_factorization(f, adj, ExportFormat::Dot);
  CHECK(DotChecker(dot).valid());
  // One subgraph per cluster, one edge statement per 1-entry.
  CHECK(count_occurrences(dot, "subgraph") == 2);
  CHECK(count_occurrences(dot, "--") == 21);
}

TEST_CASE("svg export outlines each cluster block") {
  const AdjacencyMatrix adj = synthetic::ground_truth_adjacency();
  const Factorization f = block_diagonalize(adj);
  const std::string svg = export_factorization(f, adj, ExportFormat::Svg);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(count_occurrences(svg, "stroke-width=\"2.5\"") == f.clusters.size());
  // 5x8 cells plus the background and outline rectangles.
  CHECK(count_occurrences(svg, "<rect") == 40 + 1 + f.clusters.size());
}

TEST_CASE("export rejects a factorization that does not match the matrix") {
  const AdjacencyMatrix adj = synthetic::ground_truth_adjacency();
  Factorization f = block_diagonalize(adj);
  f.clusters[0].state_rows.pop_back();  // drop a row: coverage now incomplete
  CHECK_THROWS_AS(export_factorization(f, adj, ExportFormat::Json), Error);

  // A factorization of a different matrix does not describe this one either.
  AdjacencyMatrix other = adj;
  other.at(1, 0) = 1;  // edge outside the factorization's blocks
  const Factorization good = block_diagonalize(adj);
  CHECK_THROWS_AS(export_factorization(good, other, ExportFormat::Csv), Error);
}
