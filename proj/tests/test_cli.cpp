#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mdpfact/cli.hpp"
#include "mdpfact/error.hpp"
#include "mdpfact/factorizer.hpp"
#include "mdpfact/mi.hpp"
#include "test_util.hpp"

using namespace mdpfact;

namespace {

struct CommandResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
};

CommandResult run_cli(const std::string& args, const std::filesystem::path& dir) {
  const std::filesystem::path out = dir / "stdout.txt";
  const std::filesystem::path err = dir / "stderr.txt";
  const std::string command = std::string(MDPFACT_CLI_PATH) + " " + args + " > " +
                              out.string() + " 2> " + err.string();
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.stdout_text = testutil::read_file(out);
  result.stderr_text = testutil::read_file(err);
  return result;
}

}  // namespace

TEST_CASE("gen-synthetic writes the documented files deterministically") {
  testutil::TempDir dir("cli_gen_synthetic");
  const std::string out1 = (dir.path() / "run1").string();
  const std::string out2 = (dir.path() / "run2").string();

  const auto r1 = run_cli("gen-synthetic --samples 200 --seed 1 --out " + out1, dir.path());
  CHECK(r1.exit_code == 0);
  for (const char* name : {"dataset.csv", "dataset.json", "ground_truth.csv", "run.json"})
    CHECK(std::filesystem::exists(dir.path() / "run1" / name));

  const auto r2 = run_cli("gen-synthetic --samples 200 --seed 1 --out " + out2, dir.path());
  CHECK(r2.exit_code == 0);
  CHECK(testutil::read_file(dir.path() / "run1/dataset.csv") ==
        testutil::read_file(dir.path() / "run2/dataset.csv"));
  CHECK(testutil::read_file(dir.path() / "run1/ground_truth.csv") ==
        testutil::read_file(dir.path() / "run2/ground_truth.csv"));

  SUBCASE("run manifest records command, version, and digests") {
    const auto doc = nlohmann::json::parse(testutil::read_file(dir.path() / "run1/run.json"));
    CHECK(doc["command"] == "gen-synthetic");
    CHECK(doc["tool_version"] == cli::kToolVersion);
    CHECK(doc["parameters"]["samples"] == 200);
    CHECK(doc["inputs"].size() >= 2);
  }
}

TEST_CASE("gen-synthetic rejects zero samples with a usage error") {
  testutil::TempDir dir("cli_zero");
  const auto result =
      run_cli("gen-synthetic --samples 0 --seed 1 --out " + (dir.path() / "x").string(),
              dir.path());
  CHECK(result.exit_code != 0);
  CHECK(result.stderr_text.rfind("error:", 0) == 0);
}

TEST_CASE("full synthetic pipeline through the binary") {
  testutil::TempDir dir("cli_pipeline");
  const auto gen_dir = dir.path() / "gen";
  const auto mi_dir = dir.path() / "mi";
  const auto fact_dir = dir.path() / "fact";

  REQUIRE(run_cli("gen-synthetic --samples 400 --seed 3 --out " + gen_dir.string(), dir.path())
              .exit_code == 0);
  REQUIRE(run_cli("estimate --dataset " + (gen_dir / "dataset.csv").string() +
                      " --seed 5 --out " + mi_dir.string(),
                  dir.path())
              .exit_code == 0);

  const MiMatrix mi = load_mi_matrix(mi_dir / "mi.csv");
  CHECK(mi.rows() == 5);
  CHECK(mi.cols() == 8);

  REQUIRE(run_cli("factorize " + (mi_dir / "mi.csv").string() + " --quantile 0.5 --out " +
                      fact_dir.string(),
                  dir.path())
              .exit_code == 0);
  CHECK(std::filesystem::exists(fact_dir / "adjacency.csv"));
  CHECK(std::filesystem::exists(fact_dir / "factorization.json"));

  SUBCASE("factorization JSON carries the documented schema") {
    const auto doc =
        nlohmann::json::parse(testutil::read_file(fact_dir / "factorization.json"));
    CHECK(doc.contains("clusters"));
    CHECK(doc.contains("row_order"));
    CHECK(doc.contains("col_order"));
    CHECK(doc.contains("unassigned_rows"));
    CHECK(doc.contains("unassigned_columns"));
    CHECK(doc["threshold"]["q"] == 0.5);
    CHECK(doc["threshold"]["delta_per_column"].size() == 8);
  }

  SUBCASE("evaluate prints a decimal error to stdout") {
    const auto result = run_cli("evaluate --pred " + (fact_dir / "adjacency.csv").string() +
                                    " --truth " + (gen_dir / "ground_truth.csv").string(),
                                dir.path());
    CHECK(result.exit_code == 0);
    const double value = std::stod(result.stdout_text);
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }

  SUBCASE("tune prints one report line per level") {
    const auto result = run_cli("tune " + (mi_dir / "mi.csv").string() +
                                    " --quantile-grid 0.5,0.7",
                                dir.path());
    CHECK(result.exit_code == 0);
    int lines = 0;
    std::istringstream stream(result.stdout_text);
    std::string line;
    while (std::getline(stream, line)) ++lines;
    CHECK(lines == 3);  // header + two levels
  }

  SUBCASE("export emits each documented format") {
    for (const std::string format : {"json", "dot", "svg", "csv"}) {
      const auto out_file = dir.path() / ("export." + format);
      const auto result = run_cli("export " + (fact_dir / "factorization.json").string() +
                                      " --format " + format + " --out " + out_file.string(),
                                  dir.path());
      CHECK(result.exit_code == 0);
      CHECK(std::filesystem::file_size(out_file) > 0);
    }
  }
}

TEST_CASE("estimate restricted to --columns produces a narrow matrix") {
  testutil::TempDir dir("cli_columns");
  const auto gen_dir = dir.path() / "gen";
  REQUIRE(run_cli("gen-synthetic --samples 200 --seed 9 --out " + gen_dir.string(), dir.path())
              .exit_code == 0);
  const auto result = run_cli("estimate --dataset " + (gen_dir / "dataset.csv").string() +
                                  " --seed 2 --columns a1 --columns s2 --out " +
                                  (dir.path() / "mi").string(),
                              dir.path());
  CHECK(result.exit_code == 0);
  const MiMatrix mi = load_mi_matrix(dir.path() / "mi" / "mi.csv");
  CHECK(mi.rows() == 5);
  CHECK(mi.col_labels == std::vector<std::string>{"a1", "s2"});
}

TEST_CASE("evaluate rejects mismatched shapes with a nonzero exit") {
  testutil::TempDir dir("cli_eval_mismatch");
  std::ofstream(dir.path() / "a.csv") << ",c0\nr0,1\n";
  std::ofstream(dir.path() / "b.csv") << ",c0,c1\nr0,1,0\n";
  const auto result = run_cli("evaluate --pred " + (dir.path() / "a.csv").string() +
                                  " --truth " + (dir.path() / "b.csv").string(),
                              dir.path());
  CHECK(result.exit_code == 1);
  CHECK(result.stderr_text.rfind("error:", 0) == 0);
  CHECK(result.stderr_text.find("shape mismatch") != std::string::npos);
}

TEST_CASE("estimate surfaces a missing manifest with the path") {
  testutil::TempDir dir("cli_missing_manifest");
  std::ofstream(dir.path() / "orphan.csv") << "s1,next_s1\n0.5,0.5\n";
  const auto result = run_cli("estimate --dataset " + (dir.path() / "orphan.csv").string() +
                                  " --seed 1 --out " + (dir.path() / "out").string(),
                              dir.path());
  CHECK(result.exit_code == 1);
  CHECK(result.stderr_text.find("manifest") != std::string::npos);
  CHECK(result.stderr_text.find("orphan") != std::string::npos);
}

TEST_CASE("gen-grid writes one dataset per selected substation") {
  testutil::TempDir dir("cli_gen_grid");
  const auto out = dir.path() / "grid";
  const auto result = run_cli(
      "gen-grid --grid ieee14 --substations 3 --samples 40 --seed 2 --out " + out.string(),
      dir.path());
  CHECK(result.exit_code == 0);
  CHECK(std::filesystem::exists(out / "sub_3.csv"));
  CHECK(std::filesystem::exists(out / "sub_3.json"));
  CHECK(std::filesystem::exists(out / "run.json"));

  const TransitionDataset dataset = load_dataset(out / "sub_3.csv");
  CHECK(dataset.state_count() == 20);
  CHECK(dataset.action_count() == 1);
}

TEST_CASE("gen-grid lists qualifying substations when given a bad id") {
  testutil::TempDir dir("cli_gen_grid_bad");
  const auto result = run_cli("gen-grid --grid ieee14 --substations 7 --samples 10 --seed 1 "
                              "--out " +
                                  (dir.path() / "x").string(),
                              dir.path());
  CHECK(result.exit_code == 1);
  CHECK(result.stderr_text.find("does not qualify") != std::string::npos);
  CHECK(result.stderr_text.find("qualifying substations:") != std::string::npos);
}

TEST_CASE("dump-grid emits a loadable model") {
  testutil::TempDir dir("cli_dump");
  const auto path = dir.path() / "grid.json";
  const auto result = run_cli("dump-grid --grid ieee14 --out " + path.string(), dir.path());
  CHECK(result.exit_code == 0);
  const auto model = grid::load_grid_model(path);
  CHECK(model.lines.size() == 20);
}

TEST_CASE("normalization rescales out-of-range continuous columns") {
  std::vector<VariableSpec> schema = {{"x", VarRole::State, VarKind::Continuous, 0},
                                      {"u", VarRole::Action, VarKind::Discrete, 0},
                                      {"next_x", VarRole::NextState, VarKind::Continuous, 0}};
  std::vector<std::vector<double>> columns = {{-2.0, 0.0, 6.0}, {4, 5, 6}, {0.4, 0.5, 0.25}};
  const TransitionDataset dataset(std::move(schema), std::move(columns));
  std::string record;
  const TransitionDataset normalized = cli::normalize_continuous_columns(dataset, record);

  CHECK(normalized.column("x")[0] == 0.0);
  CHECK(normalized.column("x")[2] == 1.0);
  CHECK(normalized.column("x")[1] == doctest::Approx(0.25));
  // Discrete and in-range columns are untouched.
  CHECK(normalized.column("u")[0] == 4.0);
  CHECK(normalized.column("next_x")[1] == 0.5);

  const auto doc = nlohmann::json::parse(record);
  CHECK(doc.contains("x"));
  CHECK_FALSE(doc.contains("next_x"));
  CHECK(doc["x"]["min"] == -2.0);
  CHECK(doc["x"]["max"] == 6.0);
}
