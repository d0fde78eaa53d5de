#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mdpfact/error.hpp"
#include "mdpfact/gridsim.hpp"
#include "mdpfact/rng.hpp"
#include "test_util.hpp"

using namespace mdpfact;
using namespace mdpfact::grid;

namespace {

GridModel two_bus_model() {
  GridModel model;
  model.substations.resize(2);
  model.substations[0].id = 0;
  model.substations[1].id = 1;
  model.lines.push_back({0, 0, 1, 10.0, 2.0});
  model.generators.push_back({0, 0, 0.0, 2.0});
  model.loads.push_back({0, 1, 1.0});
  model.slack_substation = 0;
  finalize_model(model);
  return model;
}

GridModel triangle_model() {
  GridModel model;
  model.substations.resize(3);
  for (int s = 0; s < 3; ++s) model.substations[s].id = s;
  model.lines.push_back({0, 0, 1, 5.0, 2.0});
  model.lines.push_back({1, 1, 2, 5.0, 2.0});
  model.lines.push_back({2, 0, 2, 5.0, 2.0});
  model.generators.push_back({0, 0, 0.0, 2.0});
  model.loads.push_back({0, 2, 1.0});
  model.slack_substation = 0;
  finalize_model(model);
  return model;
}

double nodal_imbalance(const GridModel& model, const Topology& topology,
                       const std::vector<double>& injections, const std::vector<double>& flows) {
  // Max |sum of incident flows - injection| over non-slack busbars.
  std::vector<double> balance(model.buses.size(), 0.0);
  for (std::size_t b = 0; b < model.buses.size(); ++b) balance[b] = injections[b];
  for (const Line& line : model.lines) {
    const Substation& from = model.substations[line.from_substation];
    const Substation& to = model.substations[line.to_substation];
    std::size_t from_pos = 0, to_pos = 0;
    for (std::size_t e = 0; e < from.elements.size(); ++e)
      if (from.elements[e] == ElementRef{ElementType::LineFrom, line.id}) from_pos = e;
    for (std::size_t e = 0; e < to.elements.size(); ++e)
      if (to.elements[e] == ElementRef{ElementType::LineTo, line.id}) to_pos = e;
    balance[topology.busbar_of(model, from.id, from_pos)] -= flows[line.id];
    balance[topology.busbar_of(model, to.id, to_pos)] += flows[line.id];
  }
  // Identify the slack busbar: highest-capacity generator's busbar.
  std::size_t slack_gen = 0;
  for (std::size_t g = 0; g < model.generators.size(); ++g)
    if (model.generators[g].max_output > model.generators[slack_gen].max_output) slack_gen = g;
  const Substation& slack_sub = model.substations[model.generators[slack_gen].substation];
  std::size_t slack_pos = 0;
  for (std::size_t e = 0; e < slack_sub.elements.size(); ++e)
    if (slack_sub.elements[e] ==
        ElementRef{ElementType::Generator, model.generators[slack_gen].id})
      slack_pos = e;
  const int slack_bus = topology.busbar_of(model, slack_sub.id, slack_pos);

  double worst = 0.0;
  for (std::size_t b = 0; b < model.buses.size(); ++b) {
    if (static_cast<int>(b) == slack_bus) continue;
    worst = std::max(worst, std::abs(balance[b]));
  }
  return worst;
}

}  // namespace

TEST_CASE("ieee14 model matches the published element counts") {
  const GridModel model = build_ieee14();
  CHECK(model.substations.size() == 14);
  CHECK(model.lines.size() == 20);
  CHECK(model.generators.size() == 6);
  CHECK(model.loads.size() == 11);
  CHECK(model.buses.size() == 28);
  for (const Line& line : model.lines) {
    CHECK(line.susceptance > 0.0);
    CHECK(line.thermal_limit > 0.0);
  }
}

TEST_CASE("qualifying substations follow the element counts in the data") {
  const GridModel model = build_ieee14();
  const std::vector<int> qualifying = model.qualifying_substations();
  CHECK_FALSE(qualifying.empty());
  for (const Substation& sub : model.substations) {
    const bool listed =
        std::find(qualifying.begin(), qualifying.end(), sub.id) != qualifying.end();
    CHECK(listed == (sub.elements.size() > 3));
  }
  CHECK(build_ieee14().qualifying_substations() == qualifying);
}

TEST_CASE("two-bus transfer is forced by conservation") {
  const GridModel model = two_bus_model();
  const Topology reference = Topology::reference(model);
  std::vector<double> injections(model.buses.size(), 0.0);
  injections[0] = 1.0;
  injections[2] = -1.0;
  const auto flows = dc_power_flow(model, reference, injections);
  CHECK(flows[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("triangle splits flow 2/3 direct and 1/3 through the middle") {
  const GridModel model = triangle_model();
  const Topology reference = Topology::reference(model);
  std::vector<double> injections(model.buses.size(), 0.0);
  injections[0] = 1.0;
  injections[4] = -1.0;
  const auto flows = dc_power_flow(model, reference, injections);
  CHECK(std::abs(flows[2] - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(flows[0] - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(flows[1] - 1.0 / 3.0) <= 1e-12);
}

TEST_CASE("zero injections give zero flows") {
  const GridModel model = build_ieee14();
  const Topology reference = Topology::reference(model);
  const std::vector<double> injections(model.buses.size(), 0.0);
  for (double f : dc_power_flow(model, reference, injections)) CHECK(f == 0.0);
}

TEST_CASE("dc power flow is linear and superposable") {
  const GridModel model = build_ieee14();
  const Topology reference = Topology::reference(model);
  Rng rng(13);
  std::vector<double> p1(model.buses.size(), 0.0), p2(model.buses.size(), 0.0);
  for (std::size_t b = 0; b < model.buses.size(); b += 2) {
    p1[b] = rng.uniform01() - 0.5;
    p2[b] = rng.uniform01() - 0.5;
  }
  const auto f1 = dc_power_flow(model, reference, p1);
  const auto f2 = dc_power_flow(model, reference, p2);

  for (double alpha : {-1.0, 0.5, 2.0}) {
    std::vector<double> scaled = p1;
    for (double& v : scaled) v *= alpha;
    const auto fs = dc_power_flow(model, reference, scaled);
    for (std::size_t l = 0; l < f1.size(); ++l)
      CHECK(std::abs(fs[l] - alpha * f1[l]) <= 1e-9);
  }
  std::vector<double> sum = p1;
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] += p2[b];
  const auto fsum = dc_power_flow(model, reference, sum);
  for (std::size_t l = 0; l < f1.size(); ++l)
    CHECK(std::abs(fsum[l] - (f1[l] + f2[l])) <= 1e-9);
}

TEST_CASE("nodal balance holds on random topologies and injections") {
  const GridModel model = build_ieee14();
  Rng rng(31);
  const std::vector<int> qualifying = model.qualifying_substations();
  for (int trial = 0; trial < 50; ++trial) {
    // Random valid action at a random qualifying substation.
    const int sub = qualifying[rng.uniform_below(qualifying.size())];
    const auto actions = enumerate_actions(model, sub);
    const Topology topology = apply_topology_action(
        model, Topology::reference(model), sub, actions[rng.uniform_below(actions.size())]);
    std::vector<double> injections(model.buses.size(), 0.0);
    const auto profiles = sample_profiles(model, rng.next(), 1);
    const auto base = bus_injections(model, topology, profiles[0]);
    const auto flows = dc_power_flow(model, topology, base);
    CHECK(nodal_imbalance(model, topology, base, flows) <= 1e-9);
  }
}

TEST_CASE("topology canonicalization identifies complementary assignments") {
  const GridModel model = build_ieee14();
  const std::vector<int> qualifying = model.qualifying_substations();
  const int sub = qualifying.front();
  const std::size_t count = model.element_count(sub);

  // Move two elements together so neither busbar hosts a lone line end.
  std::vector<std::uint8_t> assignment(count, 0);
  assignment[1] = 1;
  assignment[2] = 1;
  std::vector<std::uint8_t> complement(count);
  for (std::size_t e = 0; e < count; ++e) complement[e] = 1 - assignment[e];

  const Topology reference = Topology::reference(model);
  const Topology a = apply_topology_action(model, reference, sub, assignment);
  const Topology b = apply_topology_action(model, reference, sub, complement);
  CHECK(a == b);
}

TEST_CASE("reference assignment is the identity action") {
  const GridModel model = build_ieee14();
  const Topology reference = Topology::reference(model);
  const int sub = model.qualifying_substations().front();
  const std::vector<std::uint8_t> all_zero(model.element_count(sub), 0);
  CHECK(apply_topology_action(model, reference, sub, all_zero) == reference);
}

TEST_CASE("a lone line end on its own busbar is rejected") {
  const GridModel model = build_ieee14();
  const Topology reference = Topology::reference(model);
  // Substation 3 hosts five line ends and a load; isolate one line end.
  const int sub = 3;
  REQUIRE(model.element_count(sub) > 3);
  std::vector<std::uint8_t> assignment(model.element_count(sub), 0);
  assignment.back() = 0;
  // Find a line-end element and move only it to busbar 2.
  const Substation& substation = model.substations[sub];
  for (std::size_t e = 0; e < substation.elements.size(); ++e) {
    if (substation.elements[e].type == ElementType::LineFrom ||
        substation.elements[e].type == ElementType::LineTo) {
      // Ensure the lone element is not element 0 (canonicalization pins it).
      if (e == 0) continue;
      assignment.assign(substation.elements.size(), 0);
      assignment[e] = 1;
      break;
    }
  }
  CHECK_THROWS_WITH_AS(apply_topology_action(model, reference, sub, assignment),
                       doctest::Contains("dead-end"), Error);
}

TEST_CASE("wrong assignment size is rejected") {
  const GridModel model = build_ieee14();
  const Topology reference = Topology::reference(model);
  CHECK_THROWS_AS(apply_topology_action(model, reference, 3, {0, 1}), Error);
}

TEST_CASE("profiles balance, stay in band over 1e5 steps, and are deterministic") {
  const GridModel model = build_ieee14();
  const auto profiles = sample_profiles(model, 77, 100000);
  REQUIRE(profiles.size() == 100000);
  double worst_sum = 0.0;
  bool in_band = true;
  for (const InjectionProfile& profile : profiles) {
    double sum = 0.0;
    for (double g : profile.generation) sum += g;
    for (double d : profile.demand) sum -= d;
    worst_sum = std::max(worst_sum, std::abs(sum));
    for (std::size_t i = 0; i < profile.demand.size(); ++i) {
      const double nominal = model.loads[i].nominal_demand;
      in_band = in_band && profile.demand[i] >= 0.8 * nominal - 1e-12 &&
                profile.demand[i] <= 1.2 * nominal + 1e-12;
    }
  }
  CHECK(worst_sum <= 1e-9);
  CHECK(in_band);

  const auto again = sample_profiles(model, 77, 100);
  for (std::size_t t = 0; t < again.size(); ++t) {
    CHECK(profiles[t].demand == again[t].demand);
    CHECK(profiles[t].generation == again[t].generation);
  }
}

TEST_CASE("action enumeration matches an exhaustive validity oracle") {
  const GridModel model = build_ieee14();
  const int sub = 12;  // four elements
  REQUIRE(model.element_count(sub) == 4);
  const auto actions = enumerate_actions(model, sub);
  CHECK(actions.size() <= 8);
  CHECK(actions.front() == std::vector<std::uint8_t>(4, 0));

  // Oracle: try every canonical assignment, keep the valid ones.
  const Topology reference = Topology::reference(model);
  std::set<std::vector<std::uint8_t>> expected;
  for (unsigned mask = 0; mask < 8; ++mask) {
    std::vector<std::uint8_t> assignment = {0,
                                            static_cast<std::uint8_t>(mask & 1),
                                            static_cast<std::uint8_t>((mask >> 1) & 1),
                                            static_cast<std::uint8_t>((mask >> 2) & 1)};
    try {
      apply_topology_action(model, reference, sub, assignment);
      expected.insert(assignment);
    } catch (const Error&) {
    }
  }
  CHECK(expected == std::set<std::vector<std::uint8_t>>(actions.begin(), actions.end()));
}

TEST_CASE("enumeration rejects non-qualifying substations") {
  const GridModel model = build_ieee14();
  for (const Substation& sub : model.substations) {
    if (sub.elements.size() <= 3) {
      CHECK_THROWS_AS(enumerate_actions(model, sub.id), Error);
      break;
    }
  }
}

TEST_CASE("grid datasets have the documented schema and valid codes") {
  const GridModel model = build_ieee14();
  const int sub = model.qualifying_substations().front();
  const auto dataset = gen_grid_dataset(model, sub, 60, 5);
  CHECK(dataset.state_count() == 20);
  CHECK(dataset.action_count() == 1);
  CHECK(dataset.column_count() == 41);
  CHECK(dataset.sample_count() == 60);

  const auto actions = enumerate_actions(model, sub);
  const auto codes = dataset.column(action_column_name(sub));
  for (double code : codes) {
    CHECK(code == std::floor(code));
    CHECK(code >= 0.0);
    CHECK(code < static_cast<double>(actions.size()));
  }

  SUBCASE("datasets round-trip through the CSV format") {
    testutil::TempDir dir("grid_roundtrip");
    const auto path = dir.path() / "sub.csv";
    save_dataset(dataset, path);
    const auto loaded = load_dataset(path);
    CHECK(loaded.sample_count() == dataset.sample_count());
    for (std::size_t c = 0; c < dataset.column_count(); ++c)
      for (std::size_t r = 0; r < dataset.sample_count(); ++r)
        CHECK(loaded.column(c)[r] == dataset.column(c)[r]);
  }
  SUBCASE("generation is deterministic in the seed") {
    const auto again = gen_grid_dataset(model, sub, 60, 5);
    for (std::size_t c = 0; c < dataset.column_count(); ++c)
      for (std::size_t r = 0; r < dataset.sample_count(); ++r)
        CHECK(again.column(c)[r] == dataset.column(c)[r]);
  }
}

TEST_CASE("frozen injections and reference actions fix the load rates") {
  const GridModel model = build_ieee14();
  // Smallest qualifying substation keeps the action space small enough that
  // consecutive reference actions actually occur in the sample.
  int sub = model.qualifying_substations().front();
  for (int id : model.qualifying_substations())
    if (model.element_count(id) < model.element_count(sub)) sub = id;
  const auto dataset = gen_grid_dataset(model, sub, 300, 9, 0.2, 0.0);
  const auto codes = dataset.column(action_column_name(sub));
  int checked = 0;
  for (std::size_t t = 0; t < dataset.sample_count(); ++t) {
    if (codes[t] != 0.0) continue;
    if (t > 0 && codes[t - 1] != 0.0) continue;
    // Reference action applied to a reference topology under frozen
    // injections: the next load rates must reproduce the current ones.
    for (std::size_t l = 0; l < 20; ++l)
      CHECK(dataset.column(l)[t] == dataset.column(21 + l)[t]);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("assemble concatenates per-substation columns in id order") {
  MiMatrix a, b;
  for (int i = 0; i < 20; ++i) {
    a.row_labels.push_back("next_rho_" + std::to_string(i));
    b.row_labels.push_back("next_rho_" + std::to_string(i));
  }
  a.col_labels = {"act_sub_5"};
  b.col_labels = {"act_sub_1"};
  for (int i = 0; i < 20; ++i) {
    a.values.push_back(0.5 + i);
    b.values.push_back(100.0 + i);
  }
  const MiMatrix merged = assemble_grid_matrix({{5, a}, {1, b}});
  REQUIRE(merged.cols() == 2);
  CHECK(merged.col_labels[0] == "act_sub_1");
  CHECK(merged.col_labels[1] == "act_sub_5");
  for (std::size_t r = 0; r < 20; ++r) {
    CHECK(merged.at(r, 0) == 100.0 + r);
    CHECK(merged.at(r, 1) == 0.5 + r);
  }

  MiMatrix mismatched = b;
  mismatched.row_labels[3] = "other";
  CHECK_THROWS_AS(assemble_grid_matrix({{5, a}, {1, mismatched}}), Error);
}

TEST_CASE("grid model JSON round-trips") {
  testutil::TempDir dir("grid_model");
  const GridModel model = build_ieee14();
  const auto path = dir.path() / "grid.json";
  save_grid_model(model, path);
  const GridModel loaded = load_grid_model(path);
  CHECK(loaded.substations.size() == model.substations.size());
  CHECK(loaded.lines.size() == model.lines.size());
  CHECK(loaded.generators.size() == model.generators.size());
  CHECK(loaded.loads.size() == model.loads.size());
  CHECK(loaded.slack_substation == model.slack_substation);
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    CHECK(loaded.lines[l].susceptance == model.lines[l].susceptance);
    CHECK(loaded.lines[l].thermal_limit == model.lines[l].thermal_limit);
  }
  CHECK(loaded.qualifying_substations() == model.qualifying_substations());
}
