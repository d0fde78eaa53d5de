#include <algorithm>
#include <cmath>

#include "mdpfact/error.hpp"
#include "mdpfact/gridsim.hpp"

namespace mdpfact::grid {
namespace {

// 14-bus test case: 14 substations, 20 branches, 11 loads. Branch reactances
// and load powers are the standard published values on a 100 MVA base; the
// susceptance is 1/x with resistance neglected. The sixth generator (a small
// renewable unit alongside the slack machine) brings the plant count to six.
struct BranchData {
  int from, to;
  double x;
};
constexpr BranchData kBranches[20] = {
    {0, 1, 0.05917},  {0, 4, 0.22304},  {1, 2, 0.19797},  {1, 3, 0.17632},
    {1, 4, 0.17388},  {2, 3, 0.17103},  {3, 4, 0.04211},  {3, 6, 0.20912},
    {3, 8, 0.55618},  {4, 5, 0.25202},  {5, 10, 0.19890}, {5, 11, 0.25581},
    {5, 12, 0.13027}, {6, 7, 0.17615},  {6, 8, 0.11001},  {8, 9, 0.08450},
    {8, 13, 0.27038}, {9, 10, 0.19207}, {11, 12, 0.19988}, {12, 13, 0.34802},
};

struct LoadData {
  int substation;
  double mw;
};
constexpr LoadData kLoads[11] = {
    {1, 21.7}, {2, 94.2}, {3, 47.8},  {4, 7.6},  {5, 11.2}, {8, 29.5},
    {9, 9.0},  {10, 3.5}, {11, 6.1},  {12, 13.5}, {13, 14.9},
};

struct GenData {
  int substation;
  double max_mw;
};
constexpr GenData kGenerators[6] = {
    {0, 332.4}, {1, 140.0}, {2, 100.0}, {5, 100.0}, {7, 100.0}, {5, 100.0},
};

// The published case data carries no branch ratings, so thermal limits fall
// back to 1.5x the reference-topology flow magnitude at nominal load, with a
// 0.1 pu floor so lightly loaded branches keep a meaningful rating.
constexpr double kLimitMargin = 1.5;
constexpr double kLimitFloor = 0.1;

}  // namespace

GridModel build_ieee14() {
  GridModel model;
  model.substations.resize(14);
  for (int s = 0; s < 14; ++s) model.substations[s].id = s;

  for (int i = 0; i < 20; ++i)
    model.lines.push_back({i, kBranches[i].from, kBranches[i].to, 1.0 / kBranches[i].x, 1.0});
  for (int i = 0; i < 6; ++i)
    model.generators.push_back({i, kGenerators[i].substation, 0.0, kGenerators[i].max_mw / 100.0});
  for (int i = 0; i < 11; ++i)
    model.loads.push_back({i, kLoads[i].substation, kLoads[i].mw / 100.0});
  model.slack_substation = 0;
  finalize_model(model);

  // Nominal operating point: loads at nominal, generation dispatched
  // proportionally to capacity.
  double total_load = 0.0;
  for (const Load& load : model.loads) total_load += load.nominal_demand;
  double capacity = 0.0;
  for (const Generator& g : model.generators) capacity += g.max_output;
  InjectionProfile nominal;
  for (const Load& load : model.loads) nominal.demand.push_back(load.nominal_demand);
  for (const Generator& g : model.generators)
    nominal.generation.push_back(g.max_output * total_load / capacity);

  const Topology reference = Topology::reference(model);
  const std::vector<double> flows =
      dc_power_flow(model, reference, bus_injections(model, reference, nominal));
  for (Line& line : model.lines)
    line.thermal_limit = std::max(kLimitMargin * std::abs(flows[line.id]), kLimitFloor);
  return model;
}

}  // namespace mdpfact::grid
