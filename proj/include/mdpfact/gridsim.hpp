#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdpfact/dataset.hpp"
#include "mdpfact/mi.hpp"

namespace mdpfact::grid {

// Substation-level grid description. Each substation has two busbars; every
// element (line end, generator, load) attaches to one of them, and the
// busbar assignment is the topology. Power values are per-unit.

struct Bus {
  int id = 0;
  int substation = 0;
};

enum class ElementType { LineFrom, LineTo, Generator, Load };

struct ElementRef {
  ElementType type = ElementType::LineFrom;
  int id = 0;
  bool operator==(const ElementRef&) const = default;
};

struct Line {
  int id = 0;
  int from_substation = 0;
  int to_substation = 0;
  double susceptance = 0.0;    // 1/x, per-unit
  double thermal_limit = 0.0;  // per-unit MW
};

struct Generator {
  int id = 0;
  int substation = 0;
  double min_output = 0.0;
  double max_output = 0.0;
};

struct Load {
  int id = 0;
  int substation = 0;
  double nominal_demand = 0.0;
};

struct Substation {
  int id = 0;
  std::vector<ElementRef> elements;  // deterministic order: line-from ends,
                                     // line-to ends, generators, loads
};

struct GridModel {
  std::vector<Bus> buses;  // two per substation, ids 2*s and 2*s+1
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<Substation> substations;
  int slack_substation = 0;

  std::size_t element_count(int substation) const;
  // Substations with more than 3 connected elements; the only ones that
  // receive topology actions.
  std::vector<int> qualifying_substations() const;
};

// Fills buses and per-substation element lists from lines/generators/loads
// and validates all model invariants (positive susceptances and limits,
// connected reference topology, slack owns a generator).
void finalize_model(GridModel& model);

GridModel build_ieee14();
GridModel load_grid_model(const std::filesystem::path& json_path);
void save_grid_model(const GridModel& model, const std::filesystem::path& json_path);

class Topology;
// Builds a topology from raw per-substation assignments, canonicalizing each
// substation so its first element sits on busbar 0.
Topology make_topology(const GridModel& model,
                       std::vector<std::vector<std::uint8_t>> assignment);

// Busbar assignment of every element, canonicalized so the first element of
// each substation sits on busbar 0 (the two busbars are interchangeable).
class Topology {
public:
  static Topology reference(const GridModel& model);

  const std::vector<std::uint8_t>& assignment(int substation) const;
  // Global busbar id (2*substation + side) of an element of `substation`.
  int busbar_of(const GridModel& model, int substation, std::size_t element_pos) const;

  bool operator==(const Topology&) const = default;

private:
  friend Topology make_topology(const GridModel&, std::vector<std::vector<std::uint8_t>>);
  std::vector<std::vector<std::uint8_t>> assignment_;
};

// Empty string when valid; otherwise the reason (dead-end busbar or a
// disconnected electrical graph).
std::string topology_violation(const GridModel& model, const Topology& topology);

// Returns the topology with `substation`'s elements reassigned. Throws if the
// assignment length is wrong or the result is electrically invalid.
Topology apply_topology_action(const GridModel& model, const Topology& topology, int substation,
                               const std::vector<std::uint8_t>& assignment);

// Per-element power scenario; bus-level injections depend on the topology.
struct InjectionProfile {
  std::vector<double> generation;  // per generator
  std::vector<double> demand;      // per load
};

// Loads follow bounded multiplicative random walks around nominal demand;
// generation is dispatched proportionally to capacity and rescaled each step
// so that total generation equals total load.
std::vector<InjectionProfile> sample_profiles(const GridModel& model, std::uint64_t seed,
                                              std::size_t steps, double band = 0.2,
                                              double step_noise = 0.02);

// Net per-busbar injection (generation - load) under the given topology.
std::vector<double> bus_injections(const GridModel& model, const Topology& topology,
                                   const InjectionProfile& profile);

// Solves the DC approximation B*theta = P on the busbar graph with the slack
// busbar absorbing any imbalance and theta_slack = 0. Returns per-line flows.
std::vector<double> dc_power_flow(const GridModel& model, const Topology& topology,
                                  std::span<const double> injections);

// |flow| / thermal limit, per line.
std::vector<double> line_load_rates(const GridModel& model, std::span<const double> flows);

// All valid canonical busbar assignments for a qualifying substation, in a
// deterministic order with the reference assignment first (category code 0).
std::vector<std::vector<std::uint8_t>> enumerate_actions(const GridModel& model, int substation);

// Random-policy transition log for one substation: state is the 20-component
// line load-rate vector, the action a category code into enumerate_actions,
// all other substations stay at reference. band/step_noise parametrize the
// injection profiles (defaults as in sample_profiles).
TransitionDataset gen_grid_dataset(const GridModel& model, int substation, std::size_t samples,
                                   std::uint64_t seed, double band = 0.2,
                                   double step_noise = 0.02);

// Concatenates per-substation single-column MI matrices (ascending substation
// id) into one matrix over the shared rho rows.
MiMatrix assemble_grid_matrix(std::vector<std::pair<int, MiMatrix>> per_substation);

// Action column name used by gen_grid_dataset, "act_sub_<id>".
std::string action_column_name(int substation);
// Parses the substation id back out of an action column name.
int substation_of_action_column(const std::string& column_name);

}  // namespace mdpfact::grid
