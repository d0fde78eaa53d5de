#include "mdpfact/gridsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "mdpfact/error.hpp"
#include "mdpfact/rng.hpp"

namespace mdpfact::grid {
namespace {

const Substation& substation_at(const GridModel& model, int substation) {
  for (const Substation& s : model.substations)
    if (s.id == substation) return s;
  throw Error("grid: unknown substation " + std::to_string(substation));
}

// The slack generator is the highest-capacity one (ties: lowest id); its
// busbar is the angle reference and absorbs any injection imbalance.
const Generator& slack_generator(const GridModel& model) {
  const Generator* best = nullptr;
  for (const Generator& g : model.generators)
    if (!best || g.max_output > best->max_output) best = &g;
  if (!best) throw Error("grid: model has no generators");
  return *best;
}

std::size_t element_position(const Substation& sub, const ElementRef& ref) {
  for (std::size_t i = 0; i < sub.elements.size(); ++i)
    if (sub.elements[i] == ref) return i;
  throw Error("grid: element not found at substation " + std::to_string(sub.id));
}

}  // namespace

std::size_t GridModel::element_count(int substation) const {
  return substation_at(*this, substation).elements.size();
}

std::vector<int> GridModel::qualifying_substations() const {
  std::vector<int> ids;
  for (const Substation& s : substations)
    if (s.elements.size() > 3) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void finalize_model(GridModel& model) {
  const int count = static_cast<int>(model.substations.size());
  if (count == 0) throw Error("grid: model has no substations");
  for (int i = 0; i < count; ++i)
    if (model.substations[i].id != i)
      throw Error("grid: substation ids must be contiguous from 0");

  for (Substation& s : model.substations) s.elements.clear();
  const auto check_sub = [&](int id, const std::string& what) {
    if (id < 0 || id >= count) throw Error("grid: " + what + " references substation " +
                                           std::to_string(id) + " out of range");
  };
  for (std::size_t i = 0; i < model.lines.size(); ++i) {
    const Line& line = model.lines[i];
    if (line.id != static_cast<int>(i)) throw Error("grid: line ids must be contiguous from 0");
    check_sub(line.from_substation, "line " + std::to_string(line.id));
    check_sub(line.to_substation, "line " + std::to_string(line.id));
    if (line.from_substation == line.to_substation)
      throw Error("grid: line " + std::to_string(line.id) + " connects a substation to itself");
    if (!(line.susceptance > 0.0))
      throw Error("grid: line " + std::to_string(line.id) + " needs susceptance > 0");
    if (!(line.thermal_limit > 0.0))
      throw Error("grid: line " + std::to_string(line.id) + " needs thermal limit > 0");
    model.substations[line.from_substation].elements.push_back(
        {ElementType::LineFrom, line.id});
    model.substations[line.to_substation].elements.push_back({ElementType::LineTo, line.id});
  }
  for (std::size_t i = 0; i < model.generators.size(); ++i) {
    const Generator& g = model.generators[i];
    if (g.id != static_cast<int>(i)) throw Error("grid: generator ids must be contiguous from 0");
    check_sub(g.substation, "generator " + std::to_string(g.id));
    if (g.min_output > g.max_output || g.max_output <= 0.0)
      throw Error("grid: generator " + std::to_string(g.id) + " has invalid output range");
    model.substations[g.substation].elements.push_back({ElementType::Generator, g.id});
  }
  for (std::size_t i = 0; i < model.loads.size(); ++i) {
    const Load& load = model.loads[i];
    if (load.id != static_cast<int>(i)) throw Error("grid: load ids must be contiguous from 0");
    check_sub(load.substation, "load " + std::to_string(load.id));
    if (load.nominal_demand < 0.0)
      throw Error("grid: load " + std::to_string(load.id) + " has negative demand");
    model.substations[load.substation].elements.push_back({ElementType::Load, load.id});
  }

  // Reorder element lists so positions are reproducible regardless of how the
  // model was assembled: line-from ends, line-to ends, generators, loads.
  for (Substation& s : model.substations) {
    std::stable_sort(s.elements.begin(), s.elements.end(),
                     [](const ElementRef& a, const ElementRef& b) {
                       if (a.type != b.type) return static_cast<int>(a.type) < static_cast<int>(b.type);
                       return a.id < b.id;
                     });
  }

  model.buses.clear();
  for (int s = 0; s < count; ++s) {
    model.buses.push_back({2 * s, s});
    model.buses.push_back({2 * s + 1, s});
  }

  check_sub(model.slack_substation, "slack");
  if (slack_generator(model).substation != model.slack_substation)
    throw Error("grid: slack substation must host the highest-capacity generator");

  // Reference topology must be connected at the substation level.
  std::vector<std::vector<int>> neighbors(count);
  for (const Line& line : model.lines) {
    neighbors[line.from_substation].push_back(line.to_substation);
    neighbors[line.to_substation].push_back(line.from_substation);
  }
  std::vector<char> seen(count, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int at = frontier.front();
    frontier.pop();
    for (int next : neighbors[at])
      if (!seen[next]) {
        seen[next] = 1;
        ++reached;
        frontier.push(next);
      }
  }
  if (reached != count)
    throw Error("grid: reference topology is not connected (" + std::to_string(reached) + " of " +
                std::to_string(count) + " substations reachable)");
}

Topology make_topology(const GridModel& model, std::vector<std::vector<std::uint8_t>> assignment) {
  Topology t;
  t.assignment_ = std::move(assignment);
  // Canonical form: the first element of every substation sits on busbar 0.
  for (auto& sub : t.assignment_) {
    if (!sub.empty() && sub.front() == 1)
      for (auto& bit : sub) bit ^= 1;
  }
  (void)model;
  return t;
}

Topology Topology::reference(const GridModel& model) {
  std::vector<std::vector<std::uint8_t>> assignment(model.substations.size());
  for (std::size_t s = 0; s < model.substations.size(); ++s)
    assignment[s].assign(model.substations[s].elements.size(), 0);
  return make_topology(model, std::move(assignment));
}

const std::vector<std::uint8_t>& Topology::assignment(int substation) const {
  if (substation < 0 || static_cast<std::size_t>(substation) >= assignment_.size())
    throw Error("grid: unknown substation " + std::to_string(substation));
  return assignment_[static_cast<std::size_t>(substation)];
}

int Topology::busbar_of(const GridModel& model, int substation, std::size_t element_pos) const {
  (void)model;
  const auto& bits = assignment(substation);
  if (element_pos >= bits.size()) throw Error("grid: element position out of range");
  return 2 * substation + bits[element_pos];
}

std::string topology_violation(const GridModel& model, const Topology& topology) {
  const std::size_t bus_count = model.buses.size();
  std::vector<std::vector<ElementRef>> on_bus(bus_count);
  for (const Substation& sub : model.substations) {
    const auto& bits = topology.assignment(sub.id);
    if (bits.size() != sub.elements.size())
      return "assignment size mismatch at substation " + std::to_string(sub.id);
    for (std::size_t e = 0; e < sub.elements.size(); ++e)
      on_bus[static_cast<std::size_t>(2 * sub.id + bits[e])].push_back(sub.elements[e]);
  }

  for (std::size_t b = 0; b < bus_count; ++b) {
    if (on_bus[b].size() == 1 && (on_bus[b][0].type == ElementType::LineFrom ||
                                  on_bus[b][0].type == ElementType::LineTo))
      return "dead-end busbar " + std::to_string(b) + ": a lone line end with no other element";
  }

  // Electrical connectivity over the non-empty busbars.
  std::vector<int> line_from_bus(model.lines.size()), line_to_bus(model.lines.size());
  for (const Line& line : model.lines) {
    const Substation& from = substation_at(model, line.from_substation);
    const Substation& to = substation_at(model, line.to_substation);
    line_from_bus[line.id] = topology.busbar_of(
        model, from.id, element_position(from, {ElementType::LineFrom, line.id}));
    line_to_bus[line.id] =
        topology.busbar_of(model, to.id, element_position(to, {ElementType::LineTo, line.id}));
  }
  std::vector<std::vector<int>> neighbors(bus_count);
  for (const Line& line : model.lines) {
    neighbors[line_from_bus[line.id]].push_back(line_to_bus[line.id]);
    neighbors[line_to_bus[line.id]].push_back(line_from_bus[line.id]);
  }
  std::size_t populated = 0;
  std::size_t start = bus_count;
  for (std::size_t b = 0; b < bus_count; ++b)
    if (!on_bus[b].empty()) {
      ++populated;
      start = std::min(start, b);
    }
  if (populated == 0) return "no populated busbars";
  std::vector<char> seen(bus_count, 0);
  std::queue<std::size_t> frontier;
  frontier.push(start);
  seen[start] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t at = frontier.front();
    frontier.pop();
    for (int next : neighbors[at])
      if (!seen[next]) {
        seen[next] = 1;
        if (!on_bus[static_cast<std::size_t>(next)].empty()) ++reached;
        frontier.push(static_cast<std::size_t>(next));
      }
  }
  if (reached != populated)
    return "topology splits the grid into islands (" + std::to_string(reached) + " of " +
           std::to_string(populated) + " busbars connected)";
  return {};
}

Topology apply_topology_action(const GridModel& model, const Topology& topology, int substation,
                               const std::vector<std::uint8_t>& assignment) {
  const Substation& sub = substation_at(model, substation);
  if (assignment.size() != sub.elements.size())
    throw Error("grid: assignment covers " + std::to_string(assignment.size()) +
                " elements, substation " + std::to_string(substation) + " has " +
                std::to_string(sub.elements.size()));
  for (std::uint8_t bit : assignment)
    if (bit > 1) throw Error("grid: busbar assignment bits must be 0 or 1");

  std::vector<std::vector<std::uint8_t>> bits;
  bits.reserve(model.substations.size());
  for (const Substation& s : model.substations) bits.push_back(topology.assignment(s.id));
  bits[static_cast<std::size_t>(substation)] = assignment;
  Topology updated = make_topology(model, std::move(bits));
  const std::string reason = topology_violation(model, updated);
  if (!reason.empty())
    throw Error("grid: invalid topology action at substation " + std::to_string(substation) +
                ": " + reason);
  return updated;
}

std::vector<InjectionProfile> sample_profiles(const GridModel& model, std::uint64_t seed,
                                              std::size_t steps, double band,
                                              double step_noise) {
  if (steps == 0) throw Error("grid: steps >= 1 required");
  if (!(band >= 0.0 && band < 1.0)) throw Error("grid: band must be in [0,1)");
  if (step_noise < 0.0) throw Error("grid: step noise must be >= 0");
  Rng rng(seed);

  double capacity = 0.0;
  for (const Generator& g : model.generators) capacity += g.max_output;
  if (capacity <= 0.0) throw Error("grid: total generation capacity is zero");

  std::vector<double> walk(model.loads.size(), 1.0);
  std::vector<InjectionProfile> profiles;
  profiles.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    InjectionProfile profile;
    profile.demand.resize(model.loads.size());
    double total_load = 0.0;
    for (std::size_t i = 0; i < model.loads.size(); ++i) {
      if (t > 0) {
        const double u = 2.0 * rng.uniform01() - 1.0;
        walk[i] = std::clamp(walk[i] * (1.0 + step_noise * u), 1.0 - band, 1.0 + band);
      }
      profile.demand[i] = model.loads[i].nominal_demand * walk[i];
      total_load += profile.demand[i];
    }
    const double factor = total_load / capacity;
    profile.generation.resize(model.generators.size());
    for (std::size_t i = 0; i < model.generators.size(); ++i) {
      const Generator& g = model.generators[i];
      profile.generation[i] = std::clamp(g.max_output * factor, g.min_output, g.max_output);
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::vector<double> bus_injections(const GridModel& model, const Topology& topology,
                                   const InjectionProfile& profile) {
  if (profile.generation.size() != model.generators.size() ||
      profile.demand.size() != model.loads.size())
    throw Error("grid: profile does not match the model's generators/loads");
  std::vector<double> injections(model.buses.size(), 0.0);
  for (const Generator& g : model.generators) {
    const Substation& sub = substation_at(model, g.substation);
    const int bus =
        topology.busbar_of(model, sub.id, element_position(sub, {ElementType::Generator, g.id}));
    injections[static_cast<std::size_t>(bus)] += profile.generation[g.id];
  }
  for (const Load& load : model.loads) {
    const Substation& sub = substation_at(model, load.substation);
    const int bus =
        topology.busbar_of(model, sub.id, element_position(sub, {ElementType::Load, load.id}));
    injections[static_cast<std::size_t>(bus)] -= profile.demand[load.id];
  }
  return injections;
}

std::vector<double> dc_power_flow(const GridModel& model, const Topology& topology,
                                  std::span<const double> injections) {
  if (injections.size() != model.buses.size())
    throw Error("grid: expected " + std::to_string(model.buses.size()) +
                " per-busbar injections, got " + std::to_string(injections.size()));
  for (double p : injections)
    if (!std::isfinite(p)) throw Error("grid: non-finite injection");
  {
    const std::string reason = topology_violation(model, topology);
    if (!reason.empty()) throw Error("grid: invalid topology: " + reason);
  }

  // Busbars at their line ends, per topology.
  std::vector<int> line_from_bus(model.lines.size()), line_to_bus(model.lines.size());
  std::vector<char> populated(model.buses.size(), 0);
  for (const Line& line : model.lines) {
    const Substation& from = substation_at(model, line.from_substation);
    const Substation& to = substation_at(model, line.to_substation);
    line_from_bus[line.id] = topology.busbar_of(
        model, from.id, element_position(from, {ElementType::LineFrom, line.id}));
    line_to_bus[line.id] =
        topology.busbar_of(model, to.id, element_position(to, {ElementType::LineTo, line.id}));
    populated[line_from_bus[line.id]] = 1;
    populated[line_to_bus[line.id]] = 1;
  }
  for (const Substation& sub : model.substations)
    for (std::size_t e = 0; e < sub.elements.size(); ++e)
      populated[topology.busbar_of(model, sub.id, e)] = 1;

  std::vector<int> node_of_bus(model.buses.size(), -1);
  int nodes = 0;
  for (std::size_t b = 0; b < model.buses.size(); ++b)
    if (populated[b]) node_of_bus[b] = nodes++;

  const Generator& slack = slack_generator(model);
  const Substation& slack_sub = substation_at(model, slack.substation);
  const int slack_bus = topology.busbar_of(
      model, slack_sub.id, element_position(slack_sub, {ElementType::Generator, slack.id}));
  const int slack_node = node_of_bus[slack_bus];

  Eigen::VectorXd power = Eigen::VectorXd::Zero(nodes);
  double imbalance = 0.0;
  for (std::size_t b = 0; b < model.buses.size(); ++b) {
    if (node_of_bus[b] >= 0) power[node_of_bus[b]] = injections[b];
    imbalance += injections[b];
  }
  power[slack_node] -= imbalance;  // slack absorbs the residual

  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(nodes, nodes);
  for (const Line& line : model.lines) {
    const int u = node_of_bus[line_from_bus[line.id]];
    const int v = node_of_bus[line_to_bus[line.id]];
    laplacian(u, u) += line.susceptance;
    laplacian(v, v) += line.susceptance;
    laplacian(u, v) -= line.susceptance;
    laplacian(v, u) -= line.susceptance;
  }

  // Reduce out the slack row/column; the minor is positive definite for a
  // connected graph with positive susceptances.
  const int reduced = nodes - 1;
  Eigen::MatrixXd b_reduced(reduced, reduced);
  Eigen::VectorXd p_reduced(reduced);
  std::vector<int> reduced_of(nodes, -1);
  {
    int at = 0;
    for (int nidx = 0; nidx < nodes; ++nidx)
      if (nidx != slack_node) reduced_of[nidx] = at++;
  }
  for (int r = 0; r < nodes; ++r) {
    if (r == slack_node) continue;
    p_reduced[reduced_of[r]] = power[r];
    for (int c = 0; c < nodes; ++c) {
      if (c == slack_node) continue;
      b_reduced(reduced_of[r], reduced_of[c]) = laplacian(r, c);
    }
  }

  Eigen::VectorXd theta_reduced;
  if (reduced > 0) {
    Eigen::LDLT<Eigen::MatrixXd> solver(b_reduced);
    if (solver.info() != Eigen::Success)
      throw Error("grid: singular susceptance system (modeling bug)");
    theta_reduced = solver.solve(p_reduced);
    const double residual = (b_reduced * theta_reduced - p_reduced).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual > 1e-6)
      throw Error("grid: power flow solve failed (residual " + std::to_string(residual) + ")");
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nodes);
  for (int nidx = 0; nidx < nodes; ++nidx)
    if (nidx != slack_node) theta[nidx] = theta_reduced[reduced_of[nidx]];

  std::vector<double> flows(model.lines.size());
  for (const Line& line : model.lines) {
    const int u = node_of_bus[line_from_bus[line.id]];
    const int v = node_of_bus[line_to_bus[line.id]];
    flows[line.id] = line.susceptance * (theta[u] - theta[v]);
  }
  return flows;
}

std::vector<double> line_load_rates(const GridModel& model, std::span<const double> flows) {
  if (flows.size() != model.lines.size())
    throw Error("grid: expected one flow per line");
  std::vector<double> rho(flows.size());
  for (const Line& line : model.lines)
    rho[line.id] = std::abs(flows[line.id]) / line.thermal_limit;
  return rho;
}

std::vector<std::vector<std::uint8_t>> enumerate_actions(const GridModel& model, int substation) {
  const Substation& sub = substation_at(model, substation);
  const std::size_t count = sub.elements.size();
  if (count <= 3)
    throw Error("grid: substation " + std::to_string(substation) + " has " +
                std::to_string(count) + " elements; actions need more than 3");
  if (count > 20) throw Error("grid: substation too large to enumerate");

  const Topology reference = Topology::reference(model);
  std::vector<std::vector<std::uint8_t>> actions;
  // First element pinned to busbar 0 deduplicates the busbar-swap symmetry.
  const std::uint32_t masks = 1u << (count - 1);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    std::vector<std::uint8_t> assignment(count, 0);
    for (std::size_t e = 1; e < count; ++e)
      assignment[e] = static_cast<std::uint8_t>((mask >> (e - 1)) & 1u);
    try {
      apply_topology_action(model, reference, substation, assignment);
    } catch (const Error&) {
      continue;
    }
    actions.push_back(std::move(assignment));
  }
  return actions;
}

std::string action_column_name(int substation) {
  return "act_sub_" + std::to_string(substation);
}

int substation_of_action_column(const std::string& column_name) {
  const std::string prefix = "act_sub_";
  if (column_name.rfind(prefix, 0) != 0)
    throw Error("grid: '" + column_name + "' is not an action column name");
  return std::stoi(column_name.substr(prefix.size()));
}

TransitionDataset gen_grid_dataset(const GridModel& model, int substation, std::size_t samples,
                                   std::uint64_t seed, double band, double step_noise) {
  if (samples == 0) throw Error("grid: sample count must be >= 1");
  const std::vector<std::vector<std::uint8_t>> actions = enumerate_actions(model, substation);
  const std::vector<InjectionProfile> profiles =
      sample_profiles(model, mix_seed(seed, "profiles"), samples + 1, band, step_noise);
  Rng action_rng(mix_seed(seed, "actions"));

  const std::size_t n_lines = model.lines.size();
  std::vector<VariableSpec> schema;
  for (std::size_t i = 0; i < n_lines; ++i)
    schema.push_back({"rho_" + std::to_string(i), VarRole::State, VarKind::Continuous,
                      static_cast<int>(i)});
  schema.push_back({action_column_name(substation), VarRole::Action, VarKind::Discrete, 0});
  for (std::size_t i = 0; i < n_lines; ++i)
    schema.push_back({"next_rho_" + std::to_string(i), VarRole::NextState, VarKind::Continuous,
                      static_cast<int>(i)});

  std::vector<std::vector<double>> columns(schema.size());
  for (auto& column : columns) column.reserve(samples);

  Topology topology = Topology::reference(model);
  std::vector<double> rho = line_load_rates(
      model, dc_power_flow(model, topology, bus_injections(model, topology, profiles[0])));

  for (std::size_t t = 0; t < samples; ++t) {
    // All enumerated actions are valid against the rest-at-reference topology
    // this trajectory maintains, so the resample loop is a safety net only.
    std::size_t code = 0;
    for (;;) {
      code = action_rng.uniform_below(actions.size());
      try {
        topology = apply_topology_action(model, topology, substation, actions[code]);
        break;
      } catch (const Error&) {
        continue;
      }
    }
    const std::vector<double> rho_next = line_load_rates(
        model,
        dc_power_flow(model, topology, bus_injections(model, topology, profiles[t + 1])));

    for (std::size_t i = 0; i < n_lines; ++i) columns[i].push_back(rho[i]);
    columns[n_lines].push_back(static_cast<double>(code));
    for (std::size_t i = 0; i < n_lines; ++i) columns[n_lines + 1 + i].push_back(rho_next[i]);
    rho = rho_next;
  }
  return TransitionDataset(std::move(schema), std::move(columns));
}

MiMatrix assemble_grid_matrix(std::vector<std::pair<int, MiMatrix>> per_substation) {
  if (per_substation.empty()) throw Error("grid: nothing to assemble");
  std::sort(per_substation.begin(), per_substation.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < per_substation.size(); ++i)
    if (per_substation[i].first == per_substation[i - 1].first)
      throw Error("grid: duplicate substation " + std::to_string(per_substation[i].first) +
                  " in assembly");

  const MiMatrix& first = per_substation.front().second;
  MiMatrix out;
  out.row_labels = first.row_labels;
  out.params = first.params;
  for (const auto& [sub, matrix] : per_substation) {
    if (matrix.cols() != 1)
      throw Error("grid: per-substation matrix for substation " + std::to_string(sub) +
                  " must have exactly one column");
    if (matrix.row_labels != out.row_labels)
      throw Error("grid: row labels for substation " + std::to_string(sub) +
                  " do not match the first matrix");
    out.col_labels.push_back(matrix.col_labels.front());
  }
  out.values.assign(out.rows() * out.cols(), 0.0);
  for (std::size_t c = 0; c < per_substation.size(); ++c)
    for (std::size_t r = 0; r < out.rows(); ++r)
      out.at(r, c) = per_substation[c].second.at(r, 0);
  return out;
}

void save_grid_model(const GridModel& model, const std::filesystem::path& json_path) {
  nlohmann::json doc;
  doc["substations"] = nlohmann::json::array();
  for (const Substation& s : model.substations) doc["substations"].push_back({{"id", s.id}});
  doc["buses"] = nlohmann::json::array();
  for (const Bus& b : model.buses)
    doc["buses"].push_back({{"id", b.id}, {"substation", b.substation}});
  doc["lines"] = nlohmann::json::array();
  for (const Line& line : model.lines)
    doc["lines"].push_back({{"id", line.id},
                            {"from", line.from_substation},
                            {"to", line.to_substation},
                            {"susceptance", line.susceptance},
                            {"thermal_limit", line.thermal_limit}});
  doc["generators"] = nlohmann::json::array();
  for (const Generator& g : model.generators)
    doc["generators"].push_back({{"id", g.id},
                                 {"substation", g.substation},
                                 {"min_output", g.min_output},
                                 {"max_output", g.max_output}});
  doc["loads"] = nlohmann::json::array();
  for (const Load& load : model.loads)
    doc["loads"].push_back({{"id", load.id},
                            {"substation", load.substation},
                            {"nominal_demand", load.nominal_demand}});
  doc["slack_substation"] = model.slack_substation;

  std::ofstream out(json_path);
  if (!out) throw Error("cannot write '" + json_path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + json_path.string() + "'");
}

GridModel load_grid_model(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error("cannot open grid model '" + json_path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
  GridModel model;
  try {
    model.substations.resize(doc.at("substations").size());
    for (std::size_t i = 0; i < model.substations.size(); ++i)
      model.substations[i].id = doc["substations"][i].at("id").get<int>();
    for (const auto& entry : doc.at("lines"))
      model.lines.push_back({entry.at("id").get<int>(), entry.at("from").get<int>(),
                             entry.at("to").get<int>(), entry.at("susceptance").get<double>(),
                             entry.at("thermal_limit").get<double>()});
    for (const auto& entry : doc.at("generators"))
      model.generators.push_back({entry.at("id").get<int>(), entry.at("substation").get<int>(),
                                  entry.at("min_output").get<double>(),
                                  entry.at("max_output").get<double>()});
    for (const auto& entry : doc.at("loads"))
      model.loads.push_back({entry.at("id").get<int>(), entry.at("substation").get<int>(),
                             entry.at("nominal_demand").get<double>()});
    model.slack_substation = doc.at("slack_substation").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
  finalize_model(model);
  return model;
}

}  // namespace mdpfact::grid
