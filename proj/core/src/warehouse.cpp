#include "psbf/warehouse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "psbf/belief.hpp"
#include "psbf/eval.hpp"
#include "psbf/passivity.hpp"
#include "psbf/rng.hpp"

namespace psbf {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kTransitionTag = 0x77687473;
constexpr std::uint64_t kObservationTag = 0x77686f62;
constexpr std::uint64_t kTaskTag = 0x7768746b;

// Heading encoding: 0=N, 1=E, 2=S, 3=W; N decreases y.
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

std::int64_t elapsed_us(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start)
      .count();
}

int argmax(const std::vector<double>& dist) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(dist.size()); ++i) {
    if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(best)])
      best = i;
  }
  return best;
}

}  // namespace

std::string to_string(ControlMode mode) {
  return mode == ControlMode::centralised ? "centralised" : "decentralised";
}

ControlMode parse_control_mode(const std::string& text) {
  if (text == "centralised") return ControlMode::centralised;
  if (text == "decentralised") return ControlMode::decentralised;
  throw std::invalid_argument("unknown control mode: " + text);
}

WarehouseConfig WarehouseConfig::kiva16() {
  WarehouseConfig c;
  c.width = 6;
  c.height = 5;
  c.workstations = {c.cell(0, 1), c.cell(0, 3)};
  for (int y = 0; y <= 3; ++y) {
    for (int x = 2; x <= 5; ++x) c.pod_cells.push_back(c.cell(x, y));
  }
  c.robot_cells = {c.cell(1, 0), c.cell(1, 1), c.cell(1, 3), c.cell(1, 4)};
  c.robot_headings = {1, 1, 1, 1};
  return c;
}

WarehouseModel::WarehouseModel(WarehouseConfig config) : config_(std::move(config)) {
  if (config_.width < 1 || config_.height < 1)
    throw std::invalid_argument("warehouse: empty grid");
  if (config_.robots() < 1 || config_.pods() < 1)
    throw std::invalid_argument("warehouse: need at least one robot and one pod");
  if (config_.robot_headings.size() != config_.robot_cells.size())
    throw std::invalid_argument("warehouse: one heading per robot");
  std::set<int> occupied;
  auto check_cell = [&](int c, bool unique) {
    if (c < 0 || c >= config_.cells())
      throw std::invalid_argument("warehouse: cell out of range");
    if (unique && !occupied.insert(c).second)
      throw std::invalid_argument("warehouse: two entities share a start cell");
  };
  for (int c : config_.workstations) check_cell(c, true);
  for (int c : config_.pod_cells) check_cell(c, true);
  for (int c : config_.robot_cells) check_cell(c, true);
  for (int h : config_.robot_headings) {
    if (h < 0 || h > 3) throw std::invalid_argument("warehouse: bad heading");
  }

  const int cells = config_.cells();
  for (int r = 0; r < config_.robots(); ++r) {
    state_vars_.push_back({"pos_" + std::to_string(r), cells});
    state_vars_.push_back({"head_" + std::to_string(r), 4});
    state_vars_.push_back({"carry_" + std::to_string(r), 2});
  }
  for (int p = 0; p < config_.pods(); ++p)
    state_vars_.push_back({"pod_" + std::to_string(p), cells});

  std::vector<std::vector<int>> clusters;
  for (int r = 0; r < config_.robots(); ++r)
    clusters.push_back({pos_var(r), head_var(r), carry_var(r)});
  for (int p = 0; p < config_.pods(); ++p) clusters.push_back({pod_var(p)});
  clustering_ = Clustering::from_clusters(std::move(clusters), n());
}

StateVec WarehouseModel::initial_state() const {
  StateVec s(static_cast<std::size_t>(n()), 0);
  for (int r = 0; r < config_.robots(); ++r) {
    s[static_cast<std::size_t>(pos_var(r))] = config_.robot_cells[static_cast<std::size_t>(r)];
    s[static_cast<std::size_t>(head_var(r))] =
        config_.robot_headings[static_cast<std::size_t>(r)];
    s[static_cast<std::size_t>(carry_var(r))] = 0;
  }
  for (int p = 0; p < config_.pods(); ++p)
    s[static_cast<std::size_t>(pod_var(p))] = config_.pod_cells[static_cast<std::size_t>(p)];
  return s;
}

Cpt WarehouseModel::move_cpt(int r) const {
  const int cells = config_.cells();
  Cpt cpt;
  cpt.child = state_t1(pos_var(r));
  cpt.child_domain = cells;
  cpt.parents = {state_t(pos_var(r)), state_t(head_var(r))};
  cpt.parent_domains = {cells, 4};
  cpt.table.assign(static_cast<std::size_t>(cells) * 4 * static_cast<std::size_t>(cells),
                   0.0);
  for (int c = 0; c < cells; ++c) {
    for (int h = 0; h < 4; ++h) {
      const int x = config_.cell_x(c) + kDx[h];
      const int y = config_.cell_y(c) + kDy[h];
      const bool in_grid = x >= 0 && x < config_.width && y >= 0 && y < config_.height;
      const int target = in_grid ? config_.cell(x, y) : c;
      double* row = cpt.row(static_cast<std::size_t>(c) * 4 + static_cast<std::size_t>(h));
      if (target == c) {
        row[c] = 1.0;  // wall ahead: the move always fails in place
      } else {
        row[target] = config_.p_move;
        row[c] = 1.0 - config_.p_move;
      }
    }
  }
  return cpt;
}

Cpt WarehouseModel::turn_cpt(int r, bool left) const {
  Cpt cpt;
  cpt.child = state_t1(head_var(r));
  cpt.child_domain = 4;
  cpt.parents = {state_t(head_var(r))};
  cpt.parent_domains = {4};
  cpt.table.assign(16, 0.0);
  for (int h = 0; h < 4; ++h) {
    const int target = left ? (h + 3) % 4 : (h + 1) % 4;
    double* row = cpt.row(static_cast<std::size_t>(h));
    row[target] = config_.p_turn;
    row[h] += 1.0 - config_.p_turn;
  }
  return cpt;
}

Cpt WarehouseModel::load_cpt(int r, int pod) const {
  const int cells = config_.cells();
  Cpt cpt;
  cpt.child = state_t1(carry_var(r));
  cpt.child_domain = 2;
  cpt.parents = {state_t(carry_var(r)), state_t(pos_var(r)), state_t(pod_var(pod))};
  cpt.parent_domains = {2, cells, cells};
  cpt.table.assign(static_cast<std::size_t>(2 * cells * cells) * 2, 0.0);
  std::size_t row_index = 0;
  for (int carry = 0; carry < 2; ++carry) {
    for (int pos = 0; pos < cells; ++pos) {
      for (int loc = 0; loc < cells; ++loc, ++row_index) {
        double* row = cpt.row(row_index);
        if (carry == 1) {
          row[1] = 1.0;  // already loaded; stays loaded
        } else if (pos == loc) {
          row[1] = config_.p_load;
          row[0] = 1.0 - config_.p_load;
        } else {
          row[0] = 1.0;  // not co-located: nothing to pick up
        }
      }
    }
  }
  return cpt;
}

Cpt WarehouseModel::unload_cpt(int r, int dest) const {
  const int cells = config_.cells();
  Cpt cpt;
  cpt.child = state_t1(carry_var(r));
  cpt.child_domain = 2;
  cpt.parents = {state_t(carry_var(r)), state_t(pos_var(r))};
  cpt.parent_domains = {2, cells};
  cpt.table.assign(static_cast<std::size_t>(2 * cells) * 2, 0.0);
  for (int carry = 0; carry < 2; ++carry) {
    for (int pos = 0; pos < cells; ++pos) {
      double* row = cpt.row(static_cast<std::size_t>(carry * cells + pos));
      if (carry == 0) {
        row[0] = 1.0;
      } else if (pos == dest) {
        row[0] = config_.p_load;
        row[1] = 1.0 - config_.p_load;
      } else {
        row[1] = 1.0;  // refuses to drop anywhere but the destination
      }
    }
  }
  return cpt;
}

Cpt WarehouseModel::tracking_cpt(int pod, int carrier) const {
  const int cells = config_.cells();
  Cpt cpt;
  cpt.child = state_t1(pod_var(pod));
  cpt.child_domain = cells;
  cpt.parents = {state_t(pod_var(pod)), state_t(carry_var(carrier)),
                 state_t(pos_var(carrier)), state_t1(pos_var(carrier))};
  cpt.parent_domains = {cells, 2, cells, cells};
  cpt.table.assign(cpt.rows() * static_cast<std::size_t>(cells), 0.0);
  std::size_t row_index = 0;
  for (int loc = 0; loc < cells; ++loc) {
    for (int carry = 0; carry < 2; ++carry) {
      for (int pos = 0; pos < cells; ++pos) {
        for (int pos1 = 0; pos1 < cells; ++pos1, ++row_index) {
          // Rides along only when actually carried by a co-located robot.
          const int next = (carry == 1 && loc == pos) ? pos1 : loc;
          cpt.row(row_index)[next] = 1.0;
        }
      }
    }
  }
  return cpt;
}

Cpt WarehouseModel::sensor_cpt(NodeRef child_ref, int child_domain, int state_parent,
                               double correct) const {
  Cpt cpt;
  cpt.child = child_ref;
  cpt.child_domain = child_domain;
  cpt.parents = {state_t1(state_parent)};
  cpt.parent_domains = {state_vars_[static_cast<std::size_t>(state_parent)].domain};
  const int rows = cpt.parent_domains[0];
  cpt.table.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(child_domain),
                   0.0);
  const double spread =
      child_domain > 1 ? (1.0 - correct) / (child_domain - 1) : 0.0;
  for (int v = 0; v < rows; ++v) {
    double* row = cpt.row(static_cast<std::size_t>(v));
    for (int c = 0; c < child_domain; ++c) row[c] = c == v ? correct : spread;
    if (child_domain == 1) row[0] = 1.0;
  }
  return cpt;
}

void WarehouseModel::fill_state_cpts(ActionDbn& dbn, const JointAction& action) const {
  const int cells = config_.cells();
  dbn.state_cpts.resize(static_cast<std::size_t>(n()));
  for (int r = 0; r < config_.robots(); ++r) {
    const RobotCommand& cmd = action[static_cast<std::size_t>(r)];
    // Position
    dbn.state_cpts[static_cast<std::size_t>(pos_var(r))] =
        cmd.kind == CommandKind::forward ? move_cpt(r)
                                         : identity_copy_cpt(pos_var(r), cells);
    // Heading
    if (cmd.kind == CommandKind::turn_left || cmd.kind == CommandKind::turn_right) {
      dbn.state_cpts[static_cast<std::size_t>(head_var(r))] =
          turn_cpt(r, cmd.kind == CommandKind::turn_left);
    } else {
      dbn.state_cpts[static_cast<std::size_t>(head_var(r))] =
          identity_copy_cpt(head_var(r), 4);
    }
    // Carry flag
    if (cmd.kind == CommandKind::load) {
      if (cmd.pod < 0 || cmd.pod >= config_.pods())
        throw std::invalid_argument("load command without a pod");
      dbn.state_cpts[static_cast<std::size_t>(carry_var(r))] = load_cpt(r, cmd.pod);
    } else if (cmd.kind == CommandKind::unload) {
      if (cmd.dest_cell < 0 || cmd.dest_cell >= cells)
        throw std::invalid_argument("unload command without a destination");
      dbn.state_cpts[static_cast<std::size_t>(carry_var(r))] =
          unload_cpt(r, cmd.dest_cell);
    } else {
      dbn.state_cpts[static_cast<std::size_t>(carry_var(r))] =
          identity_copy_cpt(carry_var(r), 2);
    }
  }
  // Pods: carried pods track their moving carrier, everything else stays.
  std::vector<int> tracked_by(static_cast<std::size_t>(config_.pods()), -1);
  for (int r = 0; r < config_.robots(); ++r) {
    const RobotCommand& cmd = action[static_cast<std::size_t>(r)];
    if (cmd.kind == CommandKind::forward && cmd.pod >= 0) {
      if (cmd.pod >= config_.pods()) throw std::invalid_argument("bad carried pod id");
      if (tracked_by[static_cast<std::size_t>(cmd.pod)] != -1)
        throw std::invalid_argument("two robots claim one pod");
      tracked_by[static_cast<std::size_t>(cmd.pod)] = r;
    }
  }
  for (int p = 0; p < config_.pods(); ++p) {
    const int carrier = tracked_by[static_cast<std::size_t>(p)];
    dbn.state_cpts[static_cast<std::size_t>(pod_var(p))] =
        carrier >= 0 ? tracking_cpt(p, carrier)
                     : identity_copy_cpt(pod_var(p), cells);
  }
}

ActionDbn WarehouseModel::build_action_dbn(const JointAction& action) const {
  if (static_cast<int>(action.size()) != config_.robots())
    throw std::invalid_argument("joint action must command every robot");
  ActionDbn dbn;
  dbn.name = action_name(action);
  dbn.state_vars = state_vars_;
  fill_state_cpts(dbn, action);
  for (int r = 0; r < config_.robots(); ++r) {
    const std::string id = std::to_string(r);
    dbn.obs_vars.push_back({"opos_" + id, config_.cells()});
    dbn.obs_vars.push_back({"ohead_" + id, 4});
    dbn.obs_vars.push_back({"ocarry_" + id, 2});
    dbn.obs_cpts.push_back(sensor_cpt(obs_node(3 * r), config_.cells(), pos_var(r),
                                      config_.p_sensor));
    dbn.obs_cpts.push_back(sensor_cpt(obs_node(3 * r + 1), 4, head_var(r),
                                      config_.p_sensor));
    dbn.obs_cpts.push_back(sensor_cpt(obs_node(3 * r + 2), 2, carry_var(r),
                                      config_.p_sensor));
  }
  dbn.derive_edges();
  return dbn;
}

ActionDbn WarehouseModel::build_local_dbn(const JointAction& action, int robot,
                                          bool broadcast) const {
  if (static_cast<int>(action.size()) != config_.robots())
    throw std::invalid_argument("joint action must command every robot");
  ActionDbn dbn;
  dbn.name = action_name(action) + "|r" + std::to_string(robot);
  dbn.state_vars = state_vars_;
  fill_state_cpts(dbn, action);
  const std::string id = std::to_string(robot);
  dbn.obs_vars.push_back({"opos_" + id, config_.cells()});
  dbn.obs_vars.push_back({"ohead_" + id, 4});
  dbn.obs_vars.push_back({"ocarry_" + id, 2});
  dbn.obs_cpts.push_back(sensor_cpt(obs_node(0), config_.cells(), pos_var(robot),
                                    config_.p_sensor));
  dbn.obs_cpts.push_back(sensor_cpt(obs_node(1), 4, head_var(robot), config_.p_sensor));
  dbn.obs_cpts.push_back(sensor_cpt(obs_node(2), 2, carry_var(robot), config_.p_sensor));
  if (broadcast) {
    int next = 3;
    for (int r = 0; r < config_.robots(); ++r) {
      if (r == robot) continue;
      dbn.obs_vars.push_back({"bpos_" + std::to_string(r), config_.cells()});
      dbn.obs_cpts.push_back(sensor_cpt(obs_node(next), config_.cells(), pos_var(r),
                                        config_.p_share));
      ++next;
    }
  }
  dbn.derive_edges();
  return dbn;
}

std::string WarehouseModel::action_name(const JointAction& action) const {
  std::string out;
  for (std::size_t r = 0; r < action.size(); ++r) {
    if (r) out += ';';
    const RobotCommand& cmd = action[r];
    switch (cmd.kind) {
      case CommandKind::noop: out += "noop"; break;
      case CommandKind::forward:
        out += "fwd";
        if (cmd.pod >= 0) out += "+p" + std::to_string(cmd.pod);
        break;
      case CommandKind::turn_left: out += "left"; break;
      case CommandKind::turn_right: out += "right"; break;
      case CommandKind::load: out += "load:p" + std::to_string(cmd.pod); break;
      case CommandKind::unload: out += "drop:" + std::to_string(cmd.dest_cell); break;
    }
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Simulation internals

struct BeliefHolder {
  FilterKind kind = FilterKind::psbf;
  FactoredBelief factored;
  ParticleSet particles;

  std::vector<double> marginal(const WarehouseModel& model, int var) const {
    if (kind == FilterKind::pf) {
      return particles.var_marginal(
          var, model.state_vars()[static_cast<std::size_t>(var)].domain);
    }
    return factored.var_marginal(var);
  }
};

struct OpenTask {
  Task task;
  int assigned = -1;  // robot id, or -1
  bool closed = false;
};

std::pair<double, double> mean_xy(const WarehouseConfig& config,
                                  const std::vector<double>& cell_dist) {
  double mx = 0.0, my = 0.0;
  for (int c = 0; c < static_cast<int>(cell_dist.size()); ++c) {
    mx += cell_dist[static_cast<std::size_t>(c)] * config.cell_x(c);
    my += cell_dist[static_cast<std::size_t>(c)] * config.cell_y(c);
  }
  return {mx, my};
}

double manhattan(std::pair<double, double> a, std::pair<double, double> b) {
  return std::abs(a.first - b.first) + std::abs(a.second - b.second);
}

// First-step heading from start toward target through unblocked cells
// (breadth-first, neighbor order N,E,S,W); -1 when unreachable.
int first_step_direction(const WarehouseConfig& config, int start, int target,
                         const std::set<int>& blocked) {
  if (start == target) return -1;
  if (blocked.count(target)) return -1;
  std::vector<int> parent(static_cast<std::size_t>(config.cells()), -2);
  parent[static_cast<std::size_t>(start)] = -1;
  std::vector<int> queue{start};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int c = queue[head];
    if (c == target) break;
    for (int h = 0; h < 4; ++h) {
      const int x = config.cell_x(c) + kDx[h];
      const int y = config.cell_y(c) + kDy[h];
      if (x < 0 || x >= config.width || y < 0 || y >= config.height) continue;
      const int next = config.cell(x, y);
      if (parent[static_cast<std::size_t>(next)] != -2 || blocked.count(next)) continue;
      parent[static_cast<std::size_t>(next)] = c;
      queue.push_back(next);
    }
  }
  if (parent[static_cast<std::size_t>(target)] == -2) return -1;
  int c = target;
  while (parent[static_cast<std::size_t>(c)] != start)
    c = parent[static_cast<std::size_t>(c)];
  for (int h = 0; h < 4; ++h) {
    const int x = config.cell_x(start) + kDx[h];
    const int y = config.cell_y(start) + kDy[h];
    if (x >= 0 && x < config.width && y >= 0 && y < config.height &&
        config.cell(x, y) == c)
      return h;
  }
  return -1;
}

RobotCommand decide(const WarehouseModel& model, int r, const OpenTask* task,
                    const BeliefHolder& view) {
  const WarehouseConfig& config = model.config();
  RobotCommand cmd;
  if (!task) return cmd;  // idle robots wait

  const int my_pos = argmax(view.marginal(model, model.pos_var(r)));
  const int my_head = argmax(view.marginal(model, model.head_var(r)));
  const bool carrying = argmax(view.marginal(model, model.carry_var(r))) == 1;
  const int carried = carrying ? task->task.pod : -1;

  int target;
  if (carrying) {
    if (my_pos == task->task.dest_cell)
      return {CommandKind::unload, task->task.pod, task->task.dest_cell};
    target = task->task.dest_cell;
  } else {
    const int pod_cell = argmax(view.marginal(model, model.pod_var(task->task.pod)));
    if (my_pos == pod_cell) return {CommandKind::load, task->task.pod, -1};
    target = pod_cell;
  }

  // Cells another robot probably occupies are off limits for planning.
  std::set<int> blocked;
  for (int other = 0; other < config.robots(); ++other) {
    if (other == r) continue;
    const std::vector<double> dist = view.marginal(model, model.pos_var(other));
    const int cell = argmax(dist);
    if (dist[static_cast<std::size_t>(cell)] > 0.5) blocked.insert(cell);
  }

  const int dir = first_step_direction(config, my_pos, target, blocked);
  if (dir < 0) return {CommandKind::noop, carried, -1};
  if (dir == my_head) return {CommandKind::forward, carried, -1};
  if ((my_head + 1) % 4 == dir) return {CommandKind::turn_right, carried, -1};
  return {CommandKind::turn_left, carried, -1};
}

// Simultaneous moves into one cell fail: every robot that moved into a
// contested cell is put back. Repeats until stable (a revert can create a new
// contest at the origin cell).
void resolve_collisions(const WarehouseModel& model, const StateVec& before,
                        StateVec& after) {
  const int robots = model.config().robots();
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < robots; ++a) {
      for (int b = a + 1; b < robots; ++b) {
        const std::size_t pa = static_cast<std::size_t>(model.pos_var(a));
        const std::size_t pb = static_cast<std::size_t>(model.pos_var(b));
        if (after[pa] != after[pb]) continue;
        if (after[pa] != before[pa]) {
          after[pa] = before[pa];
          changed = true;
        }
        if (after[pb] != before[pb]) {
          after[pb] = before[pb];
          changed = true;
        }
      }
    }
  }
}

StepStats update_holder(BeliefHolder& holder, const ActionDbn& dbn, const ObsVec& obs,
                        std::map<std::string, PassivityReport>& report_cache,
                        const std::string& report_key, const FilterOptions& fopt,
                        std::uint64_t pf_seed, std::uint64_t step) {
  if (holder.kind == FilterKind::psbf) {
    const auto detect_start = Clock::now();
    auto it = report_cache.find(report_key);
    if (it == report_cache.end())
      it = report_cache.emplace(report_key, detect_all(dbn)).first;
    const std::int64_t detect_us = elapsed_us(detect_start);
    auto [next, stats] = psbf_step(holder.factored, dbn, obs, it->second, fopt);
    holder.factored = std::move(next);
    stats.overhead_us += detect_us;
    return stats;
  }
  if (holder.kind == FilterKind::bk) {
    auto [next, stats] = bk_step(holder.factored, dbn, obs, fopt);
    holder.factored = std::move(next);
    return stats;
  }
  // Particle filter: report the whole step as transition time.
  const auto start = Clock::now();
  holder.particles = pf_step(holder.particles, dbn, obs, pf_seed, step, fopt);
  StepStats stats;
  stats.transition_us = elapsed_us(start);
  return stats;
}

}  // namespace

SimulationResult simulate(const WarehouseConfig& config, FilterKind filter,
                          ControlMode mode, int steps, std::uint64_t seed,
                          const SimulationOptions& options) {
  if (filter == FilterKind::exact)
    throw std::invalid_argument(
        "the exact filter cannot represent the warehouse state space");
  const WarehouseModel model(config);
  const int robots = config.robots();

  std::vector<int> domains;
  domains.reserve(static_cast<std::size_t>(model.n()));
  for (const VariableSpec& v : model.state_vars()) domains.push_back(v.domain);

  StateVec truth = model.initial_state();
  std::vector<int> carried_truth(static_cast<std::size_t>(robots), -1);

  // One belief in centralised mode; one per robot in decentralised mode.
  const int holders_count = mode == ControlMode::centralised ? 1 : robots;
  std::vector<BeliefHolder> holders(static_cast<std::size_t>(holders_count));
  for (int h = 0; h < holders_count; ++h) {
    holders[static_cast<std::size_t>(h)].kind = filter;
    if (filter == FilterKind::pf) {
      // Initial state is known exactly: every particle starts there.
      ParticleSet ps;
      ps.states.assign(static_cast<std::size_t>(options.particles), truth);
      ps.weights.assign(static_cast<std::size_t>(options.particles),
                        1.0 / options.particles);
      holders[static_cast<std::size_t>(h)].particles = std::move(ps);
    } else {
      holders[static_cast<std::size_t>(h)].factored =
          FactoredBelief::delta(domains, model.clustering(), truth);
    }
  }
  auto view_for = [&](int robot) -> BeliefHolder& {
    return holders[static_cast<std::size_t>(
        mode == ControlMode::centralised ? 0 : robot)];
  };

  // Task list: pods in shuffled order (cycling if needed), random workstation.
  RngStream task_rng(seed, {kTaskTag});
  std::vector<int> pod_order(static_cast<std::size_t>(config.pods()));
  for (int p = 0; p < config.pods(); ++p) pod_order[static_cast<std::size_t>(p)] = p;
  task_rng.shuffle(pod_order);
  std::vector<OpenTask> tasks;
  for (int t = 0; t < config.tasks_total; ++t) {
    OpenTask entry;
    entry.task.pod = pod_order[static_cast<std::size_t>(t) % pod_order.size()];
    entry.task.dest_cell = config.workstations[static_cast<std::size_t>(
        task_rng.next_below(config.workstations.size()))];
    tasks.push_back(entry);
  }

  std::vector<int> assignment(static_cast<std::size_t>(robots), -1);  // task index
  std::vector<CommandKind> last_kind(static_cast<std::size_t>(robots),
                                     CommandKind::noop);

  SimulationResult result;
  std::map<std::string, PassivityReport> report_cache;
  int tasks_done = 0;
  double sum_filter_us = 0.0;
  double sum_skipped_fraction = 0.0;

  for (int step = 0; step < steps; ++step) {
    // --- Auctions: hand the next unassigned tasks to idle robots.
    for (;;) {
      int task_index = -1;
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].closed || tasks[t].assigned >= 0) continue;
        bool pod_busy = false;
        for (const OpenTask& other : tasks)
          pod_busy |= other.assigned >= 0 && !other.closed &&
                      other.task.pod == tasks[t].task.pod;
        if (!pod_busy) {
          task_index = static_cast<int>(t);
          break;
        }
      }
      if (task_index < 0) break;
      int winner = -1;
      double best_bid = 0.0;
      const OpenTask& open = tasks[static_cast<std::size_t>(task_index)];
      for (int r = 0; r < robots; ++r) {
        if (assignment[static_cast<std::size_t>(r)] >= 0) continue;
        const BeliefHolder& view = view_for(r);
        const auto robot_xy =
            mean_xy(config, view.marginal(model, model.pos_var(r)));
        const auto pod_xy =
            mean_xy(config, view.marginal(model, model.pod_var(open.task.pod)));
        const std::pair<double, double> dest_xy = {
            static_cast<double>(config.cell_x(open.task.dest_cell)),
            static_cast<double>(config.cell_y(open.task.dest_cell))};
        const double bid = manhattan(robot_xy, pod_xy) + manhattan(pod_xy, dest_xy);
        if (winner < 0 || bid < best_bid) {
          winner = r;
          best_bid = bid;
        }
      }
      if (winner < 0) break;  // no idle robot
      tasks[static_cast<std::size_t>(task_index)].assigned = winner;
      assignment[static_cast<std::size_t>(winner)] = task_index;
      result.auctions.push_back({step, open.task.pod, winner});
    }

    // --- Control: one command per robot from its belief view.
    JointAction joint(static_cast<std::size_t>(robots));
    for (int r = 0; r < robots; ++r) {
      const int t = assignment[static_cast<std::size_t>(r)];
      joint[static_cast<std::size_t>(r)] =
          decide(model, r, t >= 0 ? &tasks[static_cast<std::size_t>(t)] : nullptr,
                 view_for(r));
      last_kind[static_cast<std::size_t>(r)] = joint[static_cast<std::size_t>(r)].kind;
    }

    const ActionDbn dbn = model.build_action_dbn(joint);
    const std::string key = model.action_name(joint);

    // --- Ground truth: sample, then apply the collision rule and pin carried
    // pods to their carrier.
    RngStream transition_rng(seed, {kTransitionTag, static_cast<std::uint64_t>(step)});
    StateVec next = sample_transition(dbn, truth, transition_rng);
    resolve_collisions(model, truth, next);
    for (int r = 0; r < robots; ++r) {
      const std::size_t cv = static_cast<std::size_t>(model.carry_var(r));
      if (truth[cv] == 0 && next[cv] == 1)
        carried_truth[static_cast<std::size_t>(r)] = joint[static_cast<std::size_t>(r)].pod;
      else if (truth[cv] == 1 && next[cv] == 0)
        carried_truth[static_cast<std::size_t>(r)] = -1;
    }
    for (int r = 0; r < robots; ++r) {
      const int pod = carried_truth[static_cast<std::size_t>(r)];
      if (pod >= 0)
        next[static_cast<std::size_t>(model.pod_var(pod))] =
            next[static_cast<std::size_t>(model.pos_var(r))];
    }
    RngStream observation_rng(seed,
                              {kObservationTag, static_cast<std::uint64_t>(step)});
    const ObsVec obs = sample_observation(dbn, next, observation_rng);
    truth = next;

    // --- Filter update(s).
    StepStats step_total;
    if (mode == ControlMode::centralised) {
      step_total = update_holder(holders[0], dbn, obs, report_cache, key,
                                 options.filter, seed ^ 0x7066u, // pf stream id
                                 static_cast<std::uint64_t>(step));
    } else {
      const bool broadcast =
          config.share_period > 0 && step % config.share_period == 0;
      // Peers broadcast where they believe they are (before updating).
      std::vector<int> announced(static_cast<std::size_t>(robots), 0);
      if (broadcast) {
        for (int r = 0; r < robots; ++r)
          announced[static_cast<std::size_t>(r)] =
              argmax(view_for(r).marginal(model, model.pos_var(r)));
      }
      for (int r = 0; r < robots; ++r) {
        const ActionDbn local = model.build_local_dbn(joint, r, broadcast);
        ObsVec local_obs = {obs[static_cast<std::size_t>(3 * r)],
                            obs[static_cast<std::size_t>(3 * r + 1)],
                            obs[static_cast<std::size_t>(3 * r + 2)]};
        if (broadcast) {
          for (int other = 0; other < robots; ++other) {
            if (other != r)
              local_obs.push_back(announced[static_cast<std::size_t>(other)]);
          }
        }
        const StepStats stats = update_holder(
            holders[static_cast<std::size_t>(r)], local, local_obs, report_cache, key,
            options.filter, seed ^ (0x7066u + static_cast<std::uint64_t>(r)),
            static_cast<std::uint64_t>(step));
        step_total.factors_total += stats.factors_total;
        step_total.factors_skipped += stats.factors_skipped;
        step_total.transition_us += stats.transition_us;
        step_total.observation_us += stats.observation_us;
        step_total.overhead_us += stats.overhead_us;
      }
    }

    // --- Task closure: an unload believed successful ends the task; it
    // counts only if the pod truly reached the workstation.
    for (int r = 0; r < robots; ++r) {
      const int t = assignment[static_cast<std::size_t>(r)];
      if (t < 0 || last_kind[static_cast<std::size_t>(r)] != CommandKind::unload)
        continue;
      const bool dropped =
          argmax(view_for(r).marginal(model, model.carry_var(r))) == 0;
      if (!dropped) continue;
      OpenTask& open = tasks[static_cast<std::size_t>(t)];
      open.closed = true;
      open.assigned = -1;
      assignment[static_cast<std::size_t>(r)] = -1;
      if (truth[static_cast<std::size_t>(model.pod_var(open.task.pod))] ==
          open.task.dest_cell)
        ++tasks_done;
    }

    const std::int64_t filter_us =
        step_total.transition_us + step_total.observation_us + step_total.overhead_us;
    const double fraction =
        step_total.factors_total > 0
            ? static_cast<double>(step_total.factors_skipped) / step_total.factors_total
            : 0.0;
    sum_filter_us += static_cast<double>(filter_us);
    sum_skipped_fraction += fraction;
    result.trace.push_back({step, key, tasks_done, filter_us, fraction});
  }

  result.summary.tasks_done = tasks_done;
  if (steps > 0) {
    result.summary.mean_filter_us = sum_filter_us / steps;
    result.summary.mean_skipped_fraction = sum_skipped_fraction / steps;
  }
  return result;
}

}  // namespace psbf
