#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psbf/clustering.hpp"
#include "psbf/dbn.hpp"
#include "psbf/filtering.hpp"

namespace psbf {

enum class ControlMode { centralised, decentralised };
std::string to_string(ControlMode mode);
ControlMode parse_control_mode(const std::string& text);

enum class CommandKind { noop, forward, turn_left, turn_right, load, unload };

// One robot's command for a step. `pod` names the pod being loaded (load) or
// the pod the robot believes it carries (other kinds; tracked while moving);
// -1 if none. `dest_cell` is the unload target cell.
struct RobotCommand {
  CommandKind kind = CommandKind::noop;
  int pod = -1;
  int dest_cell = -1;
};
using JointAction = std::vector<RobotCommand>;

struct WarehouseConfig {
  int width = 0;
  int height = 0;
  std::vector<int> workstations;    // cell ids
  std::vector<int> pod_cells;       // initial pod locations
  std::vector<int> robot_cells;     // initial robot positions
  std::vector<int> robot_headings;  // 0=N, 1=E, 2=S, 3=W
  double p_move = 0.95;
  double p_turn = 0.95;
  double p_load = 0.9;
  double p_sensor = 0.9;   // own position/heading/carry sensors
  double p_share = 0.8;    // decentralised broadcast readout correctness
  int share_period = 5;    // broadcast every this many steps
  int tasks_total = 14;    // transport tasks issued over a run

  // 6x5 grid, 2 workstations, 4 robots, 16 pods.
  static WarehouseConfig kiva16();

  int cells() const { return width * height; }
  int robots() const { return static_cast<int>(robot_cells.size()); }
  int pods() const { return static_cast<int>(pod_cells.size()); }
  int cell(int x, int y) const { return y * width + x; }
  int cell_x(int c) const { return c % width; }
  int cell_y(int c) const { return c / width; }
};

// Variable layout: per robot a (position, heading, carry-flag) triple, then
// one location variable per pod. Clusters: one per robot triple, singletons
// for pods.
class WarehouseModel {
public:
  explicit WarehouseModel(WarehouseConfig config);

  const WarehouseConfig& config() const { return config_; }
  int n() const { return 3 * config_.robots() + config_.pods(); }
  int pos_var(int r) const { return 3 * r; }
  int head_var(int r) const { return 3 * r + 1; }
  int carry_var(int r) const { return 3 * r + 2; }
  int pod_var(int p) const { return 3 * config_.robots() + p; }

  const std::vector<VariableSpec>& state_vars() const { return state_vars_; }
  const Clustering& clustering() const { return clustering_; }
  StateVec initial_state() const;

  // Full network: every robot's per-command tables plus all sensors.
  ActionDbn build_action_dbn(const JointAction& action) const;

  // One robot's view: same state tables, only its own sensors, plus noisy
  // broadcast readouts of the other robots' positions when `broadcast`.
  ActionDbn build_local_dbn(const JointAction& action, int robot,
                            bool broadcast) const;

  // Compact, structure-determining name ("fwd+p3;noop;load:p7;left").
  std::string action_name(const JointAction& action) const;

private:
  WarehouseConfig config_;
  std::vector<VariableSpec> state_vars_;
  Clustering clustering_;

  Cpt move_cpt(int r) const;
  Cpt turn_cpt(int r, bool left) const;
  Cpt load_cpt(int r, int pod) const;
  Cpt unload_cpt(int r, int dest) const;
  Cpt tracking_cpt(int pod, int carrier) const;
  Cpt sensor_cpt(NodeRef child_ref, int child_domain, int state_parent,
                 double correct) const;
  void fill_state_cpts(ActionDbn& dbn, const JointAction& action) const;
};

struct Task {
  int pod = -1;
  int dest_cell = -1;
};

struct AuctionRecord {
  int step = 0;
  int pod = -1;
  int winner = -1;
};

struct TraceRow {
  int step = 0;
  std::string joint_action;
  int tasks_done = 0;
  std::int64_t filter_us = 0;
  double skipped_fraction = 0.0;
};

struct WarehouseSummary {
  int tasks_done = 0;
  double mean_filter_us = 0.0;
  double mean_skipped_fraction = 0.0;
};

struct SimulationResult {
  WarehouseSummary summary;
  std::vector<TraceRow> trace;
  std::vector<AuctionRecord> auctions;
};

struct SimulationOptions {
  FilterOptions filter;
  int particles = 1000;  // particle count when the filter is pf
};

// Runs the control/simulate/filter loop. Ground truth is sampled from the
// built network, then the collision rule is applied (simultaneous moves into
// one cell fail; carried pods ride their carrier). Deterministic in
// (config, filter, mode, steps, seed, options).
SimulationResult simulate(const WarehouseConfig& config, FilterKind filter,
                          ControlMode mode, int steps, std::uint64_t seed,
                          const SimulationOptions& options = {});

}  // namespace psbf
