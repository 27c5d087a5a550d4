#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "psr/model.hpp"

namespace psr {

// On/off state of every switchable component, bit position = vector index.
// BSUs are always on; bus liveness is derived (S_b >= 1).
struct Configuration {
  std::uint32_t branches = 0;
  std::uint32_t gens = 0;
  std::uint32_t loads = 0;

  bool branch_on(int i) const { return branches >> i & 1u; }
  bool gen_on(int i) const { return gens >> i & 1u; }
  bool load_on(int i) const { return loads >> i & 1u; }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint64_t v : {c.branches, c.gens, c.loads}) {
      h ^= v;
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

Configuration initial_configuration(const PowerNetwork& net);
Configuration apply_switch(const PowerNetwork& net, const Configuration& cfg, ComponentRef c);

// Number of energized components incident to each bus (S_b), by bus index.
std::vector<int> bus_energization_counts(const PowerNetwork& net, const Configuration& cfg);
std::vector<char> live_buses(const PowerNetwork& net, const Configuration& cfg);

// Components that may switch on next, ascending (kind, id):
//  - branch: exactly one endpoint live (the island grows as a tree; closing a
//    loop inside the island is not a restoration move),
//  - NBSU: its bus live,
//  - load: its bus live, and only the lowest-id off load of each
//    (bus, p_nominal) class (equal loads at a bus are interchangeable).
std::vector<ComponentRef> legal_switches(const PowerNetwork& net, const Configuration& cfg);

// One switch per step, steps 1-based, no step switched twice, each switch
// legal in the configuration left by its predecessors. Trailing idle steps
// are implicit: actions.size() <= horizon.
struct SwitchAction {
  int step = 0;
  ComponentRef component;

  friend bool operator==(const SwitchAction&, const SwitchAction&) = default;
};

struct SwitchSchedule {
  int horizon = 0;
  std::vector<SwitchAction> actions;

  friend bool operator==(const SwitchSchedule&, const SwitchSchedule&) = default;
};

// Checks the switching invariants; returns an explanation for the first
// violated one.
std::optional<std::string> schedule_error(const PowerNetwork& net, const SwitchSchedule& s);

// Energy served in MW*step: sum over switched loads of P_d*(horizon - step + 1).
// Computed on an integer micro-MW grid so equal-energy comparisons are exact.
long long energy_microsteps(const PowerNetwork& net, const SwitchSchedule& s);
double energy_served_mw_steps(const PowerNetwork& net, const SwitchSchedule& s);

struct Dispatch {
  std::vector<double> p_gen_mw;    // by generator index, 0 when off
  std::vector<double> theta_rad;   // by bus index, 0 when dead
  std::vector<double> flow_mw;     // by branch index, 0 when off
};

// DC feasibility of one configuration: variables P_g (energized generators),
// theta (live buses, slack fixed at 0, |theta| <= pi), branch flows
// (energized branches, f = Y*A_base*(theta_from - theta_to), within limits);
// zero balance per live bus with energized loads as fixed withdrawals.
bool config_feasible(const PowerNetwork& net, const Configuration& cfg,
                     Dispatch* dispatch = nullptr);

// Concurrent memo table over configurations. Duplicate computation is
// harmless; inconsistency is not (feasibility is a pure function).
class ConfigCache {
 public:
  bool feasible(const PowerNetwork& net, const Configuration& cfg);
  long long hits() const { return hits_; }
  long long lp_solves() const { return solves_; }

 private:
  std::mutex mu_;
  std::unordered_map<Configuration, bool, ConfigurationHash> map_;
  long long hits_ = 0;
  long long solves_ = 0;
};

struct SearchStats {
  long long nodes = 0;
  long long lp_solves = 0;
  long long cache_hits = 0;
};

struct StaticResult {
  SwitchSchedule schedule;
  double energy_mw_steps = 0.0;
  std::vector<Dispatch> per_step;  // dispatch after each step 1..horizon
  SearchStats stats;
  bool node_cap_reached = false;
};

// Exact branch-and-bound over switching sequences: children from
// legal_switches, pruned by memoized configuration feasibility and by the
// optimistic bound (remaining loads switched one per step, largest first,
// ignoring power limits). Two passes: optimal energy, then the
// lexicographically smallest schedule attaining it (by (step, kind, id),
// shorter schedules first). node_cap < 0 means unlimited.
StaticResult solve_opfr(const PowerNetwork& net, int t_max, long long node_cap = -1);

struct OracleResult {
  long long connectivity_count = 0;  // maximal switch sequences
  long long feasible_count = 0;      // those whose every prefix passes the LP
  double best_energy_mw_steps = 0.0;
  SwitchSchedule best_schedule;
  bool cap_reached = false;
  // First few enumerated sequences with verdicts, for audit when counts
  // disagree with a reference.
  std::vector<std::string> sample_sequences;
  long long lp_solves = 0;
  long long cache_hits = 0;
};

// Depth-first exhaustive enumeration without power-flow pruning: every
// maximal sequence (no legal switch left or all slots used) is counted once;
// feasible_count requires every prefix configuration to pass config_feasible.
OracleResult brute_force_oracle(const PowerNetwork& net, int t_max,
                                long long sequence_cap = -1, bool use_cache = true);

std::string component_label(const PowerNetwork& net, ComponentRef c);

}  // namespace psr
