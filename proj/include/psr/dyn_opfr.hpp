#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psr/dvlp.hpp"
#include "psr/dynamics.hpp"
#include "psr/model.hpp"
#include "psr/static_opfr.hpp"

namespace psr {

// Search over condensed switching schedules, maximizing served energy minus
// the frequency deviation penalty with setpoints chosen per schedule by the
// validation LP.
//
// Domain. A schedule is admissible when every prefix keeps the island a
// generator-anchored tree (legal_switches) and every slot configuration is
// statically dispatchable (config_feasible: unit and branch limits hold for
// some dispatch). The validation LP then decides dynamic feasibility at the
// configured band. Static dispatchability is part of the domain, not an
// optimization shortcut: the LP carries no branch-flow rows, so dropping the
// check would admit schedules that overload a line forever.
//
// Actions occupy consecutive slots 2, 3, ..; a schedule may stop early but
// has no interior idle slots. An idle slot only delays every later pickup,
// so a gapped schedule is dominated by its compaction; searching the gapped
// variants would only grow the space without changing the optimum.

struct SearchMode {
  enum class Kind { Exact, Beam };
  Kind kind = Kind::Exact;
  int beam_width = 8;  // Beam only; <= 0 keeps every child

  static SearchMode exact() { return {Kind::Exact, 0}; }
  static SearchMode beam(int width) { return {Kind::Beam, width}; }
};

struct DynScheduleConfig {
  DynConfig dyn;
  DvlpOptions dvlp;         // cut_step / minimize_penalty are managed per node
  long long node_cap = -1;  // expanded prefixes; -1 = unlimited
  int threads = 1;
  bool prefix_prune = true;  // window-LP infeasibility cuts subtrees
};

struct DynSearchStats {
  std::uint64_t nodes = 0;          // prefixes evaluated
  std::uint64_t static_pruned = 0;  // children failing config_feasible
  std::uint64_t bound_pruned = 0;   // optimistic bound below incumbent
  std::uint64_t prefix_pruned = 0;  // window LP infeasible
  std::uint64_t lp_evals = 0;       // validation LP solves
  std::uint64_t lp_capped = 0;      // row generation hit its round cap
  bool capped = false;              // node_cap reached, best-found returned
};

struct DynResult {
  // Exact search proves Optimal; beam results are Heuristic by
  // construction and labeled so in every artifact. Capped runs carry the
  // best incumbent. With threads > 1 a capped run's incumbent depends on
  // scheduling; rerun with threads = 1 for a reproducible capped result.
  enum class Status { Optimal, Heuristic, Capped };
  Status status = Status::Optimal;
  CondensedSchedule schedule;
  std::vector<double> x_ref;  // per generator, generator order
  ObjectiveBreakdown objective;
  Trajectory trajectory;  // re-simulation at x_ref
  DynSearchStats stats;
};

// Served-energy part of the objective from slot arithmetic alone: a load
// switched in slot r is served for steps slot_start_step(r) .. n_steps.
// Matches objective().energy_pu_s of the simulated trajectory exactly.
double schedule_energy_pu_s(const PowerNetwork& net, const CondensedSchedule& sched,
                            const DynConfig& cfg);

// Schedule order for tie-breaking: element-wise (kind rank, id), shorter
// schedule first on a shared prefix. Equal-total optima exist whenever a
// bus hosts identical load blocks.
bool schedule_lex_less(const PowerNetwork& net, const CondensedSchedule& a,
                       const CondensedSchedule& b);

// Throws CaseError when even the empty schedule fails the validation LP
// (the initial configuration sits outside the band for every setpoint).
DynResult solve_dynopfr(const PowerNetwork& net, const DynScheduleConfig& cfg,
                        const SearchMode& mode);

// Prune-free enumeration of the whole admissible domain with a validation
// LP on every schedule. Independent of the branch-and-bound machinery; the
// cross-check for exact mode.
DynResult enumerate_dynopfr_oracle(const PowerNetwork& net, const DynScheduleConfig& cfg);

struct CompareReport {
  // Static optimum at horizon n_r - 1 so the whole sequence maps onto the
  // condensed grid (action k -> slot k + 1).
  SwitchSchedule static_schedule;
  double static_energy_mw_steps = 0.0;
  CondensedSchedule static_mapped;
  bool static_dynamically_feasible = false;
  // Certificate when infeasible. hard means no band width rescues the
  // schedule: the P_m or sync rows alone are inconsistent.
  bool static_hard_infeasible = false;
  double static_min_band_width_hz = 0.0;
  double static_penalty_pu_s = 0.0;       // at its own LP optimum when feasible
  double static_total = 0.0;              // energy - penalty when feasible
  std::vector<double> static_x_ref;
  DynResult dynamic;
};

CompareReport compare_static_dynamic(const PowerNetwork& net, const DynScheduleConfig& cfg,
                                     const SearchMode& mode);

}  // namespace psr
