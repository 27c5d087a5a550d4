#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psr/model.hpp"
#include "psr/static_opfr.hpp"

namespace psr {

// Time discretisation for the swing-level simulation. The restoration
// schedule itself lives on a coarser grid of switching slots: slot 1 is the
// initial condition and every later slot opens one switching opportunity.
struct DynConfig {
  double dt_s = 0.5;
  int n_steps = 1425;        // fine steps per run; trajectories carry n_steps + 1 points
  double kappa_s = 45.0;     // slot width
  double df_max_hz = 1.5;    // frequency band half-width
  double epsilon_rad_s = 0.05;  // synchronisation tolerance at generator pickup
  double alpha = 1.0;
  double beta = 1.0;

  double horizon_s() const { return dt_s * n_steps; }
  double band_rad_s() const { return 2.0 * kPi * df_max_hz; }

  // Number of switching slots that fit in the horizon, counting the initial
  // slot. floor(n_steps*dt/kappa) + 1.
  int condensed_slots() const;

  // First fine step belonging to slot r (1-based). Slot 1 starts at step 0.
  int slot_start_step(int slot) const;

  // Slot that fine step t belongs to.
  int slot_of_step(int step) const;

  void check() const;  // throws std::invalid_argument on nonsense
};

// Switching plan on the condensed grid. `initial` is the slot-1 energized
// set (black-start units plus anything already live); each action switches
// one component on at the start of its slot. Slots may be skipped: a slot
// with no action keeps the configuration unchanged.
struct CondensedSchedule {
  Configuration initial;
  std::vector<std::pair<int, ComponentRef>> actions;  // (slot >= 2, component), slots strictly increasing

  friend bool operator==(const CondensedSchedule&, const CondensedSchedule&) = default;
};

// Structural validation mirroring the per-step legality rules: branch
// switches need exactly one live endpoint, generators a live bus, loads a
// live bus, and nothing switches twice. Returns std::nullopt when legal.
std::optional<std::string> condensed_schedule_error(const PowerNetwork& net,
                                                    const CondensedSchedule& sched,
                                                    const DynConfig& cfg);

// Rotor-side state of one generator.
struct GenState {
  double delta_omega = 0.0;  // rad/s deviation from synchronous speed
  double p_set = 0.0;        // governor setpoint, MW
  double p_m = 0.0;          // mechanical power, MW
};

// Steady state consistent with a reference deviation and electrical load:
// p_set solves D*dw_ref + p_e0 = (D*sigma + K)*p_set, then p_m = K*p_set
// and dw = dw_ref - sigma*p_set. With these values all three state
// derivatives vanish as long as p_e stays at p_e0.
GenState init_gen_state(const GenDynamics& dyn, double delta_omega_ref, double p_e0);

enum class Scheme {
  // Network-coupled backward step: the swing pair (theta, dw) of all
  // connected machines advances through one linear solve against the
  // reduced admittance, with p_m and the governor held at their start
  // values. For a single machine this reduces exactly to the explicit
  // update because the reduced matrix is zero.
  BackwardCoupled,
  // Fully explicit update with p_e frozen at the step start. Cheap, but
  // unstable once two machines couple through a line; kept for
  // sensitivity checks.
  ForwardEuler,
  // Trapezoidal average on the swing pair, explicit governor/turbine.
  Trapezoidal,
};

struct Violation {
  enum Kind { FrequencyBand, MechPowerLimit, BranchOverload, SyncMismatch };
  Kind kind;
  int step;
  int component_id;  // generator or branch id
  double magnitude;  // amount beyond the limit, in the quantity's own unit
};

// Dense recording of one run. Indexed [gen][step] or [bus][step] with
// step in 0..n_steps; step 0 is the initial condition.
struct Trajectory {
  int n_steps = 0;
  std::vector<std::vector<double>> delta_omega;  // [gen][step]
  std::vector<std::vector<double>> p_set;
  std::vector<std::vector<double>> p_m;
  std::vector<std::vector<double>> p_e;          // MW drawn at the generator bus
  std::vector<std::vector<char>> connected;      // [gen][step]
  std::vector<std::vector<double>> theta;        // [bus][step], 0 when dead
  std::vector<std::vector<double>> branch_flow;  // [branch][step] MW, 0 when open
  std::vector<double> served_mw;                 // [step]
  std::vector<Violation> violations;

  // Pickup events: (step, gen index, |dw_gen - dw_lead| at the pickup step).
  struct Pickup {
    int step;
    int gen;
    double mismatch;
  };
  std::vector<Pickup> pickups;

  double max_abs_delta_omega_connected = 0.0;
  double max_p_m = 0.0;
};

// One-step simulator. Events are applied at the current time point and take
// effect immediately: the electrical power recorded at this point already
// sees the new network. advance() then integrates one dt.
class IslandSimulator {
 public:
  IslandSimulator(const PowerNetwork& net, const Configuration& initial,
                  const std::vector<double>& delta_omega_ref, const DynConfig& cfg,
                  Scheme scheme = Scheme::BackwardCoupled);
  ~IslandSimulator();
  IslandSimulator(const IslandSimulator&) = delete;
  IslandSimulator& operator=(const IslandSimulator&) = delete;

  // Switch one component on at the current time point. Throws CaseError on
  // an illegal switch (dead bus, already on, loop closure).
  void switch_component(ComponentRef ref);

  void advance();

  int step() const { return step_; }
  const Configuration& configuration() const { return cfg_now_; }
  const GenState& state(int gen) const { return states_[gen]; }
  bool is_connected(int gen) const { return connected_[gen]; }
  double p_e(int gen) const;           // MW at this time point, 0 when disconnected
  double theta(int bus_index) const;   // rad, 0 when dead
  double branch_flow_mw(int branch_index) const;
  double served_mw() const;
  // Mismatch recorded at the most recent pickup, if any.
  const std::vector<Trajectory::Pickup>& pickups() const { return pickups_; }

 private:
  struct Coupling;  // reduced network seen from the connected generators

  void rebuild_coupling();
  void step_backward_coupled();
  void step_forward_euler();
  void step_trapezoidal();

  const PowerNetwork& net_;
  DynConfig dyn_;
  Scheme scheme_;
  Configuration cfg_now_;
  std::vector<double> x_ref_;
  std::vector<GenState> states_;
  std::vector<char> connected_;
  std::vector<double> theta_gen_;  // rotor-side bus angle per generator
  std::vector<double> dw_before_;  // speeds at the step start, for the governor
  std::vector<Trajectory::Pickup> pickups_;
  int step_ = 0;
  std::unique_ptr<Coupling> coup_;
};

// Run a condensed schedule to the full horizon and record everything.
// Initial electrical load is split across the initially connected units in
// proportion to 1/sigma, the droop steady-state share.
Trajectory simulate(const PowerNetwork& net, const CondensedSchedule& sched,
                    const std::vector<double>& delta_omega_ref, const DynConfig& cfg,
                    Scheme scheme = Scheme::BackwardCoupled);

struct ObjectiveBreakdown {
  double energy_pu_s = 0.0;    // alpha * dt * sum over steps of served load, per unit
  double penalty_pu_s = 0.0;   // beta * dt * sum over steps and units of |dw| / omega_nom
  double total = 0.0;          // energy - penalty; larger is better
};

ObjectiveBreakdown objective(const PowerNetwork& net, const Trajectory& traj,
                             const DynConfig& cfg);

}  // namespace psr
