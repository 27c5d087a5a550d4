#pragma once

#include <cstdint>
#include <vector>

#include "psr/dynamics.hpp"

namespace psr {

// Affine decomposition of a fixed schedule's trajectories: every recorded
// quantity under setpoints x equals base + sum_g x_g * unit[g], because the
// step map is affine in the references once switching times are fixed.
struct ResponseBasis {
  Trajectory base;              // all references zero
  std::vector<Trajectory> unit;  // response to e_g, base already subtracted
};

ResponseBasis build_response_basis(const PowerNetwork& net, const CondensedSchedule& sched,
                                   const DynConfig& cfg,
                                   Scheme scheme = Scheme::BackwardCoupled);

double basis_delta_omega(const ResponseBasis& rb, const std::vector<double>& x, int gen,
                         int step);
double basis_p_m(const ResponseBasis& rb, const std::vector<double>& x, int gen, int step);

struct DvlpOptions {
  bool minimize_penalty = true;
  double box_rad_s = 50.0;  // reference box in the master LP
  double feas_tol = 1e-7;
  int max_rounds = 200;
  int rows_per_round = 10;  // most-violated rows admitted per family and round
  // Only constraint rows with step <= cut_step participate; -1 means the
  // whole horizon. A schedule prefix evaluated up to the first step its
  // extensions could change gives a sound feasibility test and penalty
  // lower bound for every completion.
  int cut_step = -1;
};

struct DvlpBinding {
  enum Kind { BandHigh, BandLow, Sync, PmHigh, PmLow };
  Kind kind;
  int gen;   // generator index
  int step;  // fine step
};

struct DvlpResult {
  enum class Status { Feasible, Infeasible, RowGenCapped };
  Status status = Status::Infeasible;
  std::vector<double> x;      // setpoints at termination
  double penalty_pu_s = 0.0;  // exact penalty at x over the constrained window
  std::vector<DvlpBinding> binding;
  // When infeasible: the smallest band half-width (as a frequency) any
  // setpoint choice can achieve under the remaining constraints.
  double min_band_width_hz = 0.0;
  bool hard_infeasible = false;  // no band width helps (sync or P_m conflict)
  int rounds = 0;
  int rows = 0;
};

DvlpResult solve_dvlp(const PowerNetwork& net, const ResponseBasis& rb, const DynConfig& cfg,
                      const DvlpOptions& opt = {});

DvlpResult solve_dvlp(const PowerNetwork& net, const CondensedSchedule& sched,
                      const DynConfig& cfg, const DvlpOptions& opt = {});

}  // namespace psr
