#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "psr/dynamics.hpp"
#include "psr/model.hpp"
#include "psr/static_opfr.hpp"

namespace psr {

inline constexpr const char* kToolVersion = "psrplan 0.1.0";

// Full-precision decimal rendering; round-trips exactly and prints -0 as 0.
std::string format_g17(double v);

// Run-level knobs shared by every command that simulates. The file format is
// a flat JSON object over exactly these keys, all optional; unknown keys are
// an error so a typo cannot silently fall back to a default.
struct RunConfig {
  double dt_s = 0.5;
  double t_max_s = 712.5;
  double df_max_hz = 1.5;
  double alpha = 1.0;
  double beta = 1.0;
  double epsilon_rad_s = 0.05;
  double kappa_s = 45.0;

  DynConfig to_dyn() const;  // n_steps = round(t_max_s / dt_s)
};

RunConfig parse_run_config(const std::string& json_text);
std::string serialize_run_config(const RunConfig& rc);

// Schedule CSV, one switch per row:
//   step,component_kind,component_id,bus_a,bus_b
// Condensed schedules carry a trailing time_s column (slot start time); the
// step column then holds the slot number.
std::string schedule_to_csv(const PowerNetwork& net, const SwitchSchedule& s);
std::string condensed_to_csv(const PowerNetwork& net, const CondensedSchedule& s,
                             const DynConfig& cfg);

struct ParsedSchedule {
  std::vector<std::pair<int, ComponentRef>> rows;  // (step column value, component)
  bool has_time = false;
};

// Accepts both header variants. Component resolution is by (kind, id); the
// bus columns must agree with the case or the row is rejected.
ParsedSchedule parse_schedule_csv(const PowerNetwork& net, const std::string& csv_text);

// static_steps maps a 1-based switching step to condensed slot step + 1 so a
// static schedule lands on the dynamic grid with slot 1 as the initial state.
CondensedSchedule to_condensed(const PowerNetwork& net, const ParsedSchedule& ps,
                               bool static_steps);

// Trajectory CSV:
//   t_s,gen_id,delta_omega_rad_s,p_set,p_m_mw,p_e_mw,served_mw,violation_flags
// One row per generator per step plus a per-step summary row with gen_id
// "island" carrying served load and the union of flags (branch overloads
// appear only there). Flags are semicolon-joined from
// band, pm_min, pm_max, sync, branch:<id>.
std::string trajectory_to_csv(const PowerNetwork& net, const Trajectory& traj,
                              const DynConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::string& path);  // throws CaseError on failure
void write_file(const std::string& path, const std::string& content);

// Manifest emitted once per CLI run. config_json must be a JSON object text;
// it is embedded verbatim as the reproduction snapshot. wall_time_s is the
// one field exempt from the byte-identical rerun contract.
std::string manifest_json(const std::string& command, const std::string& config_json,
                          const std::string& case_hash_hex,
                          const std::vector<std::string>& outputs, double wall_time_s);

}  // namespace psr
