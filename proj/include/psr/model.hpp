#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace psr {

constexpr double kPi = 3.14159265358979323846;

enum class BranchKind { Line, Transformer };
enum class GenKind { BSU, NBSU };

// Turbine/governor/swing parameters of one machine.
// Powers are MW, frequency deviations rad/s throughout the library. The
// inertia column is consistent with J*w_nom ~ 2*H*S/w_nom on the machine
// base (G1: 0.0203*314.16 = 6.38 vs 2*5*200/314.16 = 6.37), which fixes the
// unit system: J in MW*s^2/rad, D in MW*s/rad.
struct GenDynamics {
  double inertia_j = 0.0;
  double damping_d = 0.0;
  double turbine_gain_k = 0.0;  // p.u.
  double turbine_tc_s = 0.0;    // T_m
  double governor_tc_s = 0.0;   // T_gov
  double droop_sigma = 0.0;     // p.u.

  friend bool operator==(const GenDynamics&, const GenDynamics&) = default;
};

struct Bus {
  int id = 0;
  bool is_slack = false;

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int id = 0;
  BranchKind kind = BranchKind::Line;
  int from_bus = 0;
  int to_bus = 0;
  double admittance = 0.0;  // p.u. susceptance magnitude on base_mva
  double flow_min_mw = 0.0;
  double flow_max_mw = 0.0;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  GenKind kind = GenKind::NBSU;
  double p_min_mw = 0.0;
  double p_max_mw = 0.0;
  GenDynamics dynamics;

  friend bool operator==(const Generator&, const Generator&) = default;
};

struct Load {
  int id = 0;
  int bus = 0;
  double p_nominal_mw = 0.0;

  friend bool operator==(const Load&, const Load&) = default;
};

// Switchable component address. Kind rank (branch < generator < load) plus
// id gives the global ordering used for deterministic tie-breaking.
enum class ComponentKind { Branch = 0, Generator = 1, Load = 2 };

struct ComponentRef {
  ComponentKind kind = ComponentKind::Branch;
  int index = -1;  // position in the owning vector, not the id

  friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
};

struct CaseError : std::runtime_error {
  std::string path;  // location in the case document, e.g. "loads[2].bus"
  CaseError(std::string p, const std::string& msg)
      : std::runtime_error(p.empty() ? msg : p + ": " + msg), path(std::move(p)) {}
};

struct PowerNetwork {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  double base_mva = 200.0;
  double f_nominal_hz = 50.0;

  double omega_nom() const { return 2.0 * kPi * f_nominal_hz; }

  int bus_index(int id) const;        // -1 when absent
  int slack_bus_index() const;
  int leading_bsu_index() const;      // lowest-id BSU

  // Lex key for deterministic component ordering: (kind rank, component id).
  std::pair<int, int> order_key(ComponentRef c) const;
  int component_id(ComponentRef c) const;
  int component_bus_a(ComponentRef c) const;                  // branch from / device bus
  int component_bus_b(ComponentRef c) const;                  // branch to / 0
  const char* component_kind_name(ComponentKind k) const;

  // NBSUs + branches + loads: everything a schedule may switch.
  int switchable_component_count() const;

  // Throws CaseError on any violated invariant.
  void validate() const;

  bool operator==(const PowerNetwork&) const = default;
};

double to_per_unit(double p_mw, const PowerNetwork& net);
double from_per_unit(double p_pu, const PowerNetwork& net);

enum class Ieee9Variant { ThreeLoads, TwoLoads };

// The 9-bus restoration case: G1 = BSU at bus 1 (slack), G2/G3 = NBSU at
// buses 2/3; transformers 1-4, 2-7, 3-9; lines 4-5, 4-6, 5-7, 6-9, 7-8, 8-9.
// Admittances are the standard published 9-bus reactances rescaled to the
// 200 MVA base. Line ratings are +-150 MW and transformer ratings +-200 MW;
// these are the values under which the exhaustive two-loads validation
// reproduces the reference feasibility count exactly (see data notes in the
// README).
PowerNetwork builtin_ieee9(Ieee9Variant variant);

// JSON case document round-trip. serialize_case emits 17-significant-digit
// numbers so load_case(serialize_case(net)) == net exactly.
PowerNetwork load_case(const std::string& json_text);
std::string serialize_case(const PowerNetwork& net);

}  // namespace psr
