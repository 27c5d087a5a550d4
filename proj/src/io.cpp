#include "psr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace psr {
namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CaseError(where, "expected an integer, got '" + s + "'");
  }
}

ComponentRef resolve_component(const PowerNetwork& net, const std::string& kind, int id,
                               const std::string& where) {
  if (kind == "branch") {
    for (std::size_t i = 0; i < net.branches.size(); ++i)
      if (net.branches[i].id == id) return {ComponentKind::Branch, static_cast<int>(i)};
  } else if (kind == "generator") {
    for (std::size_t i = 0; i < net.generators.size(); ++i)
      if (net.generators[i].id == id) return {ComponentKind::Generator, static_cast<int>(i)};
  } else if (kind == "load") {
    for (std::size_t i = 0; i < net.loads.size(); ++i)
      if (net.loads[i].id == id) return {ComponentKind::Load, static_cast<int>(i)};
  } else {
    throw CaseError(where, "unknown component kind '" + kind + "'");
  }
  throw CaseError(where, "no " + kind + " with id " + std::to_string(id) + " in the case");
}

constexpr const char* kScheduleHeader = "step,component_kind,component_id,bus_a,bus_b";
constexpr const char* kTrajectoryHeader =
    "t_s,gen_id,delta_omega_rad_s,p_set,p_m_mw,p_e_mw,served_mw,violation_flags";

void append_switch_row(std::string& out, const PowerNetwork& net, int step, ComponentRef c) {
  out += std::to_string(step);
  out += ',';
  out += net.component_kind_name(c.kind);
  out += ',';
  out += std::to_string(net.component_id(c));
  out += ',';
  out += std::to_string(net.component_bus_a(c));
  out += ',';
  out += std::to_string(net.component_bus_b(c));
}

// Per-row violation tags in their fixed emission order.
struct RowFlags {
  bool band = false, pm_min = false, pm_max = false, sync = false;
  std::set<int> branch_ids;

  std::string render() const {
    std::string s;
    auto add = [&s](const std::string& t) {
      if (!s.empty()) s += ';';
      s += t;
    };
    if (band) add("band");
    if (pm_min) add("pm_min");
    if (pm_max) add("pm_max");
    if (sync) add("sync");
    for (int id : branch_ids) add("branch:" + std::to_string(id));
    return s;
  }
};

}  // namespace

std::string format_g17(double v) {
  if (v == 0.0) v = 0.0;  // strip the sign of -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DynConfig RunConfig::to_dyn() const {
  if (dt_s <= 0.0) throw CaseError("config.dt_s", "must be positive");
  if (t_max_s <= 0.0) throw CaseError("config.t_max_s", "must be positive");
  DynConfig cfg;
  cfg.dt_s = dt_s;
  cfg.n_steps = static_cast<int>(std::llround(t_max_s / dt_s));
  cfg.kappa_s = kappa_s;
  cfg.df_max_hz = df_max_hz;
  cfg.epsilon_rad_s = epsilon_rad_s;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.check();
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw CaseError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw CaseError("config", "top level must be an object");
  RunConfig rc;
  const std::map<std::string, double*> keys = {
      {"dt_s", &rc.dt_s},           {"t_max_s", &rc.t_max_s},
      {"df_max_hz", &rc.df_max_hz}, {"alpha", &rc.alpha},
      {"beta", &rc.beta},           {"epsilon_rad_s", &rc.epsilon_rad_s},
      {"kappa_s", &rc.kappa_s}};
  for (const auto& [key, value] : j.items()) {
    auto it = keys.find(key);
    if (it == keys.end()) throw CaseError("config." + key, "unknown key");
    if (!value.is_number()) throw CaseError("config." + key, "expected a number");
    *it->second = value.get<double>();
  }
  return rc;
}

std::string serialize_run_config(const RunConfig& rc) {
  json j;
  j["dt_s"] = rc.dt_s;
  j["t_max_s"] = rc.t_max_s;
  j["df_max_hz"] = rc.df_max_hz;
  j["alpha"] = rc.alpha;
  j["beta"] = rc.beta;
  j["epsilon_rad_s"] = rc.epsilon_rad_s;
  j["kappa_s"] = rc.kappa_s;
  return j.dump(2) + "\n";
}

std::string schedule_to_csv(const PowerNetwork& net, const SwitchSchedule& s) {
  std::string out = kScheduleHeader;
  out += '\n';
  for (const SwitchAction& a : s.actions) {
    append_switch_row(out, net, a.step, a.component);
    out += '\n';
  }
  return out;
}

std::string condensed_to_csv(const PowerNetwork& net, const CondensedSchedule& s,
                             const DynConfig& cfg) {
  std::string out = kScheduleHeader;
  out += ",time_s\n";
  for (const auto& [slot, comp] : s.actions) {
    append_switch_row(out, net, slot, comp);
    out += ',';
    out += format_g17(cfg.slot_start_step(slot) * cfg.dt_s);
    out += '\n';
  }
  return out;
}

ParsedSchedule parse_schedule_csv(const PowerNetwork& net, const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw CaseError("schedule", "empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();

  ParsedSchedule ps;
  if (line == kScheduleHeader) {
    ps.has_time = false;
  } else if (line == std::string(kScheduleHeader) + ",time_s") {
    ps.has_time = true;
  } else {
    throw CaseError("schedule", "unrecognized header '" + line + "'");
  }
  const std::size_t want = ps.has_time ? 6 : 5;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = "schedule line " + std::to_string(lineno);
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != want)
      throw CaseError(where, "expected " + std::to_string(want) + " fields, got " +
                                 std::to_string(f.size()));
    const int step = parse_int(f[0], where + " step");
    const ComponentRef c = resolve_component(net, f[1], parse_int(f[2], where + " id"), where);
    const int bus_a = parse_int(f[3], where + " bus_a");
    const int bus_b = parse_int(f[4], where + " bus_b");
    if (bus_a != net.component_bus_a(c) || bus_b != net.component_bus_b(c))
      throw CaseError(where, "bus columns disagree with the case for " + f[1] + " " + f[2]);
    ps.rows.push_back({step, c});
  }
  return ps;
}

CondensedSchedule to_condensed(const PowerNetwork& net, const ParsedSchedule& ps,
                               bool static_steps) {
  CondensedSchedule s;
  s.initial = initial_configuration(net);
  for (const auto& [step, comp] : ps.rows)
    s.actions.push_back({static_steps ? step + 1 : step, comp});
  return s;
}

std::string trajectory_to_csv(const PowerNetwork& net, const Trajectory& traj,
                              const DynConfig& cfg) {
  const int ng = static_cast<int>(net.generators.size());

  // (step, gen index) -> flags; branch overloads go to the summary row only.
  std::map<std::pair<int, int>, RowFlags> gen_flags;
  std::map<int, std::set<int>> branch_flags;
  for (const Violation& v : traj.violations) {
    if (v.kind == Violation::BranchOverload) {
      branch_flags[v.step].insert(v.component_id);
      continue;
    }
    int g = -1;
    for (int i = 0; i < ng; ++i)
      if (net.generators[i].id == v.component_id) g = i;
    if (g < 0) continue;
    RowFlags& fl = gen_flags[{v.step, g}];
    switch (v.kind) {
      case Violation::FrequencyBand: fl.band = true; break;
      case Violation::SyncMismatch: fl.sync = true; break;
      case Violation::MechPowerLimit:
        if (traj.p_m[g][v.step] < net.generators[g].p_min_mw)
          fl.pm_min = true;
        else
          fl.pm_max = true;
        break;
      case Violation::BranchOverload: break;
    }
  }

  std::string out = kTrajectoryHeader;
  out += '\n';
  for (int t = 0; t <= traj.n_steps; ++t) {
    const std::string ts = format_g17(t * cfg.dt_s);
    RowFlags island;
    for (int g = 0; g < ng; ++g) {
      RowFlags fl;
      auto it = gen_flags.find({t, g});
      if (it != gen_flags.end()) fl = it->second;
      island.band |= fl.band;
      island.pm_min |= fl.pm_min;
      island.pm_max |= fl.pm_max;
      island.sync |= fl.sync;
      out += ts;
      out += ',';
      out += std::to_string(net.generators[g].id);
      out += ',';
      out += format_g17(traj.delta_omega[g][t]);
      out += ',';
      out += format_g17(traj.p_set[g][t]);
      out += ',';
      out += format_g17(traj.p_m[g][t]);
      out += ',';
      out += format_g17(traj.p_e[g][t]);
      out += ",,";  // served_mw belongs to the island row
      out += fl.render();
      out += '\n';
    }
    auto bit = branch_flags.find(t);
    if (bit != branch_flags.end()) island.branch_ids = bit->second;
    out += ts;
    out += ",island,,,,,";
    out += format_g17(traj.served_mw[t]);
    out += ',';
    out += island.render();
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CaseError(path, "read failed");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CaseError(path, "cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw CaseError(path, "write failed");
}

std::string manifest_json(const std::string& command, const std::string& config_json,
                          const std::string& case_hash_hex,
                          const std::vector<std::string>& outputs, double wall_time_s) {
  json j;
  j["command"] = command;
  try {
    j["config"] = json::parse(config_json);
  } catch (const json::exception& e) {
    throw CaseError("manifest.config", std::string("not valid JSON: ") + e.what());
  }
  j["case_hash"] = "fnv1a64:" + case_hash_hex;
  j["outputs"] = outputs;
  j["wall_time_s"] = wall_time_s;
  j["tool_version"] = kToolVersion;
  return j.dump(2) + "\n";
}

}  // namespace psr
