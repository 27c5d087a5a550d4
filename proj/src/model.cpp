#include "psr/model.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "json.hpp"

namespace psr {

using nlohmann::json;

int PowerNetwork::bus_index(int id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int PowerNetwork::slack_bus_index() const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].is_slack) return static_cast<int>(i);
  return -1;
}

int PowerNetwork::leading_bsu_index() const {
  int best = -1;
  for (size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].kind != GenKind::BSU) continue;
    if (best < 0 || generators[i].id < generators[best].id) best = static_cast<int>(i);
  }
  return best;
}

int PowerNetwork::component_id(ComponentRef c) const {
  switch (c.kind) {
    case ComponentKind::Branch: return branches[c.index].id;
    case ComponentKind::Generator: return generators[c.index].id;
    case ComponentKind::Load: return loads[c.index].id;
  }
  return -1;
}

std::pair<int, int> PowerNetwork::order_key(ComponentRef c) const {
  return {static_cast<int>(c.kind), component_id(c)};
}

int PowerNetwork::component_bus_a(ComponentRef c) const {
  switch (c.kind) {
    case ComponentKind::Branch: return branches[c.index].from_bus;
    case ComponentKind::Generator: return generators[c.index].bus;
    case ComponentKind::Load: return loads[c.index].bus;
  }
  return 0;
}

int PowerNetwork::component_bus_b(ComponentRef c) const {
  return c.kind == ComponentKind::Branch ? branches[c.index].to_bus : 0;
}

const char* PowerNetwork::component_kind_name(ComponentKind k) const {
  switch (k) {
    case ComponentKind::Branch: return "branch";
    case ComponentKind::Generator: return "generator";
    case ComponentKind::Load: return "load";
  }
  return "?";
}

int PowerNetwork::switchable_component_count() const {
  int n = static_cast<int>(branches.size() + loads.size());
  for (const auto& g : generators)
    if (g.kind == GenKind::NBSU) ++n;
  return n;
}

void PowerNetwork::validate() const {
  if (base_mva <= 0) throw CaseError("base_mva", "must be positive");
  if (f_nominal_hz <= 0) throw CaseError("f_nominal_hz", "must be positive");
  if (buses.empty()) throw CaseError("buses", "at least one bus required");

  std::set<int> bus_ids;
  int slack_count = 0;
  for (size_t i = 0; i < buses.size(); ++i) {
    if (!bus_ids.insert(buses[i].id).second)
      throw CaseError("buses[" + std::to_string(i) + "].id", "duplicate id");
    if (buses[i].is_slack) ++slack_count;
  }
  if (slack_count != 1)
    throw CaseError("buses", "exactly one slack bus required, found " +
                                 std::to_string(slack_count));

  std::set<int> branch_ids;
  for (size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    const std::string p = "branches[" + std::to_string(i) + "]";
    if (!branch_ids.insert(b.id).second) throw CaseError(p + ".id", "duplicate id");
    if (!bus_ids.count(b.from_bus)) throw CaseError(p + ".from_bus", "dangling bus reference");
    if (!bus_ids.count(b.to_bus)) throw CaseError(p + ".to_bus", "dangling bus reference");
    if (b.from_bus == b.to_bus) throw CaseError(p, "from_bus equals to_bus");
    if (!(b.admittance > 0)) throw CaseError(p + ".admittance", "must be positive");
    if (!(b.flow_min_mw <= 0 && 0 <= b.flow_max_mw))
      throw CaseError(p, "flow limits must bracket zero");
  }

  std::set<int> gen_ids;
  int bsu_count = 0;
  for (size_t i = 0; i < generators.size(); ++i) {
    const auto& g = generators[i];
    const std::string p = "generators[" + std::to_string(i) + "]";
    if (!gen_ids.insert(g.id).second) throw CaseError(p + ".id", "duplicate id");
    if (!bus_ids.count(g.bus)) throw CaseError(p + ".bus", "dangling bus reference");
    if (g.p_min_mw > g.p_max_mw) throw CaseError(p, "p_min greater than p_max");
    const auto& d = g.dynamics;
    if (!(d.inertia_j > 0)) throw CaseError(p + ".dynamics.j", "must be positive");
    if (!(d.turbine_tc_s > 0)) throw CaseError(p + ".dynamics.t_m", "must be positive");
    if (!(d.governor_tc_s > 0)) throw CaseError(p + ".dynamics.t_gov", "must be positive");
    if (!(d.droop_sigma > 0)) throw CaseError(p + ".dynamics.sigma", "must be positive");
    if (!(d.turbine_gain_k > 0)) throw CaseError(p + ".dynamics.k", "must be positive");
    if (!(d.turbine_gain_k + d.droop_sigma * d.damping_d > 0))
      throw CaseError(p + ".dynamics", "initialization denominator K + sigma*D must be positive");
    if (g.kind == GenKind::BSU) ++bsu_count;
  }
  if (bsu_count < 1) throw CaseError("generators", "no BSU");

  std::set<int> load_ids;
  for (size_t i = 0; i < loads.size(); ++i) {
    const auto& l = loads[i];
    const std::string p = "loads[" + std::to_string(i) + "]";
    if (!load_ids.insert(l.id).second) throw CaseError(p + ".id", "duplicate id");
    if (!bus_ids.count(l.bus)) throw CaseError(p + ".bus", "dangling bus reference");
    if (!(l.p_nominal_mw > 0)) throw CaseError(p + ".p_nominal", "must be positive");
  }

  // Full graph must be connected so every component is reachable in principle.
  if (!branches.empty() || buses.size() > 1) {
    std::set<int> seen{buses[0].id};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& b : branches) {
        bool f = seen.count(b.from_bus), t = seen.count(b.to_bus);
        if (f != t) {
          seen.insert(f ? b.to_bus : b.from_bus);
          grew = true;
        }
      }
    }
    if (seen.size() != bus_ids.size())
      throw CaseError("branches", "bus graph not connected with all branches in service");
  }
}

double to_per_unit(double p_mw, const PowerNetwork& net) { return p_mw / net.base_mva; }
double from_per_unit(double p_pu, const PowerNetwork& net) { return p_pu * net.base_mva; }

PowerNetwork builtin_ieee9(Ieee9Variant variant) {
  PowerNetwork net;
  net.base_mva = 200.0;
  net.f_nominal_hz = 50.0;
  for (int b = 1; b <= 9; ++b) net.buses.push_back({b, b == 1});

  // 100 MVA per-unit reactances of the published 9-bus model, rescaled to
  // the 200 MVA base: Y = (100/200)/x.
  auto line = [](int id, int a, int b, double x100, BranchKind k, double rate) {
    return Branch{id, k, a, b, 0.5 / x100, -rate, rate};
  };
  net.branches = {
      line(1, 1, 4, 0.0576, BranchKind::Transformer, 200.0),
      line(2, 2, 7, 0.0625, BranchKind::Transformer, 200.0),
      line(3, 3, 9, 0.0586, BranchKind::Transformer, 200.0),
      line(4, 4, 5, 0.0850, BranchKind::Line, 150.0),
      line(5, 4, 6, 0.0920, BranchKind::Line, 150.0),
      line(6, 5, 7, 0.1610, BranchKind::Line, 150.0),
      line(7, 6, 9, 0.1700, BranchKind::Line, 150.0),
      line(8, 7, 8, 0.0720, BranchKind::Line, 150.0),
      line(9, 8, 9, 0.1008, BranchKind::Line, 150.0),
  };

  const GenDynamics g1{0.0203, 1.5, 0.75, 0.6, 1.0, 0.02};
  const GenDynamics g2{0.0162, 1.4, 1.0, 0.75, 1.8, 0.03};
  const GenDynamics g3{0.0284, 0.65, 0.9, 0.3, 2.3, 0.04};
  net.generators = {
      {1, 1, GenKind::BSU, 0.0, 200.0, g1},
      {2, 2, GenKind::NBSU, 0.0, 200.0, g2},
      {3, 3, GenKind::NBSU, 0.0, 200.0, g3},
  };

  int id = 1;
  auto add_loads = [&](int bus, double p, int n) {
    for (int i = 0; i < n; ++i) net.loads.push_back({id++, bus, p});
  };
  if (variant == Ieee9Variant::ThreeLoads) {
    add_loads(5, 41.67, 3);
    add_loads(6, 30.0, 3);
    add_loads(8, 33.33, 3);
  } else {
    add_loads(5, 62.5, 2);
    add_loads(6, 45.0, 2);
    add_loads(8, 50.0, 2);
  }
  net.validate();
  return net;
}

namespace {

template <typename T>
T require(const json& j, const std::string& path, const char* key) {
  const std::string at = path.empty() ? key : path + "." + key;
  if (!j.contains(key)) throw CaseError(at, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw CaseError(at, "wrong type");
  }
}

}  // namespace

PowerNetwork load_case(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw CaseError("", std::string("not a JSON document: ") + e.what());
  }
  PowerNetwork net;
  net.base_mva = require<double>(j, "", "base_mva");
  net.f_nominal_hz = require<double>(j, "", "f_nominal_hz");

  if (!j.contains("buses") || !j["buses"].is_array()) throw CaseError("buses", "missing array");
  for (size_t i = 0; i < j["buses"].size(); ++i) {
    const auto& e = j["buses"][i];
    const std::string p = "buses[" + std::to_string(i) + "]";
    net.buses.push_back({require<int>(e, p, "id"), require<bool>(e, p, "is_slack")});
  }
  if (j.contains("branches"))
    for (size_t i = 0; i < j["branches"].size(); ++i) {
      const auto& e = j["branches"][i];
      const std::string p = "branches[" + std::to_string(i) + "]";
      Branch b;
      b.id = require<int>(e, p, "id");
      const std::string kind = require<std::string>(e, p, "kind");
      if (kind == "line")
        b.kind = BranchKind::Line;
      else if (kind == "transformer")
        b.kind = BranchKind::Transformer;
      else
        throw CaseError(p + ".kind", "expected line|transformer");
      b.from_bus = require<int>(e, p, "from_bus");
      b.to_bus = require<int>(e, p, "to_bus");
      b.admittance = require<double>(e, p, "admittance");
      b.flow_min_mw = require<double>(e, p, "flow_min");
      b.flow_max_mw = require<double>(e, p, "flow_max");
      net.branches.push_back(b);
    }
  if (j.contains("generators"))
    for (size_t i = 0; i < j["generators"].size(); ++i) {
      const auto& e = j["generators"][i];
      const std::string p = "generators[" + std::to_string(i) + "]";
      Generator g;
      g.id = require<int>(e, p, "id");
      g.bus = require<int>(e, p, "bus");
      const std::string kind = require<std::string>(e, p, "kind");
      if (kind == "BSU")
        g.kind = GenKind::BSU;
      else if (kind == "NBSU")
        g.kind = GenKind::NBSU;
      else
        throw CaseError(p + ".kind", "expected BSU|NBSU");
      g.p_min_mw = require<double>(e, p, "p_min");
      g.p_max_mw = require<double>(e, p, "p_max");
      if (!e.contains("dynamics")) throw CaseError(p + ".dynamics", "missing field");
      const auto& d = e["dynamics"];
      const std::string pd = p + ".dynamics";
      g.dynamics.inertia_j = require<double>(d, pd, "j");
      g.dynamics.damping_d = require<double>(d, pd, "d");
      g.dynamics.turbine_gain_k = require<double>(d, pd, "k");
      g.dynamics.turbine_tc_s = require<double>(d, pd, "t_m");
      g.dynamics.governor_tc_s = require<double>(d, pd, "t_gov");
      g.dynamics.droop_sigma = require<double>(d, pd, "sigma");
      net.generators.push_back(g);
    }
  if (j.contains("loads"))
    for (size_t i = 0; i < j["loads"].size(); ++i) {
      const auto& e = j["loads"][i];
      const std::string p = "loads[" + std::to_string(i) + "]";
      net.loads.push_back({require<int>(e, p, "id"), require<int>(e, p, "bus"),
                           require<double>(e, p, "p_nominal")});
    }
  net.validate();
  return net;
}

std::string serialize_case(const PowerNetwork& net) {
  json j;
  j["base_mva"] = net.base_mva;
  j["f_nominal_hz"] = net.f_nominal_hz;
  j["buses"] = json::array();
  for (const auto& b : net.buses) j["buses"].push_back({{"id", b.id}, {"is_slack", b.is_slack}});
  j["branches"] = json::array();
  for (const auto& b : net.branches)
    j["branches"].push_back({{"id", b.id},
                             {"kind", b.kind == BranchKind::Line ? "line" : "transformer"},
                             {"from_bus", b.from_bus},
                             {"to_bus", b.to_bus},
                             {"admittance", b.admittance},
                             {"flow_min", b.flow_min_mw},
                             {"flow_max", b.flow_max_mw}});
  j["generators"] = json::array();
  for (const auto& g : net.generators)
    j["generators"].push_back({{"id", g.id},
                               {"bus", g.bus},
                               {"kind", g.kind == GenKind::BSU ? "BSU" : "NBSU"},
                               {"p_min", g.p_min_mw},
                               {"p_max", g.p_max_mw},
                               {"dynamics",
                                {{"j", g.dynamics.inertia_j},
                                 {"d", g.dynamics.damping_d},
                                 {"k", g.dynamics.turbine_gain_k},
                                 {"t_m", g.dynamics.turbine_tc_s},
                                 {"t_gov", g.dynamics.governor_tc_s},
                                 {"sigma", g.dynamics.droop_sigma}}}});
  j["loads"] = json::array();
  for (const auto& l : net.loads)
    j["loads"].push_back({{"id", l.id}, {"bus", l.bus}, {"p_nominal", l.p_nominal_mw}});
  return j.dump(2) + "\n";
}

}  // namespace psr
