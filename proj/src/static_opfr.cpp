#include "psr/static_opfr.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "psr/lp.hpp"

namespace psr {

namespace {

long long micro(double mw) { return std::llround(mw * 1e6); }

}  // namespace

Configuration initial_configuration(const PowerNetwork& net) {
  Configuration c;
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    if (net.generators[i].kind == GenKind::BSU) c.gens |= 1u << i;
  return c;
}

Configuration apply_switch(const PowerNetwork& net, const Configuration& cfg, ComponentRef r) {
  (void)net;
  Configuration c = cfg;
  switch (r.kind) {
    case ComponentKind::Branch: c.branches |= 1u << r.index; break;
    case ComponentKind::Generator: c.gens |= 1u << r.index; break;
    case ComponentKind::Load: c.loads |= 1u << r.index; break;
  }
  return c;
}

std::vector<int> bus_energization_counts(const PowerNetwork& net, const Configuration& cfg) {
  std::vector<int> s(net.buses.size(), 0);
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    if (!cfg.branch_on(static_cast<int>(i))) continue;
    s[net.bus_index(net.branches[i].from_bus)] += 1;
    s[net.bus_index(net.branches[i].to_bus)] += 1;
  }
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    if (cfg.gen_on(static_cast<int>(i))) s[net.bus_index(net.generators[i].bus)] += 1;
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (cfg.load_on(static_cast<int>(i))) s[net.bus_index(net.loads[i].bus)] += 1;
  return s;
}

std::vector<char> live_buses(const PowerNetwork& net, const Configuration& cfg) {
  std::vector<int> s = bus_energization_counts(net, cfg);
  std::vector<char> live(s.size());
  for (std::size_t b = 0; b < s.size(); ++b) live[b] = s[b] > 0;
  return live;
}

std::vector<ComponentRef> legal_switches(const PowerNetwork& net, const Configuration& cfg) {
  const std::vector<char> live = live_buses(net, cfg);
  std::vector<ComponentRef> moves;

  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    if (cfg.branch_on(static_cast<int>(i))) continue;
    const bool f = live[net.bus_index(net.branches[i].from_bus)];
    const bool t = live[net.bus_index(net.branches[i].to_bus)];
    if (f != t) moves.push_back({ComponentKind::Branch, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    if (cfg.gen_on(static_cast<int>(i)) || net.generators[i].kind == GenKind::BSU) continue;
    if (live[net.bus_index(net.generators[i].bus)])
      moves.push_back({ComponentKind::Generator, static_cast<int>(i)});
  }
  std::set<std::pair<int, long long>> seen;  // (bus, p) classes already represented
  for (std::size_t i = 0; i < net.loads.size(); ++i) {
    if (cfg.load_on(static_cast<int>(i))) continue;
    const auto key = std::make_pair(net.loads[i].bus, micro(net.loads[i].p_nominal_mw));
    if (!seen.insert(key).second) continue;
    if (live[net.bus_index(net.loads[i].bus)])
      moves.push_back({ComponentKind::Load, static_cast<int>(i)});
  }
  std::sort(moves.begin(), moves.end(), [&](ComponentRef a, ComponentRef b) {
    return net.order_key(a) < net.order_key(b);
  });
  return moves;
}

std::optional<std::string> schedule_error(const PowerNetwork& net, const SwitchSchedule& s) {
  if (s.horizon < 0) return "horizon must be >= 0";
  if (static_cast<int>(s.actions.size()) > s.horizon) return "more actions than steps";
  Configuration cfg = initial_configuration(net);
  int expect = 1;
  for (const auto& a : s.actions) {
    if (a.step != expect)
      return "actions must occupy steps 1..k contiguously; got step " + std::to_string(a.step) +
             " where " + std::to_string(expect) + " was expected";
    ++expect;
    const std::vector<char> live = live_buses(net, cfg);
    const ComponentRef c = a.component;
    const std::string label = component_label(net, c);
    switch (c.kind) {
      case ComponentKind::Branch: {
        if (c.index < 0 || c.index >= static_cast<int>(net.branches.size()))
          return "unknown branch index";
        if (cfg.branch_on(c.index)) return label + " switched twice";
        const bool f = live[net.bus_index(net.branches[c.index].from_bus)];
        const bool t = live[net.bus_index(net.branches[c.index].to_bus)];
        if (f == t)
          return label + (f ? " closes a loop inside the island" : " has no live endpoint");
        break;
      }
      case ComponentKind::Generator: {
        if (c.index < 0 || c.index >= static_cast<int>(net.generators.size()))
          return "unknown generator index";
        if (cfg.gen_on(c.index)) return label + " switched twice";
        if (net.generators[c.index].kind == GenKind::BSU) return label + " is initially energized";
        if (!live[net.bus_index(net.generators[c.index].bus)]) return label + " bus not live";
        break;
      }
      case ComponentKind::Load: {
        if (c.index < 0 || c.index >= static_cast<int>(net.loads.size()))
          return "unknown load index";
        if (cfg.load_on(c.index)) return label + " switched twice";
        if (!live[net.bus_index(net.loads[c.index].bus)]) return label + " bus not live";
        break;
      }
    }
    cfg = apply_switch(net, cfg, c);
  }
  return std::nullopt;
}

long long energy_microsteps(const PowerNetwork& net, const SwitchSchedule& s) {
  long long e = 0;
  for (const auto& a : s.actions) {
    if (a.component.kind != ComponentKind::Load) continue;
    e += micro(net.loads[a.component.index].p_nominal_mw) *
         static_cast<long long>(s.horizon - a.step + 1);
  }
  return e;
}

double energy_served_mw_steps(const PowerNetwork& net, const SwitchSchedule& s) {
  return static_cast<double>(energy_microsteps(net, s)) / 1e6;
}

bool config_feasible(const PowerNetwork& net, const Configuration& cfg, Dispatch* dispatch) {
  const int nb = static_cast<int>(net.buses.size());
  const int ng = static_cast<int>(net.generators.size());
  const int ne = static_cast<int>(net.branches.size());
  const int nl = static_cast<int>(net.loads.size());
  const std::vector<char> live = live_buses(net, cfg);
  const int slack = net.slack_bus_index();

  std::vector<int> gv(ng, -1), bv(nb, -1), fv(ne, -1);
  LinearProgram lp;
  auto add_var = [&](double lo, double hi) {
    lp.objective.push_back(0.0);
    lp.lower.push_back(lo);
    lp.upper.push_back(hi);
    return static_cast<int>(lp.objective.size()) - 1;
  };
  for (int i = 0; i < ng; ++i)
    if (cfg.gen_on(i)) gv[i] = add_var(net.generators[i].p_min_mw, net.generators[i].p_max_mw);
  for (int b = 0; b < nb; ++b)
    if (live[b]) bv[b] = add_var(b == slack ? 0.0 : -kPi, b == slack ? 0.0 : kPi);
  for (int e = 0; e < ne; ++e)
    if (cfg.branch_on(e)) fv[e] = add_var(net.branches[e].flow_min_mw, net.branches[e].flow_max_mw);

  for (int b = 0; b < nb; ++b) {
    if (!live[b]) continue;
    LpRow row;
    row.sense = RowSense::EQ;
    double load = 0.0;
    for (int i = 0; i < nl; ++i)
      if (cfg.load_on(i) && net.bus_index(net.loads[i].bus) == b) load += net.loads[i].p_nominal_mw;
    row.rhs = load;
    for (int i = 0; i < ng; ++i)
      if (gv[i] >= 0 && net.bus_index(net.generators[i].bus) == b) row.coeffs.push_back({gv[i], 1.0});
    for (int e = 0; e < ne; ++e) {
      if (fv[e] < 0) continue;
      if (net.bus_index(net.branches[e].from_bus) == b) row.coeffs.push_back({fv[e], -1.0});
      if (net.bus_index(net.branches[e].to_bus) == b) row.coeffs.push_back({fv[e], 1.0});
    }
    lp.rows.push_back(std::move(row));
  }
  for (int e = 0; e < ne; ++e) {
    if (fv[e] < 0) continue;
    const double ya = net.branches[e].admittance * net.base_mva;
    LpRow row;
    row.sense = RowSense::EQ;
    row.rhs = 0.0;
    row.coeffs = {{fv[e], 1.0},
                  {bv[net.bus_index(net.branches[e].from_bus)], -ya},
                  {bv[net.bus_index(net.branches[e].to_bus)], ya}};
    lp.rows.push_back(std::move(row));
  }

  FeasibilityResult res = check_feasible(lp);
  if (dispatch) {
    dispatch->p_gen_mw.assign(ng, 0.0);
    dispatch->theta_rad.assign(nb, 0.0);
    dispatch->flow_mw.assign(ne, 0.0);
    if (res.feasible) {
      for (int i = 0; i < ng; ++i)
        if (gv[i] >= 0) dispatch->p_gen_mw[i] = res.point[gv[i]];
      for (int b = 0; b < nb; ++b)
        if (bv[b] >= 0) dispatch->theta_rad[b] = res.point[bv[b]];
      for (int e = 0; e < ne; ++e)
        if (fv[e] >= 0) dispatch->flow_mw[e] = res.point[fv[e]];
    }
  }
  return res.feasible;
}

bool ConfigCache::feasible(const PowerNetwork& net, const Configuration& cfg) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(cfg);
    if (it != map_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const bool ok = config_feasible(net, cfg);
  std::lock_guard<std::mutex> lock(mu_);
  ++solves_;
  map_.emplace(cfg, ok);
  return ok;
}

std::string component_label(const PowerNetwork& net, ComponentRef c) {
  switch (c.kind) {
    case ComponentKind::Branch: {
      const Branch& b = net.branches[c.index];
      return std::string(b.kind == BranchKind::Transformer ? "transformer " : "line ") +
             std::to_string(b.id) + " (" + std::to_string(b.from_bus) + "-" +
             std::to_string(b.to_bus) + ")";
    }
    case ComponentKind::Generator:
      return "generator " + std::to_string(net.generators[c.index].id) + " @bus " +
             std::to_string(net.generators[c.index].bus);
    case ComponentKind::Load:
      return "load " + std::to_string(net.loads[c.index].id) + " @bus " +
             std::to_string(net.loads[c.index].bus);
  }
  return "?";
}

namespace {

struct LoadOption {
  long long p_micro;
};

// Upper bound on additional energy from a node whose next switch would be
// step `next_step`: switch the heaviest remaining loads immediately,
// one per step, ignoring the grid entirely.
long long optimistic_remaining(const std::vector<long long>& off_loads_desc, int next_step,
                               int horizon) {
  long long sum = 0;
  int step = next_step;
  for (long long p : off_loads_desc) {
    if (step > horizon) break;
    sum += p * static_cast<long long>(horizon - step + 1);
    ++step;
  }
  return sum;
}

std::vector<long long> off_loads_desc(const PowerNetwork& net, const Configuration& cfg) {
  std::vector<long long> v;
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (!cfg.load_on(static_cast<int>(i))) v.push_back(micro(net.loads[i].p_nominal_mw));
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

struct StaticSearch {
  const PowerNetwork& net;
  int horizon;
  long long node_cap;
  ConfigCache cache;
  long long nodes = 0;
  bool capped = false;

  long long best_energy = -1;
  std::vector<ComponentRef> best_path;
  std::vector<ComponentRef> stack;

  bool budget() {
    if (node_cap >= 0 && nodes >= node_cap) {
      capped = true;
      return false;
    }
    ++nodes;
    return true;
  }

  // Pass 1: maximum energy. Children are tried heaviest-load-first so a good
  // incumbent lands early and the optimistic bound can cut.
  void explore(const Configuration& cfg, int depth, long long energy) {
    if (!budget()) return;
    if (energy > best_energy) {
      best_energy = energy;
      best_path = stack;
    }
    if (depth == horizon) return;
    std::vector<ComponentRef> moves = legal_switches(net, cfg);
    std::stable_sort(moves.begin(), moves.end(), [&](ComponentRef a, ComponentRef b) {
      const bool la = a.kind == ComponentKind::Load, lb = b.kind == ComponentKind::Load;
      if (la != lb) return la;
      if (la && lb) {
        const long long pa = micro(net.loads[a.index].p_nominal_mw);
        const long long pb = micro(net.loads[b.index].p_nominal_mw);
        if (pa != pb) return pa > pb;
      }
      return false;
    });
    for (ComponentRef mv : moves) {
      if (capped) return;
      const Configuration ncfg = apply_switch(net, cfg, mv);
      if (!cache.feasible(net, ncfg)) continue;
      long long nen = energy;
      if (mv.kind == ComponentKind::Load)
        nen += micro(net.loads[mv.index].p_nominal_mw) * static_cast<long long>(horizon - depth);
      if (nen + optimistic_remaining(off_loads_desc(net, ncfg), depth + 2, horizon) <= best_energy)
        continue;
      stack.push_back(mv);
      explore(ncfg, depth + 1, nen);
      stack.pop_back();
    }
  }

  // Pass 2: lexicographically first schedule reaching best_energy. Nodes are
  // visited in schedule order (stop before any child, children ascending by
  // (kind, id)), so the first hit is the answer.
  bool reconstruct(const Configuration& cfg, int depth, long long energy) {
    if (!budget()) return false;
    if (energy == best_energy) return true;
    if (depth == horizon) return false;
    for (ComponentRef mv : legal_switches(net, cfg)) {
      if (capped) return false;
      const Configuration ncfg = apply_switch(net, cfg, mv);
      if (!cache.feasible(net, ncfg)) continue;
      long long nen = energy;
      if (mv.kind == ComponentKind::Load)
        nen += micro(net.loads[mv.index].p_nominal_mw) * static_cast<long long>(horizon - depth);
      if (nen + optimistic_remaining(off_loads_desc(net, ncfg), depth + 2, horizon) < best_energy)
        continue;
      stack.push_back(mv);
      if (reconstruct(ncfg, depth + 1, nen)) return true;
      stack.pop_back();
    }
    return false;
  }
};

}  // namespace

StaticResult solve_opfr(const PowerNetwork& net, int t_max, long long node_cap) {
  if (net.branches.size() > 32 || net.generators.size() > 32 || net.loads.size() > 32)
    throw CaseError("", "static search supports at most 32 components per kind");
  StaticResult result;
  result.schedule.horizon = t_max;

  StaticSearch search{net, t_max, node_cap, {}, 0, false, -1, {}, {}};
  const Configuration root = initial_configuration(net);
  search.explore(root, 0, 0);

  search.stack.clear();
  std::vector<ComponentRef> path;
  if (!search.capped && search.reconstruct(root, 0, 0)) {
    path = search.stack;
  } else {
    path = search.best_path;  // capped: best found so far, in pass-1 order
  }

  for (std::size_t k = 0; k < path.size(); ++k)
    result.schedule.actions.push_back({static_cast<int>(k) + 1, path[k]});
  result.energy_mw_steps = static_cast<double>(search.best_energy) / 1e6;
  result.node_cap_reached = search.capped;
  result.stats.nodes = search.nodes;
  result.stats.lp_solves = search.cache.lp_solves();
  result.stats.cache_hits = search.cache.hits();

  Configuration cfg = root;
  std::size_t next = 0;
  for (int step = 1; step <= t_max; ++step) {
    if (next < path.size()) {
      cfg = apply_switch(net, cfg, path[next]);
      ++next;
    }
    Dispatch d;
    config_feasible(net, cfg, &d);
    result.per_step.push_back(std::move(d));
  }
  return result;
}

namespace {

struct OracleSearch {
  const PowerNetwork& net;
  int slots;
  long long cap;
  bool use_cache;
  ConfigCache cache;
  OracleResult out;
  long long direct_solves = 0;
  std::vector<SwitchAction> stack;

  bool feasible(const Configuration& cfg) {
    if (use_cache) return cache.feasible(net, cfg);
    ++direct_solves;
    return config_feasible(net, cfg);
  }

  std::string render_sequence(bool ok) const {
    std::string s;
    for (const auto& a : stack) {
      if (!s.empty()) s += " -> ";
      s += component_label(net, a.component);
    }
    if (s.empty()) s = "(no switches)";
    s += ok ? "  [all prefixes feasible]" : "  [prefix infeasible]";
    return s;
  }

  // Returns false when the sequence cap fired and the walk must unwind.
  bool walk(const Configuration& cfg, int depth, bool ok, long long energy) {
    std::vector<ComponentRef> moves = legal_switches(net, cfg);
    if (depth == slots || moves.empty()) {
      out.connectivity_count += 1;
      if (ok) {
        out.feasible_count += 1;
        if (energy > std::llround(out.best_energy_mw_steps * 1e6)) {
          out.best_energy_mw_steps = static_cast<double>(energy) / 1e6;
          out.best_schedule.horizon = slots;
          out.best_schedule.actions = stack;
        }
      }
      if (out.sample_sequences.size() < 10) out.sample_sequences.push_back(render_sequence(ok));
      return cap < 0 || out.connectivity_count < cap;
    }
    for (ComponentRef mv : moves) {
      const Configuration ncfg = apply_switch(net, cfg, mv);
      const bool nok = ok && feasible(ncfg);  // skip the LP once a prefix failed
      long long nen = energy;
      if (mv.kind == ComponentKind::Load)
        nen += micro(net.loads[mv.index].p_nominal_mw) * static_cast<long long>(slots - depth);
      stack.push_back({depth + 1, mv});
      const bool keep_going = walk(ncfg, depth + 1, nok, nen);
      stack.pop_back();
      if (!keep_going) return false;
    }
    return true;
  }
};

}  // namespace

OracleResult brute_force_oracle(const PowerNetwork& net, int t_max, long long sequence_cap,
                                bool use_cache) {
  OracleSearch search{net, t_max, sequence_cap, use_cache, {}, {}, 0, {}};
  search.out.best_schedule.horizon = t_max;
  if (!search.walk(initial_configuration(net), 0, true, 0)) search.out.cap_reached = true;
  search.out.lp_solves = use_cache ? search.cache.lp_solves() : search.direct_solves;
  search.out.cache_hits = search.cache.hits();
  return search.out;
}

}  // namespace psr
