#include "psr/dyn_opfr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <set>
#include <limits>
#include <thread>
#include <utility>

namespace psr {

double schedule_energy_pu_s(const PowerNetwork& net, const CondensedSchedule& sched,
                            const DynConfig& cfg) {
  double served_steps = 0.0;  // sum over loads of P * number of served steps
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (sched.initial.load_on(static_cast<int>(i)))
      served_steps += net.loads[i].p_nominal_mw * cfg.n_steps;
  for (const auto& [slot, ref] : sched.actions) {
    if (ref.kind != ComponentKind::Load) continue;
    const int s = cfg.slot_start_step(slot);
    served_steps += net.loads[ref.index].p_nominal_mw * (cfg.n_steps - s + 1);
  }
  return cfg.alpha * cfg.dt_s * served_steps / net.base_mva;
}

bool schedule_lex_less(const PowerNetwork& net, const CondensedSchedule& a,
                       const CondensedSchedule& b) {
  const auto key = [&](const std::pair<int, ComponentRef>& act) {
    return net.order_key(act.second);
  };
  return std::lexicographical_compare(
      a.actions.begin(), a.actions.end(), b.actions.begin(), b.actions.end(),
      [&](const auto& x, const auto& y) { return key(x) < key(y); });
}

namespace {

struct StopEval {
  std::vector<double> x;
  double energy = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

struct Incumbent {
  bool has = false;
  StopEval eval;
  CondensedSchedule sched;
};

struct EvalOutcome {
  std::optional<StopEval> stop;  // set when the stopping schedule is feasible
  bool window_ok = true;         // the prefix window admits some setpoints
  double window_penalty = 0.0;   // only when requested and window_ok
};

void atomic_max(std::atomic<double>& a, double v) {
  double cur = a.load(std::memory_order_relaxed);
  while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

class DynSearch {
 public:
  DynSearch(const PowerNetwork& net, const DynScheduleConfig& cfg)
      : net_(net),
        cfg_(cfg),
        n_slots_(cfg.dyn.condensed_slots()),
        ng_(static_cast<int>(net.generators.size())) {
    lower_bound_.store(-std::numeric_limits<double>::infinity());
  }

  DynResult run_exact() {
    const CondensedSchedule root{initial_configuration(net_), {}};
    Incumbent inc;
    visit_root(root, inc);

    // A one-slot horizon has no switching opportunity: the root is the
    // whole domain.
    std::vector<ComponentRef> first =
        n_slots_ >= 2 ? admissible_children(root) : std::vector<ComponentRef>{};
    const int workers = std::max(1, std::min<int>(cfg_.threads, static_cast<int>(first.size())));
    std::vector<Incumbent> found(workers);
    auto work = [&](int w) {
      Incumbent& mine = found[w];
      for (std::size_t i = w; i < first.size(); i += workers) {
        CondensedSchedule child = root;
        child.actions.push_back({2, first[i]});
        const Configuration cc = apply_switch(net_, root.initial, first[i]);
        if (bound_prune(child, cc, mine)) continue;
        dfs(child, cc, mine);
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (const Incumbent& f : found) merge(inc, f);
    return finish(inc, capped_.load() ? DynResult::Status::Capped : DynResult::Status::Optimal);
  }

  DynResult run_beam(int width) {
    struct Entry {
      CondensedSchedule sched;
      Configuration c;
      double merit = 0.0;
    };
    const CondensedSchedule root{initial_configuration(net_), {}};
    Incumbent inc;
    visit_root(root, inc);

    std::vector<Entry> frontier{{root, root.initial, 0.0}};
    for (int depth = 1; depth + 1 < n_slots_ + 1 && !frontier.empty(); ++depth) {
      if (capped_.load()) break;
      std::vector<Entry> children;
      for (const Entry& e : frontier)
        for (ComponentRef s : admissible_children(e.sched)) {
          Entry child{e.sched, apply_switch(net_, e.c, s), 0.0};
          child.sched.actions.push_back({depth + 1, s});
          children.push_back(std::move(child));
        }
      if (children.empty()) break;

      std::vector<EvalOutcome> outs(children.size());
      const int workers =
          std::max(1, std::min<int>(cfg_.threads, static_cast<int>(children.size())));
      auto work = [&](int w) {
        for (std::size_t i = w; i < children.size(); i += workers) {
          if (count_node()) return;
          outs[i] = evaluate(children[i].sched, /*decide_window=*/true,
                             /*want_window_penalty=*/true);
        }
      };
      if (workers == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
      }
      if (capped_.load()) break;  // a half-evaluated level has no usable merits

      std::vector<Entry> kept;
      for (std::size_t i = 0; i < children.size(); ++i) {
        const EvalOutcome& out = outs[i];
        if (out.stop) {
          offer(inc, children[i].sched, *out.stop);
          children[i].merit = out.stop->total;
        } else if (out.window_ok) {
          // The stop is infeasible but completions may recover: rank by the
          // certain part, served energy so far minus the window penalty.
          children[i].merit =
              schedule_energy_pu_s(net_, children[i].sched, cfg_.dyn) - out.window_penalty;
        } else {
          ++prefix_pruned_;
          continue;
        }
        kept.push_back(std::move(children[i]));
      }
      std::sort(kept.begin(), kept.end(), [&](const Entry& a, const Entry& b) {
        if (a.merit != b.merit) return a.merit > b.merit;
        return schedule_lex_less(net_, a.sched, b.sched);
      });
      // Entries with the same configuration and the same timed injections
      // are interchangeable: branch-order permutations leave the trajectory
      // and every completion untouched (a dead-end branch carries nothing),
      // so only the best-ranked representative stays.
      std::set<std::vector<int>> seen;
      std::vector<Entry> frontier_next;
      for (Entry& e : kept) {
        std::vector<int> sig{static_cast<int>(e.c.branches), static_cast<int>(e.c.gens),
                             static_cast<int>(e.c.loads)};
        for (const auto& [slot, ref] : e.sched.actions)
          if (ref.kind != ComponentKind::Branch) {
            sig.push_back(slot);
            sig.push_back(static_cast<int>(ref.kind));
            sig.push_back(ref.index);
          }
        if (!seen.insert(std::move(sig)).second) continue;
        frontier_next.push_back(std::move(e));
        if (width > 0 && static_cast<int>(frontier_next.size()) >= width) break;
      }
      frontier = std::move(frontier_next);
    }
    return finish(inc, capped_.load() ? DynResult::Status::Capped : DynResult::Status::Heuristic);
  }

  DynResult run_oracle() {
    const CondensedSchedule root{initial_configuration(net_), {}};
    Incumbent inc;
    Configuration c = root.initial;
    enumerate(root, c, inc);
    return finish(inc, DynResult::Status::Optimal);
  }

 private:
  // Every admissible next switch: legal on the growing tree and leaving a
  // statically dispatchable configuration.
  std::vector<ComponentRef> admissible_children(const CondensedSchedule& sched) {
    Configuration c = sched.initial;
    for (const auto& [slot, ref] : sched.actions) c = apply_switch(net_, c, ref);
    std::vector<ComponentRef> out;
    for (ComponentRef s : legal_switches(net_, c)) {
      if (!cache_.feasible(net_, apply_switch(net_, c, s))) {
        ++static_pruned_;
        continue;
      }
      out.push_back(s);
    }
    return out;
  }

  // True when the node counter passed the cap; sets the sticky flag.
  bool count_node() {
    ++nodes_;
    if (cfg_.node_cap >= 0 &&
        nodes_.load(std::memory_order_relaxed) > static_cast<std::uint64_t>(cfg_.node_cap)) {
      capped_.store(true);
      return true;
    }
    return capped_.load(std::memory_order_relaxed);
  }

  EvalOutcome evaluate(const CondensedSchedule& sched, bool decide_window,
                       bool want_window_penalty) {
    EvalOutcome out;
    const ResponseBasis rb = build_response_basis(net_, sched, cfg_.dyn);
    DvlpOptions sopt = cfg_.dvlp;
    sopt.minimize_penalty = true;
    sopt.cut_step = -1;
    DvlpResult stop = solve_dvlp(net_, rb, cfg_.dyn, sopt);
    ++lp_evals_;
    if (stop.status == DvlpResult::Status::RowGenCapped) ++lp_capped_;
    if (stop.status == DvlpResult::Status::Feasible) {
      StopEval ev;
      ev.x = stop.x;
      ev.energy = schedule_energy_pu_s(net_, sched, cfg_.dyn);
      ev.penalty = stop.penalty_pu_s;
      ev.total = ev.energy - ev.penalty;
      // A feasible stop satisfies every window row, so the window penalty it
      // implies is a valid (if loose) merit.
      out.window_penalty = ev.penalty;
      out.stop = std::move(ev);
      return out;
    }
    if (!decide_window) return out;
    const int next_slot = static_cast<int>(sched.actions.size()) + 2;
    if (next_slot > n_slots_) {
      out.window_ok = false;
      return out;
    }
    DvlpOptions wopt = cfg_.dvlp;
    wopt.minimize_penalty = want_window_penalty;
    wopt.cut_step = cfg_.dyn.slot_start_step(next_slot) - 1;
    DvlpResult win = solve_dvlp(net_, rb, cfg_.dyn, wopt);
    ++lp_evals_;
    if (win.status == DvlpResult::Status::RowGenCapped) ++lp_capped_;
    out.window_ok = win.status == DvlpResult::Status::Feasible;
    if (out.window_ok && want_window_penalty) out.window_penalty = win.penalty_pu_s;
    return out;
  }

  // Upper bound over every completion: certain served energy plus the
  // still-off loads, largest first, in the earliest remaining slots, with
  // zero penalty. True when the subtree cannot beat the shared incumbent.
  bool bound_prune(const CondensedSchedule& sched, const Configuration& c,
                   const Incumbent& local) {
    double ub = schedule_energy_pu_s(net_, sched, cfg_.dyn);
    std::vector<double> off;
    for (std::size_t i = 0; i < net_.loads.size(); ++i)
      if (!c.load_on(static_cast<int>(i))) off.push_back(net_.loads[i].p_nominal_mw);
    std::sort(off.begin(), off.end(), std::greater<>());
    const double scale = cfg_.dyn.alpha * cfg_.dyn.dt_s / net_.base_mva;
    int slot = static_cast<int>(sched.actions.size()) + 2;
    for (double p : off) {
      if (slot > n_slots_) break;
      ub += scale * p * (cfg_.dyn.n_steps - cfg_.dyn.slot_start_step(slot) + 1);
      ++slot;
    }
    double lb = lower_bound_.load(std::memory_order_relaxed);
    if (local.has && local.eval.total > lb) lb = local.eval.total;
    if (ub < lb) {  // strict: equal-total candidates stay for the lex rule
      ++bound_pruned_;
      return true;
    }
    return false;
  }

  void offer(Incumbent& inc, const CondensedSchedule& sched, const StopEval& ev) {
    std::lock_guard<std::mutex> lock(offer_mu_);
    if (accepts(inc, sched, ev.total)) {
      inc.has = true;
      inc.eval = ev;
      inc.sched = sched;
      atomic_max(lower_bound_, ev.total);
    }
  }

  bool accepts(const Incumbent& inc, const CondensedSchedule& sched, double total) const {
    if (!inc.has) return true;
    if (total != inc.eval.total) return total > inc.eval.total;
    return schedule_lex_less(net_, sched, inc.sched);
  }

  void merge(Incumbent& into, const Incumbent& from) const {
    if (!from.has) return;
    if (!into.has || accepts(into, from.sched, from.eval.total)) into = from;
  }

  void visit_root(const CondensedSchedule& root, Incumbent& inc) {
    count_node();
    EvalOutcome out = evaluate(root, /*decide_window=*/false, false);
    if (!out.stop)
      throw CaseError("", "no dynamically feasible schedule: the initial configuration "
                          "violates the band for every setpoint");
    offer(inc, root, *out.stop);
  }

  void dfs(const CondensedSchedule& sched, const Configuration& c, Incumbent& inc) {
    if (count_node()) return;
    const bool extendable = static_cast<int>(sched.actions.size()) + 2 <= n_slots_;
    EvalOutcome out =
        evaluate(sched, /*decide_window=*/extendable && cfg_.prefix_prune, false);
    if (out.stop) {
      if (accepts(inc, sched, out.stop->total)) {
        inc.has = true;
        inc.eval = *out.stop;
        inc.sched = sched;
        atomic_max(lower_bound_, out.stop->total);
      }
    } else if (cfg_.prefix_prune && !out.window_ok) {
      ++prefix_pruned_;
      return;
    }
    if (!extendable) return;
    const int next_slot = static_cast<int>(sched.actions.size()) + 2;
    Configuration cur = c;
    for (ComponentRef s : admissible_children(sched)) {
      CondensedSchedule child = sched;
      child.actions.push_back({next_slot, s});
      const Configuration cc = apply_switch(net_, cur, s);
      if (bound_prune(child, cc, inc)) continue;
      dfs(child, cc, inc);
    }
  }

  void enumerate(const CondensedSchedule& sched, const Configuration& c, Incumbent& inc) {
    ++nodes_;
    EvalOutcome out = evaluate(sched, false, false);
    if (out.stop && accepts(inc, sched, out.stop->total)) {
      inc.has = true;
      inc.eval = *out.stop;
      inc.sched = sched;
    }
    const int next_slot = static_cast<int>(sched.actions.size()) + 2;
    if (next_slot > n_slots_) return;
    for (ComponentRef s : legal_switches(net_, c)) {
      const Configuration cc = apply_switch(net_, c, s);
      if (!config_feasible(net_, cc)) continue;  // domain, unmemoized on purpose
      CondensedSchedule child = sched;
      child.actions.push_back({next_slot, s});
      enumerate(child, cc, inc);
    }
  }

  DynResult finish(const Incumbent& inc, DynResult::Status status) {
    if (!inc.has)
      throw CaseError("", "no dynamically feasible schedule: the initial configuration "
                          "violates the band for every setpoint");
    DynResult r;
    r.status = status;
    r.schedule = inc.sched;
    r.x_ref = inc.eval.x;
    if (r.x_ref.empty()) r.x_ref.assign(ng_, 0.0);
    r.trajectory = simulate(net_, inc.sched, r.x_ref, cfg_.dyn);
    r.objective = objective(net_, r.trajectory, cfg_.dyn);
    r.stats.nodes = nodes_.load();
    r.stats.static_pruned = static_pruned_.load();
    r.stats.bound_pruned = bound_pruned_.load();
    r.stats.prefix_pruned = prefix_pruned_.load();
    r.stats.lp_evals = lp_evals_.load();
    r.stats.lp_capped = lp_capped_.load();
    r.stats.capped = capped_.load();
    return r;
  }

  const PowerNetwork& net_;
  const DynScheduleConfig& cfg_;
  const int n_slots_;
  const int ng_;
  ConfigCache cache_;
  std::mutex offer_mu_;
  std::atomic<double> lower_bound_;
  std::atomic<std::uint64_t> nodes_{0};
  std::atomic<std::uint64_t> static_pruned_{0};
  std::atomic<std::uint64_t> bound_pruned_{0};
  std::atomic<std::uint64_t> prefix_pruned_{0};
  std::atomic<std::uint64_t> lp_evals_{0};
  std::atomic<std::uint64_t> lp_capped_{0};
  std::atomic<bool> capped_{false};
};

}  // namespace

DynResult solve_dynopfr(const PowerNetwork& net, const DynScheduleConfig& cfg,
                        const SearchMode& mode) {
  DynSearch search(net, cfg);
  if (mode.kind == SearchMode::Kind::Beam) return search.run_beam(mode.beam_width);
  return search.run_exact();
}

DynResult enumerate_dynopfr_oracle(const PowerNetwork& net, const DynScheduleConfig& cfg) {
  DynSearch search(net, cfg);
  return search.run_oracle();
}

CompareReport compare_static_dynamic(const PowerNetwork& net, const DynScheduleConfig& cfg,
                                     const SearchMode& mode) {
  CompareReport rep;
  const int t_static = cfg.dyn.condensed_slots() - 1;
  StaticResult st = solve_opfr(net, t_static);
  rep.static_schedule = st.schedule;
  rep.static_energy_mw_steps = st.energy_mw_steps;
  rep.static_mapped.initial = initial_configuration(net);
  for (const SwitchAction& a : st.schedule.actions)
    rep.static_mapped.actions.push_back({a.step + 1, a.component});

  const ResponseBasis rb = build_response_basis(net, rep.static_mapped, cfg.dyn);
  DvlpOptions opt = cfg.dvlp;
  opt.minimize_penalty = true;
  opt.cut_step = -1;
  DvlpResult verdict = solve_dvlp(net, rb, cfg.dyn, opt);
  rep.static_dynamically_feasible = verdict.status == DvlpResult::Status::Feasible;
  if (rep.static_dynamically_feasible) {
    rep.static_x_ref = verdict.x;
    rep.static_penalty_pu_s = verdict.penalty_pu_s;
    rep.static_total =
        schedule_energy_pu_s(net, rep.static_mapped, cfg.dyn) - verdict.penalty_pu_s;
  } else {
    rep.static_hard_infeasible = verdict.hard_infeasible;
    rep.static_min_band_width_hz = verdict.min_band_width_hz;
  }
  rep.dynamic = solve_dynopfr(net, cfg, mode);
  return rep;
}

}  // namespace psr
