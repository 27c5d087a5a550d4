#include "psr/dvlp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>

#include "psr/lp.hpp"

namespace psr {

namespace {

void subtract_numeric(Trajectory& a, const Trajectory& b) {
  auto sub2 = [](std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& v) {
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u[i].size(); ++j) u[i][j] -= v[i][j];
  };
  sub2(a.delta_omega, b.delta_omega);
  sub2(a.p_set, b.p_set);
  sub2(a.p_m, b.p_m);
  sub2(a.p_e, b.p_e);
  sub2(a.theta, b.theta);
  sub2(a.branch_flow, b.branch_flow);
  for (std::size_t t = 0; t < a.served_mw.size(); ++t) a.served_mw[t] -= b.served_mw[t];
  a.violations.clear();
  a.pickups.clear();
  a.max_abs_delta_omega_connected = 0.0;
  a.max_p_m = 0.0;
}

}  // namespace

ResponseBasis build_response_basis(const PowerNetwork& net, const CondensedSchedule& sched,
                                   const DynConfig& cfg, Scheme scheme) {
  ResponseBasis rb;
  const int ng = static_cast<int>(net.generators.size());
  std::vector<double> x(ng, 0.0);
  rb.base = simulate(net, sched, x, cfg, scheme);
  for (int g = 0; g < ng; ++g) {
    x.assign(ng, 0.0);
    x[g] = 1.0;
    Trajectory u = simulate(net, sched, x, cfg, scheme);
    subtract_numeric(u, rb.base);
    rb.unit.push_back(std::move(u));
  }
  return rb;
}

double basis_delta_omega(const ResponseBasis& rb, const std::vector<double>& x, int gen,
                         int step) {
  double v = rb.base.delta_omega[gen][step];
  for (std::size_t k = 0; k < rb.unit.size(); ++k)
    v += x[k] * rb.unit[k].delta_omega[gen][step];
  return v;
}

double basis_p_m(const ResponseBasis& rb, const std::vector<double>& x, int gen, int step) {
  double v = rb.base.p_m[gen][step];
  for (std::size_t k = 0; k < rb.unit.size(); ++k) v += x[k] * rb.unit[k].p_m[gen][step];
  return v;
}

namespace {

// Row identity for deduplication: family, generator, step.
enum RowFamily { kBandHi, kBandLo, kPmHi, kPmLo, kSyncHi, kSyncLo, kCut };
using RowKey = std::tuple<int, int, int>;

class DvlpEngine {
 public:
  DvlpEngine(const PowerNetwork& net, const ResponseBasis& rb, const DynConfig& cfg,
             const DvlpOptions& opt)
      : net_(net), rb_(rb), cfg_(cfg), opt_(opt) {
    ng_ = static_cast<int>(net.generators.size());
    cut_ = opt.cut_step < 0 ? cfg.n_steps : std::min(opt.cut_step, cfg.n_steps);
    band_ = cfg.band_rad_s();
  }

  DvlpResult run() {
    DvlpResult res = phase(false);
    if (res.status != DvlpResult::Status::Infeasible) return res;
    // Feasibility failed: price the band instead. The width variable w
    // replaces the fixed band in every band row and is minimized, so the
    // result tells how wide the corridor must be before setpoints exist.
    DvlpResult cert = phase(true);
    if (cert.status == DvlpResult::Status::Infeasible) {
      res.hard_infeasible = true;  // sync or P_m rows conflict on their own
    } else {
      res.min_band_width_hz = cert.min_band_width_hz;
      res.x = cert.x;  // least-violating setpoints, useful for reporting
      res.penalty_pu_s = penalty(cert.x);
    }
    res.rounds += cert.rounds;
    res.rows += cert.rows;
    return res;
  }

 private:
  bool connected(int g, int t) const { return rb_.base.connected[g][t] != 0; }

  double dw(const std::vector<double>& x, int g, int t) const {
    return basis_delta_omega(rb_, x, g, t);
  }
  double pm(const std::vector<double>& x, int g, int t) const {
    return basis_p_m(rb_, x, g, t);
  }

  double penalty(const std::vector<double>& x) const {
    double dev = 0.0;
    for (int t = 1; t <= cut_; ++t)
      for (int g = 0; g < ng_; ++g) dev += std::abs(dw(x, g, t));
    return cfg_.beta * cfg_.dt_s * dev / net_.omega_nom();
  }

  std::vector<double> penalty_gradient(const std::vector<double>& x) const {
    std::vector<double> grad(ng_, 0.0);
    const double scale = cfg_.beta * cfg_.dt_s / net_.omega_nom();
    for (int t = 1; t <= cut_; ++t)
      for (int g = 0; g < ng_; ++g) {
        const double v = dw(x, g, t);
        if (v == 0.0) continue;
        const double s = v > 0.0 ? scale : -scale;
        for (int k = 0; k < ng_; ++k) grad[k] += s * rb_.unit[k].delta_omega[g][t];
      }
    return grad;
  }

  // One LP build/solve cycle. price_band = false: fixed band, optional
  // penalty epigraph. price_band = true: extra variable w bounding every
  // |dw| row, minimized.
  DvlpResult phase(bool price_band) {
    const bool with_p = !price_band && opt_.minimize_penalty;
    const int xvars = ng_;
    pvar_ = with_p ? xvars : -1;
    wvar_ = price_band ? xvars : -1;
    const int nvars = xvars + (with_p || price_band ? 1 : 0);

    LinearProgram lp;
    lp.objective.assign(nvars, 0.0);
    lp.lower.assign(nvars, -opt_.box_rad_s);
    lp.upper.assign(nvars, opt_.box_rad_s);
    if (with_p) {
      lp.objective[pvar_] = 1.0;
      lp.lower[pvar_] = 0.0;
      lp.upper[pvar_] = kLpInf;
    }
    if (price_band) {
      lp.objective[wvar_] = 1.0;
      lp.lower[wvar_] = 0.0;
      lp.upper[wvar_] = kLpInf;
    }

    added_.clear();
    pending_.clear();
    seed_rows(price_band);
    for (const LpRow& row : pending_) lp.rows.push_back(row);
    pending_.clear();

    SimplexSolver solver(lp, LpOptions{});
    DvlpResult res;
    res.x.assign(ng_, 0.0);
    int rows_total = static_cast<int>(lp.rows.size());
    std::vector<double> prev_x;
    double prev_p = kLpInf;

    for (int round = 1; round <= opt_.max_rounds; ++round) {
      LpSolution sol = solver.solve();
      res.rounds = round;
      if (sol.status == LpStatus::Infeasible) {
        res.status = DvlpResult::Status::Infeasible;
        res.rows = rows_total;
        return res;
      }
      if (sol.status != LpStatus::Optimal) {
        res.status = DvlpResult::Status::RowGenCapped;
        res.rows = rows_total;
        return res;
      }
      std::vector<double> x(sol.x.begin(), sol.x.begin() + ng_);
      const double wstar = price_band ? sol.x[wvar_] : band_;

      bool added = false;
      added |= add_violated_band(x, wstar, price_band);
      added |= add_violated_pm(x);
      if (with_p) {
        const double pen = penalty(x);
        const double gap = pen - sol.x[pvar_];
        // The cut tolerance must sit above the simplex feasibility tolerance
        // or the loop livelocks re-adding a cut the solver cannot see.
        const double tol = std::max(1e-6, 1e-8 * std::abs(pen));
        if (gap > tol) {
          if (!added && x == prev_x && sol.x[pvar_] == prev_p) {
            // Identical vertex twice: the remaining gap is below what the
            // solver resolves. Accept the incumbent.
          } else {
            add_penalty_cut(x, pen);
            added = true;
          }
        }
        prev_x = x;
        prev_p = sol.x[pvar_];
      }
      if (!pending_.empty()) {
        for (const LpRow& row : pending_) solver.add_row(row);
        rows_total += static_cast<int>(pending_.size());
        pending_.clear();
      }
      if (!added) {
        res.status = DvlpResult::Status::Feasible;
        res.x = x;
        res.penalty_pu_s = penalty(x);
        if (price_band) res.min_band_width_hz = wstar / (2.0 * kPi);
        res.rows = rows_total;
        if (!price_band) collect_binding(res);
        return res;
      }
    }
    res.status = DvlpResult::Status::RowGenCapped;
    res.rows = rows_total;
    return res;
  }

  void seed_rows(bool price_band) {
    // Band rows at the extremal step of every basis trajectory: the places
    // the corridor is most likely to pinch.
    for (int g = 0; g < ng_; ++g) {
      auto seed_extreme = [&](const std::vector<double>& trace) {
        int best = -1;
        double mag = -1.0;
        for (int t = 0; t <= cut_; ++t) {
          if (!connected(g, t)) continue;
          if (std::abs(trace[t]) > mag) {
            mag = std::abs(trace[t]);
            best = t;
          }
        }
        if (best >= 0) {
          push_band(g, best, true, price_band);
          push_band(g, best, false, price_band);
        }
      };
      seed_extreme(rb_.base.delta_omega[g]);
      for (int k = 0; k < ng_; ++k) seed_extreme(rb_.unit[k].delta_omega[g]);
    }
    for (const auto& p : rb_.base.pickups) {
      if (p.step > cut_) continue;
      push_sync(p.gen, p.step, true);
      push_sync(p.gen, p.step, false);
    }
  }

  void push_band(int g, int t, bool hi, bool price_band) {
    if (!added_.insert({hi ? kBandHi : kBandLo, g, t}).second) return;
    LpRow row;
    const double sgn = hi ? 1.0 : -1.0;
    for (int k = 0; k < ng_; ++k) {
      const double c = sgn * rb_.unit[k].delta_omega[g][t];
      if (c != 0.0) row.coeffs.push_back({k, c});
    }
    row.sense = RowSense::LE;
    if (price_band) {
      row.coeffs.push_back({wvar_, -1.0});
      row.rhs = -sgn * rb_.base.delta_omega[g][t];
    } else {
      row.rhs = band_ - sgn * rb_.base.delta_omega[g][t];
    }
    pending_.push_back(std::move(row));
  }

  void push_pm(int g, int t, bool hi) {
    if (!added_.insert({hi ? kPmHi : kPmLo, g, t}).second) return;
    LpRow row;
    const double sgn = hi ? 1.0 : -1.0;
    for (int k = 0; k < ng_; ++k) {
      const double c = sgn * rb_.unit[k].p_m[g][t];
      if (c != 0.0) row.coeffs.push_back({k, c});
    }
    row.sense = RowSense::LE;
    const Generator& gen = net_.generators[g];
    row.rhs = hi ? gen.p_max_mw - rb_.base.p_m[g][t] : rb_.base.p_m[g][t] - gen.p_min_mw;
    pending_.push_back(std::move(row));
  }

  void push_sync(int g, int t, bool hi) {
    if (!added_.insert({hi ? kSyncHi : kSyncLo, g, t}).second) return;
    const int lead = net_.leading_bsu_index();
    LpRow row;
    const double sgn = hi ? 1.0 : -1.0;
    for (int k = 0; k < ng_; ++k) {
      const double c =
          sgn * (rb_.unit[k].delta_omega[g][t] - rb_.unit[k].delta_omega[lead][t]);
      if (c != 0.0) row.coeffs.push_back({k, c});
    }
    row.sense = RowSense::LE;
    row.rhs = cfg_.epsilon_rad_s -
              sgn * (rb_.base.delta_omega[g][t] - rb_.base.delta_omega[lead][t]);
    pending_.push_back(std::move(row));
  }

  void add_penalty_cut(const std::vector<double>& x, double pen) {
    const std::vector<double> grad = penalty_gradient(x);
    LpRow row;
    double rhs = -pen;
    for (int k = 0; k < ng_; ++k) {
      if (grad[k] != 0.0) row.coeffs.push_back({k, grad[k]});
      rhs += grad[k] * x[k];
    }
    row.coeffs.push_back({pvar_, -1.0});
    row.sense = RowSense::LE;
    row.rhs = rhs;
    pending_.push_back(std::move(row));
  }

  bool add_violated_band(const std::vector<double>& x, double width, bool price_band) {
    struct Hit {
      double viol;
      int g, t;
      bool hi;
    };
    std::vector<Hit> hits;
    for (int g = 0; g < ng_; ++g)
      for (int t = 0; t <= cut_; ++t) {
        if (!connected(g, t)) continue;
        const double v = dw(x, g, t);
        if (v - width > opt_.feas_tol) hits.push_back({v - width, g, t, true});
        if (-v - width > opt_.feas_tol) hits.push_back({-v - width, g, t, false});
      }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return std::tie(b.viol, a.g, a.t, a.hi) < std::tie(a.viol, b.g, b.t, b.hi);
    });
    bool added = false;
    int taken = 0;
    for (const Hit& h : hits) {
      if (taken >= opt_.rows_per_round) break;
      const std::size_t before = pending_.size();
      push_band(h.g, h.t, h.hi, price_band);
      if (pending_.size() > before) {
        added = true;
        ++taken;
      }
    }
    return added;
  }

  bool add_violated_pm(const std::vector<double>& x) {
    struct Hit {
      double viol;
      int g, t;
      bool hi;
    };
    std::vector<Hit> hits;
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      for (int t = 0; t <= cut_; ++t) {
        if (!connected(g, t)) continue;
        const double v = pm(x, g, t);
        if (v - gen.p_max_mw > opt_.feas_tol) hits.push_back({v - gen.p_max_mw, g, t, true});
        if (gen.p_min_mw - v > opt_.feas_tol) hits.push_back({gen.p_min_mw - v, g, t, false});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return std::tie(b.viol, a.g, a.t, a.hi) < std::tie(a.viol, b.g, b.t, b.hi);
    });
    bool added = false;
    int taken = 0;
    for (const Hit& h : hits) {
      if (taken >= opt_.rows_per_round) break;
      const std::size_t before = pending_.size();
      push_pm(h.g, h.t, h.hi);
      if (pending_.size() > before) {
        added = true;
        ++taken;
      }
    }
    return added;
  }

  void collect_binding(DvlpResult& res) const {
    const double slack = 1e-6;
    for (int t = 0; t <= cut_; ++t)
      for (int g = 0; g < ng_; ++g) {
        if (!connected(g, t)) continue;
        const double v = dw(res.x, g, t);
        if (v >= band_ - slack) res.binding.push_back({DvlpBinding::BandHigh, g, t});
        if (-v >= band_ - slack) res.binding.push_back({DvlpBinding::BandLow, g, t});
        const double m = pm(res.x, g, t);
        const Generator& gen = net_.generators[g];
        if (m >= gen.p_max_mw - slack) res.binding.push_back({DvlpBinding::PmHigh, g, t});
        if (m <= gen.p_min_mw + slack) res.binding.push_back({DvlpBinding::PmLow, g, t});
      }
    const int lead = net_.leading_bsu_index();
    for (const auto& p : rb_.base.pickups) {
      if (p.step > cut_) continue;
      const double mism =
          std::abs(dw(res.x, p.gen, p.step) - dw(res.x, lead, p.step));
      if (mism >= cfg_.epsilon_rad_s - slack)
        res.binding.push_back({DvlpBinding::Sync, p.gen, p.step});
    }
  }

  const PowerNetwork& net_;
  const ResponseBasis& rb_;
  DynConfig cfg_;
  DvlpOptions opt_;
  int ng_ = 0;
  int cut_ = 0;
  int pvar_ = -1;
  int wvar_ = -1;
  double band_ = 0.0;
  std::set<RowKey> added_;
  std::vector<LpRow> pending_;
};

}  // namespace

DvlpResult solve_dvlp(const PowerNetwork& net, const ResponseBasis& rb, const DynConfig& cfg,
                      const DvlpOptions& opt) {
  return DvlpEngine(net, rb, cfg, opt).run();
}

DvlpResult solve_dvlp(const PowerNetwork& net, const CondensedSchedule& sched,
                      const DynConfig& cfg, const DvlpOptions& opt) {
  const ResponseBasis rb = build_response_basis(net, sched, cfg);
  return solve_dvlp(net, rb, cfg, opt);
}

}  // namespace psr
