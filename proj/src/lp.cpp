#include "psr/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace psr {

namespace {

constexpr double kInfStep = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;
constexpr double kDegenerateStep = 1e-12;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v;
  h *= 1099511628211ull;
}

bool finite_lo(double v) { return v > -kLpInf; }
bool finite_hi(double v) { return v < kLpInf; }

}  // namespace

void LinearProgram::check_well_formed() const {
  const std::size_t n = objective.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("lp: objective/lower/upper size mismatch");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [j, c] : rows[r].coeffs) {
      (void)c;
      if (j < 0 || static_cast<std::size_t>(j) >= n) {
        throw std::invalid_argument("lp: row " + std::to_string(r) +
                                    " references variable " + std::to_string(j));
      }
    }
  }
}

SimplexSolver::SimplexSolver(LinearProgram lp, LpOptions opt)
    : lp_(std::move(lp)), opt_(opt) {
  lp_.check_well_formed();
}

void SimplexSolver::build_columns() {
  n_ = lp_.num_vars();
  m_ = static_cast<int>(lp_.rows.size());
  col_.assign(n_, std::vector<double>(m_, 0.0));
  rhs_.assign(m_, 0.0);
  lo_.assign(n_ + m_, 0.0);
  hi_.assign(n_ + m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = lp_.lower[j];
    hi_[j] = lp_.upper[j];
  }
  for (int i = 0; i < m_; ++i) {
    const LpRow& row = lp_.rows[i];
    rhs_[i] = row.rhs;
    for (const auto& [j, c] : row.coeffs) col_[j][i] += c;
    const int s = n_ + i;
    switch (row.sense) {
      case RowSense::LE:
        lo_[s] = 0.0;
        hi_[s] = kLpInf;
        break;
      case RowSense::GE:
        lo_[s] = -kLpInf;
        hi_[s] = 0.0;
        break;
      case RowSense::EQ:
        lo_[s] = 0.0;
        hi_[s] = 0.0;
        break;
    }
  }
}

void SimplexSolver::install_slack_basis() {
  build_columns();
  x_.assign(n_ + m_, 0.0);
  state_.assign(n_ + m_, VarState::AtLower);
  basic_.assign(m_, 0);
  for (int j = 0; j < n_; ++j) {
    if (finite_lo(lo_[j])) {
      state_[j] = VarState::AtLower;
      x_[j] = lo_[j];
    } else if (finite_hi(hi_[j])) {
      state_[j] = VarState::AtUpper;
      x_[j] = hi_[j];
    } else {
      state_[j] = VarState::Free;
      x_[j] = 0.0;
    }
  }
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    state_[n_ + i] = VarState::Basic;
    binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  }
  recompute_basic_values();
  pivots_since_refactor_ = 0;
  basis_valid_ = true;
}

void SimplexSolver::refactorize() {
  // Gauss-Jordan with partial pivoting on the current basis matrix.
  std::vector<double> b(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int k = 0; k < m_; ++k) {
    const int j = basic_[k];
    if (j < n_) {
      for (int i = 0; i < m_; ++i) b[static_cast<std::size_t>(i) * m_ + k] = col_[j][i];
    } else {
      b[static_cast<std::size_t>(j - n_) * m_ + k] = 1.0;
    }
  }
  std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) inv[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  for (int c = 0; c < m_; ++c) {
    int piv = c;
    double best = std::fabs(b[static_cast<std::size_t>(c) * m_ + c]);
    for (int i = c + 1; i < m_; ++i) {
      const double v = std::fabs(b[static_cast<std::size_t>(i) * m_ + c]);
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best < 1e-12) {
      // Degenerate basis from accumulated drift: restart from the slack basis.
      install_slack_basis();
      return;
    }
    if (piv != c) {
      for (int k = 0; k < m_; ++k) {
        std::swap(b[static_cast<std::size_t>(piv) * m_ + k], b[static_cast<std::size_t>(c) * m_ + k]);
        std::swap(inv[static_cast<std::size_t>(piv) * m_ + k], inv[static_cast<std::size_t>(c) * m_ + k]);
      }
    }
    const double d = b[static_cast<std::size_t>(c) * m_ + c];
    for (int k = 0; k < m_; ++k) {
      b[static_cast<std::size_t>(c) * m_ + k] /= d;
      inv[static_cast<std::size_t>(c) * m_ + k] /= d;
    }
    for (int i = 0; i < m_; ++i) {
      if (i == c) continue;
      const double f = b[static_cast<std::size_t>(i) * m_ + c];
      if (f == 0.0) continue;
      for (int k = 0; k < m_; ++k) {
        b[static_cast<std::size_t>(i) * m_ + k] -= f * b[static_cast<std::size_t>(c) * m_ + k];
        inv[static_cast<std::size_t>(i) * m_ + k] -= f * inv[static_cast<std::size_t>(c) * m_ + k];
      }
    }
  }
  binv_ = std::move(inv);
  pivots_since_refactor_ = 0;
}

void SimplexSolver::recompute_basic_values() {
  std::vector<double> v = rhs_;
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic) continue;
    const double xj = x_[j];
    if (xj == 0.0) continue;
    if (j < n_) {
      for (int i = 0; i < m_; ++i) v[i] -= col_[j][i] * xj;
    } else {
      v[j - n_] -= xj;
    }
  }
  for (int i = 0; i < m_; ++i) {
    double s = 0.0;
    const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
    for (int k = 0; k < m_; ++k) s += row[k] * v[k];
    x_[basic_[i]] = s;
  }
}

double SimplexSolver::infeasibility() const {
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    const int p = basic_[i];
    const double xp = x_[p];
    if (finite_lo(lo_[p]) && xp < lo_[p]) worst = std::max(worst, lo_[p] - xp);
    if (finite_hi(hi_[p]) && xp > hi_[p]) worst = std::max(worst, xp - hi_[p]);
  }
  return worst;
}

std::vector<double> SimplexSolver::ftran(int col) const {
  std::vector<double> alpha(m_, 0.0);
  if (col < n_) {
    const std::vector<double>& a = col_[col];
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
      for (int k = 0; k < m_; ++k) s += row[k] * a[k];
      alpha[i] = s;
    }
  } else {
    const int k = col - n_;
    for (int i = 0; i < m_; ++i) alpha[i] = binv_[static_cast<std::size_t>(i) * m_ + k];
  }
  return alpha;
}

bool SimplexSolver::price(bool phase1, bool bland, int& enter, int& dir) {
  // y = c_B B^-1 with c_B the real costs (phase 2) or the infeasibility
  // gradient of the basic variables (phase 1).
  std::vector<double> y(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const int p = basic_[i];
    double cb;
    if (phase1) {
      if (finite_lo(lo_[p]) && x_[p] < lo_[p] - opt_.feas_tol) {
        cb = -1.0;
      } else if (finite_hi(hi_[p]) && x_[p] > hi_[p] + opt_.feas_tol) {
        cb = 1.0;
      } else {
        continue;
      }
    } else {
      if (p >= n_) continue;
      cb = lp_.objective[p];
      if (cb == 0.0) continue;
    }
    const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
    for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
  }

  enter = -1;
  dir = 0;
  double best = opt_.opt_tol;
  for (int j = 0; j < n_ + m_; ++j) {
    const VarState st = state_[j];
    if (st == VarState::Basic) continue;
    if (lo_[j] == hi_[j]) continue;  // fixed, cannot move
    double d;
    if (j < n_) {
      d = phase1 ? 0.0 : lp_.objective[j];
      const std::vector<double>& a = col_[j];
      for (int i = 0; i < m_; ++i) d -= y[i] * a[i];
    } else {
      d = -y[j - n_];
    }
    int cand_dir = 0;
    if (st == VarState::AtLower && d < -opt_.opt_tol) cand_dir = 1;
    else if (st == VarState::AtUpper && d > opt_.opt_tol) cand_dir = -1;
    else if (st == VarState::Free && std::fabs(d) > opt_.opt_tol) cand_dir = d < 0.0 ? 1 : -1;
    if (cand_dir == 0) continue;
    if (bland) {
      enter = j;
      dir = cand_dir;
      return true;
    }
    if (std::fabs(d) > best) {
      best = std::fabs(d);
      enter = j;
      dir = cand_dir;
    }
  }
  return enter >= 0;
}

int SimplexSolver::ratio_test(bool phase1, int enter, int dir,
                              const std::vector<double>& alpha, double& step,
                              int& leave_state) {
  double t_own = kInfStep;
  if (finite_lo(lo_[enter]) && finite_hi(hi_[enter])) t_own = hi_[enter] - lo_[enter];

  double t_best = t_own;
  int leave = -1;
  double leave_alpha = 0.0;
  leave_state = 0;
  const double ftol = opt_.feas_tol;

  for (int i = 0; i < m_; ++i) {
    const double rate = -alpha[i] * dir;  // d x_basic[i] / d t
    if (std::fabs(rate) <= kPivotTol) continue;
    const int p = basic_[i];
    const double xp = x_[p];
    double target;
    int st;
    if (rate > 0.0) {
      if (phase1 && finite_lo(lo_[p]) && xp < lo_[p] - ftol) {
        target = lo_[p];
        st = static_cast<int>(VarState::AtLower);
      } else if (phase1 && finite_hi(hi_[p]) && xp > hi_[p] + ftol) {
        continue;  // moving further above, slope already priced in
      } else if (finite_hi(hi_[p])) {
        target = hi_[p];
        st = static_cast<int>(VarState::AtUpper);
      } else {
        continue;
      }
    } else {
      if (phase1 && finite_hi(hi_[p]) && xp > hi_[p] + ftol) {
        target = hi_[p];
        st = static_cast<int>(VarState::AtUpper);
      } else if (phase1 && finite_lo(lo_[p]) && xp < lo_[p] - ftol) {
        continue;
      } else if (finite_lo(lo_[p])) {
        target = lo_[p];
        st = static_cast<int>(VarState::AtLower);
      } else {
        continue;
      }
    }
    double t = (target - xp) / rate;
    if (t < 0.0) t = 0.0;
    bool take;
    if (t_best >= kInfStep) {
      take = true;
    } else {
      const double tie_tol = 1e-9 * (1.0 + std::fabs(t_best));
      if (t < t_best - tie_tol) {
        take = true;
      } else if (t <= t_best + tie_tol) {
        // Tie: prefer the larger pivot magnitude for stability; a tie with a
        // pure bound flip (leave < 0) goes to the blocking row.
        take = leave < 0 || std::fabs(alpha[i]) > std::fabs(leave_alpha) + 1e-12;
      } else {
        take = false;
      }
    }
    if (take) {
      t_best = std::min(t, t_best);
      leave = i;
      leave_alpha = alpha[i];
      leave_state = st;
    }
  }
  step = t_best;
  return leave;
}

LpSolution SimplexSolver::solve() {
  LpSolution sol;
  if (!basis_valid_) install_slack_basis();

  auto finish = [&](LpStatus status, int iters) {
    sol.status = status;
    sol.iterations = iters;
    sol.x.assign(x_.begin(), x_.begin() + n_);
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += lp_.objective[j] * x_[j];
    sol.objective = obj;
    sol.pivot_hash = pivot_hash_;
    return sol;
  };

  for (int j = 0; j < n_; ++j) {
    if (lp_.lower[j] > lp_.upper[j] + opt_.feas_tol) return finish(LpStatus::Infeasible, 0);
  }

  int local_iters = 0;
  int degenerate_streak = 0;
  int pivot_retries = 0;
  bool bland = false;
  bool phase1 = infeasibility() > opt_.feas_tol;

  while (true) {
    if (local_iters >= opt_.max_iters) return finish(LpStatus::IterationLimit, local_iters);
    const double infeas = infeasibility();
    if (phase1 && infeas <= opt_.feas_tol) {
      phase1 = false;
      degenerate_streak = 0;
      bland = false;
    } else if (!phase1 && infeas > 10.0 * opt_.feas_tol) {
      // Drift pushed a basic variable out of range; repair before optimizing.
      phase1 = true;
      degenerate_streak = 0;
      bland = false;
    }

    int enter, dir;
    if (!price(phase1, bland, enter, dir)) {
      if (phase1) return finish(LpStatus::Infeasible, local_iters);
      return finish(LpStatus::Optimal, local_iters);
    }

    std::vector<double> alpha = ftran(enter);
    double step;
    int leave_state;
    const int leave = ratio_test(phase1, enter, dir, alpha, step, leave_state);

    if (leave < 0 && step >= kInfStep) {
      if (phase1) {
        // Should be impossible with exact arithmetic; retry after a clean
        // refactorization before giving up.
        if (pivot_retries++ < 2) {
          refactorize();
          recompute_basic_values();
          continue;
        }
        return finish(LpStatus::Infeasible, local_iters);
      }
      return finish(LpStatus::Unbounded, local_iters);
    }

    if (leave >= 0 && std::fabs(alpha[leave]) < kPivotTol) {
      if (pivot_retries++ < 3) {
        refactorize();
        recompute_basic_values();
        continue;
      }
    }
    pivot_retries = 0;

    ++local_iters;
    ++iterations_;
    fnv_mix(pivot_hash_, static_cast<std::uint64_t>(enter) + 1);
    fnv_mix(pivot_hash_, leave >= 0 ? static_cast<std::uint64_t>(basic_[leave]) + 1 : 0ull);

    // Move the entering variable and its basic responses.
    for (int i = 0; i < m_; ++i) {
      if (alpha[i] != 0.0) x_[basic_[i]] -= alpha[i] * dir * step;
    }

    if (leave < 0) {
      // Bound flip.
      state_[enter] = state_[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
      x_[enter] = state_[enter] == VarState::AtLower ? lo_[enter] : hi_[enter];
    } else {
      const int p = basic_[leave];
      x_[enter] = x_[enter] + dir * step;
      state_[p] = static_cast<VarState>(leave_state);
      x_[p] = state_[p] == VarState::AtLower ? lo_[p] : hi_[p];
      basic_[leave] = enter;
      state_[enter] = VarState::Basic;

      // Product-form update of the inverse.
      const double piv = alpha[leave];
      double* rr = binv_.data() + static_cast<std::size_t>(leave) * m_;
      for (int k = 0; k < m_; ++k) rr[k] /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = alpha[i];
        if (f == 0.0) continue;
        double* ri = binv_.data() + static_cast<std::size_t>(i) * m_;
        for (int k = 0; k < m_; ++k) ri[k] -= f * rr[k];
      }
      if (++pivots_since_refactor_ >= opt_.refactor_every) {
        refactorize();
        recompute_basic_values();
      }
    }

    if (step <= kDegenerateStep) {
      if (++degenerate_streak > opt_.bland_after) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }
  }
}

void SimplexSolver::add_row(const LpRow& row) {
  for (const auto& [j, c] : row.coeffs) {
    (void)c;
    if (j < 0 || j >= lp_.num_vars()) throw std::invalid_argument("lp: add_row variable out of range");
  }
  if (!basis_valid_) {
    lp_.rows.push_back(row);
    return;
  }

  lp_.rows.push_back(row);
  const int old_m = m_;
  m_ += 1;
  rhs_.push_back(row.rhs);
  std::vector<double> arow(n_, 0.0);
  for (const auto& [j, c] : row.coeffs) arow[j] += c;
  for (int j = 0; j < n_; ++j) col_[j].push_back(arow[j]);

  double slo, shi;
  switch (row.sense) {
    case RowSense::LE: slo = 0.0; shi = kLpInf; break;
    case RowSense::GE: slo = -kLpInf; shi = 0.0; break;
    default: slo = 0.0; shi = 0.0; break;
  }
  lo_.push_back(slo);
  hi_.push_back(shi);

  double s = row.rhs;
  for (int j = 0; j < n_; ++j) s -= arow[j] * x_[j];
  x_.push_back(s);
  state_.push_back(VarState::Basic);

  // Bordered inverse: basis gains the new slack in the new row, so
  // Bnew^-1 = [[B^-1, 0], [-w, 1]] with w = a_B B^-1 over old basic columns.
  std::vector<double> w(old_m, 0.0);
  for (int i = 0; i < old_m; ++i) {
    const int p = basic_[i];
    const double ap = p < n_ ? arow[p] : 0.0;
    if (ap == 0.0) continue;
    const double* ri = binv_.data() + static_cast<std::size_t>(i) * old_m;
    for (int k = 0; k < old_m; ++k) w[k] += ap * ri[k];
  }
  std::vector<double> nb(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < old_m; ++i) {
    for (int k = 0; k < old_m; ++k) {
      nb[static_cast<std::size_t>(i) * m_ + k] = binv_[static_cast<std::size_t>(i) * old_m + k];
    }
  }
  for (int k = 0; k < old_m; ++k) nb[static_cast<std::size_t>(old_m) * m_ + k] = -w[k];
  nb[static_cast<std::size_t>(old_m) * m_ + old_m] = 1.0;
  binv_ = std::move(nb);
  basic_.push_back(n_ + old_m);

  // Slack column indices shifted structurally stay n_..n_+m-1 because the new
  // slack is appended at the end; existing labels are unchanged.
}

LpSolution lp_solve(const LinearProgram& lp, LpOptions opt) {
  SimplexSolver solver(lp, opt);
  return solver.solve();
}

FeasibilityResult check_feasible(const LinearProgram& lp, LpOptions opt) {
  LinearProgram zero = lp;
  std::fill(zero.objective.begin(), zero.objective.end(), 0.0);
  SimplexSolver solver(std::move(zero), opt);
  LpSolution sol = solver.solve();
  FeasibilityResult res;
  res.feasible = sol.status == LpStatus::Optimal;
  res.point = std::move(sol.x);
  return res;
}

}  // namespace psr
