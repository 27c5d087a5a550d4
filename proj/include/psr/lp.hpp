#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace psr {

// Bounds beyond +-kLpInf are treated as infinite.
constexpr double kLpInf = 1e30;

enum class RowSense { LE, EQ, GE };

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  RowSense sense = RowSense::LE;
  double rhs = 0.0;
};

// minimize objective . x  subject to rows and variable bounds
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  void check_well_formed() const;  // throws std::invalid_argument
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;  // structural variable values at the final point
  double objective = 0.0;
  int iterations = 0;
  // FNV hash of the pivot sequence; equal inputs must produce equal hashes.
  std::uint64_t pivot_hash = 0;
};

struct LpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-9;
  int max_iters = 50000;
  int refactor_every = 64;
  int bland_after = 30;  // consecutive degenerate pivots before Bland's rule
};

// Bounded-variable primal simplex, dense, explicit basis inverse. A solver
// instance is single-use from one thread; row generation re-solves warm from
// the previous basis with the new slack basic.
class SimplexSolver {
 public:
  explicit SimplexSolver(LinearProgram lp, LpOptions opt = {});

  LpSolution solve();
  void add_row(const LpRow& row);

  int num_rows() const { return m_; }

 private:
  enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free };

  void build_columns();
  void install_slack_basis();
  void refactorize();
  void recompute_basic_values();
  double infeasibility() const;
  std::vector<double> ftran(int col) const;
  // phase 1 prices against the infeasibility gradient, phase 2 against c
  bool price(bool phase1, bool bland, int& enter, int& dir);
  int ratio_test(bool phase1, int enter, int dir, const std::vector<double>& alpha,
                 double& step, int& leave_state);

  LinearProgram lp_;
  LpOptions opt_;
  int n_ = 0;  // structural count
  int m_ = 0;  // row count
  std::vector<std::vector<double>> col_;  // dense columns, structural only (slack cols are e_i)
  std::vector<double> lo_, hi_;           // per column incl. slacks
  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> basic_;       // row -> column
  std::vector<double> binv_;     // m x m row-major
  std::vector<double> rhs_;
  int pivots_since_refactor_ = 0;
  int iterations_ = 0;
  std::uint64_t pivot_hash_ = 1469598103934665603ull;
  bool basis_valid_ = false;
};

LpSolution lp_solve(const LinearProgram& lp, LpOptions opt = {});

struct FeasibilityResult {
  bool feasible = false;
  std::vector<double> point;  // satisfies all constraints within tol when feasible
};

// Phase-one only.
FeasibilityResult check_feasible(const LinearProgram& lp, LpOptions opt = {});

}  // namespace psr
