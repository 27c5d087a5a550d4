#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstring>
#include <optional>
#include <random>
#include <vector>

#include "psr/lp.hpp"

using namespace psr;

namespace {

double row_value(const LpRow& row, const std::vector<double>& x) {
  double s = 0;
  for (auto [j, c] : row.coeffs) s += c * x[j];
  return s;
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double v = 0;
  for (int j = 0; j < lp.num_vars(); ++j) {
    if (lp.lower[j] > -kLpInf) v = std::max(v, lp.lower[j] - x[j]);
    if (lp.upper[j] < kLpInf) v = std::max(v, x[j] - lp.upper[j]);
  }
  for (const auto& row : lp.rows) {
    const double a = row_value(row, x);
    switch (row.sense) {
      case RowSense::LE: v = std::max(v, a - row.rhs); break;
      case RowSense::GE: v = std::max(v, row.rhs - a); break;
      case RowSense::EQ: v = std::max(v, std::fabs(a - row.rhs)); break;
    }
  }
  return v;
}

// Exhaustive vertex enumeration for LPs with <= 3 variables and finite boxes.
// Returns the optimal value, or nullopt when no vertex is feasible.
std::optional<double> vertex_oracle(const LinearProgram& lp) {
  const int n = lp.num_vars();
  REQUIRE(n <= 3);
  struct Ineq {
    std::array<double, 3> a{};
    double b = 0;
  };  // a.x <= b; equalities become two rows
  std::vector<Ineq> cons;
  for (int j = 0; j < n; ++j) {
    Ineq up{}, dn{};
    up.a[j] = 1;
    up.b = lp.upper[j];
    dn.a[j] = -1;
    dn.b = -lp.lower[j];
    cons.push_back(up);
    cons.push_back(dn);
  }
  for (const auto& row : lp.rows) {
    Ineq fwd{}, rev{};
    for (auto [j, c] : row.coeffs) {
      fwd.a[j] += c;
      rev.a[j] -= c;
    }
    fwd.b = row.rhs;
    rev.b = -row.rhs;
    if (row.sense == RowSense::LE) cons.push_back(fwd);
    else if (row.sense == RowSense::GE) cons.push_back(rev);
    else {
      cons.push_back(fwd);
      cons.push_back(rev);
    }
  }

  const int m = static_cast<int>(cons.size());
  std::optional<double> best;
  std::vector<int> pick(n);
  auto try_vertex = [&](const std::vector<int>& idx) {
    // Solve the n x n active system by Gaussian elimination.
    double a[3][4] = {};
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) a[r][c] = cons[idx[r]].a[c];
      a[r][n] = cons[idx[r]].b;
    }
    for (int c = 0; c < n; ++c) {
      int piv = -1;
      double bestp = 1e-9;
      for (int r = c; r < n; ++r)
        if (std::fabs(a[r][c]) > bestp) {
          bestp = std::fabs(a[r][c]);
          piv = r;
        }
      if (piv < 0) return;
      for (int k = 0; k <= n; ++k) std::swap(a[c][k], a[piv][k]);
      for (int r = 0; r < n; ++r) {
        if (r == c) continue;
        const double f = a[r][c] / a[c][c];
        for (int k = 0; k <= n; ++k) a[r][k] -= f * a[c][k];
      }
    }
    std::vector<double> x(n);
    for (int r = 0; r < n; ++r) x[r] = a[r][n] / a[r][r];
    for (const auto& con : cons) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += con.a[j] * x[j];
      if (s > con.b + 1e-7) return;
    }
    double obj = 0;
    for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
    if (!best || obj < *best) best = obj;
  };
  // All n-subsets of the constraint list.
  std::vector<int> idx(n);
  auto rec = [&](auto&& self, int start, int depth) -> void {
    if (depth == n) {
      try_vertex(idx);
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[depth] = i;
      self(self, i + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
  return best;
}

LinearProgram box(int n, std::vector<double> c, std::vector<double> lo, std::vector<double> hi) {
  LinearProgram lp;
  lp.objective = std::move(c);
  lp.lower = std::move(lo);
  lp.upper = std::move(hi);
  REQUIRE(lp.num_vars() == n);
  return lp;
}

}  // namespace

TEST_CASE("fixed variable equality") {
  LinearProgram lp = box(1, {0}, {0}, {2});
  lp.rows.push_back({{{0, 1.0}}, RowSense::EQ, 1.0});
  LpSolution s = lp_solve(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single variable maximization via negated objective") {
  LinearProgram lp = box(1, {-1}, {0}, {kLpInf});
  lp.rows.push_back({{{0, 1.0}}, RowSense::LE, 3.0});
  LpSolution s = lp_solve(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(-3.0));
}

TEST_CASE("two-variable equality and inequality mix") {
  LinearProgram lp = box(2, {1, 1}, {0, 0}, {5, 5});
  lp.rows.push_back({{{0, 1.0}, {1, 1.0}}, RowSense::GE, 2.0});
  lp.rows.push_back({{{0, 1.0}, {1, -1.0}}, RowSense::EQ, 0.0});
  LpSolution s = lp_solve(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.x[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("contradictory bounds-as-rows are infeasible") {
  LinearProgram lp = box(1, {0}, {-kLpInf}, {kLpInf});
  lp.rows.push_back({{{0, 1.0}}, RowSense::GE, 1.0});
  lp.rows.push_back({{{0, 1.0}}, RowSense::LE, 0.0});
  CHECK(lp_solve(lp).status == LpStatus::Infeasible);
}

TEST_CASE("crossed variable bounds are infeasible") {
  LinearProgram lp = box(1, {1}, {3}, {1});
  CHECK(lp_solve(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded detection") {
  SUBCASE("half-line") {
    LinearProgram lp = box(1, {-1}, {0}, {kLpInf});
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);
  }
  SUBCASE("free variable") {
    LinearProgram lp = box(1, {1}, {-kLpInf}, {kLpInf});
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);
  }
  SUBCASE("unbounded ray through a row") {
    LinearProgram lp = box(2, {-1, 0}, {0, 0}, {kLpInf, kLpInf});
    lp.rows.push_back({{{0, 1.0}, {1, -1.0}}, RowSense::LE, 1.0});
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);
  }
}

TEST_CASE("iteration limit is reported distinctly") {
  LinearProgram lp = box(3, {-1, -1, -1}, {0, 0, 0}, {1, 1, 1});
  lp.rows.push_back({{{0, 1.0}, {1, 1.0}, {2, 1.0}}, RowSense::LE, 2.5});
  LpOptions opt;
  opt.max_iters = 1;
  CHECK(lp_solve(lp, opt).status == LpStatus::IterationLimit);
}

TEST_CASE("empty program") {
  LinearProgram lp;
  LpSolution s = lp_solve(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.objective == 0.0);
  FeasibilityResult f = check_feasible(lp);
  CHECK(f.feasible);
  CHECK(f.point.empty());
}

TEST_CASE("check_feasible basics") {
  SUBCASE("no rows yields the origin for free variables") {
    LinearProgram lp = box(2, {3, -4}, {-kLpInf, -kLpInf}, {kLpInf, kLpInf});
    FeasibilityResult f = check_feasible(lp);
    CHECK(f.feasible);
    CHECK(f.point[0] == 0.0);
    CHECK(f.point[1] == 0.0);
  }
  SUBCASE("contradictory equalities") {
    LinearProgram lp = box(1, {0}, {-kLpInf}, {kLpInf});
    lp.rows.push_back({{{0, 1.0}}, RowSense::EQ, 0.0});
    lp.rows.push_back({{{0, 1.0}}, RowSense::EQ, 1.0});
    CHECK_FALSE(check_feasible(lp).feasible);
  }
  SUBCASE("certificate point satisfies constraints") {
    LinearProgram lp = box(3, {0, 0, 0}, {0, 0, 0}, {4, 4, 4});
    lp.rows.push_back({{{0, 1.0}, {1, 2.0}, {2, 1.0}}, RowSense::GE, 6.0});
    lp.rows.push_back({{{0, 1.0}, {1, -1.0}}, RowSense::EQ, 1.0});
    FeasibilityResult f = check_feasible(lp);
    REQUIRE(f.feasible);
    CHECK(max_violation(lp, f.point) <= 1e-7);
  }
}

TEST_CASE("duplicate coefficients on one variable accumulate") {
  LinearProgram lp = box(1, {-1}, {0}, {kLpInf});
  lp.rows.push_back({{{0, 1.0}, {0, 2.0}}, RowSense::LE, 6.0});  // 3x <= 6
  LpSolution s = lp_solve(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(2.0));
}

TEST_CASE("well-formedness checks") {
  LinearProgram lp;
  lp.objective = {1, 2};
  lp.lower = {0};
  lp.upper = {1, 1};
  CHECK_THROWS_AS(lp.check_well_formed(), std::invalid_argument);
  lp.lower = {0, 0};
  lp.rows.push_back({{{5, 1.0}}, RowSense::LE, 1.0});
  CHECK_THROWS_AS(lp.check_well_formed(), std::invalid_argument);
}

TEST_CASE("degenerate duplicate rows still terminate") {
  LinearProgram lp = box(2, {-1, -1}, {0, 0}, {10, 10});
  for (int i = 0; i < 6; ++i) lp.rows.push_back({{{0, 1.0}, {1, 1.0}}, RowSense::LE, 1.0});
  lp.rows.push_back({{{0, 1.0}, {1, -1.0}}, RowSense::LE, 1.0});
  LpOptions opt;
  opt.bland_after = 2;
  LpSolution s = lp_solve(lp, opt);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("box-only optimum sits at the objective-sign bounds") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ci(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    LinearProgram lp;
    lp.objective.resize(n);
    lp.lower.assign(n, 0);
    lp.upper.assign(n, 0);
    double expect = 0;
    for (int j = 0; j < n; ++j) {
      lp.objective[j] = ci(rng);
      lp.lower[j] = -1.0 - (rng() % 3);
      lp.upper[j] = 1.0 + (rng() % 3);
      expect += lp.objective[j] * (lp.objective[j] > 0 ? lp.lower[j]
                                   : lp.objective[j] < 0 ? lp.upper[j]
                                                         : lp.lower[j]);
    }
    LpSolution s = lp_solve(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("random small LPs match vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ci(-5, 5);
  std::uniform_int_distribution<int> ai(-4, 4);
  std::uniform_int_distribution<int> bi(-6, 6);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const int m = 1 + static_cast<int>(rng() % 4);
    LinearProgram lp;
    lp.objective.resize(n);
    lp.lower.resize(n);
    lp.upper.resize(n);
    for (int j = 0; j < n; ++j) {
      lp.objective[j] = ci(rng);
      lp.lower[j] = -3.0 - (rng() % 2);
      lp.upper[j] = 2.0 + (rng() % 3);
    }
    for (int r = 0; r < m; ++r) {
      LpRow row;
      for (int j = 0; j < n; ++j) {
        const int a = ai(rng);
        if (a != 0) row.coeffs.push_back({j, static_cast<double>(a)});
      }
      row.sense = (rng() % 3 == 0) ? RowSense::GE : RowSense::LE;
      row.rhs = bi(rng);
      lp.rows.push_back(row);
    }
    LpSolution s = lp_solve(lp);
    std::optional<double> oracle = vertex_oracle(lp);
    if (oracle) {
      ++feasible_seen;
      REQUIRE_MESSAGE(s.status == LpStatus::Optimal, "trial ", trial);
      CHECK_MESSAGE(std::fabs(s.objective - *oracle) <= 1e-6 * (1 + std::fabs(*oracle)),
                    "trial ", trial, " simplex ", s.objective, " oracle ", *oracle);
      CHECK(max_violation(lp, s.x) <= 1e-6);
    } else {
      ++infeasible_seen;
      REQUIRE_MESSAGE(s.status == LpStatus::Infeasible, "trial ", trial);
    }
  }
  // The generator must exercise both verdicts or the test is vacuous.
  CHECK(feasible_seen > 50);
  CHECK(infeasible_seen > 20);
}

TEST_CASE("duality spot check on random primal-dual pairs") {
  // Primal: min c.x s.t. A x >= b, x >= 0 (rows <= 3 so the dual has <= 3
  // variables). Dual: max b.y s.t. A^T y <= c, y >= 0, solved by vertex
  // enumeration through the oracle with a negated objective.
  std::mt19937_64 rng(515);
  std::uniform_int_distribution<int> ci(1, 6);
  std::uniform_int_distribution<int> ai(-3, 4);
  std::uniform_int_distribution<int> bi(-4, 5);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> A(m, std::vector<double>(n));
    std::vector<double> b(m), c(n);
    for (int j = 0; j < n; ++j) c[j] = ci(rng);  // c > 0 keeps the primal bounded
    for (int r = 0; r < m; ++r) {
      b[r] = bi(rng);
      for (int j = 0; j < n; ++j) A[r][j] = ai(rng);
    }

    LinearProgram primal;
    primal.objective = c;
    primal.lower.assign(n, 0.0);
    primal.upper.assign(n, kLpInf);
    for (int r = 0; r < m; ++r) {
      LpRow row;
      for (int j = 0; j < n; ++j)
        if (A[r][j] != 0) row.coeffs.push_back({j, A[r][j]});
      row.sense = RowSense::GE;
      row.rhs = b[r];
      primal.rows.push_back(row);
    }
    LpSolution ps = lp_solve(primal);
    if (ps.status != LpStatus::Optimal) continue;

    LinearProgram dual;  // min (-b).y s.t. A^T y <= c, 0 <= y <= big box
    dual.objective.resize(m);
    dual.lower.assign(m, 0.0);
    dual.upper.assign(m, 1e6);  // finite box for the vertex oracle; never binds
    for (int r = 0; r < m; ++r) dual.objective[r] = -b[r];
    for (int j = 0; j < n; ++j) {
      LpRow row;
      for (int r = 0; r < m; ++r)
        if (A[r][j] != 0) row.coeffs.push_back({r, A[r][j]});
      row.sense = RowSense::LE;
      row.rhs = c[j];
      dual.rows.push_back(row);
    }
    std::optional<double> dopt = vertex_oracle(dual);
    REQUIRE(dopt);  // y = 0 is always feasible here
    ++checked;
    CHECK_MESSAGE(std::fabs(ps.objective - (-*dopt)) <= 1e-7 * (1 + std::fabs(ps.objective)),
                  "trial ", trial, " primal ", ps.objective, " dual ", -*dopt);
  }
  CHECK(checked > 100);
}

TEST_CASE("optimality certificate under single-variable perturbation") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> ci(-5, 5);
  std::uniform_int_distribution<int> ai(-4, 4);
  const double tol = 1e-7;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    LinearProgram lp;
    lp.objective.resize(n);
    lp.lower.assign(n, -4.0);
    lp.upper.assign(n, 4.0);
    double cmax = 0;
    for (int j = 0; j < n; ++j) {
      lp.objective[j] = ci(rng);
      cmax = std::max(cmax, std::fabs(lp.objective[j]));
    }
    for (int r = 0; r < 3; ++r) {
      LpRow row;
      for (int j = 0; j < n; ++j) {
        const int a = ai(rng);
        if (a != 0) row.coeffs.push_back({j, static_cast<double>(a)});
      }
      row.sense = RowSense::LE;
      row.rhs = 2.0 + (rng() % 5);
      lp.rows.push_back(row);
    }
    LpSolution s = lp_solve(lp);
    if (s.status != LpStatus::Optimal) continue;
    for (int j = 0; j < n; ++j) {
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> xp = s.x;
        xp[j] += sgn * tol;
        if (max_violation(lp, xp) > 1e-7) continue;  // not a feasible direction
        double obj = 0;
        for (int k = 0; k < n; ++k) obj += lp.objective[k] * xp[k];
        CHECK(obj >= s.objective - tol * cmax - 1e-12);
      }
    }
  }
}

TEST_CASE("determinism: identical input, identical pivots and bits") {
  std::mt19937_64 seed_rng(4242);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t seed = seed_rng();
    auto make = [&]() {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> ci(-5, 5);
      std::uniform_int_distribution<int> ai(-4, 4);
      const int n = 2 + static_cast<int>(rng() % 4);
      LinearProgram lp;
      lp.objective.resize(n);
      lp.lower.assign(n, -2.0);
      lp.upper.assign(n, 3.0);
      for (int j = 0; j < n; ++j) lp.objective[j] = ci(rng);
      for (int r = 0; r < 4; ++r) {
        LpRow row;
        for (int j = 0; j < n; ++j) {
          const int a = ai(rng);
          if (a != 0) row.coeffs.push_back({j, static_cast<double>(a)});
        }
        row.sense = rng() % 2 ? RowSense::LE : RowSense::GE;
        row.rhs = static_cast<double>(static_cast<int>(rng() % 13) - 6);
        lp.rows.push_back(row);
      }
      return lp;
    };
    LpSolution a = lp_solve(make());
    LpSolution b = lp_solve(make());
    CHECK(a.status == b.status);
    CHECK(a.pivot_hash == b.pivot_hash);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.x.size() == b.x.size());
    CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("row generation warm start matches cold solve") {
  LinearProgram lp = box(2, {-1, -1}, {0, 0}, {10, 10});
  lp.rows.push_back({{{0, 1.0}, {1, 1.0}}, RowSense::LE, 12.0});

  SimplexSolver warm(lp);
  LpSolution s1 = warm.solve();
  REQUIRE(s1.status == LpStatus::Optimal);
  CHECK(s1.objective == doctest::Approx(-12.0));

  LpRow cap_x{{{0, 1.0}}, RowSense::LE, 4.0};
  LpRow cap_y{{{1, 1.0}}, RowSense::LE, 5.0};
  warm.add_row(cap_x);
  LpSolution s2 = warm.solve();
  REQUIRE(s2.status == LpStatus::Optimal);
  CHECK(s2.objective == doctest::Approx(-12.0));  // x=4, y=8
  CHECK(s2.x[0] == doctest::Approx(4.0));
  warm.add_row(cap_y);
  LpSolution s3 = warm.solve();
  REQUIRE(s3.status == LpStatus::Optimal);
  CHECK(s3.objective == doctest::Approx(-9.0));

  LinearProgram cold = lp;
  cold.rows.push_back(cap_x);
  cold.rows.push_back(cap_y);
  LpSolution sc = lp_solve(cold);
  REQUIRE(sc.status == LpStatus::Optimal);
  CHECK(sc.objective == doctest::Approx(s3.objective).epsilon(1e-10));
  CHECK(max_violation(cold, s3.x) <= 1e-7);
}

TEST_CASE("row generation stress against cold solves") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> ci(-5, 5);
  std::uniform_int_distribution<int> ai(-4, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    LinearProgram lp;
    lp.objective.resize(n);
    lp.lower.assign(n, -5.0);
    lp.upper.assign(n, 5.0);
    for (int j = 0; j < n; ++j) lp.objective[j] = ci(rng);
    SimplexSolver warm(lp);
    LpSolution ws = warm.solve();
    REQUIRE(ws.status == LpStatus::Optimal);
    LinearProgram acc = lp;
    bool infeasible = false;
    for (int r = 0; r < 5 && !infeasible; ++r) {
      LpRow row;
      for (int j = 0; j < n; ++j) {
        const int a = ai(rng);
        if (a != 0) row.coeffs.push_back({j, static_cast<double>(a)});
      }
      row.sense = rng() % 2 ? RowSense::LE : RowSense::GE;
      row.rhs = static_cast<double>(static_cast<int>(rng() % 9) - 4);
      warm.add_row(row);
      acc.rows.push_back(row);
      ws = warm.solve();
      LpSolution cs = lp_solve(acc);
      REQUIRE(ws.status == cs.status);
      if (cs.status == LpStatus::Optimal) {
        CHECK_MESSAGE(std::fabs(ws.objective - cs.objective) <= 1e-7 * (1 + std::fabs(cs.objective)),
                      "trial ", trial, " row ", r);
        CHECK(max_violation(acc, ws.x) <= 1e-6);
      } else {
        infeasible = true;
      }
    }
  }
}
