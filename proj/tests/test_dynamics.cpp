#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "psr/dynamics.hpp"
#include "psr/model.hpp"

using namespace psr;

namespace {

PowerNetwork one_machine(const GenDynamics& dyn, double load_mw) {
  PowerNetwork net;
  net.buses = {{1, true}};
  net.generators = {{1, 1, GenKind::BSU, 0.0, 400.0, dyn}};
  if (load_mw > 0.0) net.loads = {{1, 1, load_mw}};
  net.validate();
  return net;
}

double droop_settle(const GenDynamics& d, double x, double p) {
  return (d.turbine_gain_k * x - d.droop_sigma * p) /
         (d.turbine_gain_k + d.droop_sigma * d.damping_d);
}

// The 16-slot reference switching plan on the condensed grid, one action per slot.
CondensedSchedule reference_schedule(const PowerNetwork& net) {
  CondensedSchedule s;
  s.initial = initial_configuration(net);
  auto br = [](int i) { return ComponentRef{ComponentKind::Branch, i}; };
  auto ld = [](int i) { return ComponentRef{ComponentKind::Load, i}; };
  auto gn = [](int i) { return ComponentRef{ComponentKind::Generator, i}; };
  s.actions = {
      {2, br(0)},  {3, br(4)},  {4, ld(3)},  {5, ld(4)},   {6, ld(5)},
      {7, br(3)},  {8, br(5)},  {9, br(1)},  {10, gn(1)},  {11, ld(0)},
      {12, ld(1)}, {13, ld(2)}, {14, br(7)}, {15, ld(6)},  {16, ld(7)},
  };
  return s;
}

}  // namespace

TEST_CASE("slot grid arithmetic") {
  DynConfig cfg;  // 0.5 s steps, 712.5 s horizon, 45 s slots
  CHECK(cfg.condensed_slots() == 16);
  CHECK(cfg.slot_start_step(1) == 0);
  CHECK(cfg.slot_start_step(2) == 90);
  CHECK(cfg.slot_start_step(16) == 1350);
  CHECK(cfg.slot_of_step(0) == 1);
  CHECK(cfg.slot_of_step(89) == 1);
  CHECK(cfg.slot_of_step(90) == 2);
  CHECK(cfg.slot_of_step(1349) == 15);
  CHECK(cfg.slot_of_step(1350) == 16);
  CHECK(cfg.slot_of_step(1425) == 16);  // tail of the last slot

  DynConfig bad = cfg;
  bad.dt_s = 0.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = cfg;
  bad.kappa_s = 0.1;  // below dt
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = cfg;
  bad.df_max_hz = -1.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("init state worked example") {
  GenDynamics g1{0.0203, 1.5, 0.75, 0.60, 1.0, 0.02};
  GenState s = init_gen_state(g1, 0.935, 30.0);
  CHECK(s.p_set == doctest::Approx(40.2596153846).epsilon(1e-10));
  CHECK(s.p_m == doctest::Approx(0.75 * 40.2596153846).epsilon(1e-10));
  CHECK(s.delta_omega == doctest::Approx(0.1298076923).epsilon(1e-8));

  GenState zero = init_gen_state(g1, 0.0, 0.0);
  CHECK(zero.p_set == 0.0);
  CHECK(zero.p_m == 0.0);
  CHECK(zero.delta_omega == 0.0);
}

TEST_CASE("initialization is a fixed point of the step map") {
  // Constant electrical load, states started at the analytic equilibrium:
  // 200 steps must not move any state beyond roundoff.
  std::mt19937 rng(20240811);
  std::uniform_real_distribution<double> uj(0.005, 0.05), ud(0.3, 2.0), uk(0.5, 1.5),
      utm(0.3, 1.0), utg(0.6, 3.0), us(0.01, 0.08), ux(-5.0, 5.0), up(0.0, 100.0);
  for (int draw = 0; draw < 50; ++draw) {
    GenDynamics dyn{uj(rng), ud(rng), uk(rng), utm(rng), utg(rng), us(rng)};
    const double x = ux(rng), p = up(rng);
    PowerNetwork net = one_machine(dyn, p);
    Configuration init = initial_configuration(net);
    if (p > 0.0) init.loads |= 1u;

    DynConfig cfg;
    cfg.n_steps = 200;
    IslandSimulator sim(net, init, {x}, cfg);
    const GenState s0 = sim.state(0);
    double drift = 0.0;
    for (int t = 0; t < 200; ++t) {
      sim.advance();
      const GenState& s = sim.state(0);
      drift = std::max({drift, std::abs(s.delta_omega - s0.delta_omega),
                        std::abs(s.p_set - s0.p_set), std::abs(s.p_m - s0.p_m)});
    }
    CAPTURE(draw);
    CHECK(drift < 1e-9);
  }
}

TEST_CASE("droop settle value") {
  const PowerNetwork base = builtin_ieee9(Ieee9Variant::ThreeLoads);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), up(0.0, 100.0);
  for (const Generator& gen : base.generators) {
    for (int trial = 0; trial < 20; ++trial) {
      const double x = ux(rng), p = up(rng);
      PowerNetwork net = one_machine(gen.dynamics, p);
      Configuration init = initial_configuration(net);
      if (p > 0.0) init.loads |= 1u;

      DynConfig cfg;
      cfg.n_steps = 480;  // 240 s
      CondensedSchedule sched{init, {}};
      Trajectory traj = simulate(net, sched, {x}, cfg);
      const double target = droop_settle(gen.dynamics, x, p);
      // Constant load held from t = 0: the trajectory must sit on the droop
      // value from 120 s on (it never leaves it).
      for (int t = 240; t <= 480; ++t) {
        CAPTURE(gen.id);
        CAPTURE(trial);
        CHECK(std::abs(traj.delta_omega[0][t] - target) < 1e-4);
      }
    }
  }
}

TEST_CASE("perturbed settle returns to the droop value") {
  // A 0.05 MW step knocks the rotor off its equilibrium and the droop loop
  // pulls it back. The slowest unit's dominant mode decays at 0.038 per
  // second, so the excursion is provably below 1e-4 rad/s from 210 s on.
  const PowerNetwork base = builtin_ieee9(Ieee9Variant::ThreeLoads);
  for (const Generator& gen : base.generators) {
    PowerNetwork net;
    net.buses = {{1, true}};
    net.generators = {{1, 1, GenKind::BSU, 0.0, 400.0, gen.dynamics}};
    net.loads = {{1, 1, 40.0}, {2, 1, 0.05}};
    net.validate();
    Configuration init = initial_configuration(net);
    init.loads |= 1u;
    DynConfig cfg;
    cfg.dt_s = 0.5;
    cfg.n_steps = 640;  // 320 s
    cfg.kappa_s = 1.0;  // the bump lands at t = 1 s
    CondensedSchedule sched{init, {{2, {ComponentKind::Load, 1}}}};
    Trajectory traj = simulate(net, sched, {1.0}, cfg);

    const double target = droop_settle(gen.dynamics, 1.0, 40.05);
    double peak = 0.0, tail = 0.0;
    for (int t = 0; t <= 640; ++t) {
      const double err = std::abs(traj.delta_omega[0][t] - target);
      peak = std::max(peak, err);
      if (t >= 420) tail = std::max(tail, err);  // from 210 s
    }
    CAPTURE(gen.id);
    CHECK(peak > 5e-4);  // the perturbation really moved the rotor
    CHECK(tail < 1e-4);
  }
}

TEST_CASE("step load settle, worked example") {
  // One unit, 30 MW held from the start, 30 MW more 10 s in. The speed
  // starts on the 0.1298 rad/s plateau, dips, and reconverges to the droop
  // value for 60 MW at -0.6394 rad/s.
  const PowerNetwork base = builtin_ieee9(Ieee9Variant::ThreeLoads);
  const GenDynamics g1 = base.generators[0].dynamics;
  PowerNetwork net;
  net.buses = {{1, true}};
  net.generators = {{1, 1, GenKind::BSU, 0.0, 400.0, g1}};
  net.loads = {{1, 1, 30.0}, {2, 1, 30.0}};
  net.validate();

  Configuration init = initial_configuration(net);
  init.loads |= 1u;  // first 30 MW on from t=0
  DynConfig cfg;
  cfg.dt_s = 0.5;
  cfg.n_steps = 480;
  cfg.kappa_s = 10.0;  // slot 2 opens at 10 s
  CondensedSchedule sched{init, {{2, {ComponentKind::Load, 1}}}};
  Trajectory traj = simulate(net, sched, {0.935}, cfg);

  CHECK(traj.delta_omega[0][0] == doctest::Approx(0.1298076923).epsilon(1e-8));
  CHECK(traj.p_e[0][0] == doctest::Approx(30.0).epsilon(1e-10));
  CHECK(traj.served_mw[0] == 30.0);
  CHECK(traj.served_mw[20] == 60.0);

  const double target = droop_settle(g1, 0.935, 60.0);
  CHECK(target == doctest::Approx(-0.6394230769).epsilon(1e-9));
  double dip = 0.0;
  for (double v : traj.delta_omega[0]) dip = std::min(dip, v);
  CHECK(dip < -5.0);  // the step knocks the rotor well below the settle value
  CHECK(std::abs(traj.delta_omega[0][240] - target) < 2e-3);   // 120 s
  CHECK(std::abs(traj.delta_omega[0][480] - target) < 1e-5);   // 240 s
}

TEST_CASE("network path is equivalent to a local load") {
  // 30 MW at bus 6 fed through T1-4 and L4-6 draws the same generator
  // response as 30 MW at the generator bus: lossless network, so only the
  // angles differ.
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  Configuration init = initial_configuration(net);
  init.branches |= (1u << 0) | (1u << 4);  // T1-4, L4-6
  init.loads |= (1u << 3);                 // 30 MW at bus 6
  DynConfig cfg;
  cfg.n_steps = 480;
  CondensedSchedule sched{init, {}};
  Trajectory traj = simulate(net, sched, {0.935, 0.0, 0.0}, cfg);

  const GenDynamics g1 = net.generators[0].dynamics;
  PowerNetwork local = one_machine(g1, 30.0);
  Configuration linit = initial_configuration(local);
  linit.loads |= 1u;
  CondensedSchedule lsched{linit, {}};
  Trajectory ltraj = simulate(local, lsched, {0.935}, cfg);

  for (int t = 0; t <= 480; ++t) {
    CHECK(traj.delta_omega[0][t] == doctest::Approx(ltraj.delta_omega[0][t]).epsilon(1e-9));
    CHECK(traj.p_e[0][t] == doctest::Approx(30.0).epsilon(1e-9));
  }
  // The T1-4 transformer carries the full 30 MW outward.
  CHECK(traj.branch_flow[0][100] == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(traj.branch_flow[4][100] == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(traj.branch_flow[1][100] == 0.0);
  // Bus angles drop along the feed path.
  const int b1 = net.bus_index(1), b4 = net.bus_index(4), b6 = net.bus_index(6);
  CHECK(traj.theta[b1][100] > traj.theta[b4][100]);
  CHECK(traj.theta[b4][100] > traj.theta[b6][100]);
}

TEST_CASE("empty schedule with zero references stays identically zero") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;
  cfg.n_steps = 100;
  CondensedSchedule sched{initial_configuration(net), {}};
  Trajectory traj = simulate(net, sched, {0.0, 0.0, 0.0}, cfg);
  for (int g = 0; g < 3; ++g)
    for (int t = 0; t <= 100; ++t) {
      CHECK(traj.delta_omega[g][t] == 0.0);
      CHECK(traj.p_m[g][t] == 0.0);
      CHECK(traj.p_e[g][t] == 0.0);
    }
  CHECK(traj.violations.empty());
  ObjectiveBreakdown obj = objective(net, traj, cfg);
  CHECK(obj.energy_pu_s == 0.0);
  CHECK(obj.penalty_pu_s == 0.0);
}

TEST_CASE("condensed schedule validation") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;
  auto err = [&](CondensedSchedule s) { return condensed_schedule_error(net, s, cfg); };
  const Configuration init = initial_configuration(net);

  CHECK(!err(reference_schedule(net)).has_value());
  CHECK(!err({init, {}}).has_value());

  Configuration no_bsu;  // all bits clear
  CHECK(err({no_bsu, {}}).value().find("black-start") != std::string::npos);

  CHECK(err({init, {{1, {ComponentKind::Branch, 0}}}}).value().find("outside") !=
        std::string::npos);
  CHECK(err({init, {{17, {ComponentKind::Branch, 0}}}}).value().find("outside") !=
        std::string::npos);
  CHECK(err({init, {{2, {ComponentKind::Branch, 0}}, {2, {ComponentKind::Branch, 4}}}})
            .value()
            .find("increasing") != std::string::npos);
  // L4-5 has no live endpoint at slot 2.
  CHECK(err({init, {{2, {ComponentKind::Branch, 3}}}}).value().find("no live endpoint") !=
        std::string::npos);
  // Generator 2 sits on a dead bus at slot 2.
  CHECK(err({init, {{2, {ComponentKind::Generator, 1}}}}).value().find("dead") !=
        std::string::npos);
  // Switching the same branch twice.
  CondensedSchedule loop{init,
                         {{2, {ComponentKind::Branch, 0}},
                          {3, {ComponentKind::Branch, 3}},
                          {4, {ComponentKind::Branch, 5}},
                          {5, {ComponentKind::Branch, 1}},
                          {6, {ComponentKind::Branch, 3}}}};
  CHECK(err(loop).value().find("already on") != std::string::npos);
  // Grow 1-4-5-7-8-9 and 4-6, then close L6-9: both endpoints already live.
  CondensedSchedule loop2{init,
                          {{2, {ComponentKind::Branch, 0}},
                           {3, {ComponentKind::Branch, 3}},
                           {4, {ComponentKind::Branch, 4}},
                           {5, {ComponentKind::Branch, 5}},
                           {6, {ComponentKind::Branch, 7}},
                           {7, {ComponentKind::Branch, 8}},
                           {8, {ComponentKind::Branch, 6}}}};
  auto e2 = err(loop2);
  CHECK(e2.has_value());
  CHECK(e2.value().find("loop") != std::string::npos);
}

TEST_CASE("reference schedule landmarks") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;  // defaults match the reproduction setup
  const CondensedSchedule sched = reference_schedule(net);
  REQUIRE(!condensed_schedule_error(net, sched, cfg).has_value());

  const std::vector<double> x = {5.330, 1.565, 0.0};
  Trajectory traj = simulate(net, sched, x, cfg);

  // Settle plateau before the first load: 0.75*5.33/0.78.
  CHECK(traj.delta_omega[0][90] == doctest::Approx(5.125).epsilon(1e-9));
  // Unit 2 coasts at its own reference until pickup at step 810.
  CHECK(traj.delta_omega[1][809] == doctest::Approx(1.5019193857965452).epsilon(1e-9));
  CHECK(traj.delta_omega[1][810] == doctest::Approx(1.5019193857965452).epsilon(1e-9));
  CHECK(traj.connected[1][809] == 0);
  CHECK(traj.connected[1][810] == 1);
  CHECK(traj.p_e[1][809] == 0.0);
  // Zero-transfer closing: the unit picks up (almost) nothing at the
  // closing instant.
  CHECK(std::abs(traj.p_e[1][810]) < 1e-6);

  REQUIRE(traj.pickups.size() == 1);
  CHECK(traj.pickups[0].step == 810);
  CHECK(traj.pickups[0].gen == 1);
  CHECK(traj.pickups[0].mismatch == doctest::Approx(1.3155460315870282).epsilon(1e-8));

  CHECK(traj.delta_omega[0][810] == doctest::Approx(2.8174654173835734).epsilon(1e-8));
  CHECK(traj.delta_omega[0][1425] == doctest::Approx(-0.37965731565100214).epsilon(1e-6));
  CHECK(traj.delta_omega[1][1425] == doctest::Approx(-0.37950266767848007).epsilon(1e-6));

  CHECK(traj.max_abs_delta_omega_connected ==
        doctest::Approx(10.078576007660786).epsilon(1e-6));
  CHECK(traj.max_p_m == doctest::Approx(226.15339099430423).epsilon(1e-6));

  // 8 of 9 loads are on at the end.
  CHECK(traj.served_mw[1425] == doctest::Approx(281.67).epsilon(1e-12));

  ObjectiveBreakdown obj = objective(net, traj, cfg);
  CHECK(obj.energy_pu_s == doctest::Approx(396.27555).epsilon(1e-9));
  CHECK(obj.penalty_pu_s == doctest::Approx(10.626866126739849).epsilon(1e-7));
  CHECK(obj.total == doctest::Approx(385.64868387326015).epsilon(1e-7));

  // At these setpoints the run violates the 1.5 Hz band, the mechanical
  // limit of unit 1, and the pickup tolerance; all three must be on record.
  bool band = false, mech = false, sync = false;
  for (const Violation& v : traj.violations) {
    band = band || v.kind == Violation::FrequencyBand;
    mech = mech || v.kind == Violation::MechPowerLimit;
    sync = sync || v.kind == Violation::SyncMismatch;
  }
  CHECK(band);
  CHECK(mech);
  CHECK(sync);
}

TEST_CASE("power balance holds at every step") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;
  const CondensedSchedule sched = reference_schedule(net);
  Trajectory traj = simulate(net, sched, {5.330, 1.565, 0.0}, cfg);
  for (int t = 0; t <= cfg.n_steps; ++t) {
    double gen = 0.0;
    for (int g = 0; g < 3; ++g) gen += traj.p_e[g][t];
    CHECK(gen == doctest::Approx(traj.served_mw[t]).epsilon(1e-9));
  }
}

TEST_CASE("trajectories are affine in the references") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;
  const CondensedSchedule sched = reference_schedule(net);

  const Trajectory base = simulate(net, sched, {0.0, 0.0, 0.0}, cfg);
  std::vector<Trajectory> unit;
  for (int g = 0; g < 3; ++g) {
    std::vector<double> e(3, 0.0);
    e[g] = 1.0;
    unit.push_back(simulate(net, sched, e, cfg));
  }

  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> ux(-6.0, 6.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = {ux(rng), ux(rng), ux(rng)};
    Trajectory direct = simulate(net, sched, x, cfg);
    double worst = 0.0;
    for (int g = 0; g < 3; ++g)
      for (int t = 0; t <= cfg.n_steps; ++t) {
        double rec = base.delta_omega[g][t];
        for (int k = 0; k < 3; ++k)
          rec += x[k] * (unit[k].delta_omega[g][t] - base.delta_omega[g][t]);
        worst = std::max(worst, std::abs(rec - direct.delta_omega[g][t]));
        double rec_pm = base.p_m[g][t];
        for (int k = 0; k < 3; ++k) rec_pm += x[k] * (unit[k].p_m[g][t] - base.p_m[g][t]);
        worst = std::max(worst, std::abs(rec_pm - direct.p_m[g][t]) / 100.0);
      }
    CAPTURE(trial);
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("initial dispatch splits by droop share") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  Configuration init = initial_configuration(net);
  init.branches = 0x1ffu;  // all nine branches
  init.gens = 0x7u;
  init.loads = 0x1ffu;  // all 315 MW
  DynConfig cfg;
  cfg.n_steps = 200;
  CondensedSchedule sched{init, {}};
  Trajectory traj = simulate(net, sched, {0.0, 0.0, 0.0}, cfg);

  // Shares of 315 MW proportional to 1/sigma = (50, 33.33, 25).
  const double s = 1.0 / 0.02 + 1.0 / 0.03 + 1.0 / 0.04;
  CHECK(traj.p_e[0][0] == doctest::Approx(315.0 * (1.0 / 0.02) / s).epsilon(1e-9));
  CHECK(traj.p_e[1][0] == doctest::Approx(315.0 * (1.0 / 0.03) / s).epsilon(1e-9));
  CHECK(traj.p_e[2][0] == doctest::Approx(315.0 * (1.0 / 0.04) / s).epsilon(1e-9));
  for (int t = 0; t <= 200; ++t) {
    double gen = 0.0;
    for (int g = 0; g < 3; ++g) gen += traj.p_e[g][t];
    CHECK(gen == doctest::Approx(315.0).epsilon(1e-9));
    for (int g = 0; g < 3; ++g) CHECK(std::isfinite(traj.delta_omega[g][t]));
  }
}

TEST_CASE("single machine: coupled and explicit steps agree") {
  const PowerNetwork base = builtin_ieee9(Ieee9Variant::ThreeLoads);
  PowerNetwork net = one_machine(base.generators[0].dynamics, 45.0);
  Configuration init = initial_configuration(net);
  init.loads |= 1u;
  DynConfig cfg;
  cfg.n_steps = 400;
  CondensedSchedule sched{init, {}};
  Trajectory a = simulate(net, sched, {2.0}, cfg, Scheme::BackwardCoupled);
  Trajectory b = simulate(net, sched, {2.0}, cfg, Scheme::ForwardEuler);
  for (int t = 0; t <= 400; ++t)
    CHECK(a.delta_omega[0][t] == doctest::Approx(b.delta_omega[0][t]).epsilon(1e-10));
}

TEST_CASE("trapezoidal scheme finds the same steady state") {
  const PowerNetwork base = builtin_ieee9(Ieee9Variant::ThreeLoads);
  for (int g = 0; g < 3; ++g) {
    PowerNetwork net = one_machine(base.generators[g].dynamics, 55.0);
    Configuration init = initial_configuration(net);
    init.loads |= 1u;
    DynConfig cfg;
    cfg.n_steps = 480;
    CondensedSchedule sched{init, {}};
    Trajectory traj = simulate(net, sched, {1.2}, cfg, Scheme::Trapezoidal);
    const double target = droop_settle(base.generators[g].dynamics, 1.2, 55.0);
    CHECK(std::abs(traj.delta_omega[0][480] - target) < 1e-4);
  }
}

TEST_CASE("simulate rejects malformed input") {
  PowerNetwork net = builtin_ieee9(Ieee9Variant::ThreeLoads);
  DynConfig cfg;
  CondensedSchedule bad{initial_configuration(net), {{2, {ComponentKind::Branch, 3}}}};
  CHECK_THROWS_AS(simulate(net, bad, {0, 0, 0}, cfg), CaseError);
  CondensedSchedule ok{initial_configuration(net), {}};
  CHECK_THROWS_AS(simulate(net, ok, {0, 0}, cfg), CaseError);  // one reference per unit
}
