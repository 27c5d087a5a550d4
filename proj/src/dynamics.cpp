#include "psr/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

namespace psr {

int DynConfig::condensed_slots() const {
  return static_cast<int>(std::floor(n_steps * dt_s / kappa_s + 1e-9)) + 1;
}

int DynConfig::slot_start_step(int slot) const {
  if (slot <= 1) return 0;
  return static_cast<int>(std::ceil((slot - 1) * kappa_s / dt_s - 1e-9));
}

int DynConfig::slot_of_step(int step) const {
  return static_cast<int>(std::floor(step * dt_s / kappa_s + 1e-9)) + 1;
}

void DynConfig::check() const {
  if (!(dt_s > 0.0)) throw std::invalid_argument("dt_s must be positive");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be at least 1");
  if (!(kappa_s >= dt_s)) throw std::invalid_argument("kappa_s must be at least dt_s");
  if (!(df_max_hz > 0.0)) throw std::invalid_argument("df_max_hz must be positive");
  if (!(epsilon_rad_s >= 0.0)) throw std::invalid_argument("epsilon_rad_s must be nonnegative");
}

std::optional<std::string> condensed_schedule_error(const PowerNetwork& net,
                                                    const CondensedSchedule& sched,
                                                    const DynConfig& cfg) {
  const int n_r = cfg.condensed_slots();
  // Slot 1 must carry every black-start unit; beyond that the initial set is
  // whatever the caller says is already live, so only bit ranges are checked.
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    if (net.generators[g].kind == GenKind::BSU && !sched.initial.gen_on(static_cast<int>(g)))
      return "initial configuration is missing black-start unit g" +
             std::to_string(net.generators[g].id);
  }
  Configuration cfg_now = sched.initial;
  int prev_slot = 1;
  for (const auto& [slot, ref] : sched.actions) {
    if (slot < 2 || slot > n_r)
      return "action slot " + std::to_string(slot) + " outside 2.." + std::to_string(n_r);
    if (slot <= prev_slot) return "action slots must be strictly increasing";
    prev_slot = slot;
    const std::string name = component_label(net, ref);
    const auto live = live_buses(net, cfg_now);
    switch (ref.kind) {
      case ComponentKind::Branch: {
        if (ref.index < 0 || ref.index >= static_cast<int>(net.branches.size()))
          return "branch index out of range";
        if (cfg_now.branch_on(ref.index)) return name + " is already on";
        const Branch& br = net.branches[ref.index];
        const bool a = live[net.bus_index(br.from_bus)];
        const bool b = live[net.bus_index(br.to_bus)];
        if (a && b) return name + " closes a loop inside the island";
        if (!a && !b) return name + " has no live endpoint";
        break;
      }
      case ComponentKind::Generator: {
        if (ref.index < 0 || ref.index >= static_cast<int>(net.generators.size()))
          return "generator index out of range";
        if (cfg_now.gen_on(ref.index)) return name + " is already on";
        if (!live[net.bus_index(net.generators[ref.index].bus)])
          return name + " sits on a dead bus";
        break;
      }
      case ComponentKind::Load: {
        if (ref.index < 0 || ref.index >= static_cast<int>(net.loads.size()))
          return "load index out of range";
        if (cfg_now.load_on(ref.index)) return name + " is already on";
        if (!live[net.bus_index(net.loads[ref.index].bus)])
          return name + " sits on a dead bus";
        break;
      }
    }
    cfg_now = apply_switch(net, cfg_now, ref);
  }
  return std::nullopt;
}

GenState init_gen_state(const GenDynamics& dyn, double delta_omega_ref, double p_e0) {
  const double denom = dyn.damping_d * dyn.droop_sigma + dyn.turbine_gain_k;
  if (!(denom > 0.0)) throw CaseError("", "generator has D*sigma + K <= 0");
  GenState s;
  s.p_set = (dyn.damping_d * delta_omega_ref + p_e0) / denom;
  s.p_m = dyn.turbine_gain_k * s.p_set;
  s.delta_omega = delta_omega_ref - dyn.droop_sigma * s.p_set;
  return s;
}

// Reduced admittance seen from the connected generator buses. Free (non
// generator) live buses are eliminated: with B the weighted Laplacian of the
// energized branches and L the MW loads,
//   p_e = R theta_g + r,  R = Bgg - Bgf Bff^-1 Bfg,  r = Lg - Bgf Bff^-1 Lf,
// and free angles follow as thf = Bff^-1 (-Lf - Bfg theta_g).
struct IslandSimulator::Coupling {
  std::vector<int> gens;      // connected generator indices, ascending
  std::vector<int> free_bus;  // live non-generator bus indices, ascending
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  Eigen::MatrixXd bff_inv;
  Eigen::MatrixXd bfg;
  Eigen::VectorXd lf;

  Eigen::VectorXd free_angles(const Eigen::VectorXd& theta_g) const {
    if (free_bus.empty()) return Eigen::VectorXd();
    return bff_inv * (-lf - bfg * theta_g);
  }
};

void IslandSimulator::rebuild_coupling() {
  auto coup = std::make_unique<Coupling>();
  for (std::size_t g = 0; g < net_.generators.size(); ++g)
    if (connected_[g]) coup->gens.push_back(static_cast<int>(g));

  const auto live = live_buses(net_, cfg_now_);
  std::vector<char> is_gen_bus(net_.buses.size(), 0);
  for (int g : coup->gens) is_gen_bus[net_.bus_index(net_.generators[g].bus)] = 1;
  for (std::size_t b = 0; b < net_.buses.size(); ++b)
    if (live[b] && !is_gen_bus[b]) coup->free_bus.push_back(static_cast<int>(b));

  const int nf = static_cast<int>(coup->free_bus.size());
  const int ng = static_cast<int>(coup->gens.size());
  std::vector<int> pos(net_.buses.size(), -1);  // bus index -> row in [free | gen]
  for (int i = 0; i < nf; ++i) pos[coup->free_bus[i]] = i;
  for (int i = 0; i < ng; ++i) pos[net_.bus_index(net_.generators[coup->gens[i]].bus)] = nf + i;

  Eigen::MatrixXd b_full = Eigen::MatrixXd::Zero(nf + ng, nf + ng);
  for (std::size_t e = 0; e < net_.branches.size(); ++e) {
    if (!cfg_now_.branch_on(static_cast<int>(e))) continue;
    const Branch& br = net_.branches[e];
    const int a = pos[net_.bus_index(br.from_bus)];
    const int b = pos[net_.bus_index(br.to_bus)];
    const double w = br.admittance * net_.base_mva;
    b_full(a, a) += w;
    b_full(b, b) += w;
    b_full(a, b) -= w;
    b_full(b, a) -= w;
  }
  Eigen::VectorXd loads = Eigen::VectorXd::Zero(nf + ng);
  for (std::size_t d = 0; d < net_.loads.size(); ++d) {
    if (!cfg_now_.load_on(static_cast<int>(d))) continue;
    const int p = pos[net_.bus_index(net_.loads[d].bus)];
    if (p < 0) throw CaseError("", "energized load on a dead bus");
    loads(p) += net_.loads[d].p_nominal_mw;
  }

  coup->lf = loads.head(nf);
  coup->bfg = b_full.topRightCorner(nf, ng);
  if (nf > 0) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_full.topLeftCorner(nf, nf));
    coup->bff_inv = lu.inverse();
    // A free bus with no path to a generator makes Bff singular; legal
    // schedules cannot produce one.
    if (!coup->bff_inv.allFinite()) throw CaseError("", "energized island has no generator");
  } else {
    coup->bff_inv.resize(0, 0);
  }
  const Eigen::MatrixXd bgf = b_full.bottomLeftCorner(ng, nf);
  coup->R = b_full.bottomRightCorner(ng, ng);
  coup->r = loads.tail(ng);
  if (nf > 0) {
    coup->R -= bgf * coup->bff_inv * coup->bfg;
    coup->r -= bgf * coup->bff_inv * coup->lf;
  }
  coup_ = std::move(coup);
}

IslandSimulator::IslandSimulator(const PowerNetwork& net, const Configuration& initial,
                                 const std::vector<double>& delta_omega_ref,
                                 const DynConfig& cfg, Scheme scheme)
    : net_(net), dyn_(cfg), scheme_(scheme), cfg_now_(initial), x_ref_(delta_omega_ref) {
  dyn_.check();
  if (x_ref_.size() != net_.generators.size())
    throw CaseError("", "one reference deviation per generator required");
  const int ng = static_cast<int>(net_.generators.size());
  states_.resize(ng);
  connected_.resize(ng, 0);
  theta_gen_.assign(ng, 0.0);
  for (int g = 0; g < ng; ++g) connected_[g] = initial.gen_on(g) ? 1 : 0;
  for (std::size_t g = 0; g < net_.generators.size(); ++g)
    if (net_.generators[g].kind == GenKind::BSU && !connected_[g])
      throw CaseError("", "black-start unit missing from the initial configuration");
  rebuild_coupling();

  // Initial electrical load splits across the connected units in proportion
  // to 1/sigma, the share the droop loop would settle on.
  double total_load = 0.0;
  for (std::size_t d = 0; d < net_.loads.size(); ++d)
    if (initial.load_on(static_cast<int>(d))) total_load += net_.loads[d].p_nominal_mw;
  const auto& gens = coup_->gens;
  const int nc = static_cast<int>(gens.size());
  Eigen::VectorXd share = Eigen::VectorXd::Zero(nc);
  double inv_sum = 0.0;
  for (int i = 0; i < nc; ++i) inv_sum += 1.0 / net_.generators[gens[i]].dynamics.droop_sigma;
  for (int i = 0; i < nc; ++i)
    share(i) = total_load * (1.0 / net_.generators[gens[i]].dynamics.droop_sigma) / inv_sum;

  for (int g = 0; g < ng; ++g) {
    const double p_e0 = [&] {
      for (int i = 0; i < nc; ++i)
        if (gens[i] == g) return share(i);
      return 0.0;
    }();
    states_[g] = init_gen_state(net_.generators[g].dynamics, x_ref_[g], p_e0);
  }

  // Generator bus angles realising that split: R theta = share - r with the
  // leading unit's angle pinned at zero. With one unit R = 0 and the system
  // is consistent outright (r sums to the island load).
  if (nc > 1) {
    const int lead = net_.leading_bsu_index();
    int lead_pos = 0;
    for (int i = 0; i < nc; ++i)
      if (gens[i] == lead) lead_pos = i;
    Eigen::MatrixXd rr(nc - 1, nc - 1);
    Eigen::VectorXd rhs(nc - 1);
    std::vector<int> keep;
    for (int i = 0; i < nc; ++i)
      if (i != lead_pos) keep.push_back(i);
    for (int i = 0; i < nc - 1; ++i) {
      rhs(i) = share(keep[i]) - coup_->r(keep[i]);
      for (int j = 0; j < nc - 1; ++j) rr(i, j) = coup_->R(keep[i], keep[j]);
    }
    const Eigen::VectorXd sol = rr.partialPivLu().solve(rhs);
    if (!sol.allFinite() || (rr * sol - rhs).cwiseAbs().maxCoeff() >
                                1e-6 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
      throw CaseError("", "initial configuration does not form one island");
    for (int i = 0; i < nc - 1; ++i) theta_gen_[gens[keep[i]]] = sol(i);
    theta_gen_[lead] = 0.0;
  }
}

IslandSimulator::~IslandSimulator() = default;

double IslandSimulator::p_e(int gen) const {
  if (!connected_[gen]) return 0.0;
  const auto& gens = coup_->gens;
  Eigen::VectorXd tg(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) tg(i) = theta_gen_[gens[i]];
  for (std::size_t i = 0; i < gens.size(); ++i)
    if (gens[i] == gen) return (coup_->R.row(i) * tg + coup_->r.row(i))(0);
  return 0.0;
}

double IslandSimulator::theta(int bus_index) const {
  const auto& gens = coup_->gens;
  for (std::size_t i = 0; i < gens.size(); ++i)
    if (net_.bus_index(net_.generators[gens[i]].bus) == bus_index) return theta_gen_[gens[i]];
  Eigen::VectorXd tg(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) tg(i) = theta_gen_[gens[i]];
  const Eigen::VectorXd tf = coup_->free_angles(tg);
  for (std::size_t i = 0; i < coup_->free_bus.size(); ++i)
    if (coup_->free_bus[i] == bus_index) return tf(i);
  return 0.0;
}

double IslandSimulator::branch_flow_mw(int branch_index) const {
  if (!cfg_now_.branch_on(branch_index)) return 0.0;
  const Branch& br = net_.branches[branch_index];
  const double w = br.admittance * net_.base_mva;
  return w * (theta(net_.bus_index(br.from_bus)) - theta(net_.bus_index(br.to_bus)));
}

double IslandSimulator::served_mw() const {
  double total = 0.0;
  for (std::size_t d = 0; d < net_.loads.size(); ++d)
    if (cfg_now_.load_on(static_cast<int>(d))) total += net_.loads[d].p_nominal_mw;
  return total;
}

void IslandSimulator::switch_component(ComponentRef ref) {
  const auto live = live_buses(net_, cfg_now_);
  switch (ref.kind) {
    case ComponentKind::Branch: {
      const Branch& br = net_.branches.at(ref.index);
      if (cfg_now_.branch_on(ref.index)) throw CaseError("", "branch already on");
      const bool a = live[net_.bus_index(br.from_bus)];
      const bool b = live[net_.bus_index(br.to_bus)];
      if (a == b)
        throw CaseError("", a ? "branch closes a loop" : "branch has no live endpoint");
      cfg_now_ = apply_switch(net_, cfg_now_, ref);
      rebuild_coupling();
      return;
    }
    case ComponentKind::Load: {
      if (cfg_now_.load_on(ref.index)) throw CaseError("", "load already on");
      if (!live[net_.bus_index(net_.loads.at(ref.index).bus)])
        throw CaseError("", "load bus is dead");
      cfg_now_ = apply_switch(net_, cfg_now_, ref);
      rebuild_coupling();
      return;
    }
    case ComponentKind::Generator: {
      if (connected_[ref.index]) throw CaseError("", "generator already connected");
      const int bus = net_.bus_index(net_.generators.at(ref.index).bus);
      if (!live[bus]) throw CaseError("", "generator bus is dead");

      const int lead = net_.leading_bsu_index();
      pickups_.push_back({step_, ref.index,
                          std::abs(states_[ref.index].delta_omega - states_[lead].delta_omega)});

      // The unit closes its breaker at the angle where it would pick up no
      // load: the bus angle of the network it is about to join.
      double angle = 0.0;
      Eigen::VectorXd tg(coup_->gens.size());
      for (std::size_t i = 0; i < coup_->gens.size(); ++i) tg(i) = theta_gen_[coup_->gens[i]];
      const Eigen::VectorXd tf = coup_->free_angles(tg);
      for (std::size_t i = 0; i < coup_->free_bus.size(); ++i)
        if (coup_->free_bus[i] == bus) angle = tf(i);
      theta_gen_[ref.index] = angle;

      connected_[ref.index] = 1;
      cfg_now_ = apply_switch(net_, cfg_now_, ref);
      rebuild_coupling();
      return;
    }
  }
}

void IslandSimulator::step_backward_coupled() {
  const double dt = dyn_.dt_s;
  const auto& gens = coup_->gens;
  const int nc = static_cast<int>(gens.size());

  Eigen::VectorXd thn;
  if (nc > 0) {
    Eigen::VectorXd thk(nc), dwk(nc), m(nc), pmk(nc), dk(nc);
    for (int i = 0; i < nc; ++i) {
      const auto& dyn = net_.generators[gens[i]].dynamics;
      thk(i) = theta_gen_[gens[i]];
      dwk(i) = states_[gens[i]].delta_omega;
      pmk(i) = states_[gens[i]].p_m;
      m(i) = dyn.inertia_j * net_.omega_nom();
      dk(i) = dyn.damping_d;
    }
    const Eigen::VectorXd c = (dt * dt) * m.cwiseInverse();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nc, nc) + c.asDiagonal() * coup_->R;
    Eigen::VectorXd rhs =
        thk + dt * dwk + c.cwiseProduct(pmk - dk.cwiseProduct(dwk)) - c.cwiseProduct(coup_->r);
    thn = a.partialPivLu().solve(rhs);
    if (!thn.allFinite()) throw CaseError("", "network step diverged");
  }

  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    if (connected_[g]) continue;
    const auto& dyn = net_.generators[g].dynamics;
    const double m = dyn.inertia_j * net_.omega_nom();
    states_[g].delta_omega +=
        dt / m * (states_[g].p_m - dyn.damping_d * states_[g].delta_omega);
  }
  for (int i = 0; i < nc; ++i) {
    states_[gens[i]].delta_omega = (thn(i) - theta_gen_[gens[i]]) / dt;
    theta_gen_[gens[i]] = thn(i);
  }
  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    const auto& dyn = net_.generators[g].dynamics;
    GenState& s = states_[g];
    const double pm_new = s.p_m + dt / dyn.turbine_tc_s * (dyn.turbine_gain_k * s.p_set - s.p_m);
    // All four updates read the step-start state; the swing commit above
    // already replaced delta_omega, hence the stashed copy.
    s.p_set += -dt / dyn.governor_tc_s *
               (dw_before_[g] - x_ref_[g] + dyn.droop_sigma * s.p_set);
    s.p_m = pm_new;
  }
}

void IslandSimulator::step_forward_euler() {
  const double dt = dyn_.dt_s;
  const auto& gens = coup_->gens;
  const int nc = static_cast<int>(gens.size());
  Eigen::VectorXd pe = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd tg(nc);
  for (int i = 0; i < nc; ++i) tg(i) = theta_gen_[gens[i]];
  if (nc > 0) pe = coup_->R * tg + coup_->r;

  std::vector<double> dw_new(net_.generators.size());
  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    const auto& dyn = net_.generators[g].dynamics;
    const double m = dyn.inertia_j * net_.omega_nom();
    double pe_g = 0.0;
    for (int i = 0; i < nc; ++i)
      if (gens[i] == static_cast<int>(g)) pe_g = pe(i);
    dw_new[g] = states_[g].delta_omega +
                dt / m * (states_[g].p_m - pe_g - dyn.damping_d * states_[g].delta_omega);
  }
  for (int i = 0; i < nc; ++i) theta_gen_[gens[i]] += dt * states_[gens[i]].delta_omega;
  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    const auto& dyn = net_.generators[g].dynamics;
    GenState& s = states_[g];
    const double pm_new = s.p_m + dt / dyn.turbine_tc_s * (dyn.turbine_gain_k * s.p_set - s.p_m);
    s.p_set += -dt / dyn.governor_tc_s * (s.delta_omega - x_ref_[g] + dyn.droop_sigma * s.p_set);
    s.p_m = pm_new;
    s.delta_omega = dw_new[g];
  }
}

void IslandSimulator::step_trapezoidal() {
  const double dt = dyn_.dt_s;
  const auto& gens = coup_->gens;
  const int nc = static_cast<int>(gens.size());

  // Trapezoidal average on the swing pair with p_m held at the step start:
  //   (I + cD + (dt/2) c R) dw+ = (I - cD) dw + c (2 p_m - 2 R th - dt R dw - 2 r)
  // with c = dt / (2 M), then th+ = th + (dt/2)(dw + dw+).
  if (nc > 0) {
    Eigen::VectorXd thk(nc), dwk(nc), pmk(nc), c(nc), dk(nc);
    for (int i = 0; i < nc; ++i) {
      const auto& dyn = net_.generators[gens[i]].dynamics;
      thk(i) = theta_gen_[gens[i]];
      dwk(i) = states_[gens[i]].delta_omega;
      pmk(i) = states_[gens[i]].p_m;
      c(i) = dt / (2.0 * dyn.inertia_j * net_.omega_nom());
      dk(i) = dyn.damping_d;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nc, nc);
    a += (c.cwiseProduct(dk)).asDiagonal();
    a += (dt / 2.0) * c.asDiagonal() * coup_->R;
    Eigen::VectorXd rhs = dwk - c.cwiseProduct(dk.cwiseProduct(dwk)) +
                          c.cwiseProduct(2.0 * pmk - 2.0 * (coup_->R * thk) -
                                         dt * (coup_->R * dwk) - 2.0 * coup_->r);
    const Eigen::VectorXd dwn = a.partialPivLu().solve(rhs);
    for (int i = 0; i < nc; ++i) {
      theta_gen_[gens[i]] = thk(i) + dt / 2.0 * (dwk(i) + dwn(i));
      states_[gens[i]].delta_omega = dwn(i);
    }
  }
  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    if (connected_[g]) continue;
    const auto& dyn = net_.generators[g].dynamics;
    const double cg = dt / (2.0 * dyn.inertia_j * net_.omega_nom());
    GenState& s = states_[g];
    s.delta_omega =
        ((1.0 - cg * dyn.damping_d) * s.delta_omega + 2.0 * cg * s.p_m) /
        (1.0 + cg * dyn.damping_d);
  }
  for (std::size_t g = 0; g < net_.generators.size(); ++g) {
    const auto& dyn = net_.generators[g].dynamics;
    GenState& s = states_[g];
    const double pm_new = s.p_m + dt / dyn.turbine_tc_s * (dyn.turbine_gain_k * s.p_set - s.p_m);
    s.p_set += -dt / dyn.governor_tc_s *
               (dw_before_[g] - x_ref_[g] + dyn.droop_sigma * s.p_set);
    s.p_m = pm_new;
  }
}

void IslandSimulator::advance() {
  dw_before_.resize(net_.generators.size());
  for (std::size_t g = 0; g < net_.generators.size(); ++g)
    dw_before_[g] = states_[g].delta_omega;
  switch (scheme_) {
    case Scheme::BackwardCoupled:
      step_backward_coupled();
      break;
    case Scheme::ForwardEuler:
      step_forward_euler();
      break;
    case Scheme::Trapezoidal:
      step_trapezoidal();
      break;
  }
  ++step_;
}

Trajectory simulate(const PowerNetwork& net, const CondensedSchedule& sched,
                    const std::vector<double>& delta_omega_ref, const DynConfig& cfg,
                    Scheme scheme) {
  cfg.check();
  if (auto err = condensed_schedule_error(net, sched, cfg))
    throw CaseError("", "condensed schedule: " + *err);

  std::map<int, std::vector<ComponentRef>> events;
  for (const auto& [slot, ref] : sched.actions)
    events[cfg.slot_start_step(slot)].push_back(ref);

  IslandSimulator sim(net, sched.initial, delta_omega_ref, cfg, scheme);

  const int ng = static_cast<int>(net.generators.size());
  const int nb = static_cast<int>(net.buses.size());
  const int ne = static_cast<int>(net.branches.size());
  Trajectory out;
  out.n_steps = cfg.n_steps;
  out.delta_omega.assign(ng, std::vector<double>(cfg.n_steps + 1));
  out.p_set.assign(ng, std::vector<double>(cfg.n_steps + 1));
  out.p_m.assign(ng, std::vector<double>(cfg.n_steps + 1));
  out.p_e.assign(ng, std::vector<double>(cfg.n_steps + 1));
  out.connected.assign(ng, std::vector<char>(cfg.n_steps + 1));
  out.theta.assign(nb, std::vector<double>(cfg.n_steps + 1));
  out.branch_flow.assign(ne, std::vector<double>(cfg.n_steps + 1));
  out.served_mw.assign(cfg.n_steps + 1, 0.0);

  const double band = cfg.band_rad_s();
  const double tol = 1e-9;
  for (int t = 0; t <= cfg.n_steps; ++t) {
    if (auto it = events.find(t); it != events.end())
      for (ComponentRef ref : it->second) sim.switch_component(ref);

    for (int g = 0; g < ng; ++g) {
      const GenState& s = sim.state(g);
      out.delta_omega[g][t] = s.delta_omega;
      out.p_set[g][t] = s.p_set;
      out.p_m[g][t] = s.p_m;
      out.p_e[g][t] = sim.p_e(g);
      out.connected[g][t] = sim.is_connected(g) ? 1 : 0;
      if (sim.is_connected(g)) {
        out.max_abs_delta_omega_connected =
            std::max(out.max_abs_delta_omega_connected, std::abs(s.delta_omega));
        out.max_p_m = std::max(out.max_p_m, s.p_m);
        if (std::abs(s.delta_omega) > band + tol)
          out.violations.push_back({Violation::FrequencyBand, t, net.generators[g].id,
                                    std::abs(s.delta_omega) - band});
        const Generator& gen = net.generators[g];
        if (s.p_m > gen.p_max_mw + tol)
          out.violations.push_back(
              {Violation::MechPowerLimit, t, gen.id, s.p_m - gen.p_max_mw});
        else if (s.p_m < gen.p_min_mw - tol)
          out.violations.push_back(
              {Violation::MechPowerLimit, t, gen.id, gen.p_min_mw - s.p_m});
      }
    }
    for (int b = 0; b < nb; ++b) out.theta[b][t] = sim.theta(b);
    for (int e = 0; e < ne; ++e) {
      const double f = sim.branch_flow_mw(e);
      out.branch_flow[e][t] = f;
      const Branch& br = net.branches[e];
      if (f > br.flow_max_mw + 1e-6)
        out.violations.push_back({Violation::BranchOverload, t, br.id, f - br.flow_max_mw});
      else if (f < br.flow_min_mw - 1e-6)
        out.violations.push_back({Violation::BranchOverload, t, br.id, br.flow_min_mw - f});
    }
    out.served_mw[t] = sim.served_mw();

    if (t < cfg.n_steps) sim.advance();
  }

  out.pickups = sim.pickups();
  for (const auto& p : out.pickups)
    if (p.mismatch > cfg.epsilon_rad_s + tol)
      out.violations.push_back({Violation::SyncMismatch, p.step, net.generators[p.gen].id,
                                p.mismatch - cfg.epsilon_rad_s});
  std::sort(out.violations.begin(), out.violations.end(),
            [](const Violation& a, const Violation& b) {
              return std::tie(a.step, a.kind, a.component_id) <
                     std::tie(b.step, b.kind, b.component_id);
            });
  return out;
}

ObjectiveBreakdown objective(const PowerNetwork& net, const Trajectory& traj,
                             const DynConfig& cfg) {
  ObjectiveBreakdown out;
  double served = 0.0;
  double dev = 0.0;
  for (int t = 1; t <= traj.n_steps; ++t) {
    served += traj.served_mw[t] / net.base_mva;
    for (const auto& row : traj.delta_omega) dev += std::abs(row[t]);
  }
  out.energy_pu_s = cfg.alpha * cfg.dt_s * served;
  out.penalty_pu_s = cfg.beta * cfg.dt_s * dev / net.omega_nom();
  out.total = out.energy_pu_s - out.penalty_pu_s;
  return out;
}

}  // namespace psr
