// psrplan: restoration planning command line. Every run writes its payload
// files plus one manifest into --out-dir and is byte-reproducible from the
// manifest's config snapshot (wall-time fields excepted).
//
// Exit codes: 0 success; 1 the analysis ran and its verdict is
// infeasible/violated (payload still written); 2 usage or input error;
// 3 a resource cap fired.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "psr/dvlp.hpp"
#include "psr/dyn_opfr.hpp"
#include "psr/dynamics.hpp"
#include "psr/io.hpp"
#include "psr/model.hpp"
#include "psr/static_opfr.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kVerdict = 1;
constexpr int kUsage = 2;
constexpr int kCap = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string file_stem(std::string command) {
  for (char& c : command)
    if (c == '-') c = '_';
  return command;
}

// Shared per-command context: output directory, collected payload paths,
// wall clock, and the manifest written at the end of the body.
struct RunContext {
  std::string command;
  std::string out_dir;
  std::string case_hash = psr::fnv1a64_hex("");
  std::vector<std::string> outputs;
  Clock::time_point t0 = Clock::now();

  RunContext(std::string cmd, std::string dir)
      : command(std::move(cmd)), out_dir(std::move(dir)) {}

  std::string path_of(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }

  std::string emit(const std::string& name, const std::string& content) {
    fs::create_directories(out_dir);
    const std::string p = path_of(name);
    psr::write_file(p, content);
    outputs.push_back(p);
    return p;
  }

  void finish(const json& config_snapshot) {
    fs::create_directories(out_dir);
    const std::string p = path_of(file_stem(command) + "_manifest.json");
    psr::write_file(p, psr::manifest_json(command, config_snapshot.dump(), case_hash,
                                          outputs, seconds_since(t0)));
  }
};

psr::PowerNetwork load_case_file(RunContext& ctx, const std::string& path) {
  const std::string bytes = psr::read_file(path);
  ctx.case_hash = psr::fnv1a64_hex(bytes);
  return psr::load_case(bytes);
}

// Simulation knobs: defaults, overridden by --config, overridden by flags.
struct ConfigFlags {
  std::string path;
  double dt_s = 0, t_max_s = 0, df_max_hz = 0, alpha = 0, beta = 0, epsilon_rad_s = 0,
         kappa_s = 0;
  CLI::Option *o_dt = nullptr, *o_tmax = nullptr, *o_df = nullptr, *o_alpha = nullptr,
              *o_beta = nullptr, *o_eps = nullptr, *o_kappa = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", path,
                    "JSON config file; keys dt_s, t_max_s, df_max_hz, alpha, beta, "
                    "epsilon_rad_s, kappa_s")
        ->check(CLI::ExistingFile);
    o_dt = cmd->add_option("--dt-s", dt_s, "simulation step (s)");
    o_tmax = cmd->add_option("--t-max-s", t_max_s, "horizon (s)");
    o_df = cmd->add_option("--df-max-hz", df_max_hz, "frequency band half-width (Hz)");
    o_alpha = cmd->add_option("--alpha", alpha, "served-energy weight");
    o_beta = cmd->add_option("--beta", beta, "frequency-deviation weight");
    o_eps = cmd->add_option("--epsilon-rad-s", epsilon_rad_s,
                            "synchronisation tolerance at pickup (rad/s)");
    o_kappa = cmd->add_option("--kappa-s", kappa_s, "switching slot width (s)");
  }

  psr::RunConfig resolve() const {
    psr::RunConfig rc;
    if (!path.empty()) rc = psr::parse_run_config(psr::read_file(path));
    if (o_dt->count()) rc.dt_s = dt_s;
    if (o_tmax->count()) rc.t_max_s = t_max_s;
    if (o_df->count()) rc.df_max_hz = df_max_hz;
    if (o_alpha->count()) rc.alpha = alpha;
    if (o_beta->count()) rc.beta = beta;
    if (o_eps->count()) rc.epsilon_rad_s = epsilon_rad_s;
    if (o_kappa->count()) rc.kappa_s = kappa_s;
    return rc;
  }
};

json config_json(const psr::RunConfig& rc) {
  return json{{"dt_s", rc.dt_s},
              {"t_max_s", rc.t_max_s},
              {"df_max_hz", rc.df_max_hz},
              {"alpha", rc.alpha},
              {"beta", rc.beta},
              {"epsilon_rad_s", rc.epsilon_rad_s},
              {"kappa_s", rc.kappa_s}};
}

json objective_json(const psr::ObjectiveBreakdown& ob) {
  return json{{"energy_pu_s", ob.energy_pu_s},
              {"penalty_pu_s", ob.penalty_pu_s},
              {"total", ob.total}};
}

const char* violation_kind_name(psr::Violation::Kind k) {
  switch (k) {
    case psr::Violation::FrequencyBand: return "band";
    case psr::Violation::MechPowerLimit: return "pm";
    case psr::Violation::BranchOverload: return "branch";
    case psr::Violation::SyncMismatch: return "sync";
  }
  return "?";
}

json violations_json(const psr::Trajectory& traj, std::size_t limit = 50) {
  json arr = json::array();
  for (const psr::Violation& v : traj.violations) {
    if (arr.size() >= limit) break;
    arr.push_back({{"kind", violation_kind_name(v.kind)},
                   {"step", v.step},
                   {"component_id", v.component_id},
                   {"magnitude", v.magnitude}});
  }
  return arr;
}

json condensed_json(const psr::PowerNetwork& net, const psr::CondensedSchedule& s,
                    const psr::DynConfig& cfg) {
  json arr = json::array();
  for (const auto& [slot, comp] : s.actions)
    arr.push_back({{"slot", slot},
                   {"kind", net.component_kind_name(comp.kind)},
                   {"id", net.component_id(comp)},
                   {"time_s", cfg.slot_start_step(slot) * cfg.dt_s}});
  return arr;
}

const char* dyn_status_name(psr::DynResult::Status s) {
  switch (s) {
    case psr::DynResult::Status::Optimal: return "optimal";
    case psr::DynResult::Status::Heuristic: return "heuristic";
    case psr::DynResult::Status::Capped: return "capped";
  }
  return "?";
}

json dyn_stats_json(const psr::DynSearchStats& st) {
  return json{{"nodes", st.nodes},           {"static_pruned", st.static_pruned},
              {"bound_pruned", st.bound_pruned}, {"prefix_pruned", st.prefix_pruned},
              {"lp_evals", st.lp_evals},     {"lp_capped", st.lp_capped}};
}

json dyn_result_json(const psr::PowerNetwork& net, const psr::DynResult& res,
                     const psr::DynConfig& cfg) {
  return json{{"status", dyn_status_name(res.status)},
              {"schedule", condensed_json(net, res.schedule, cfg)},
              {"x_ref", res.x_ref},
              {"objective", objective_json(res.objective)},
              {"stats", dyn_stats_json(res.stats)},
              {"n_violations", res.trajectory.violations.size()},
              {"violations", violations_json(res.trajectory)}};
}

// ---------------------------------------------------------------- commands

int cmd_export_case(const std::string& variant, const std::string& out_dir,
                    std::string file_name) {
  RunContext ctx{"export-case", out_dir};
  const psr::Ieee9Variant v = variant == "two-loads" ? psr::Ieee9Variant::TwoLoads
                                                     : psr::Ieee9Variant::ThreeLoads;
  if (file_name.empty()) file_name = "case_" + file_stem(variant) + ".json";
  const std::string bytes = psr::serialize_case(psr::builtin_ieee9(v));
  ctx.case_hash = psr::fnv1a64_hex(bytes);
  ctx.emit(file_name, bytes);
  ctx.finish(json{{"variant", variant}, {"file", file_name}});
  return kOk;
}

int cmd_opfr(const std::string& case_path, int slots, long long node_cap,
             const std::string& out_dir) {
  RunContext ctx{"opfr", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::StaticResult res = psr::solve_opfr(net, slots, node_cap);

  ctx.emit("opfr_schedule.csv", psr::schedule_to_csv(net, res.schedule));
  json summary{{"energy_mw_steps", res.energy_mw_steps},
               {"horizon_slots", slots},
               {"n_actions", res.schedule.actions.size()},
               {"node_cap_reached", res.node_cap_reached},
               {"stats",
                {{"nodes", res.stats.nodes},
                 {"lp_solves", res.stats.lp_solves},
                 {"cache_hits", res.stats.cache_hits}}},
               {"wall_time_s", seconds_since(ctx.t0)}};
  ctx.emit("opfr_summary.json", summary.dump(2) + "\n");
  ctx.finish(json{{"case", case_path}, {"slots", slots}, {"node_cap", node_cap}});
  return res.node_cap_reached ? kCap : kOk;
}

int cmd_validate(const std::string& case_path, int slots, long long cap,
                 long long expect_connectivity, long long expect_feasible,
                 const std::string& out_dir) {
  RunContext ctx{"validate", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::OracleResult res = psr::brute_force_oracle(net, slots, cap);

  json counts{{"connectivity_count", res.connectivity_count},
              {"feasible_count", res.feasible_count},
              {"best_energy_mw_steps", res.best_energy_mw_steps},
              {"status", res.cap_reached ? "cap reached" : "ok"},
              {"lp_solves", res.lp_solves},
              {"cache_hits", res.cache_hits},
              {"first_sequences", res.sample_sequences},
              {"wall_time_s", seconds_since(ctx.t0)}};
  bool mismatch = false;
  if (expect_connectivity >= 0) {
    counts["expected_connectivity"] = expect_connectivity;
    mismatch |= res.connectivity_count != expect_connectivity;
  }
  if (expect_feasible >= 0) {
    counts["expected_feasible"] = expect_feasible;
    mismatch |= res.feasible_count != expect_feasible;
  }
  if (expect_connectivity >= 0 || expect_feasible >= 0)
    counts["expectations_met"] = !mismatch;
  ctx.emit("validate_counts.json", counts.dump(2) + "\n");
  ctx.finish(json{{"case", case_path},
                  {"slots", slots},
                  {"cap", cap},
                  {"expect_connectivity", expect_connectivity},
                  {"expect_feasible", expect_feasible}});

  if (mismatch) {
    std::cerr << "count mismatch; first enumerated sequences for audit:\n";
    for (const std::string& s : res.sample_sequences) std::cerr << "  " << s << "\n";
    return kVerdict;
  }
  return res.cap_reached ? kCap : kOk;
}

psr::CondensedSchedule load_schedule(const psr::PowerNetwork& net,
                                     const std::string& schedule_path, bool static_steps,
                                     const psr::DynConfig& dyn, std::string* hash_out) {
  const std::string bytes = psr::read_file(schedule_path);
  if (hash_out) *hash_out = psr::fnv1a64_hex(bytes);
  const psr::CondensedSchedule sched =
      psr::to_condensed(net, psr::parse_schedule_csv(net, bytes), static_steps);
  if (auto err = psr::condensed_schedule_error(net, sched, dyn))
    throw psr::CaseError(schedule_path, *err);
  return sched;
}

int cmd_simulate(const std::string& case_path, const std::string& schedule_path,
                 bool static_steps, std::vector<double> x_ref, const ConfigFlags& cf,
                 const std::string& out_dir) {
  RunContext ctx{"simulate", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::RunConfig rc = cf.resolve();
  const psr::DynConfig dyn = rc.to_dyn();
  std::string sched_hash;
  const psr::CondensedSchedule sched =
      load_schedule(net, schedule_path, static_steps, dyn, &sched_hash);

  const std::size_t ng = net.generators.size();
  if (x_ref.empty()) x_ref.assign(ng, 0.0);
  if (x_ref.size() != ng)
    throw psr::CaseError("--x-ref", "expected " + std::to_string(ng) + " values, got " +
                                        std::to_string(x_ref.size()));

  const psr::Trajectory traj = psr::simulate(net, sched, x_ref, dyn);
  const psr::ObjectiveBreakdown ob = psr::objective(net, traj, dyn);

  ctx.emit("simulate_trajectory.csv", psr::trajectory_to_csv(net, traj, dyn));
  json pickups = json::array();
  for (const auto& p : traj.pickups)
    pickups.push_back({{"step", p.step},
                       {"gen_id", net.generators[p.gen].id},
                       {"mismatch_rad_s", p.mismatch}});
  json summary{{"objective", objective_json(ob)},
               {"max_abs_delta_omega_connected", traj.max_abs_delta_omega_connected},
               {"max_p_m", traj.max_p_m},
               {"served_final_mw", traj.served_mw.back()},
               {"n_violations", traj.violations.size()},
               {"violations", violations_json(traj)},
               {"pickups", pickups},
               {"wall_time_s", seconds_since(ctx.t0)}};
  ctx.emit("simulate_summary.json", summary.dump(2) + "\n");

  json snap = config_json(rc);
  snap["case"] = case_path;
  snap["schedule"] = schedule_path;
  snap["schedule_hash"] = "fnv1a64:" + sched_hash;
  snap["static_steps"] = static_steps;
  snap["x_ref"] = x_ref;
  ctx.finish(snap);
  return traj.violations.empty() ? kOk : kVerdict;
}

const char* binding_kind_name(psr::DvlpBinding::Kind k) {
  switch (k) {
    case psr::DvlpBinding::BandHigh: return "band_high";
    case psr::DvlpBinding::BandLow: return "band_low";
    case psr::DvlpBinding::Sync: return "sync";
    case psr::DvlpBinding::PmHigh: return "pm_high";
    case psr::DvlpBinding::PmLow: return "pm_low";
  }
  return "?";
}

int cmd_dvlp(const std::string& case_path, const std::string& schedule_path,
             bool static_steps, bool feasibility_only, const psr::DvlpOptions& base_opt,
             const ConfigFlags& cf, const std::string& out_dir) {
  RunContext ctx{"dvlp", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::RunConfig rc = cf.resolve();
  const psr::DynConfig dyn = rc.to_dyn();
  std::string sched_hash;
  const psr::CondensedSchedule sched =
      load_schedule(net, schedule_path, static_steps, dyn, &sched_hash);

  psr::DvlpOptions opt = base_opt;
  opt.minimize_penalty = !feasibility_only;
  const psr::DvlpResult res = psr::solve_dvlp(net, sched, dyn, opt);

  json binding = json::array();
  for (const psr::DvlpBinding& b : res.binding)
    binding.push_back({{"kind", binding_kind_name(b.kind)},
                       {"gen_id", net.generators[b.gen].id},
                       {"step", b.step}});
  const char* status = res.status == psr::DvlpResult::Status::Feasible     ? "feasible"
                       : res.status == psr::DvlpResult::Status::Infeasible ? "infeasible"
                                                                           : "row_gen_capped";
  json report{{"status", status},
              {"x_ref", res.x},
              {"penalty_pu_s", res.penalty_pu_s},
              {"min_band_width_hz", res.min_band_width_hz},
              {"hard_infeasible", res.hard_infeasible},
              {"rounds", res.rounds},
              {"rows", res.rows},
              {"binding", binding},
              {"wall_time_s", seconds_since(ctx.t0)}};
  ctx.emit("dvlp_report.json", report.dump(2) + "\n");

  json snap = config_json(rc);
  snap["case"] = case_path;
  snap["schedule"] = schedule_path;
  snap["schedule_hash"] = "fnv1a64:" + sched_hash;
  snap["static_steps"] = static_steps;
  snap["feasibility_only"] = feasibility_only;
  snap["box_rad_s"] = opt.box_rad_s;
  snap["max_rounds"] = opt.max_rounds;
  snap["rows_per_round"] = opt.rows_per_round;
  snap["cut_step"] = opt.cut_step;
  ctx.finish(snap);

  switch (res.status) {
    case psr::DvlpResult::Status::Feasible: return kOk;
    case psr::DvlpResult::Status::Infeasible: return kVerdict;
    case psr::DvlpResult::Status::RowGenCapped: return kCap;
  }
  return kUsage;
}

json search_snapshot(const psr::RunConfig& rc, const std::string& case_path,
                     const std::string& mode, int beam_width, int threads,
                     long long node_cap, bool prefix_prune) {
  json snap = config_json(rc);
  snap["case"] = case_path;
  snap["mode"] = mode;
  snap["beam_width"] = beam_width;
  snap["threads"] = threads;
  snap["node_cap"] = node_cap;
  snap["prefix_prune"] = prefix_prune;
  return snap;
}

int cmd_dynopfr(const std::string& case_path, const std::string& mode, int beam_width,
                int threads, long long node_cap, bool prefix_prune, const ConfigFlags& cf,
                const std::string& out_dir) {
  RunContext ctx{"dynopfr", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::RunConfig rc = cf.resolve();

  psr::DynScheduleConfig scfg;
  scfg.dyn = rc.to_dyn();
  scfg.node_cap = node_cap;
  scfg.threads = threads;
  scfg.prefix_prune = prefix_prune;
  const psr::SearchMode sm =
      mode == "beam" ? psr::SearchMode::beam(beam_width) : psr::SearchMode::exact();
  const json snap =
      search_snapshot(rc, case_path, mode, beam_width, threads, node_cap, prefix_prune);

  psr::DynResult res;
  try {
    res = psr::solve_dynopfr(net, scfg, sm);
  } catch (const psr::CaseError& e) {
    // Even the empty schedule violates the band: an analysis verdict, not a
    // usage error.
    json obj{{"status", "infeasible"}, {"error", e.what()}};
    ctx.emit("dynopfr_objective.json", obj.dump(2) + "\n");
    ctx.finish(snap);
    return kVerdict;
  }

  ctx.emit("dynopfr_schedule.csv", psr::condensed_to_csv(net, res.schedule, scfg.dyn));
  ctx.emit("dynopfr_trajectory.csv", psr::trajectory_to_csv(net, res.trajectory, scfg.dyn));
  json obj = dyn_result_json(net, res, scfg.dyn);
  obj["wall_time_s"] = seconds_since(ctx.t0);
  ctx.emit("dynopfr_objective.json", obj.dump(2) + "\n");
  ctx.finish(snap);
  return res.status == psr::DynResult::Status::Capped ? kCap : kOk;
}

int cmd_compare(const std::string& case_path, const std::string& mode, int beam_width,
                int threads, long long node_cap, const ConfigFlags& cf,
                const std::string& out_dir) {
  RunContext ctx{"compare", out_dir};
  const psr::PowerNetwork net = load_case_file(ctx, case_path);
  const psr::RunConfig rc = cf.resolve();

  psr::DynScheduleConfig scfg;
  scfg.dyn = rc.to_dyn();
  scfg.node_cap = node_cap;
  scfg.threads = threads;
  const psr::SearchMode sm =
      mode == "beam" ? psr::SearchMode::beam(beam_width) : psr::SearchMode::exact();
  json snap = search_snapshot(rc, case_path, mode, beam_width, threads, node_cap, true);

  psr::CompareReport rep;
  try {
    rep = psr::compare_static_dynamic(net, scfg, sm);
  } catch (const psr::CaseError& e) {
    json obj{{"status", "infeasible"}, {"error", e.what()}};
    ctx.emit("compare_report.json", obj.dump(2) + "\n");
    ctx.finish(snap);
    return kVerdict;
  }

  ctx.emit("compare_static_schedule.csv", psr::schedule_to_csv(net, rep.static_schedule));
  ctx.emit("compare_dynamic_schedule.csv",
           psr::condensed_to_csv(net, rep.dynamic.schedule, scfg.dyn));

  json stat{{"schedule", condensed_json(net, rep.static_mapped, scfg.dyn)},
            {"energy_mw_steps", rep.static_energy_mw_steps},
            {"dynamically_feasible", rep.static_dynamically_feasible},
            {"hard_infeasible", rep.static_hard_infeasible},
            {"min_band_width_hz", rep.static_min_band_width_hz},
            {"penalty_pu_s", rep.static_penalty_pu_s},
            {"total", rep.static_total},
            {"x_ref", rep.static_x_ref}};
  json report{{"static", stat},
              {"dynamic", dyn_result_json(net, rep.dynamic, scfg.dyn)},
              {"wall_time_s", seconds_since(ctx.t0)}};
  ctx.emit("compare_report.json", report.dump(2) + "\n");
  ctx.finish(snap);

  const bool clean =
      rep.static_dynamically_feasible && rep.dynamic.trajectory.violations.empty();
  return clean ? kOk : kVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power system restoration planning toolkit"};
  app.set_version_flag("--version", psr::kToolVersion);
  app.require_subcommand(1);
  int exit_code = kOk;

  // export-case
  {
    auto* cmd = app.add_subcommand("export-case", "Write a builtin case file");
    auto variant = std::make_shared<std::string>("three-loads");
    auto out_dir = std::make_shared<std::string>(".");
    auto file_name = std::make_shared<std::string>();
    cmd->add_option("--variant", *variant, "three-loads or two-loads")
        ->check(CLI::IsMember({"three-loads", "two-loads"}));
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cmd->add_option("--file", *file_name, "case file name (default case_<variant>.json)");
    cmd->callback(
        [=, &exit_code] { exit_code = cmd_export_case(*variant, *out_dir, *file_name); });
  }

  // opfr
  {
    auto* cmd = app.add_subcommand("opfr", "Maximize served energy over switching steps");
    auto case_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto slots = std::make_shared<int>(10);
    auto node_cap = std::make_shared<long long>(-1);
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--slots", *slots, "number of switching steps")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--node-cap", *node_cap, "search node cap, -1 unlimited");
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cmd->callback([=, &exit_code] {
      exit_code = cmd_opfr(*case_path, *slots, *node_cap, *out_dir);
    });
  }

  // validate
  {
    auto* cmd = app.add_subcommand(
        "validate", "Exhaustively enumerate switch sequences and report counts");
    auto case_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto slots = std::make_shared<int>(10);
    auto cap = std::make_shared<long long>(-1);
    auto expect_conn = std::make_shared<long long>(-1);
    auto expect_feas = std::make_shared<long long>(-1);
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--slots", *slots, "number of switching steps")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cap", *cap, "sequence cap, -1 unlimited");
    cmd->add_option("--expect-connectivity", *expect_conn,
                    "expected connectivity-feasible count; mismatch exits 1");
    cmd->add_option("--expect-feasible", *expect_feas,
                    "expected all-prefix-feasible count; mismatch exits 1");
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cmd->callback([=, &exit_code] {
      exit_code =
          cmd_validate(*case_path, *slots, *cap, *expect_conn, *expect_feas, *out_dir);
    });
  }

  // simulate
  {
    auto* cmd = app.add_subcommand("simulate", "Run a schedule through the island dynamics");
    auto case_path = std::make_shared<std::string>();
    auto schedule_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto static_steps = std::make_shared<bool>(false);
    auto x_ref = std::make_shared<std::vector<double>>();
    auto cf = std::make_shared<ConfigFlags>();
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--schedule", *schedule_path, "schedule CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_flag("--static-steps", *static_steps,
                  "schedule step column is a 1-based switching step; map step k to slot k+1");
    cmd->add_option("--x-ref", *x_ref,
                    "per-generator frequency references (rad/s), comma separated")
        ->delimiter(',');
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cf->add_to(cmd);
    cmd->callback([=, &exit_code] {
      exit_code =
          cmd_simulate(*case_path, *schedule_path, *static_steps, *x_ref, *cf, *out_dir);
    });
  }

  // dvlp
  {
    auto* cmd = app.add_subcommand(
        "dvlp", "Validate a schedule over all setpoint choices and pick the best");
    auto case_path = std::make_shared<std::string>();
    auto schedule_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto static_steps = std::make_shared<bool>(false);
    auto feas_only = std::make_shared<bool>(false);
    auto opt = std::make_shared<psr::DvlpOptions>();
    auto cf = std::make_shared<ConfigFlags>();
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--schedule", *schedule_path, "schedule CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_flag("--static-steps", *static_steps,
                  "schedule step column is a 1-based switching step; map step k to slot k+1");
    cmd->add_flag("--feasibility-only", *feas_only, "skip the penalty minimization phase");
    cmd->add_option("--box-rad-s", opt->box_rad_s, "setpoint box half-width (rad/s)");
    cmd->add_option("--max-rounds", opt->max_rounds, "row generation round cap");
    cmd->add_option("--rows-per-round", opt->rows_per_round,
                    "violated rows admitted per family and round");
    cmd->add_option("--cut-step", opt->cut_step, "restrict rows to steps <= cut, -1 full");
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cf->add_to(cmd);
    cmd->callback([=, &exit_code] {
      exit_code = cmd_dvlp(*case_path, *schedule_path, *static_steps, *feas_only, *opt, *cf,
                           *out_dir);
    });
  }

  // dynopfr
  {
    auto* cmd = app.add_subcommand(
        "dynopfr", "Search condensed schedules maximizing energy minus deviation penalty");
    auto case_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto mode = std::make_shared<std::string>("exact");
    auto beam_width = std::make_shared<int>(8);
    auto threads = std::make_shared<int>(1);
    auto node_cap = std::make_shared<long long>(-1);
    auto no_prefix = std::make_shared<bool>(false);
    auto cf = std::make_shared<ConfigFlags>();
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", *mode, "exact or beam")
        ->check(CLI::IsMember({"exact", "beam"}));
    cmd->add_option("--beam-width", *beam_width, "beam width, <= 0 keeps every child");
    cmd->add_option("--threads", *threads, "worker threads")->check(CLI::Range(1, 256));
    cmd->add_option("--node-cap", *node_cap, "expanded prefix cap, -1 unlimited");
    cmd->add_flag("--no-prefix-prune", *no_prefix, "disable window-LP subtree pruning");
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cf->add_to(cmd);
    cmd->callback([=, &exit_code] {
      exit_code = cmd_dynopfr(*case_path, *mode, *beam_width, *threads, *node_cap,
                              !*no_prefix, *cf, *out_dir);
    });
  }

  // compare
  {
    auto* cmd = app.add_subcommand(
        "compare", "Solve statically, check dynamic feasibility, and solve dynamically");
    auto case_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto mode = std::make_shared<std::string>("beam");
    auto beam_width = std::make_shared<int>(8);
    auto threads = std::make_shared<int>(1);
    auto node_cap = std::make_shared<long long>(-1);
    auto cf = std::make_shared<ConfigFlags>();
    cmd->add_option("--case", *case_path, "case file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", *mode, "exact or beam")
        ->check(CLI::IsMember({"exact", "beam"}));
    cmd->add_option("--beam-width", *beam_width, "beam width, <= 0 keeps every child");
    cmd->add_option("--threads", *threads, "worker threads")->check(CLI::Range(1, 256));
    cmd->add_option("--node-cap", *node_cap, "expanded prefix cap, -1 unlimited");
    cmd->add_option("-o,--out-dir", *out_dir, "output directory");
    cf->add_to(cmd);
    cmd->callback([=, &exit_code] {
      exit_code =
          cmd_compare(*case_path, *mode, *beam_width, *threads, *node_cap, *cf, *out_dir);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const psr::CaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return exit_code;
}
