#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "aaa/conduct_service.hpp"
#include "aaa/json_io.hpp"
#include "aaa/trial_sim.hpp"
#include "http_api.hpp"

using namespace aaa;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return json::parse(in);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void print_matrix(const char* title, const std::vector<std::vector<double>>& m,
                  const OperatingCharacteristics& oc) {
  std::printf("%s\n", title);
  const std::size_t J = oc.raw_a.size();
  const std::size_t K = oc.raw_b.size();
  for (std::size_t k = K; k-- > 0;) {
    std::printf("  B=%-7.3g", oc.raw_b[k]);
    for (std::size_t j = 0; j < J; ++j) std::printf(" %7.1f", m[j][k]);
    std::printf("\n");
  }
  std::printf("  %9s", "A=");
  for (std::size_t j = 0; j < J; ++j) std::printf(" %7.3g", oc.raw_a[j]);
  std::printf("\n");
}

void print_oc(const OperatingCharacteristics& oc) {
  std::printf("%s  (%zu replicates, %zu failed, ACD %s)\n", oc.label.c_str(), oc.replicates,
              oc.failed, oc.acd ? "on" : "off");
  print_matrix("[1] selection %", oc.selection_pct, oc);
  std::printf("  inserted %.1f   none %.1f\n", oc.selection_inserted_pct, oc.selection_none_pct);
  print_matrix("[2] allocation %", oc.allocation_pct, oc);
  std::printf("  inserted %.1f   mean patients %.1f\n", oc.allocation_inserted_pct,
              oc.mean_patients);
  std::printf("[3] trials with an insertion %.1f%%\n", oc.insertion_rate);
  std::printf("[4] model selected %%: M1 %.1f  M2 %.1f  M3 %.1f  M4 %.1f\n",
              oc.model_selection_pct[0], oc.model_selection_pct[1], oc.model_selection_pct[2],
              oc.model_selection_pct[3]);
  static const char* names[] = {"alpha0", "alpha1", "alpha2", "beta0",
                                "beta1",  "beta2",  "beta3",  "beta4"};
  std::printf("[5] posterior means, mean (sd)\n");
  for (std::size_t i = 0; i < oc.posterior_means.size(); ++i) {
    std::printf("  %-7s %8.3f (%.3f)\n", names[i], oc.posterior_means[i].mean,
                oc.posterior_means[i].sd);
  }
  if (oc.mean_selected) {
    std::printf("[6] mean selected dose: std (%.3f, %.3f)  raw (%.3f, %.3f)\n",
                oc.mean_selected->a, oc.mean_selected->b, oc.mean_selected_raw->a,
                oc.mean_selected_raw->b);
  } else {
    std::printf("[6] mean selected dose: none\n");
  }
  std::printf("[7] duration %.1f (%.1f) days   early termination %.1f%%\n", oc.duration.mean,
              oc.duration.sd, 100.0 * oc.early_termination_rate);
}

struct SimArgs {
  std::string scenario;
  std::string design;
  std::size_t reps = 100;
  std::uint64_t seed = 7;
  bool no_acd = false;
  bool long_mcmc = false;
  std::string out;
  std::string records;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

std::pair<ScenarioSpec, DesignFile> load_inputs(const SimArgs& a) {
  ScenarioSpec s = scenario_from_json(read_json_file(a.scenario));
  DesignFile d = a.design.empty() ? design_file_from_json(json::object())
                                  : design_file_from_json(read_json_file(a.design));
  if (a.long_mcmc) {
    d.base.mcmc_total = McmcConfig::long_run().total;
    d.base.mcmc_burn_in = McmcConfig::long_run().burn_in;
  }
  return {s, d};
}

void add_sim_options(CLI::App* cmd, SimArgs& a) {
  cmd->add_option("--scenario", a.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--design", a.design, "design JSON")->check(CLI::ExistingFile);
  cmd->add_option("--reps", a.reps, "replicates")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "root seed");
  cmd->add_flag("--long-mcmc", a.long_mcmc, "10,000/5,000 chains");
  cmd->add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
}

int run_sim(const SimArgs& a) {
  auto [scenario, design] = load_inputs(a);
  const ReplicateRun run =
      run_replicates(scenario, design.base, design.time, !a.no_acd, a.reps, a.seed, a.threads);
  print_oc(run.oc);
  if (!a.out.empty()) write_json_file(a.out, run.oc);
  if (!a.records.empty()) {
    std::ofstream out(a.records);
    for (const TrialRecord& r : run.records) out << json(r).dump() << '\n';
  }
  return run.oc.failed == 0 ? 0 : 1;
}

int run_duration(const SimArgs& a) {
  auto [scenario, design] = load_inputs(a);
  const DurationComparison d =
      duration_comparison(scenario, design.base, design.time, a.reps, a.seed, a.threads);
  std::printf("%-20s %10s %10s %8s\n", "seed", "ACD", "single", "divided");
  for (const DurationPair& p : d.pairs) {
    std::printf("%-20llu %10.1f %10.1f %8s\n", static_cast<unsigned long long>(p.seed), p.with_acd,
                p.without_acd, p.divided ? "yes" : "no");
  }
  std::printf("mean ACD %.1f  mean single %.1f  mean saving %.1f  ACD longer in %zu of %zu\n",
              d.mean_with_acd, d.mean_without_acd, d.mean_saving, d.acd_longer, d.pairs.size());
  if (!a.out.empty()) write_json_file(a.out, d);
  return 0;
}

int run_scenario_info(const SimArgs& a) {
  auto [s, design] = load_inputs(a);
  const DoseGrid g = s.grid();
  const UtilityParams& u = design.base.utility;
  std::printf("%s\n  %-12s %-16s %7s %7s %7s\n", s.label.c_str(), "level", "raw", "p", "q", "U");
  for (std::size_t j = 0; j < g.size_a(); ++j) {
    for (std::size_t k = 0; k < g.size_b(); ++k) {
      const DosePair x = g.point(j, k);
      const DosePair r = g.to_raw(x);
      const double p = s.p_true(x);
      const double q = s.q_true(x);
      const double util = p > u.pT ? 0.0 : utility_safety(p, u) * utility_efficacy(q, u);
      const std::string level = "(" + std::to_string(j + 1) + "," + std::to_string(k + 1) + ")";
      char raw[64];
      std::snprintf(raw, sizeof raw, "(%.3g, %.3g)", r.a, r.b);
      std::printf("  %-12s %-16s %7.3f %7.3f %7.3f\n", level.c_str(), raw, p, q, util);
    }
  }
  if (auto b = true_bodc(s, u)) {
    const DosePair r = g.to_raw(*b);
    std::printf("true BODC: std (%.4f, %.4f)  raw (%.4f, %.4f)\n", b->a, b->b, r.a, r.b);
  } else {
    std::printf("true BODC: none (utility zero on the whole region)\n");
  }
  return 0;
}

bool is_record_file(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    return j.is_object() && j.contains("events");
  }
  return false;
}

// Simulator output: one TrialRecord per line, each carrying its event log.
int replay_records(const std::string& path, bool verify) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  std::size_t bad = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    std::vector<TrialEvent> events;
    for (const json& e : j.at("events")) events.push_back(e.get<TrialEvent>());
    const ReplayReport r = replay_events_verified(events, verify);
    ++n;
    bad += r.verified() ? 0 : 1;
    std::printf("trial %zu  seed %s  events %zu  decisions checked %zu  mismatches %zu\n", n,
                j.value("seed", json()).dump().c_str(), r.state.log.size(), r.decisions_checked,
                r.mismatches.size());
    for (const std::string& m : r.mismatches) std::printf("  %s\n", m.c_str());
  }
  return bad == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AAA dual-agent dose finding"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "simulate replicate trials");
  add_sim_options(sim_cmd, sim);
  sim_cmd->add_flag("--no-acd", sim.no_acd, "replace cohort division by a random choice");
  sim_cmd->add_option("--out", sim.out, "operating characteristics JSON");
  sim_cmd->add_option("--records", sim.records, "per-trial records, JSON lines");

  SimArgs dur;
  auto* dur_cmd = app.add_subcommand("duration", "paired durations with and without division");
  add_sim_options(dur_cmd, dur);
  dur_cmd->add_option("--out", dur.out, "comparison JSON");

  SimArgs info;
  auto* info_cmd = app.add_subcommand("scenario", "true curves and optimum of a scenario");
  info_cmd->add_option("--scenario", info.scenario)->required()->check(CLI::ExistingFile);
  info_cmd->add_option("--design", info.design)->check(CLI::ExistingFile);

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir = "trials";
  bool fast = false;
  auto* serve_cmd = app.add_subcommand("serve", "run the trial-conduct HTTP service");
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--data", data_dir, "event-log directory");
  serve_cmd->add_flag("--fast", fast, "4,000/2,000 chains by default");

  double pT = 0.3, q1 = 0.45, q2 = 0.85, U = 0.3;
  auto* cal_cmd = app.add_subcommand("calibrate", "solve for the utility parameters");
  cal_cmd->add_option("--pT", pT);
  cal_cmd->add_option("--q1", q1);
  cal_cmd->add_option("--q2", q2);
  cal_cmd->add_option("--U", U);

  std::string log_file;
  bool no_verify = false;
  auto* replay_cmd = app.add_subcommand("replay", "rebuild and verify trials from an event log or simulator records");
  replay_cmd->add_option("--log", log_file)->required()->check(CLI::ExistingFile);
  replay_cmd->add_flag("--no-verify", no_verify, "fold only, do not recompute decisions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) return run_sim(sim);
    if (*dur_cmd) return run_duration(dur);
    if (*info_cmd) return run_scenario_info(info);
    if (*cal_cmd) {
      const CalibrationSpec spec{pT, q1, q2, U};
      spec.validate();
      const UtilityParams u = calibrate_eta(spec);
      const auto res = calibration_residuals(u, spec);
      std::cout << json{{"eta0", u.eta0}, {"eta1", u.eta1}, {"eta2", u.eta2}, {"eta3", u.eta3},
                        {"pT", u.pT}, {"residuals", res}}
                       .dump(2)
                << '\n';
      return 0;
    }
    if (*replay_cmd) {
      if (is_record_file(log_file)) return replay_records(log_file, !no_verify);
      const ReplayReport r = replay_log(log_file, !no_verify);
      std::cout << state_to_json(r.state).dump(2) << '\n';
      std::printf("events %zu  decisions checked %zu  mismatches %zu\n", r.state.log.size(),
                  r.decisions_checked, r.mismatches.size());
      for (const std::string& m : r.mismatches) std::printf("  %s\n", m.c_str());
      return r.verified() ? 0 : 2;
    }
    if (*serve_cmd) {
      TrialService service(data_dir, ServiceOptions{fast, true});
      httplib::Server server;
      http::register_routes(server, service);
      std::printf("listening on %s:%d, data in %s\n", host.c_str(), port, data_dir.c_str());
      std::fflush(stdout);
      return server.listen(host, port) ? 0 : 1;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.field().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
