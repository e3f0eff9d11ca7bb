#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "okbe/okbe_c.h"

namespace fs = std::filesystem;

namespace {

constexpr int kPixelsPerCell = 16;

struct RunConfig {
  std::string scenario;
  std::string out;
  int horizon = 64;
  double tol = 1e-12;
  int max_depth = 0;
  std::string option_set;
  bool prune = false;
  uint64_t samples = 0;
  uint64_t seed = 1;
  std::string format = "both";
  // verify
  std::string plan;
  // empower
  int steps = 2;
  std::string channel = "both";
  std::string space;
  int before = 0;
  int after = 1;
};

struct Failure {
  int code;
  std::string msg;
};

void check(int rc) {
  if (rc != OKBE_OK) throw Failure{rc, okbe_last_error_message()};
}

class ScenarioHandle {
 public:
  explicit ScenarioHandle(const std::string& name) { check(okbe_scenario_open(name.c_str(), &s_)); }
  ~ScenarioHandle() { okbe_scenario_free(s_); }
  ScenarioHandle(const ScenarioHandle&) = delete;
  ScenarioHandle& operator=(const ScenarioHandle&) = delete;
  const okbe_scenario* get() const { return s_; }

 private:
  okbe_scenario* s_ = nullptr;
};

std::string safe_name(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
  return s;
}

struct Grid {
  int rows, cols;
};

Grid grid_of(const okbe_scenario_info& info) {
  if (info.grid_rows > 0) return {info.grid_rows, info.grid_cols};
  return {info.num_base_states, 1};
}

class Writer {
 public:
  Writer(const RunConfig& cfg, Grid g) : dir_(cfg.out), grid_(g) {
    csv_ = cfg.format == "csv" || cfg.format == "both";
    ppm_ = cfg.format == "ppm" || cfg.format == "both";
    fs::create_directories(dir_);
  }

  void map(const std::string& layer, const std::vector<double>& v) {
    if (csv_) write_csv(layer, v);
    if (ppm_) write_ppm(layer, v, nullptr);
  }

  // Success mass in the green channel, violation mass in the red channel.
  void events(const std::string& layer, const std::vector<double>& success, const std::vector<double>& failure) {
    if (csv_) {
      write_csv(layer + "_success", success);
      write_csv(layer + "_failure", failure);
    }
    if (ppm_) write_ppm(layer, success, &failure);
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name);
    f << body;
    if (!f) throw Failure{OKBE_ERR_CONFIG, "cannot write " + (dir_ / name).string()};
  }

 private:
  void write_csv(const std::string& layer, const std::vector<double>& v) {
    std::ofstream f(dir_ / (layer + ".csv"));
    f << "row,col,value\n" << std::setprecision(17);
    for (int r = 0; r < grid_.rows; ++r)
      for (int c = 0; c < grid_.cols; ++c) f << r << "," << c << "," << v[static_cast<size_t>(r) * grid_.cols + c] << "\n";
    if (!f) throw Failure{OKBE_ERR_CONFIG, "cannot write " + (dir_ / (layer + ".csv")).string()};
  }

  static int level(double v, double scale) {
    if (!(scale > 0.0)) return 0;
    return static_cast<int>(std::lround(255.0 * std::clamp(v / scale, 0.0, 1.0)));
  }

  // Values in [0, 1] map directly; larger maps are scaled by their maximum.
  static double scale_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m > 1.0 ? m : 1.0;
  }

  void write_ppm(const std::string& layer, const std::vector<double>& a, const std::vector<double>* red) {
    std::ofstream f(dir_ / (layer + ".ppm"));
    const int W = grid_.cols * kPixelsPerCell, H = grid_.rows * kPixelsPerCell;
    f << "P3\n" << W << " " << H << "\n255\n";
    const double sa = scale_of(a), sr = red ? scale_of(*red) : 1.0;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        size_t i = static_cast<size_t>(y / kPixelsPerCell) * grid_.cols + x / kPixelsPerCell;
        if (red) {
          f << level((*red)[i], sr) << " " << level(a[i], sa) << " 0";
        } else {
          // Signed maps: positive green, negative red.
          double v = a[i];
          int g = v >= 0.0 ? level(v, sa) : 0, r = v < 0.0 ? level(-v, sa) : 0;
          f << r << " " << g << " 0";
        }
        f << (x + 1 < W ? " " : "\n");
      }
    }
    if (!f) throw Failure{OKBE_ERR_CONFIG, "cannot write " + (dir_ / (layer + ".ppm")).string()};
  }

  fs::path dir_;
  Grid grid_;
  bool csv_ = true, ppm_ = true;
};

okbe_config make_config(const RunConfig& rc) {
  okbe_config c;
  okbe_config_default(&c);
  c.horizon = rc.horizon;
  c.tol = rc.tol;
  c.max_depth = rc.max_depth;
  c.prune_sublimation = rc.prune ? 1 : 0;
  if (rc.option_set == "affordance") c.option_set = OKBE_OPTIONS_AFFORDANCE;
  else if (rc.option_set == "state-action") c.option_set = OKBE_OPTIONS_STATE_ACTION;
  else if (rc.option_set == "explicit") c.option_set = OKBE_OPTIONS_EXPLICIT;
  return c;
}

void validate(const RunConfig& rc) {
  if (rc.scenario.empty()) throw Failure{OKBE_ERR_CONFIG, "--scenario is required"};
  if (rc.horizon < 1) throw Failure{OKBE_ERR_CONFIG, "--horizon must be at least 1"};
  if (!(rc.tol > 0.0 && rc.tol < 1.0)) throw Failure{OKBE_ERR_CONFIG, "--tol must lie in (0, 1)"};
  if (rc.max_depth < 0) throw Failure{OKBE_ERR_CONFIG, "--max-depth must be nonnegative"};
  if (rc.steps < 1) throw Failure{OKBE_ERR_CONFIG, "--steps must be at least 1"};
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(12) << v;
  return o.str();
}

int cmd_solve(const RunConfig& rc) {
  ScenarioHandle s(rc.scenario);
  okbe_scenario_info info;
  check(okbe_scenario_get_info(s.get(), &info));
  auto cfg = make_config(rc);
  okbe_solution* sol = nullptr;
  check(okbe_solve(s.get(), &cfg, &sol));
  std::unique_ptr<okbe_solution, void (*)(okbe_solution*)> hold(sol, okbe_solution_free);
  Writer w(rc, grid_of(info));
  const size_t n = static_cast<size_t>(okbe_solution_num_states(sol));
  std::ostringstream sum;
  sum << "scenario " << okbe_scenario_name(s.get()) << "\n";
  for (int gi = 0; gi < okbe_solution_num_goals(sol); ++gi) {
    std::string name = safe_name(okbe_solution_goal_name(sol, gi));
    std::vector<double> kappa(n), succ(n), fail(n), time(n);
    std::vector<int32_t> pol(n);
    check(okbe_solution_kappa(sol, gi, kappa.data(), n));
    check(okbe_solution_policy(sol, gi, pol.data(), n));
    check(okbe_solution_summary(sol, gi, succ.data(), fail.data(), time.data(), n));
    long sweeps = 0;
    double resid = 0.0;
    check(okbe_solution_sweeps(sol, gi, &sweeps, &resid));
    w.map("kappa_" + name, kappa);
    w.map("policy_" + name, std::vector<double>(pol.begin(), pol.end()));
    w.events("events_" + name, succ, fail);
    w.map("time_" + name, time);
    double best = *std::max_element(kappa.begin(), kappa.end());
    sum << "goal " << name << " sweeps " << sweeps << " residual " << fmt(resid) << " max_kappa " << fmt(best)
        << "\n";
  }
  w.text("solve_summary.txt", sum.str());
  std::cout << sum.str();
  return 0;
}

int cmd_plan(const RunConfig& rc) {
  ScenarioHandle s(rc.scenario);
  okbe_scenario_info info;
  check(okbe_scenario_get_info(s.get(), &info));
  auto cfg = make_config(rc);
  okbe_plan* p = nullptr;
  check(okbe_plan_run(s.get(), &cfg, &p));
  std::unique_ptr<okbe_plan, void (*)(okbe_plan*)> hold(p, okbe_plan_free);
  okbe_plan_summary ps;
  check(okbe_plan_get_summary(p, &ps));
  Writer w(rc, grid_of(info));
  std::ostringstream o;
  o << "scenario " << okbe_scenario_name(s.get()) << "\n";
  o << "kappa " << fmt(ps.kappa) << "\nfailure " << fmt(ps.failure) << "\nalive " << fmt(ps.alive)
    << "\nexpected_time " << fmt(ps.expected_time) << "\nlength " << ps.length << "\nplan";
  for (int i = 0; i < ps.length; ++i) o << " " << okbe_plan_step_name(p, i);
  o << "\ngenerated " << ps.generated << "\nexpanded " << ps.expanded << "\npruned_options " << ps.pruned_options
    << "\npruned_nodes " << ps.pruned_nodes << "\ninfeasible_options " << ps.infeasible_options << "\nmerged "
    << ps.merged << "\n";
  const size_t n = static_cast<size_t>(info.num_base_states);
  for (int i = 0; i < ps.length; ++i) {
    std::vector<double> succ(n), fail(n);
    check(okbe_plan_event_maps(p, i, succ.data(), fail.data(), n));
    std::ostringstream layer;
    layer << "step" << std::setw(2) << std::setfill('0') << i + 1 << "_" << safe_name(okbe_plan_step_name(p, i));
    w.events(layer.str(), succ, fail);
  }
  w.text("plan.txt", o.str());
  std::cout << o.str() << "seconds " << fmt(ps.seconds) << "\n";
  return 0;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_verify(const RunConfig& rc) {
  ScenarioHandle s(rc.scenario);
  auto cfg = make_config(rc);
  auto names = split(rc.plan);
  std::vector<const char*> ptrs;
  for (const auto& n : names) ptrs.push_back(n.c_str());
  okbe_verify_result v;
  check(okbe_verify(s.get(), &cfg, rc.plan.empty() ? nullptr : ptrs.data(), ptrs.size(), rc.samples, rc.seed, &v));
  std::ostringstream o;
  o << "scenario " << okbe_scenario_name(s.get()) << "\n";
  o << "p_goal " << fmt(v.p_goal) << "\np_violation " << fmt(v.p_violation) << "\np_alive " << fmt(v.p_alive)
    << "\nexpected_time " << fmt(v.expected_time) << "\n";
  if (rc.samples > 0)
    o << "mc_runs " << v.mc_runs << "\nmc_goal " << fmt(v.mc_goal) << "\nmc_violation " << fmt(v.mc_violation)
      << "\nmc_alive " << fmt(v.mc_alive) << "\nmc_max_sigma " << fmt(v.mc_max_sigma) << "\nmc_within_3_sigma "
      << (v.mc_max_sigma <= 3.0 ? "yes" : "no") << "\n";
  fs::create_directories(rc.out);
  std::ofstream f(fs::path(rc.out) / "verify.txt");
  f << o.str();
  std::cout << o.str();
  return 0;
}

int cmd_empower(const RunConfig& rc) {
  ScenarioHandle s(rc.scenario);
  okbe_scenario_info info;
  check(okbe_scenario_get_info(s.get(), &info));
  auto cfg = make_config(rc);
  Writer w(rc, grid_of(info));
  std::vector<std::pair<std::string, int>> channels;
  if (rc.channel == "primitive" || rc.channel == "both") channels.emplace_back("primitive", OKBE_CHANNEL_PRIMITIVE);
  if (rc.channel == "options" || rc.channel == "both") channels.emplace_back("options", OKBE_CHANNEL_OPTIONS);
  int space = -1;
  if (!rc.space.empty()) {
    for (int k = 0; k < info.num_hl_spaces; ++k)
      if (rc.space == okbe_scenario_hl_name(s.get(), k)) space = k;
    if (space < 0) throw Failure{OKBE_ERR_CONFIG, "unknown high-level space '" + rc.space + "'"};
  }
  const size_t n = static_cast<size_t>(info.num_base_states);
  std::ostringstream o;
  o << "scenario " << okbe_scenario_name(s.get()) << "\nsteps " << rc.steps << "\n";
  for (const auto& [name, kind] : channels) {
    std::vector<double> e(n);
    check(okbe_empowerment_map(s.get(), &cfg, kind, rc.steps, e.data(), n));
    w.map("empowerment_" + name, e);
    o << name << " max_bits " << fmt(*std::max_element(e.begin(), e.end())) << "\n";
    if (space >= 0) {
      std::vector<double> gmap(n);
      check(okbe_empowerment_gain_map(s.get(), &cfg, kind, rc.steps, space, rc.before, rc.after, gmap.data(), n));
      w.map("gain_" + name, gmap);
      size_t nonzero = 0;
      for (double v : gmap) nonzero += std::abs(v) > 1e-9 ? 1 : 0;
      o << name << " gain_nonzero_cells " << nonzero << "\n";
    }
  }
  w.text("empower_summary.txt", o.str());
  std::cout << o.str();
  return 0;
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--scenario", rc.scenario, "Built-in scenario name or path to a scenario JSON file")->required();
  sub->add_option("--out", rc.out, "Output directory (default: $OKBE_OUT_DIR or ./okbe_out)");
  sub->add_option("--horizon", rc.horizon, "Initial event-kernel horizon; doubled until the mass fits")
      ->check(CLI::PositiveNumber);
  sub->add_option("--tol", rc.tol, "Convergence tolerance for feasibility iteration");
  sub->add_option("--max-depth", rc.max_depth, "Plan search depth (0: the scenario's own)");
  sub->add_option("--option-set", rc.option_set, "Option set: state-action, affordance or explicit")
      ->check(CLI::IsMember({"state-action", "affordance", "explicit"}));
  sub->add_flag("--prune-sublimation", rc.prune, "Prune plan branches whose sublimated feasibility is zero");
  sub->add_option("--samples", rc.samples, "Monte Carlo samples for verify (0: none)");
  sub->add_option("--seed", rc.seed, "Random seed");
  sub->add_option("--format", rc.format, "Map output format")->check(CLI::IsMember({"csv", "ppm", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Option kernel solver, planner and verifier.\n"
               "Maps are written as CSV (row,col,value) and P3 PPM images. Exit codes: 0 success, 2 config error, "
               "3 solver non-convergence, 4 validation failure."};
  app.require_subcommand(1);
  RunConfig rc;
  if (const char* env = std::getenv("OKBE_OUT_DIR")) rc.out = env;
  if (rc.out.empty()) rc.out = "okbe_out";

  auto* solve = app.add_subcommand("solve", "Solve one option per goal; write kappa, policy and event maps");
  add_common(solve, rc);
  auto* plan = app.add_subcommand("plan", "Breadth-first plan search over options; write plan and event maps");
  add_common(plan, rc);
  auto* verify = app.add_subcommand("verify", "Evaluate a plan exactly and by Monte Carlo");
  add_common(verify, rc);
  verify->add_option("--plan", rc.plan, "Comma-separated option names (default: the planner's best plan)");
  auto* empower = app.add_subcommand("empower", "Empowerment and empowerment-gain maps");
  add_common(empower, rc);
  empower->add_option("--steps", rc.steps, "Channel length n");
  empower->add_option("--channel", rc.channel, "primitive, options or both")
      ->check(CLI::IsMember({"primitive", "options", "both"}));
  empower->add_option("--space", rc.space, "High-level space for the gain map");
  empower->add_option("--before", rc.before, "Value of --space before the change");
  empower->add_option("--after", rc.after, "Value of --space after the change");
  app.footer("Environment: OKBE_OUT_DIR sets the default output directory.\nBuilt-in scenarios: " + [] {
    std::string s;
    for (int i = 0; i < okbe_builtin_count(); ++i) s += (i ? ", " : "") + std::string(okbe_builtin_name(i));
    return s;
  }());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return OKBE_ERR_CONFIG;
  }

  try {
    validate(rc);
    if (*solve) return cmd_solve(rc);
    if (*plan) return cmd_plan(rc);
    if (*verify) return cmd_verify(rc);
    if (*empower) return cmd_empower(rc);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.msg << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return OKBE_ERR_INTERNAL;
  }
  return OKBE_ERR_INTERNAL;
}
