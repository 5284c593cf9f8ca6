// Command-line driver for the experiments.
//
//   ampsi <fig4|fig5|channel|table2|phase|oracle-check|se> [--config FILE] [--set key=value]...
//
// Exit codes: 0 success, 1 internal error, 2 usage or configuration error,
// 3 divergence, 4 golden-file verification failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ampsi/config.hpp"
#include "ampsi/csv.hpp"
#include "ampsi/denoisers.hpp"
#include "ampsi/experiments.hpp"
#include "ampsi/oracle.hpp"

#ifndef AMPSI_VERSION
#define AMPSI_VERSION "dev"
#endif
#ifndef AMPSI_DEFAULT_GOLDEN
#define AMPSI_DEFAULT_GOLDEN "tests/golden/denoiser_oracle.csv"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ampsi;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitGolden = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<long long> trials, n, m, workers;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config_path, "key-value configuration file");
  sub->add_option("--set", a.overrides, "override a config entry, e.g. --set signal.n=500");
  sub->add_option("--trials", a.trials, "number of trials (run.trials)");
  sub->add_option("--n", a.n, "signal length (signal.n)");
  sub->add_option("--m", a.m, "measurements (signal.m)");
  sub->add_option("--seed", a.seed, "base seed (run.seed)");
  sub->add_option("--workers", a.workers, "worker threads (run.workers)");
  sub->add_option("--out", a.out_dir, "output directory (run.out_dir, env AMPSI_OUT_DIR)");
}

Config build_config(const CommonArgs& a) {
  Config cfg = a.config_path.empty() ? Config{} : Config::load(a.config_path);
  for (const auto& o : a.overrides) cfg.apply_override(o);
  if (a.trials) cfg.set("run.trials", std::to_string(*a.trials));
  if (a.n) cfg.set("signal.n", std::to_string(*a.n));
  if (a.m) cfg.set("signal.m", std::to_string(*a.m));
  if (a.seed) cfg.set("run.seed", std::to_string(*a.seed));
  if (a.workers) cfg.set("run.workers", std::to_string(*a.workers));
  if (!a.out_dir.empty()) cfg.set("run.out_dir", a.out_dir);
  return cfg;
}

fs::path out_dir(const Config& cfg) {
  if (cfg.has("run.out_dir")) return cfg.str("run.out_dir");
  if (const char* env = std::getenv("AMPSI_OUT_DIR"); env && *env) return env;
  return "results";
}

std::size_t count(const Config& c, const std::string& key, long long fallback) {
  const long long v = c.integer(key, fallback);
  if (v < 1) throw ConfigError("config key '" + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_of(const Config& c) { return static_cast<std::uint64_t>(c.integer("run.seed", 1)); }
unsigned workers_of(const Config& c) { return static_cast<unsigned>(count(c, "run.workers", 1)); }

AmpConfig amp_of(const Config& c, const std::string& section, int max_iters, double damping, double tol) {
  AmpConfig amp;
  amp.max_iters = static_cast<int>(count(c, section + ".max_iters", max_iters));
  amp.damping = c.num(section + ".damping", damping);
  amp.convergence_tol = c.num(section + ".tol", tol);
  const std::string mode = c.str(section + ".lambda_mode", "empirical");
  if (mode == "empirical") amp.lambda_mode = LambdaMode::empirical_residual;
  else if (mode == "se") amp.lambda_mode = LambdaMode::state_evolution;
  else throw ConfigError("amp.lambda_mode must be 'empirical' or 'se'");
  if (!(amp.damping >= 0.0 && amp.damping < 1.0)) throw ConfigError(section + ".damping must lie in [0, 1)");
  return amp;
}

SeSettings se_of(const Config& c, std::uint64_t base_seed) {
  SeSettings se;
  se.mc = count(c, "se.mc", 100000);
  se.t_max = static_cast<int>(count(c, "se.t_max", 200));
  se.tol = c.num("se.tol", 1e-6);
  se.seed = static_cast<std::uint64_t>(c.integer("se.seed", static_cast<long long>(derive_seed(base_seed, Stream::state_evolution) >> 1)));
  return se;
}

BddPrior bdd_of(const Config& c, std::vector<double> eps_default) {
  const auto eps = c.list("signal.eps", std::move(eps_default));
  if (eps.size() != 4) throw ConfigError("signal.eps needs four probabilities");
  try {
    return BddPrior({eps[0], eps[1], eps[2], eps[3]}, c.num("signal.sigma_s_sq", 1.0), c.num("signal.rho", 0.95));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid BDD prior: ") + e.what());
  }
}

DbNorm db_norm_of(const Config& c) {
  const std::string v = c.str("output.db_norm", "per_entry");
  if (v == "per_entry") return DbNorm::per_entry;
  if (v == "per_energy") return DbNorm::per_energy;
  throw ConfigError("output.db_norm must be 'per_entry' or 'per_energy'");
}

struct Run {
  std::string command;
  Config cfg;
  json manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Run(std::string cmd, Config c) : command(std::move(cmd)), cfg(std::move(c)) {
    manifest["command"] = command;
    manifest["version"] = AMPSI_VERSION;
    manifest["config"] = cfg.entries();
    manifest["config_hash"] = fnv1a64(cfg.canonical());
    manifest["seed"] = seed_of(cfg);
    manifest["outputs"] = json::array();
  }

  void write_csv(const std::string& name, const std::string& content) {
    const fs::path p = out_dir(cfg) / name;
    write_file_atomic(p, content);
    manifest["outputs"].push_back(p.string());
  }

  void finish() {
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path p = out_dir(cfg) / (command + ".manifest.json");
    write_file_atomic(p, manifest.dump(2) + "\n");
    std::cout << manifest.dump(2) << std::endl;
  }
};

// ---------------------------------------------------------------------------

int cmd_fig4(const Config& c) {
  Run run("fig4", c);
  Fig4Config f;
  f.n = count(c, "signal.n", 10000);
  f.m = count(c, "signal.m", 3000);
  f.epsilon = c.num("signal.epsilon", 0.3);
  f.sigma_z = c.num("signal.sigma_z", 0.1);
  f.sigma_hat = c.num("signal.sigma_hat", 0.1);
  f.trials = static_cast<int>(count(c, "run.trials", 20));
  f.seed = seed_of(c);
  f.amp = amp_of(c, "amp", 30, 0.0, 0.0);
  f.se = se_of(c, f.seed);
  f.workers = workers_of(c);
  const Fig4Result r = run_fig4(f);
  CsvTable t({"iter", "empirical_mse_mean", "empirical_mse_ci", "se_mse"});
  for (const auto& row : r.rows)
    t.row().add(static_cast<long long>(row.iter)).add(row.empirical_mse_mean).add(row.empirical_mse_ci).add(row.se_mse);
  run.write_csv("fig4.csv", t.str());
  run.manifest["se_seed"] = f.se.seed;
  run.manifest["lambda_mode"] = c.str("amp.lambda_mode", "empirical");
  run.manifest["diverged_trials"] = r.diverged;
  run.finish();
  return 0;
}

int cmd_fig5(const Config& c) {
  Run run("fig5", c);
  Fig5Config f;
  f.pipeline.kind = OperatorKind::dense_gaussian;
  f.pipeline.n = count(c, "signal.n", 10000);
  f.pipeline.m = count(c, "signal.m", 3000);
  f.pipeline.prior = bdd_of(c, {0.80, 0.01, 0.18, 0.01});
  f.pipeline.sigma_z = c.num("signal.sigma_z", 0.077);
  f.pipeline.batches = static_cast<int>(count(c, "signal.batches", 15));
  f.pipeline.amp = amp_of(c, "amp", 30, 0.0, 1e-6);
  f.pipeline.seed = seed_of(c);
  f.trials = static_cast<int>(count(c, "run.trials", 100));
  f.workers = workers_of(c);
  if (f.pipeline.batches < 2) throw ConfigError("signal.batches must be >= 2 for fig5");
  const Fig5Result r = run_fig5(f);
  CsvTable t({"batch", "iter", "mse_amp", "mse_ampsi"});
  for (const auto& row : r.rows)
    t.row().add(static_cast<long long>(row.batch)).add(static_cast<long long>(row.iter)).add(row.mse_amp).add(row.mse_ampsi);
  run.write_csv("fig5.csv", t.str());
  CsvTable fin({"trial", "batch", "final_mse_amp", "final_mse_ampsi"});
  for (std::size_t k = 0; k < r.final_amp.size(); ++k)
    for (std::size_t b = 0; b < r.final_amp[k].size(); ++b)
      fin.row().add(static_cast<long long>(k)).add(static_cast<long long>(b + 1)).add(r.final_amp[k][b]).add(r.final_ampsi[k][b]);
  run.write_csv("fig5_trials.csv", fin.str());
  run.manifest["diverged_trials"] = r.diverged;
  run.finish();
  return 0;
}

ChannelConfig channel_of(const Config& c) {
  ChannelConfig ch;
  ch.n = count(c, "signal.n", 4000);
  ch.pilot_len = count(c, "signal.pilot_len", 1001);
  ch.prior = bdd_of(c, {0.78, 0.01, 0.20, 0.01});
  ch.sigma_z = c.list("signal.sigma_z", {1.0, 0.1, 0.01});
  ch.batches = static_cast<int>(count(c, "signal.batches", 5));
  ch.trials = static_cast<int>(count(c, "run.trials", 50));
  ch.amp = amp_of(c, "amp", 300, 0.9, 1e-6);
  ch.db_norm = db_norm_of(c);
  ch.seed = seed_of(c);
  ch.workers = workers_of(c);
  return ch;
}

int cmd_channel(const Config& c) {
  Run run("channel", c);
  const ChannelConfig ch = channel_of(c);
  const ChannelResult r = run_channel_estimation(ch);
  CsvTable t({"snr", "batch", "mse_db"});
  for (const auto& row : r.rows) t.row().add(row.snr_db).add(static_cast<long long>(row.batch)).add(row.mse_db);
  run.write_csv("channel.csv", t.str());
  run.manifest["diverged_trials"] = r.diverged;
  run.finish();
  return 0;
}

int cmd_table2(const Config& c) {
  Run run("table2", c);
  Table2Config t2;
  t2.channel = channel_of(c);
  t2.iid_trials = static_cast<int>(count(c, "table2.iid_trials", t2.channel.trials));
  t2.iid_amp = amp_of(c, "iid_amp", 30, 0.0, 1e-6);
  t2.report_batch = static_cast<int>(count(c, "table2.report_batch", 5));
  t2.se = se_of(c, t2.channel.seed);
  const Table2Result r = run_table2(t2);
  CsvTable t({"snr", "iid_mse_db", "se_mse_db", "toeplitz_mse_db"});
  for (const auto& row : r.rows) t.row().add(row.snr_db).add(row.iid_mse_db).add(row.se_mse_db).add(row.toeplitz_mse_db);
  run.write_csv("table2.csv", t.str());
  CsvTable ch({"snr", "batch", "mse_db"});
  for (const auto& row : r.toeplitz.rows) ch.row().add(row.snr_db).add(static_cast<long long>(row.batch)).add(row.mse_db);
  run.write_csv("channel.csv", ch.str());
  run.manifest["diverged_trials"] = r.toeplitz.diverged + r.iid_diverged;
  run.finish();
  return 0;
}

int cmd_phase(const Config& c) {
  Run run("phase", c);
  PhaseGridConfig p;
  const std::string fam = c.str("phase.family", "bdd");
  if (fam == "bg") p.family = PriorFamily::bg;
  else if (fam == "bdd") p.family = PriorFamily::bdd;
  else throw ConfigError("phase.family must be 'bg' or 'bdd'");
  p.delta_grid = c.list("phase.delta_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  p.gamma_grid = c.list("phase.gamma_grid", {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  p.batches.clear();
  for (double b : c.list("phase.batches", {1, 3, 10})) {
    if (b < 1 || b != std::floor(b)) throw ConfigError("phase.batches must hold positive integers");
    p.batches.push_back(static_cast<int>(b));
  }
  p.sigma_z = c.num("phase.sigma_z", 0.01);
  p.eps2 = c.num("phase.eps2", 0.01);
  p.eps4 = c.num("phase.eps4", 0.01);
  p.sigma_s_sq = c.num("signal.sigma_s_sq", 1.0);
  p.rho = c.num("signal.rho", 0.95);
  p.se = se_of(c, seed_of(c));
  p.workers = workers_of(c);
  const double threshold = c.num("phase.threshold", 1e-3);
  const auto cells = phase_grid(p);
  CsvTable t({"delta", "gamma", "batch", "mse"});
  json good = json::object();
  for (const auto& cell : cells) {
    t.row().add(cell.delta).add(cell.gamma).add(static_cast<long long>(cell.batch)).add(cell.mse);
    auto& g = good[std::to_string(cell.batch)];
    if (g.is_null()) g = json{{"cells", 0}, {"below_threshold", 0}};
    if (!std::isnan(cell.mse)) {
      g["cells"] = g["cells"].get<int>() + 1;
      if (cell.mse < threshold) g["below_threshold"] = g["below_threshold"].get<int>() + 1;
    }
  }
  run.write_csv("phase.csv", t.str());
  run.manifest["se_seed"] = p.se.seed;
  run.manifest["threshold"] = threshold;
  run.manifest["region"] = good;
  run.finish();
  return 0;
}

int cmd_se(const Config& c) {
  Run run("se", c);
  const std::string model = c.str("se.model", "bg");
  PriorModel prior{BgPrior(0.3)};
  try {
    if (model == "bg") prior = BgPrior(c.num("signal.epsilon", 0.3));
    else if (model == "gg") prior = GgPrior(c.num("signal.sigma_x_sq", 1.0));
    else if (model == "bdd") prior = bdd_of(c, {0.80, 0.01, 0.18, 0.01});
    else throw ConfigError("se.model must be bg, bdd or gg");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double delta = c.num("se.delta", 0.3);
  const double sz = c.num("signal.sigma_z", 0.1);
  const SeSettings se = se_of(c, seed_of(c));
  const int batches = static_cast<int>(count(c, "signal.batches", 1));
  std::vector<SeTrace> traces;
  if (c.has("signal.sigma_hat")) {
    const double sh = c.num("signal.sigma_hat");
    traces.push_back(se_run(prior, SiChannel(sh * sh), delta, sz * sz, se));
  } else {
    traces = se_batch_chain(prior, delta, sz * sz, batches, se);
  }
  CsvTable t({"batch", "t", "lambda_sq", "stderr", "mse"});
  for (std::size_t b = 0; b < traces.size(); ++b)
    for (std::size_t i = 0; i < traces[b].lambda_sq.size(); ++i)
      t.row().add(static_cast<long long>(b + 1)).add(static_cast<long long>(i)).add(traces[b].lambda_sq[i])
          .add(traces[b].stderr[i]).add(traces[b].mse(i, delta, sz * sz));
  run.write_csv("se.csv", t.str());
  run.manifest["se_seed"] = se.seed;
  json fp = json::array();
  for (const auto& tr : traces) fp.push_back({{"fixed_point", tr.fixed_point}, {"converged", tr.converged}});
  run.manifest["fixed_points"] = fp;
  run.finish();
  return 0;
}

double closed_form(const GoldenCase& g) {
  if (g.model == "bg") return eta_bg(std::get<BgPrior>(g.prior), g.lambda_sq, g.sigma_hat_sq, g.a, g.b);
  if (g.model == "bg_no_si") return eta_bg_no_si(std::get<BgPrior>(g.prior), g.lambda_sq, g.a);
  if (g.model == "gg") return eta_gg(std::get<GgPrior>(g.prior), g.lambda_sq, g.sigma_hat_sq, g.a, g.b);
  return eta_bdd(std::get<BddPrior>(g.prior), g.lambda_sq, g.sigma_hat_sq, g.a, g.b);
}

int cmd_oracle_check(const std::string& golden_path, bool write) {
  const auto cases = golden_cases();
  std::vector<GoldenRow> fresh;
  for (const auto& g : cases) fresh.push_back(evaluate_golden(g));
  if (write) {
    write_file_atomic(golden_path, format_golden(fresh));
    std::cout << "wrote " << fresh.size() << " rows to " << golden_path << "\n";
  }
  const auto stored = read_golden(golden_path);
  bool ok = stored.size() == fresh.size();
  if (!ok) std::cout << "FAIL golden row count " << stored.size() << " != " << fresh.size() << "\n";
  for (std::size_t i = 0; i < std::min(stored.size(), fresh.size()); ++i) {
    const auto& s = stored[i];
    const auto& f = fresh[i];
    const double tol = 1e-12 * std::max(1.0, std::abs(f.oracle_value));
    const bool same = s.model == f.model && s.params_hash == f.params_hash && s.a == f.a && s.b == f.b &&
                      s.method == f.method && s.samples == f.samples &&
                      std::abs(s.oracle_value - f.oracle_value) <= tol;
    const double cf = closed_form(cases[i]);
    const double diff = std::abs(cf - f.oracle_value);
    const bool agrees = f.method == "quadrature"
                            ? (diff <= 1e-8 * std::abs(f.oracle_value) || diff <= 1e-10)
                            : diff <= 3.0 * f.stderr;
    std::cout << (same && agrees ? "PASS " : "FAIL ") << f.model << " a=" << f.a << " b=" << f.b
              << " oracle=" << format_double(f.oracle_value) << " closed_form=" << format_double(cf)
              << (same ? "" : " [golden mismatch]") << (agrees ? "" : " [closed form disagrees]") << "\n";
    ok = ok && same && agrees;
  }
  return ok ? 0 : kExitGolden;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMP with side information: experiments and checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", AMPSI_VERSION);

  CommonArgs common;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"fig4", "fig5", "channel", "table2", "phase", "se"}) {
    CLI::App* s = app.add_subcommand(name);
    add_common(s, common);
    subs.emplace_back(name, s);
  }
  std::string golden = AMPSI_DEFAULT_GOLDEN;
  bool write_golden = false;
  CLI::App* oc = app.add_subcommand("oracle-check", "regenerate oracle values and verify the golden file");
  oc->add_option("--golden", golden, "golden CSV path");
  oc->add_flag("--write", write_golden, "rewrite the golden file before verifying");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (oc->parsed()) return cmd_oracle_check(golden, write_golden);
    for (const auto& [name, s] : subs) {
      if (!s->parsed()) continue;
      const Config cfg = build_config(common);
      if (name == "fig4") return cmd_fig4(cfg);
      if (name == "fig5") return cmd_fig5(cfg);
      if (name == "channel") return cmd_channel(cfg);
      if (name == "table2") return cmd_table2(cfg);
      if (name == "phase") return cmd_phase(cfg);
      if (name == "se") return cmd_se(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ExperimentError& e) {
    std::cerr << "divergence report: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
