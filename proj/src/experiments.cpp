#include "ampsi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ampsi {

namespace {

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t batch, Stream s) {
  return derive_seed(base, {trial, batch, static_cast<std::uint64_t>(s)});
}

std::vector<double> padded(const std::vector<IterationRecord>& trace, int len, double IterationRecord::*field) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(len));
  for (const auto& rec : trace) out.push_back(rec.*field);
  const double last = out.empty() ? std::nan("") : out.back();
  while (static_cast<int>(out.size()) < len) out.push_back(last);
  return out;
}

void check_divergence_budget(int diverged, int trials, const char* what) {
  if (10 * diverged > trials)
    throw ExperimentError(std::string(what) + ": " + std::to_string(diverged) + " of " +
                          std::to_string(trials) + " trials diverged");
}

double signal_energy_norm(double mse_per_entry, const Vector& x) {
  return mse_per_entry * static_cast<double>(x.size()) / x.squaredNorm();
}

}  // namespace

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

double to_db(double v) { return 10.0 * std::log10(v); }

namespace {

// Signal power is one, so SNR = -20 log10(sigma_z); the + 0.0 turns -0 into 0.
double snr_db(double sigma_z) { return -20.0 * std::log10(sigma_z) + 0.0; }

}  // namespace

MeanCi mean_ci(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0) / n)};
}

// ---------------------------------------------------------------------------

Fig4Result run_fig4(const Fig4Config& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("fig4: trials must be >= 1");
  const PriorModel prior{BgPrior(cfg.epsilon)};
  const double sz2 = cfg.sigma_z * cfg.sigma_z;
  const double sh2 = cfg.sigma_hat * cfg.sigma_hat;
  const double delta = static_cast<double>(cfg.m) / static_cast<double>(cfg.n);
  const int iters = cfg.amp.max_iters;

  Fig4Result res;
  SeSettings se = cfg.se;
  se.t_max = std::max(se.t_max, iters);
  res.se = se_run(prior, SiChannel(sh2), delta, sz2, se);
  AmpConfig amp = cfg.amp;
  if (amp.lambda_mode == LambdaMode::state_evolution && amp.lambda_schedule.empty())
    amp.lambda_schedule = res.se.lambda_sq;

  res.trial_nmse.assign(static_cast<std::size_t>(cfg.trials), {});
  std::vector<char> ok(static_cast<std::size_t>(cfg.trials), 0);
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t k) {
    const auto trial = static_cast<std::uint64_t>(k);
    const SignalPair pair = sample_pair(prior, SiChannel(sh2), cfg.n, derive_seed(cfg.seed, {trial}));
    const auto op = MeasurementOperator::dense(cfg.m, cfg.n, stream_seed(cfg.seed, trial, 0, Stream::matrix));
    const Measurements y = measure(op, pair.x, cfg.sigma_z, stream_seed(cfg.seed, trial, 0, Stream::measurement_noise));
    try {
      const AmpResult r = amp_run(op, y, prior, SideInfo{pair.x_tilde, sh2}, amp, &pair.x);
      res.trial_nmse[k] = padded(r.trace, iters, &IterationRecord::normalized_mse);
      ok[k] = 1;
    } catch (const DivergenceError&) {
    }
  });
  res.diverged = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  check_divergence_budget(res.diverged, cfg.trials, "fig4");
  const double ex2 = cfg.epsilon;
  for (int t = 1; t <= iters; ++t) {
    std::vector<double> col;
    for (std::size_t k = 0; k < ok.size(); ++k)
      if (ok[k]) col.push_back(res.trial_nmse[k][static_cast<std::size_t>(t - 1)]);
    const MeanCi mc = mean_ci(col);
    const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(t), res.se.lambda_sq.size() - 1);
    res.rows.push_back({t, mc.mean, mc.ci, res.se.mse(idx, delta, sz2) / ex2});
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

MeasurementOperator make_operator(const PipelineConfig& cfg, std::uint64_t trial, std::uint64_t batch) {
  const std::uint64_t s = stream_seed(cfg.seed, trial, batch, Stream::matrix);
  return cfg.kind == OperatorKind::dense_gaussian ? MeasurementOperator::dense(cfg.m, cfg.n, s)
                                                  : MeasurementOperator::toeplitz(cfg.pilot_len, cfg.n, s);
}

BatchRecord run_batch(const MeasurementOperator& op, const Measurements& y, const PriorModel& prior,
                      const Vector& x, const BatchRecord* prev, const AmpConfig& amp, int batch) {
  const auto start = std::chrono::steady_clock::now();
  BatchRecord rec;
  rec.batch = batch;
  std::optional<SideInfo> si;
  if (prev != nullptr) {
    si = SideInfo{prev->pseudo, prev->lambda_sq};
    rec.si = prev->pseudo;
    rec.si_var = prev->lambda_sq;
  }
  const AmpResult r = amp_run(op, y, prior, si, amp, &x);
  rec.x = x;
  rec.x_hat = r.x_hat;
  rec.pseudo = r.pseudo;
  rec.lambda_sq = r.lambda_sq;
  rec.iterations = static_cast<int>(r.trace.size());
  rec.mse = padded(r.trace, amp.max_iters, &IterationRecord::mse);
  rec.nmse = padded(r.trace, amp.max_iters, &IterationRecord::normalized_mse);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

void check_si_chaining(const std::vector<BatchRecord>& records) {
  for (std::size_t b = 0; b < records.size(); ++b) {
    const BatchRecord& r = records[b];
    if (b == 0) {
      if (r.si) throw std::logic_error("batch 1 must not use side information");
      continue;
    }
    const BatchRecord& p = records[b - 1];
    if (!r.si || r.si->size() != p.pseudo.size() || *r.si != p.pseudo || r.si_var != p.lambda_sq)
      throw std::logic_error("SI of batch " + std::to_string(r.batch) +
                             " is not the previous batch's final pseudo-data and lambda^2");
  }
}

TrialOutcome run_bdd_trial(const PipelineConfig& cfg, int trial) {
  if (cfg.batches < 1) throw std::invalid_argument("pipeline: batches must be >= 1");
  const PriorModel prior{cfg.prior};
  const auto t = static_cast<std::uint64_t>(trial);
  AmpConfig amp = cfg.amp;
  amp.si_enabled = true;
  TrialOutcome out;
  Vector x;
  for (int b = 1; b <= cfg.batches; ++b) {
    const auto bu = static_cast<std::uint64_t>(b);
    const std::uint64_t sig = stream_seed(cfg.seed, t, bu, Stream::signal);
    x = b == 1 ? sample_bdd_stationary(cfg.prior, cfg.n, sig) : sample_bdd_step(cfg.prior, x, sig).x;
    const MeasurementOperator op = make_operator(cfg, t, bu);
    const Measurements y = measure(op, x, cfg.sigma_z, stream_seed(cfg.seed, t, bu, Stream::measurement_noise));
    const BatchRecord* prev = b == 1 ? nullptr : &out.ampsi.back();
    out.ampsi.push_back(run_batch(op, y, prior, x, prev, amp, b));
    if (cfg.run_plain_arm) {
      if (b == 1) {
        out.amp.push_back(out.ampsi.back());  // no SI exists yet, so both arms coincide
      } else {
        out.amp.push_back(run_batch(op, y, prior, x, nullptr, amp, b));
      }
    }
  }
  check_si_chaining(out.ampsi);
  return out;
}

Fig5Result run_fig5(const Fig5Config& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("fig5: trials must be >= 1");
  if (cfg.pipeline.batches < 2) throw std::invalid_argument("fig5: batches must be >= 2");
  PipelineConfig pc = cfg.pipeline;
  pc.run_plain_arm = true;
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const auto nb = static_cast<std::size_t>(pc.batches);
  const auto iters = static_cast<std::size_t>(pc.amp.max_iters);

  // [trial][batch][iter]
  std::vector<std::vector<std::vector<double>>> amp_n(trials), si_n(trials);
  std::vector<char> ok(trials, 0);
  parallel_for(trials, cfg.workers, [&](std::size_t k) {
    try {
      TrialOutcome o = run_bdd_trial(pc, static_cast<int>(k));
      for (std::size_t b = 0; b < nb; ++b) {
        amp_n[k].push_back(std::move(o.amp[b].nmse));
        si_n[k].push_back(std::move(o.ampsi[b].nmse));
      }
      ok[k] = 1;
    } catch (const DivergenceError&) {
    }
  });
  Fig5Result res;
  res.diverged = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  check_divergence_budget(res.diverged, cfg.trials, "fig5");
  for (std::size_t k = 0; k < trials; ++k) {
    if (!ok[k]) continue;
    std::vector<double> fa, fs;
    for (std::size_t b = 0; b < nb; ++b) {
      fa.push_back(amp_n[k][b].back());
      fs.push_back(si_n[k][b].back());
    }
    res.final_amp.push_back(std::move(fa));
    res.final_ampsi.push_back(std::move(fs));
  }
  const double used = static_cast<double>(res.final_amp.size());
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < iters; ++i) {
      double sa = 0.0, ss = 0.0;
      for (std::size_t k = 0; k < trials; ++k) {
        if (!ok[k]) continue;
        sa += amp_n[k][b][i];
        ss += si_n[k][b][i];
      }
      res.rows.push_back({static_cast<int>(b + 1), static_cast<int>(i + 1), sa / used, ss / used});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct PipelineMse {
  std::vector<double> per_batch;  // mean over trials of the chosen normalization
  int diverged = 0;
};

PipelineMse pipeline_mean_mse(const PipelineConfig& pc, int trials, unsigned workers, DbNorm norm) {
  const auto nt = static_cast<std::size_t>(trials);
  const auto nb = static_cast<std::size_t>(pc.batches);
  std::vector<std::vector<double>> vals(nt);
  std::vector<char> ok(nt, 0);
  parallel_for(nt, workers, [&](std::size_t k) {
    try {
      const TrialOutcome o = run_bdd_trial(pc, static_cast<int>(k));
      for (const auto& rec : o.ampsi) {
        const double mse = rec.mse.back();
        vals[k].push_back(norm == DbNorm::per_entry ? mse : signal_energy_norm(mse, rec.x));
      }
      ok[k] = 1;
    } catch (const DivergenceError&) {
    }
  });
  PipelineMse out;
  out.diverged = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  out.per_batch.assign(nb, 0.0);
  double used = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    if (!ok[k]) continue;
    used += 1.0;
    for (std::size_t b = 0; b < nb; ++b) out.per_batch[b] += vals[k][b];
  }
  for (double& v : out.per_batch) v /= used;
  return out;
}

}  // namespace

ChannelResult run_channel_estimation(const ChannelConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("channel: trials must be >= 1");
  ChannelResult res;
  for (std::size_t s = 0; s < cfg.sigma_z.size(); ++s) {
    PipelineConfig pc;
    pc.kind = OperatorKind::toeplitz_pilot;
    pc.n = cfg.n;
    pc.pilot_len = cfg.pilot_len;
    pc.prior = cfg.prior;
    pc.sigma_z = cfg.sigma_z[s];
    pc.batches = cfg.batches;
    pc.amp = cfg.amp;
    pc.run_plain_arm = false;
    pc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(s)});
    const PipelineMse m = pipeline_mean_mse(pc, cfg.trials, cfg.workers, cfg.db_norm);
    res.diverged += m.diverged;
    check_divergence_budget(m.diverged, cfg.trials, "channel");
    for (int b = 1; b <= cfg.batches; ++b)
      res.rows.push_back({snr_db(cfg.sigma_z[s]), b, to_db(m.per_batch[static_cast<std::size_t>(b - 1)])});
  }
  return res;
}

double se_pipeline_mse_db(const BddPrior& prior, double delta, double sigma_z, int batch, DbNorm norm,
                          const SeSettings& se) {
  const double sz2 = sigma_z * sigma_z;
  const auto chain = se_batch_chain(PriorModel{prior}, delta, sz2, batch, se);
  double mse = delta * (chain.back().fixed_point - sz2);
  if (norm == DbNorm::per_energy) mse /= prior.second_moment();
  return to_db(mse);
}

Table2Result run_table2(const Table2Config& cfg) {
  const ChannelConfig& ch = cfg.channel;
  if (cfg.report_batch < 1 || cfg.report_batch > ch.batches)
    throw std::invalid_argument("table2: report_batch outside the batch range");
  Table2Result res;
  res.toeplitz = run_channel_estimation(ch);
  const std::size_t m = ch.pilot_len + ch.n - 1;
  const double delta = static_cast<double>(m) / static_cast<double>(ch.n);
  for (std::size_t s = 0; s < ch.sigma_z.size(); ++s) {
    PipelineConfig pc;
    pc.kind = OperatorKind::dense_gaussian;
    pc.n = ch.n;
    pc.m = m;
    pc.prior = ch.prior;
    pc.sigma_z = ch.sigma_z[s];
    pc.batches = cfg.report_batch;
    pc.amp = cfg.iid_amp;
    pc.run_plain_arm = false;
    pc.seed = derive_seed(ch.seed, {1000 + static_cast<std::uint64_t>(s)});
    const PipelineMse iid = pipeline_mean_mse(pc, cfg.iid_trials, ch.workers, ch.db_norm);
    res.iid_diverged += iid.diverged;
    check_divergence_budget(iid.diverged, cfg.iid_trials, "table2 i.i.d. arm");

    SeSettings se = cfg.se;
    se.seed = derive_seed(ch.seed, {2000 + static_cast<std::uint64_t>(s)});
    const double snr = snr_db(ch.sigma_z[s]);
    double toe = std::nan("");
    for (const auto& r : res.toeplitz.rows)
      if (r.snr_db == snr && r.batch == cfg.report_batch) toe = r.mse_db;
    res.rows.push_back({snr, to_db(iid.per_batch.back()),
                        se_pipeline_mse_db(ch.prior, delta, ch.sigma_z[s], cfg.report_batch, ch.db_norm, se),
                        toe});
  }
  return res;
}

}  // namespace ampsi
