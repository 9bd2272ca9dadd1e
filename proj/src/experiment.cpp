#include "wlr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>
#include <charconv>

#include <json.hpp>

#include "wlr/datagen.hpp"
#include "wlr/error.hpp"
#include "wlr/io.hpp"
#include "wlr/leverage.hpp"
#include "wlr/metrics.hpp"
#include "wlr/random.hpp"
#include "wlr/rpca.hpp"

namespace wlr {

namespace {

struct ScenarioInfo {
  Scenario id;
  std::string_view name;
  std::string_view slug;
};

constexpr ScenarioInfo kScenarios[] = {
    {Scenario::kWeightingTrace, "fig3-weighting-trace", "fig3-weighting-trace"},
    {Scenario::kRounds, "fig4-rounds", "fig4-rounds"},
    {Scenario::kNoisyCompletion, "fig7-noisy-completion", "fig7-noisy-completion"},
    {Scenario::kRpcaTrace, "fig5/6-rpca-trace", "fig5-6-rpca-trace"},
    {Scenario::kRpcaError, "fig8-rpca-error", "fig8-rpca-error"},
    {Scenario::kLossCompare, "appB-loss-compare", "appB-loss-compare"},
};

// Per-seed random streams.
constexpr std::uint64_t kStreamMask = 101;
constexpr std::uint64_t kStreamNoise = 102;
constexpr std::uint64_t kStreamCorruption = 103;
constexpr std::uint64_t kStreamTrim = 104;

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_number(v[i]);
  }
  return out;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string_view loss_name(LossNorm q) {
  switch (q) {
    case LossNorm::kL1:
      return "l1";
    case LossNorm::kL2:
      return "l2";
    case LossNorm::kInf:
      return "linf";
  }
  return "?";
}

// Runs fn(0..n-1) on up to `threads` workers. Every task writes only its
// own slot, so the merged result is independent of scheduling.
void parallel_for(std::size_t n, Index threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<Index>(threads, 1, 64));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using Row = std::vector<std::string>;

std::string cell(double v) { return format_number(v); }
std::string cell(Index v) { return std::to_string(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(std::string_view v) { return std::string(v); }
std::string cell(const char* v) { return v; }

template <typename... Ts>
Row make_row(const Ts&... values) {
  return Row{cell(values)...};
}

WeightingConfig weighting_config(const ExperimentSpec& spec, double p, std::uint64_t seed) {
  WeightingConfig w;
  w.accuracy_rho = spec.rho_scale * std::sqrt(p);
  w.max_steps = spec.max_steps;
  w.seed = derive_seed(seed, kStreamTrim);
  return w;
}

AdmmConfig admm_config(const ExperimentSpec& spec) {
  AdmmConfig a;
  a.max_iters = spec.admm_iters;
  a.primal_tol = spec.admm_tol;
  a.admm_penalty = 0.0;  // derived from lambda
  return a;
}

DenseMatrix ground_truth(const ExperimentSpec& spec, std::uint64_t seed) {
  return gen_coherent_lowrank({spec.n1, spec.n2, spec.k, seed});
}

// Per-task output, merged in task order.
struct TaskRows {
  std::vector<Row> runs;
  std::vector<Row> sweep;
  std::vector<Row> trace;
};

struct Grid {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::uint64_t> seeds;
  std::size_t size() const { return a.size() * b.size() * seeds.size(); }
  // Seeds vary fastest so that rows of one grid point are adjacent.
  void at(std::size_t t, double& x, double& y, std::uint64_t& seed) const {
    seed = seeds[t % seeds.size()];
    t /= seeds.size();
    y = b[t % b.size()];
    x = a[t / b.size()];
  }
};

void append_trace(std::vector<Row>& out, const Row& prefix, std::string_view axis,
                  const std::vector<WeightingStep>& trace) {
  for (const auto& s : trace) {
    Row r = prefix;
    r.push_back(cell(axis));
    for (auto& c : make_row(s.step, s.chosen_row, s.gamma, s.coherence, s.l1_loss, s.kappa)) {
      r.push_back(std::move(c));
    }
    out.push_back(std::move(r));
  }
}

const std::vector<std::string> kTraceTail = {"axis",      "step",    "chosen_row", "gamma",
                                             "coherence", "l1_loss", "kappa"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void append_sweep(std::vector<Row>& out, const Row& prefix, const SweepOutcome& s) {
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    const auto& l = s.lambdas[i];
    Row r = prefix;
    for (auto& c : make_row(l.factor, l.lambda, l.iterations, l.converged,
                            l.relative_error.value_or(std::nan("")), i == s.best)) {
      r.push_back(std::move(c));
    }
    out.push_back(std::move(r));
  }
}

const std::vector<std::string> kSweepTail = {"lambda_factor", "lambda",         "iterations",
                                             "converged",     "relative_error", "best"};

// Summary: group runs by `keys`, median of every column in `metrics`.
Table summarize(const Table& runs, const std::vector<std::string>& keys,
                const std::vector<std::string>& metrics) {
  Table out;
  out.columns = keys;
  out.columns.push_back("n_seeds");
  for (const auto& m : metrics) out.columns.push_back("median_" + m);
  std::vector<std::size_t> key_idx;
  for (const auto& k : keys) key_idx.push_back(runs.column(k));

  std::vector<Row> groups;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < runs.rows.size(); ++r) {
    Row key;
    for (auto i : key_idx) key.push_back(runs.rows[r][i]);
    auto it = std::find(groups.begin(), groups.end(), key);
    if (it == groups.end()) {
      groups.push_back(key);
      members.push_back({r});
    } else {
      members[static_cast<std::size_t>(it - groups.begin())].push_back(r);
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Row row = groups[g];
    row.push_back(std::to_string(members[g].size()));
    for (const auto& m : metrics) {
      std::vector<double> values;
      for (auto r : members[g]) values.push_back(runs.number(r, m));
      row.push_back(format_number(median(values)));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

void run_weighting_trace(const ExperimentSpec& spec, ExperimentReport& rep) {
  const Grid grid{spec.p_grid, {0.0}, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double p, unused;
    std::uint64_t seed;
    grid.at(t, p, unused, seed);
    const DenseMatrix l0 = ground_truth(spec, seed);
    const auto obs = SparseObservation::from_mask(
        l0, sample_uniform(spec.n1, spec.n2, p, derive_seed(seed, kStreamMask)));
    const WeightingResult w = coordinate_descent(obs, spec.k, weighting_config(spec, p, seed), &l0);
    const auto& first = w.trace.front();
    const auto& last = w.trace.back();
    tasks[t].runs.push_back(make_row(p, seed, w.steps_taken, first.coherence, last.coherence,
                                     first.l1_loss, last.l1_loss));
    append_trace(tasks[t].trace, make_row(p, seed), "row", w.trace);
  });
  rep.runs.columns = {"p",           "seed",          "steps",       "initial_coherence",
                      "final_coherence", "initial_l1_loss", "final_l1_loss"};
  rep.trace.columns = concat({"p", "seed"}, kTraceTail);
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.trace) rep.trace.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"p"},
                          {"initial_coherence", "final_coherence", "initial_l1_loss",
                           "final_l1_loss"});
}

void run_rounds(const ExperimentSpec& spec, ExperimentReport& rep) {
  const Grid grid{spec.p_grid, {0.0}, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double p, unused;
    std::uint64_t seed;
    grid.at(t, p, unused, seed);
    const DenseMatrix l0 = ground_truth(spec, seed);
    const auto obs = SparseObservation::from_mask(
        l0, sample_uniform(spec.n1, spec.n2, p, derive_seed(seed, kStreamMask)));
    const auto rounds = weighted_sweep_rounds(obs, spec.k, spec.rounds,
                                              weighting_config(spec, p, seed), spec.lambda_grid,
                                              admm_config(spec), &l0);
    for (std::size_t s = 0; s < rounds.size(); ++s) {
      const auto& r = rounds[s];
      const auto round = static_cast<Index>(s + 1);
      const auto& best = r.lambdas[r.best];
      tasks[t].runs.push_back(make_row(p, seed, round, r.row_weighting.steps_taken,
                                       r.row_weighting.trace.front().coherence,
                                       r.row_weighting.trace.back().coherence,
                                       r.col_weighting.trace.back().coherence, best.factor,
                                       *best.relative_error));
      append_trace(tasks[t].trace, make_row(p, seed, round), "row", r.row_weighting.trace);
      append_trace(tasks[t].trace, make_row(p, seed, round), "col", r.col_weighting.trace);
      append_sweep(tasks[t].sweep, make_row(p, seed, round), r);
    }
  });
  rep.runs.columns = {"p",
                      "seed",
                      "round",
                      "row_steps",
                      "initial_row_coherence",
                      "final_row_coherence",
                      "final_col_coherence",
                      "best_lambda_factor",
                      "relative_error"};
  rep.trace.columns = concat({"p", "seed", "round"}, kTraceTail);
  rep.sweep.columns = concat({"p", "seed", "round"}, kSweepTail);
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.trace) rep.trace.rows.push_back(std::move(r));
    for (auto& r : t.sweep) rep.sweep.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"p", "round"},
                          {"final_row_coherence", "final_col_coherence", "relative_error"});
}

void run_noisy_completion(const ExperimentSpec& spec, ExperimentReport& rep) {
  const Grid grid{spec.sigma_grid, spec.p_grid, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double sigma, p;
    std::uint64_t seed;
    grid.at(t, sigma, p, seed);
    const DenseMatrix l0 = ground_truth(spec, seed);
    // sigma = 0 is the noise-free case: no constant offset is added either.
    const DenseMatrix m =
        sigma > 0.0 ? add_gaussian_noise(l0, spec.noise_fraction, sigma, spec.noise_mean,
                                         derive_seed(seed, kStreamNoise))
                    : l0;
    const auto obs = SparseObservation::from_mask(
        m, sample_uniform(spec.n1, spec.n2, p, derive_seed(seed, kStreamMask)));
    const WeightingConfig wcfg = weighting_config(spec, p, seed);
    const AdmmConfig acfg = admm_config(spec);
    const DenseMatrix trimmed = trim(obs, wcfg.trim_mode, wcfg.seed).to_dense();

    const SweepOutcome unweighted =
        weighted_sweep_round(obs, trimmed, spec.k, false, wcfg, spec.lambda_grid, acfg, &l0);
    const SweepOutcome type1 =
        weighted_sweep_round(obs, trimmed, spec.k, true, wcfg, spec.lambda_grid, acfg, &l0);
    const SweepOutcome type2 = weighted_sweep_round(obs, type1.recovery.recovered, spec.k, true,
                                                    wcfg, spec.lambda_grid, acfg, &l0);
    const std::pair<const char*, const SweepOutcome*> methods[] = {
        {"unweighted", &unweighted}, {"type1", &type1}, {"type2", &type2}};
    for (const auto& [name, s] : methods) {
      const auto& best = s->lambdas[s->best];
      tasks[t].runs.push_back(
          make_row(sigma, p, seed, name, best.factor, best.lambda, *best.relative_error));
      append_sweep(tasks[t].sweep, make_row(sigma, p, seed, name), *s);
    }
  });
  rep.runs.columns = {"sigma",         "p",      "seed", "method", "best_lambda_factor",
                      "best_lambda", "relative_error"};
  rep.sweep.columns = concat({"sigma", "p", "seed", "method"}, kSweepTail);
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.sweep) rep.sweep.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"sigma", "p", "method"}, {"relative_error"});
}

DenseMatrix corrupted(const ExperimentSpec& spec, const DenseMatrix& l0, double p, double s,
                      std::uint64_t seed) {
  return l0 + gen_sparse_corruption(spec.n1, spec.n2, p, s, derive_seed(seed, kStreamCorruption));
}

void run_rpca_trace(const ExperimentSpec& spec, ExperimentReport& rep) {
  const Grid grid{spec.p_grid, spec.s_grid, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double p, s;
    std::uint64_t seed;
    grid.at(t, p, s, seed);
    const DenseMatrix l0 = ground_truth(spec, seed);
    const DenseMatrix d = corrupted(spec, l0, p, s, seed);
    const WeightingConfig wcfg = weighting_config(spec, 1.0, seed);
    const DenseMatrix l0_t = l0.transpose();
    const WeightingResult rows = coordinate_descent(d, spec.k, wcfg, &l0);
    const WeightingResult cols = coordinate_descent(DenseMatrix(d.transpose()), spec.k, wcfg, &l0_t);
    tasks[t].runs.push_back(make_row(p, s, seed, rows.trace.front().coherence,
                                     rows.trace.back().coherence, cols.trace.front().coherence,
                                     cols.trace.back().coherence));
    append_trace(tasks[t].trace, make_row(p, s, seed), "row", rows.trace);
    append_trace(tasks[t].trace, make_row(p, s, seed), "col", cols.trace);
  });
  rep.runs.columns = {"p",
                      "s",
                      "seed",
                      "initial_row_coherence",
                      "final_row_coherence",
                      "initial_col_coherence",
                      "final_col_coherence"};
  rep.trace.columns = concat({"p", "s", "seed"}, kTraceTail);
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.trace) rep.trace.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"p", "s"},
                          {"initial_row_coherence", "final_row_coherence",
                           "initial_col_coherence", "final_col_coherence"});
}

struct RpcaSweep {
  std::vector<LambdaRecord> lambdas;
  std::size_t best = 0;
  RpcaResult result;
};

RpcaSweep sweep_rpca(const DenseMatrix& d, const DiagonalWeights& r, const DiagonalWeights& c,
                     const std::vector<double>& factors, const DenseMatrix& l0) {
  RpcaSweep out;
  double best_error = std::numeric_limits<double>::infinity();
  const double base = default_rpca_lambda(d.rows(), d.cols());
  for (double f : factors) {
    RpcaConfig cfg;
    cfg.lambda_rpca = f * base;
    RpcaResult res = rpca_with_weights(d, r, c, cfg);
    LambdaRecord rec{f, cfg.lambda_rpca, res.iterations, res.converged,
                     relative_error(res.low_rank, l0)};
    if (*rec.relative_error < best_error) {
      best_error = *rec.relative_error;
      out.best = out.lambdas.size();
      out.result = std::move(res);
    }
    out.lambdas.push_back(rec);
  }
  return out;
}

void run_rpca_error(const ExperimentSpec& spec, ExperimentReport& rep) {
  const Grid grid{spec.p_grid, spec.s_grid, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double p, s;
    std::uint64_t seed;
    grid.at(t, p, s, seed);
    const DenseMatrix l0 = ground_truth(spec, seed);
    const DenseMatrix d = corrupted(spec, l0, p, s, seed);
    const WeightingConfig wcfg = weighting_config(spec, 1.0, seed);

    auto weigh = [&](const DenseMatrix& from) {
      const WeightingResult rows = coordinate_descent(from, spec.k, wcfg);
      const WeightingResult cols =
          coordinate_descent(DenseMatrix(from.transpose()), spec.k, wcfg);
      return std::make_pair(rows.weights, cols.weights);
    };
    const RpcaSweep unweighted =
        sweep_rpca(d, DiagonalWeights::identity(spec.n1), DiagonalWeights::identity(spec.n2),
                   spec.lambda_grid, l0);
    const auto [r1, c1] = weigh(d);
    const RpcaSweep type1 = sweep_rpca(d, r1, c1, spec.lambda_grid, l0);
    const auto [r2, c2] = weigh(type1.result.low_rank);
    const RpcaSweep type2 = sweep_rpca(d, r2, c2, spec.lambda_grid, l0);

    const std::pair<const char*, const RpcaSweep*> methods[] = {
        {"unweighted", &unweighted}, {"type1", &type1}, {"type2", &type2}};
    for (const auto& [name, sw] : methods) {
      const auto& best = sw->lambdas[sw->best];
      tasks[t].runs.push_back(
          make_row(p, s, seed, name, best.factor, best.lambda, *best.relative_error));
      for (std::size_t i = 0; i < sw->lambdas.size(); ++i) {
        const auto& l = sw->lambdas[i];
        tasks[t].sweep.push_back(make_row(p, s, seed, name, l.factor, l.lambda, l.iterations,
                                          l.converged, *l.relative_error, i == sw->best));
      }
    }
  });
  rep.runs.columns = {"p",           "s",   "seed", "method", "best_lambda_factor",
                      "best_lambda", "relative_error"};
  rep.sweep.columns = concat({"p", "s", "seed", "method"}, kSweepTail);
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.sweep) rep.sweep.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"p", "s", "method"}, {"relative_error"});
}

void run_loss_compare(const ExperimentSpec& spec, ExperimentReport& rep) {
  const std::vector<LossNorm> rules = {LossNorm::kL1, LossNorm::kL2, LossNorm::kInf};
  const Grid grid{{0.0}, {0.0, 1.0, 2.0}, spec.seeds};
  std::vector<TaskRows> tasks(grid.size());
  const auto norm_index = static_cast<std::size_t>(spec.appb_threshold_norm);
  parallel_for(grid.size(), spec.threads, [&](std::size_t t) {
    double unused, rule_index;
    std::uint64_t seed;
    grid.at(t, unused, rule_index, seed);
    const LossNorm rule = rules[static_cast<std::size_t>(rule_index)];
    const DenseMatrix l0 = ground_truth(spec, seed);
    WeightingConfig cfg;
    cfg.max_steps = spec.max_steps;
    cfg.loss_q = rule;
    const ExactDescentResult res = exact_coordinate_descent(
        l0, spec.k, cfg, target_scores_uniform(spec.n1, spec.k));
    const auto steps = static_cast<Index>(res.steps.size());
    const Index cap = spec.max_steps > 0 ? spec.max_steps : spec.k * spec.k;
    const double goal = spec.appb_threshold * res.losses.front()[norm_index];
    Index reached = cap + 1;
    for (std::size_t s = 0; s < res.losses.size(); ++s) {
      if (res.losses[s][norm_index] <= goal) {
        reached = static_cast<Index>(s);
        break;
      }
    }
    const auto& first = res.losses.front();
    const auto& last = res.losses.back();
    tasks[t].runs.push_back(make_row(seed, loss_name(rule), steps, res.stuck, reached,
                                     reached <= cap, first[0], last[0], last[1], last[2]));
    for (std::size_t s = 0; s < res.losses.size(); ++s) {
      const Index row = s == 0 ? -1 : res.steps[s - 1].row;
      const double gamma = s == 0 ? 0.0 : res.steps[s - 1].gamma;
      tasks[t].trace.push_back(make_row(seed, loss_name(rule), static_cast<Index>(s), row, gamma,
                                        res.losses[s][0], res.losses[s][1], res.losses[s][2]));
    }
  });
  rep.runs.columns = {"seed",          "step_rule",          "steps",
                      "stuck",         "steps_to_threshold", "threshold_reached",
                      "initial_l1_loss", "final_l1_loss",    "final_l2_loss",
                      "final_linf_loss"};
  rep.trace.columns = {"seed", "step_rule", "step", "chosen_row", "gamma",
                       "l1_loss", "l2_loss", "linf_loss"};
  for (auto& t : tasks) {
    for (auto& r : t.runs) rep.runs.rows.push_back(std::move(r));
    for (auto& r : t.trace) rep.trace.rows.push_back(std::move(r));
  }
  rep.summary = summarize(rep.runs, {"step_rule"},
                          {"steps_to_threshold", "final_l1_loss", "final_l2_loss",
                           "final_linf_loss"});
}

// ---------------------------------------------------------------------------
// Output

void write_table(const std::filesystem::path& path, const Table& t,
                 const io::Provenance& prov) {
  auto out = io::open_output(path);
  io::write_provenance(out, prov);
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_svg(const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  constexpr double kW = 640, kH = 400, kL = 70, kR = 150, kT = 40, kB = 50;
  auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  auto out = io::open_output(path);
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                kL, kT, kW - kL - kR, kH - kT - kB);
  out << buf;
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.3g</text>\n",
                  px(xv), kH - kB + 16, xv);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n",
                  kL - 4, py(yv) + 4, yv);
    out << buf;
  }
  out << "<text x=\"" << kL + (kW - kL - kR) / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"14\" y=\"" << kT + (kH - kT - kB) / 2 << "\" transform=\"rotate(-90 14 "
      << kT + (kH - kT - kB) / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series[s].x[i]), py(series[s].y[i]));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = kT + 14.0 * static_cast<double>(s + 1);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  kW - kR + 10, ly - 4, kW - kR + 30, ly - 4, color);
    out << buf;
    out << "<text x=\"" << kW - kR + 34 << "\" y=\"" << ly << "\">" << series[s].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

// Series of `y` against `x` from the rows of `t` selected by `pick`, one
// series per distinct value of `group`.
std::vector<Series> series_from(const Table& t, const std::string& x, const std::string& y,
                                const std::string& group,
                                const std::function<bool(std::size_t)>& pick) {
  std::vector<Series> out;
  const auto gi = t.column(group);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!pick(r)) continue;
    const std::string& name = t.rows[r][gi];
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == name; });
    if (it == out.end()) {
      out.push_back({name, {}, {}});
      it = out.end() - 1;
    }
    it->x.push_back(t.number(r, x));
    it->y.push_back(t.number(r, y));
  }
  for (auto& s : out) s.name = group + "=" + s.name;
  return out;
}

void write_plot(const ExperimentSpec& spec, const ExperimentReport& rep,
                const std::filesystem::path& path) {
  const std::string title(scenario_name(spec.scenario));
  const std::string first_seed = std::to_string(spec.seeds.front());
  auto seed_is_first = [&](const Table& t) {
    const auto si = t.column("seed");
    return [&t, si, first_seed](std::size_t r) { return t.rows[r][si] == first_seed; };
  };
  std::vector<Series> s;
  switch (spec.scenario) {
    case Scenario::kWeightingTrace:
      s = series_from(rep.trace, "step", "l1_loss", "p", seed_is_first(rep.trace));
      write_svg(path, title, "step", "l1 hinge loss", s);
      return;
    case Scenario::kRounds: {
      const auto ai = rep.trace.column("axis");
      const auto pick = seed_is_first(rep.trace);
      s = series_from(rep.trace, "step", "coherence", "round",
                      [&](std::size_t r) { return pick(r) && rep.trace.rows[r][ai] == "row"; });
      write_svg(path, title, "step", "row coherence", s);
      return;
    }
    case Scenario::kNoisyCompletion:
      s = series_from(rep.summary, "sigma", "median_relative_error", "method",
                      [](std::size_t) { return true; });
      write_svg(path, title, "sigma", "median relative error", s);
      return;
    case Scenario::kRpcaTrace: {
      const auto ai = rep.trace.column("axis");
      const auto pick = seed_is_first(rep.trace);
      s = series_from(rep.trace, "step", "coherence", "p",
                      [&](std::size_t r) { return pick(r) && rep.trace.rows[r][ai] == "row"; });
      write_svg(path, title, "step", "row coherence", s);
      return;
    }
    case Scenario::kRpcaError:
      s = series_from(rep.summary, "p", "median_relative_error", "method",
                      [](std::size_t) { return true; });
      write_svg(path, title, "corruption rate p", "median relative error", s);
      return;
    case Scenario::kLossCompare:
      s = series_from(rep.trace, "step", "l1_loss", "step_rule", seed_is_first(rep.trace));
      write_svg(path, title, "step", "l1 hinge loss", s);
      return;
  }
}

void write_outputs(const ExperimentSpec& spec, ExperimentReport& rep) {
  const std::string slug = scenario_slug(spec.scenario);
  const io::Provenance prov{std::string(scenario_name(spec.scenario)), join(spec.seeds),
                            rep.config_hash};
  const std::pair<const char*, const Table*> tables[] = {
      {"runs", &rep.runs}, {"sweep", &rep.sweep}, {"trace", &rep.trace}, {"summary", &rep.summary}};
  for (const auto& [name, table] : tables) {
    if (table->columns.empty()) continue;
    const auto path = spec.out_dir / (slug + "_" + name + ".csv");
    write_table(path, *table, prov);
    rep.files.push_back(path);
  }
  if (spec.svg) {
    const auto path = spec.out_dir / (slug + ".svg");
    write_plot(spec, rep, path);
    rep.files.push_back(path);
  }
  nlohmann::ordered_json manifest;
  manifest["scenario"] = scenario_name(spec.scenario);
  manifest["config_hash"] = rep.config_hash;
  manifest["seeds"] = spec.seeds;
  // Results do not depend on the thread count, so it stays out of the hash.
  manifest["threads"] = spec.threads;
  nlohmann::ordered_json config;
  for (const auto& [k, v] : spec.canonical()) config[k] = v;
  manifest["config"] = config;
  std::vector<std::string> names;
  for (const auto& f : rep.files) names.push_back(f.filename().string());
  manifest["files"] = names;
  const auto path = spec.out_dir / (slug + "_manifest.json");
  auto out = io::open_output(path);
  out << manifest.dump(2) << '\n';
  rep.files.push_back(path);
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  for (const auto& info : kScenarios) {
    if (info.id == s) return info.name;
  }
  return "?";
}

std::string scenario_slug(Scenario s) {
  for (const auto& info : kScenarios) {
    if (info.id == s) return std::string(info.slug);
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (const auto& info : kScenarios) {
    if (info.name == name || info.slug == name) return info.id;
  }
  fail(ErrorCode::kInvalidInput, "unknown scenario '" + std::string(name) + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  // Shortest form that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  fail(ErrorCode::kInvalidInput, "no column '" + std::string(name) + "'");
}

double Table::number(std::size_t row, std::string_view name) const {
  return std::stod(rows.at(row).at(column(name)));
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::kInvalidInput, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::map<std::string, std::string> ExperimentSpec::canonical() const {
  return {
      {"scenario", std::string(scenario_name(scenario))},
      {"n1", std::to_string(n1)},
      {"n2", std::to_string(n2)},
      {"k", std::to_string(k)},
      {"p_grid", join(p_grid)},
      {"sigma_grid", join(sigma_grid)},
      {"s_grid", join(s_grid)},
      {"seeds", join(seeds)},
      {"lambda_grid", join(lambda_grid)},
      {"rho_scale", format_number(rho_scale)},
      {"max_steps", std::to_string(max_steps)},
      {"rounds", std::to_string(rounds)},
      {"admm_iters", std::to_string(admm_iters)},
      {"admm_tol", format_number(admm_tol)},
      {"noise_fraction", format_number(noise_fraction)},
      {"noise_mean", format_number(noise_mean)},
      {"appb_threshold", format_number(appb_threshold)},
      {"appb_threshold_norm", std::string(loss_name(appb_threshold_norm))},
  };
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) fail(ErrorCode::kInvalidInput, "experiment needs at least one seed");
  if (p_grid.empty() || sigma_grid.empty() || s_grid.empty() || lambda_grid.empty()) {
    fail(ErrorCode::kInvalidInput, "experiment grids must be nonempty");
  }
  GenSpec g{n1, n2, k, 0};
  wlr::validate(g);
  const bool rpca = scenario == Scenario::kRpcaTrace || scenario == Scenario::kRpcaError;
  for (double p : p_grid) {
    if (rpca ? !(p >= 0.0 && p <= 1.0) : !(p > 0.0 && p <= 1.0)) {
      fail(ErrorCode::kInvalidInput, "p out of range: " + format_number(p));
    }
  }
  for (double v : sigma_grid) {
    if (!(v >= 0.0)) fail(ErrorCode::kInvalidInput, "sigma must be >= 0");
  }
  for (double v : s_grid) {
    if (!(v > 0.0)) fail(ErrorCode::kInvalidInput, "s must be > 0");
  }
  for (double v : lambda_grid) {
    if (!(v > 0.0)) fail(ErrorCode::kInvalidInput, "lambda factors must be > 0");
  }
  if (!(rho_scale * std::sqrt(*std::min_element(p_grid.begin(), p_grid.end())) > 1.0) && !rpca) {
    fail(ErrorCode::kInvalidInput, "rho_scale * sqrt(p) must exceed 1");
  }
  if (rounds < 1 || admm_iters < 1 || max_steps < 0 || threads < 1) {
    fail(ErrorCode::kInvalidInput, "rounds, admm_iters and threads must be >= 1");
  }
  if (!(appb_threshold > 0.0 && appb_threshold < 1.0)) {
    fail(ErrorCode::kInvalidInput, "appb_threshold must lie in (0, 1)");
  }
}

double lambda_scale(const SparseObservation& obs, const DiagonalWeights& r,
                    const DiagonalWeights& c) {
  const DenseMatrix weighted = scale_rows_cols(obs.to_dense(), r.values, c.values);
  return Eigen::BDCSVD<DenseMatrix>(weighted).singularValues()(0);
}

SweepOutcome sweep_lambda(const SparseObservation& obs, const DiagonalWeights& r,
                          const DiagonalWeights& c, const std::vector<double>& factors,
                          const AdmmConfig& base, const DenseMatrix* truth) {
  if (factors.empty()) fail(ErrorCode::kInvalidInput, "empty lambda grid");
  const double scale = lambda_scale(obs, r, c);
  if (!(scale > 0.0)) fail(ErrorCode::kDegenerateObservation, "weighted observation is zero");
  SweepOutcome out;
  std::optional<RecoveryResult> previous;
  double best_error = std::numeric_limits<double>::infinity();
  for (double f : factors) {
    AdmmConfig cfg = base;
    cfg.lambda = f * scale;
    if (previous) previous->final_penalty = 0.0;  // re-derive rho for the new lambda
    RecoveryResult res = admm_weighted_complete(obs, r, c, cfg, previous ? &*previous : nullptr);
    LambdaRecord rec{f, cfg.lambda, res.iterations, res.converged, std::nullopt};
    if (truth != nullptr) rec.relative_error = relative_error(res.recovered, *truth);
    const bool better = truth == nullptr || *rec.relative_error < best_error;
    if (better) {
      if (truth != nullptr) best_error = *rec.relative_error;
      out.best = out.lambdas.size();
      out.recovery = res;
    }
    out.lambdas.push_back(rec);
    previous = std::move(res);
  }
  return out;
}

SweepOutcome weighted_sweep_round(const SparseObservation& obs, const DenseMatrix& current,
                                  Index k, bool weighted, const WeightingConfig& wcfg,
                                  const std::vector<double>& factors, const AdmmConfig& base,
                                  const DenseMatrix* truth) {
  WeightingResult rows;
  WeightingResult cols;
  if (weighted) {
    rows = coordinate_descent(current, k, wcfg, truth);
    std::optional<DenseMatrix> truth_t;
    if (truth != nullptr) truth_t = truth->transpose();
    cols = coordinate_descent(DenseMatrix(current.transpose()), k, wcfg,
                              truth_t ? &*truth_t : nullptr);
  } else {
    rows.weights = DiagonalWeights::identity(obs.n_rows());
    cols.weights = DiagonalWeights::identity(obs.n_cols());
  }
  SweepOutcome out = sweep_lambda(obs, rows.weights, cols.weights, factors, base, truth);
  out.row_weighting = std::move(rows);
  out.col_weighting = std::move(cols);
  return out;
}

std::vector<SweepOutcome> weighted_sweep_rounds(const SparseObservation& obs, Index k,
                                                Index rounds, const WeightingConfig& wcfg,
                                                const std::vector<double>& factors,
                                                const AdmmConfig& base,
                                                const DenseMatrix* truth) {
  if (rounds < 1) fail(ErrorCode::kInvalidInput, "rounds must be >= 1");
  if (obs.empty()) fail(ErrorCode::kDegenerateObservation, "empty observation");
  std::vector<SweepOutcome> out;
  DenseMatrix current = trim(obs, wcfg.trim_mode, wcfg.seed).to_dense();
  for (Index s = 0; s < rounds; ++s) {
    out.push_back(weighted_sweep_round(obs, current, k, true, wcfg, factors, base, truth));
    current = out.back().recovery.recovered;
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport rep;
  rep.config_hash = io::config_hash(spec.canonical());
  switch (spec.scenario) {
    case Scenario::kWeightingTrace:
      run_weighting_trace(spec, rep);
      break;
    case Scenario::kRounds:
      run_rounds(spec, rep);
      break;
    case Scenario::kNoisyCompletion:
      run_noisy_completion(spec, rep);
      break;
    case Scenario::kRpcaTrace:
      run_rpca_trace(spec, rep);
      break;
    case Scenario::kRpcaError:
      run_rpca_error(spec, rep);
      break;
    case Scenario::kLossCompare:
      run_loss_compare(spec, rep);
      break;
  }
  if (!spec.out_dir.empty()) write_outputs(spec, rep);
  return rep;
}

}  // namespace wlr
