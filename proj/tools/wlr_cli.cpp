// Command-line front end: gen, weigh, complete, rpca, experiment.
//
// Errors are reported as one JSON line on stderr,
//   {"error":"<code>","message":"..."}
// with exit code 64 for usage errors, 74 for I/O errors and 65 otherwise.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wlr/completion.hpp"
#include "wlr/datagen.hpp"
#include "wlr/error.hpp"
#include "wlr/experiment.hpp"
#include "wlr/io.hpp"
#include "wlr/leverage.hpp"
#include "wlr/metrics.hpp"
#include "wlr/random.hpp"
#include "wlr/rpca.hpp"
#include "wlr/simd/kernels.hpp"
#include "wlr/weighting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Same per-seed streams as the experiment harness, so a CLI pipeline
// reproduces harness numbers.
constexpr std::uint64_t kStreamMask = 101;
constexpr std::uint64_t kStreamNoise = 102;
constexpr std::uint64_t kStreamCorruption = 103;
constexpr std::uint64_t kStreamTrim = 104;

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

struct Global {
  std::uint64_t seed = 0;
  wlr::Index threads = 1;
  fs::path out = ".";
  std::string config;
  std::string simd = "auto";
};

void print_error(std::string_view code, std::string_view message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      wlr::fail(wlr::ErrorCode::kInvalidInput, "bad list entry '" + item + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (double v : parse_list(text)) {
    if (v < 0 || v != std::floor(v)) wlr::fail(wlr::ErrorCode::kInvalidInput, "bad seed");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

wlr::LossNorm parse_loss(const std::string& s) {
  if (s == "l1") return wlr::LossNorm::kL1;
  if (s == "l2") return wlr::LossNorm::kL2;
  if (s == "linf") return wlr::LossNorm::kInf;
  wlr::fail(wlr::ErrorCode::kInvalidInput, "loss must be l1, l2 or linf");
}

// Canonical key=value view of every option that affects results.
std::map<std::string, std::string> canonical(const CLI::App& app, const CLI::App& sub) {
  std::map<std::string, std::string> out;
  out["subcommand"] = sub.get_name();
  for (const CLI::App* a : {&app, &sub}) {
    for (const CLI::Option* opt : a->get_options()) {
      const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
      if (name.empty() || name == "help" || name == "config" || name == "out" ||
          name == "threads") {
        continue;
      }
      std::string value;
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      if (opt->count() == 0) value = opt->get_default_str();
      out[name] = value;
    }
  }
  return out;
}

// Applies `key = value` lines to options that were not given on the command
// line. Keys are long option names without dashes.
void apply_config(CLI::App& app, CLI::App& sub, const fs::path& path) {
  for (const auto& [key, value] : wlr::io::load_key_value(path)) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      wlr::fail(wlr::ErrorCode::kInvalidInput, "unknown config key '" + key + "'");
    }
    if (opt->count() > 0) continue;  // command line wins
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1") {
        opt->add_result("true");
      } else if (value != "false" && value != "0") {
        wlr::fail(wlr::ErrorCode::kInvalidInput, "flag '" + key + "' takes true or false");
      }
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

struct Outputs {
  fs::path dir;
  wlr::io::Provenance prov;

  std::ofstream open(const std::string& name) const {
    auto out = wlr::io::open_output(dir / name);
    wlr::io::write_provenance(out, prov);
    return out;
  }
  void dense(const std::string& name, const wlr::DenseMatrix& a) const {
    auto out = open(name);
    wlr::io::write_dense_csv(out, a);
  }
};

wlr::DiagonalWeights read_weights(const fs::path& path, wlr::Index expected) {
  std::ifstream in(path);
  if (!in) wlr::fail(wlr::ErrorCode::kIo, "cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) wlr::fail(wlr::ErrorCode::kInvalidInput, "bad weights line");
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (static_cast<wlr::Index>(values.size()) != expected) {
    wlr::fail(wlr::ErrorCode::kInvalidInput, path.string() + ": expected " +
                                                 std::to_string(expected) + " weights");
  }
  wlr::DiagonalWeights w = wlr::DiagonalWeights::identity(expected);
  for (wlr::Index i = 0; i < expected; ++i) {
    w.values(i) = values[static_cast<std::size_t>(i)];
    // Descent only ever shrinks weights by positive factors; an exact zero
    // means the row was abandoned.
    if (w.values(i) == 0.0) w.abandoned.push_back(i);
  }
  return w;
}

bool is_matrix_market(const fs::path& p) { return p.extension() == ".mtx"; }

// ---------------------------------------------------------------------------

struct GenArgs {
  wlr::Index n1 = 400, n2 = 200, k = 8;
  double p = 1.0;
  double sigma = 0.0, noise_fraction = 0.5, noise_mean = 1.0;
  double corrupt_p = 0.0, corrupt_s = 1.0;
  int t_dof = 2;
  double cov_base = 2.0, cov_decay = 0.5;
};

void cmd_gen(const Global& g, const GenArgs& a, const Outputs& out) {
  const wlr::DenseMatrix l0 =
      wlr::gen_coherent_lowrank({a.n1, a.n2, a.k, g.seed, a.t_dof, a.cov_base, a.cov_decay});
  const wlr::DenseMatrix m =
      a.sigma > 0.0 ? wlr::add_gaussian_noise(l0, a.noise_fraction, a.sigma, a.noise_mean,
                                              wlr::derive_seed(g.seed, kStreamNoise))
                    : l0;
  const auto obs = wlr::SparseObservation::from_mask(
      m, wlr::sample_uniform(a.n1, a.n2, a.p, wlr::derive_seed(g.seed, kStreamMask)));
  out.dense("L0.csv", l0);
  out.dense("M.csv", m);
  {
    std::ostringstream body;
    wlr::io::write_matrix_market(body, obs);
    const std::string text = body.str();
    const auto banner_end = text.find('\n') + 1;
    // The banner must stay on the first line; provenance goes in a comment.
    auto f = wlr::io::open_output(out.dir / "observed.mtx");
    f << text.substr(0, banner_end) << "% scenario=" << out.prov.scenario
      << " seed=" << out.prov.seed << " config_hash=" << out.prov.config_hash << '\n'
      << text.substr(banner_end);
  }
  json manifest{{"subcommand", "gen"}, {"seed", g.seed}, {"config_hash", out.prov.config_hash},
                {"n1", a.n1}, {"n2", a.n2}, {"k", a.k}, {"p", a.p},
                {"sigma", a.sigma}, {"noise_fraction", a.noise_fraction},
                {"noise_mean", a.noise_mean}, {"t_dof", a.t_dof}, {"cov_base", a.cov_base},
                {"cov_decay", a.cov_decay}, {"observed_entries", obs.size()}};
  json files = {"L0.csv", "M.csv", "observed.mtx"};
  if (a.corrupt_p > 0.0) {
    const wlr::DenseMatrix s0 = wlr::gen_sparse_corruption(
        a.n1, a.n2, a.corrupt_p, a.corrupt_s, wlr::derive_seed(g.seed, kStreamCorruption));
    out.dense("S0.csv", s0);
    out.dense("D.csv", m + s0);
    manifest["corrupt_p"] = a.corrupt_p;
    manifest["corrupt_s"] = a.corrupt_s;
    files.push_back("S0.csv");
    files.push_back("D.csv");
  }
  manifest["files"] = files;
  auto f = wlr::io::open_output(out.dir / "manifest.json");
  f << manifest.dump(2) << '\n';
  std::cout << json{{"status", "ok"}, {"observed_entries", obs.size()}}.dump() << '\n';
}

struct WeighArgs {
  std::string input;
  std::string reference;
  wlr::Index k = 0;
  double rho = 20.0;
  wlr::Index steps = 0;
  std::string axis = "both";
  std::string mode = "estimated";
  std::string loss = "l1";
};

void cmd_weigh(const Global& g, const WeighArgs& a, const Outputs& out) {
  wlr::WeightingConfig cfg;
  cfg.accuracy_rho = a.rho;
  cfg.max_steps = a.steps;
  cfg.loss_q = parse_loss(a.loss);
  cfg.seed = wlr::derive_seed(g.seed, kStreamTrim);
  const wlr::DenseMatrix m =
      is_matrix_market(a.input)
          ? wlr::trim(wlr::io::load_matrix_market(a.input), cfg.trim_mode, cfg.seed).to_dense()
          : wlr::io::load_dense_csv(a.input);
  std::optional<wlr::DenseMatrix> ref;
  if (!a.reference.empty()) ref = wlr::io::load_dense_csv(a.reference);

  json summary{{"status", "ok"}};
  auto run = [&](const std::string& prefix, const wlr::DenseMatrix& input,
                 const wlr::DenseMatrix* reference) {
    if (a.mode == "exact") {
      const auto res = wlr::exact_coordinate_descent(
          input, a.k, cfg, wlr::target_scores_uniform(input.rows(), a.k));
      auto w = out.open(prefix + "_weights.csv");
      wlr::write_weights_csv(w, res.weights);
      auto t = out.open(prefix + "_losses.csv");
      t << "step,chosen_row,gamma,l1_loss,l2_loss,linf_loss\n";
      for (std::size_t s = 0; s < res.losses.size(); ++s) {
        t << s << ',' << (s ? res.steps[s - 1].row : -1) << ','
          << wlr::format_number(s ? res.steps[s - 1].gamma : 0.0);
        for (double v : res.losses[s]) t << ',' << wlr::format_number(v);
        t << '\n';
      }
      summary[prefix + "_steps"] = res.steps.size();
      summary[prefix + "_stuck"] = res.stuck;
      return;
    }
    if (a.mode != "estimated") wlr::fail(wlr::ErrorCode::kInvalidInput, "mode must be estimated or exact");
    const auto res = wlr::coordinate_descent(input, a.k, cfg, reference);
    auto w = out.open(prefix + "_weights.csv");
    wlr::write_weights_csv(w, res.weights);
    auto t = out.open(prefix + "_trace.csv");
    wlr::write_trace_csv(t, res.trace);
    summary[prefix + "_steps"] = res.steps_taken;
    summary[prefix + "_final_coherence"] = res.trace.back().coherence;
  };
  if (a.axis != "rows" && a.axis != "cols" && a.axis != "both") {
    wlr::fail(wlr::ErrorCode::kInvalidInput, "axis must be rows, cols or both");
  }
  if (a.axis != "cols") run("row", m, ref ? &*ref : nullptr);
  if (a.axis != "rows") {
    const wlr::DenseMatrix mt = m.transpose();
    std::optional<wlr::DenseMatrix> ref_t;
    if (ref) ref_t = ref->transpose();
    run("col", mt, ref_t ? &*ref_t : nullptr);
  }
  std::cout << summary.dump() << '\n';
}

struct CompleteArgs {
  std::string input;
  std::string reference;
  std::string row_weights;
  std::string col_weights;
  wlr::Index k = 0;
  wlr::Index rounds = 0;
  bool unweighted = false;
  double lambda = 0.0;
  std::string lambda_grid = "0.01,0.001,0.0001";
  double rho = 0.0;
  wlr::Index steps = 0;
  wlr::Index admm_iters = 200;
  double admm_tol = 1e-6;
  double admm_penalty = 0.0;
};

void cmd_complete(const Global& g, const CompleteArgs& a, const Outputs& out) {
  const wlr::SparseObservation obs = wlr::io::load_matrix_market(a.input);
  std::optional<wlr::DenseMatrix> ref;
  if (!a.reference.empty()) ref = wlr::io::load_dense_csv(a.reference);
  const wlr::DenseMatrix* truth = ref ? &*ref : nullptr;

  wlr::AdmmConfig acfg;
  acfg.max_iters = a.admm_iters;
  acfg.primal_tol = a.admm_tol;
  acfg.admm_penalty = a.admm_penalty;
  // An absolute --lambda becomes a single factor of the weighted scale.
  const std::vector<double> factors = a.lambda > 0.0 ? std::vector<double>{} : parse_list(a.lambda_grid);

  const double p_hat = static_cast<double>(obs.size()) /
                       static_cast<double>(obs.n_rows() * obs.n_cols());
  wlr::WeightingConfig wcfg;
  wcfg.accuracy_rho = a.rho > 0.0 ? a.rho : 20.0 * std::sqrt(p_hat);
  wcfg.max_steps = a.steps;
  wcfg.seed = wlr::derive_seed(g.seed, kStreamTrim);

  const int modes = (a.rounds > 0) + a.unweighted + (!a.row_weights.empty() || !a.col_weights.empty());
  if (modes != 1) {
    wlr::fail(wlr::ErrorCode::kInvalidInput,
              "choose exactly one of --rounds, --unweighted, --row-weights/--col-weights");
  }

  auto solve = [&](const wlr::DiagonalWeights& r, const wlr::DiagonalWeights& c) {
    std::vector<double> f = factors;
    if (f.empty()) f = {a.lambda / wlr::lambda_scale(obs, r, c)};
    return wlr::sweep_lambda(obs, r, c, f, acfg, truth);
  };

  std::vector<wlr::SweepOutcome> rounds;
  if (a.rounds > 0) {
    if (factors.empty()) wlr::fail(wlr::ErrorCode::kInvalidInput, "--rounds takes --lambda-grid, not --lambda");
    rounds = wlr::weighted_sweep_rounds(obs, a.k, a.rounds, wcfg, factors, acfg, truth);
  } else if (a.unweighted) {
    rounds.push_back(solve(wlr::DiagonalWeights::identity(obs.n_rows()),
                           wlr::DiagonalWeights::identity(obs.n_cols())));
  } else {
    const auto r = a.row_weights.empty() ? wlr::DiagonalWeights::identity(obs.n_rows())
                                         : read_weights(a.row_weights, obs.n_rows());
    const auto c = a.col_weights.empty() ? wlr::DiagonalWeights::identity(obs.n_cols())
                                         : read_weights(a.col_weights, obs.n_cols());
    wlr::SweepOutcome o = solve(r, c);
    o.row_weighting.weights = r;
    o.col_weighting.weights = c;
    rounds.push_back(std::move(o));
  }

  auto sweep = out.open("sweep.csv");
  sweep << "round,lambda_factor,lambda,iterations,converged,relative_error,best\n";
  for (std::size_t s = 0; s < rounds.size(); ++s) {
    const auto& o = rounds[s];
    for (std::size_t i = 0; i < o.lambdas.size(); ++i) {
      const auto& l = o.lambdas[i];
      sweep << s + 1 << ',' << wlr::format_number(l.factor) << ','
            << wlr::format_number(l.lambda) << ',' << l.iterations << ',' << l.converged << ','
            << wlr::format_number(l.relative_error.value_or(std::nan(""))) << ','
            << (i == o.best) << '\n';
    }
    if (a.rounds > 0) {
      const std::string tag = "round" + std::to_string(s + 1);
      auto rw = out.open(tag + "_row_weights.csv");
      wlr::write_weights_csv(rw, o.row_weighting.weights);
      auto cw = out.open(tag + "_col_weights.csv");
      wlr::write_weights_csv(cw, o.col_weighting.weights);
      auto rt = out.open(tag + "_row_trace.csv");
      wlr::write_trace_csv(rt, o.row_weighting.trace);
      auto ct = out.open(tag + "_col_trace.csv");
      wlr::write_trace_csv(ct, o.col_weighting.trace);
    }
  }
  const auto& last = rounds.back();
  out.dense("L.csv", last.recovery.recovered);
  auto res = out.open("residual.csv");
  wlr::write_residual_csv(res, last.recovery);

  json summary{{"status", "ok"},
               {"rounds", rounds.size()},
               {"best_lambda", last.lambdas[last.best].lambda},
               {"iterations", last.lambdas[last.best].iterations},
               {"converged", last.lambdas[last.best].converged}};
  if (truth != nullptr) summary["relative_error"] = *last.lambdas[last.best].relative_error;
  std::cout << summary.dump() << '\n';
}

struct RpcaArgs {
  std::string input;
  std::string reference;
  wlr::Index k = 0;
  std::string variant = "type1";
  double lambda_rpca = 0.0;
  double rho = 20.0;
  wlr::Index steps = 0;
  wlr::Index max_iters = 1000;
  double tol = 1e-7;
};

void cmd_rpca(const Global& g, const RpcaArgs& a, const Outputs& out) {
  const wlr::DenseMatrix d = wlr::io::load_dense_csv(a.input);
  wlr::RpcaConfig cfg;
  cfg.lambda_rpca = a.lambda_rpca;
  cfg.max_iters = a.max_iters;
  cfg.tol = a.tol;
  wlr::WeightingConfig wcfg;
  wcfg.accuracy_rho = a.rho;
  wcfg.max_steps = a.steps;
  wcfg.seed = wlr::derive_seed(g.seed, kStreamTrim);

  wlr::RpcaResult result;
  json summary{{"status", "ok"}, {"variant", a.variant}};
  if (a.variant == "unweighted") {
    result = wlr::rpca(d, cfg);
  } else if (a.variant == "type1" || a.variant == "type2") {
    const auto variant =
        a.variant == "type1" ? wlr::RpcaVariant::kType1 : wlr::RpcaVariant::kType2;
    wlr::WeightedRpcaOutcome o = wlr::weighted_rpca(d, a.k, variant, wcfg, cfg);
    auto rw = out.open("row_weights.csv");
    wlr::write_weights_csv(rw, o.row_weights);
    auto cw = out.open("col_weights.csv");
    wlr::write_weights_csv(cw, o.col_weights);
    result = std::move(o.result);
  } else {
    wlr::fail(wlr::ErrorCode::kInvalidInput, "variant must be unweighted, type1 or type2");
  }
  out.dense("L.csv", result.low_rank);
  out.dense("S.csv", result.sparse);
  summary["iterations"] = result.iterations;
  summary["converged"] = result.converged;
  if (!a.reference.empty()) {
    summary["relative_error"] =
        wlr::relative_error(result.low_rank, wlr::io::load_dense_csv(a.reference));
  }
  std::cout << summary.dump() << '\n';
}

struct ExperimentArgs {
  std::string scenario;
  wlr::Index n1 = 400, n2 = 200, k = 8;
  std::string p_grid = "0.2";
  std::string sigma_grid = "0";
  std::string s_grid = "1000";
  std::string seeds = "1,2,3,4,5";
  std::string lambda_grid = "0.01,0.001,0.0001";
  double rho_scale = 20.0;
  wlr::Index max_steps = 0;
  wlr::Index rounds = 2;
  wlr::Index admm_iters = 200;
  double admm_tol = 1e-6;
  double noise_fraction = 0.5;
  double noise_mean = 1.0;
  bool svg = false;
};

void cmd_experiment(const Global& g, const ExperimentArgs& a) {
  wlr::ExperimentSpec spec;
  spec.scenario = wlr::parse_scenario(a.scenario);
  spec.n1 = a.n1;
  spec.n2 = a.n2;
  spec.k = a.k;
  spec.p_grid = parse_list(a.p_grid);
  spec.sigma_grid = parse_list(a.sigma_grid);
  spec.s_grid = parse_list(a.s_grid);
  spec.seeds = parse_seed_list(a.seeds);
  spec.lambda_grid = parse_list(a.lambda_grid);
  spec.rho_scale = a.rho_scale;
  spec.max_steps = a.max_steps;
  spec.rounds = a.rounds;
  spec.admm_iters = a.admm_iters;
  spec.admm_tol = a.admm_tol;
  spec.noise_fraction = a.noise_fraction;
  spec.noise_mean = a.noise_mean;
  spec.threads = g.threads;
  spec.out_dir = g.out;
  spec.svg = a.svg;
  const wlr::ExperimentReport rep = wlr::run_experiment(spec);
  json files = json::array();
  for (const auto& f : rep.files) files.push_back(f.string());
  std::cout << json{{"status", "ok"}, {"config_hash", rep.config_hash}, {"files", files}}.dump()
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted low-rank completion and robust PCA via leverage-score weighting"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  // Required options are checked after the config file is applied, so that
  // the file can supply them.
  std::vector<std::pair<const CLI::App*, const CLI::Option*>> required;
  auto must = [&](const CLI::App* owner, CLI::Option* o) {
    required.emplace_back(owner, o);
    return o;
  };
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for experiment grids")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--config", g.config, "Plain key=value file mirroring the long flags");
  app.add_option("--simd", g.simd, "Kernel set: auto, scalar or avx2")->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate coherent low-rank data");
  gen_cmd->add_option("--n1", gen.n1)->capture_default_str();
  gen_cmd->add_option("--n2", gen.n2)->capture_default_str();
  gen_cmd->add_option("--k", gen.k)->capture_default_str();
  gen_cmd->add_option("--p", gen.p, "Sampling probability")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "Noise std (0 = noise-free)")->capture_default_str();
  gen_cmd->add_option("--noise-fraction", gen.noise_fraction)->capture_default_str();
  gen_cmd->add_option("--noise-mean", gen.noise_mean)->capture_default_str();
  gen_cmd->add_option("--corrupt-p", gen.corrupt_p, "Sparse corruption rate")->capture_default_str();
  gen_cmd->add_option("--corrupt-s", gen.corrupt_s, "Sparse corruption magnitude")
      ->capture_default_str();
  gen_cmd->add_option("--t-dof", gen.t_dof)->capture_default_str();
  gen_cmd->add_option("--cov-base", gen.cov_base)->capture_default_str();
  gen_cmd->add_option("--cov-decay", gen.cov_decay)->capture_default_str();

  WeighArgs weigh;
  auto* weigh_cmd = app.add_subcommand("weigh", "Row/column weights by coordinate descent");
  must(weigh_cmd, weigh_cmd->add_option("--input", weigh.input, "Observation (.mtx) or dense matrix (.csv)"));
  must(weigh_cmd, weigh_cmd->add_option("--k", weigh.k));
  weigh_cmd->add_option("--rho", weigh.rho, "Accuracy parameter")->capture_default_str();
  weigh_cmd->add_option("--steps", weigh.steps, "Step cap T (0 = k^2)")->capture_default_str();
  weigh_cmd->add_option("--axis", weigh.axis, "rows, cols or both")->capture_default_str();
  weigh_cmd->add_option("--mode", weigh.mode, "estimated or exact")->capture_default_str();
  weigh_cmd->add_option("--loss", weigh.loss, "Line-search loss for exact mode")
      ->capture_default_str();
  weigh_cmd->add_option("--reference", weigh.reference, "Ground truth for trace diagnostics");

  CompleteArgs comp;
  auto* comp_cmd = app.add_subcommand("complete", "Weighted nuclear-norm completion");
  must(comp_cmd, comp_cmd->add_option("--input", comp.input, "Observation (.mtx)"));
  comp_cmd->add_option("--k", comp.k, "Rank used by the weighting step");
  comp_cmd->add_option("--rounds", comp.rounds, "Weighting-completion rounds")
      ->capture_default_str();
  comp_cmd->add_flag("--unweighted", comp.unweighted, "Identity weights");
  comp_cmd->add_option("--row-weights", comp.row_weights);
  comp_cmd->add_option("--col-weights", comp.col_weights);
  comp_cmd->add_option("--lambda", comp.lambda, "Absolute lambda (overrides the grid)")
      ->capture_default_str();
  comp_cmd->add_option("--lambda-grid", comp.lambda_grid,
                       "Factors of sigma_1(R P(M) C), swept in order with warm starts")
      ->capture_default_str();
  comp_cmd->add_option("--rho", comp.rho, "Accuracy parameter (0 = 20 sqrt(p_hat))")
      ->capture_default_str();
  comp_cmd->add_option("--steps", comp.steps)->capture_default_str();
  comp_cmd->add_option("--admm-iters", comp.admm_iters)->capture_default_str();
  comp_cmd->add_option("--admm-tol", comp.admm_tol)->capture_default_str();
  comp_cmd->add_option("--admm-penalty", comp.admm_penalty, "Initial rho (0 = from lambda)")
      ->capture_default_str();
  comp_cmd->add_option("--reference", comp.reference, "Ground truth; selects the best lambda");

  RpcaArgs rp;
  auto* rpca_cmd = app.add_subcommand("rpca", "Robust PCA, plain or weighted");
  must(rpca_cmd, rpca_cmd->add_option("--input", rp.input, "Dense matrix D (.csv)"));
  rpca_cmd->add_option("--k", rp.k);
  rpca_cmd->add_option("--variant", rp.variant, "unweighted, type1 or type2")
      ->capture_default_str();
  rpca_cmd->add_option("--lambda-rpca", rp.lambda_rpca, "Weight on ||L||_* (0 = default)")
      ->capture_default_str();
  rpca_cmd->add_option("--rho", rp.rho)->capture_default_str();
  rpca_cmd->add_option("--steps", rp.steps)->capture_default_str();
  rpca_cmd->add_option("--max-iters", rp.max_iters)->capture_default_str();
  rpca_cmd->add_option("--tol", rp.tol)->capture_default_str();
  rpca_cmd->add_option("--reference", rp.reference);

  ExperimentArgs ex;
  auto* ex_cmd = app.add_subcommand("experiment", "Run a figure scenario");
  must(ex_cmd, ex_cmd->add_option("--scenario", ex.scenario));
  ex_cmd->add_option("--n1", ex.n1)->capture_default_str();
  ex_cmd->add_option("--n2", ex.n2)->capture_default_str();
  ex_cmd->add_option("--k", ex.k)->capture_default_str();
  ex_cmd->add_option("--p-grid", ex.p_grid)->capture_default_str();
  ex_cmd->add_option("--sigma-grid", ex.sigma_grid)->capture_default_str();
  ex_cmd->add_option("--s-grid", ex.s_grid)->capture_default_str();
  ex_cmd->add_option("--seeds", ex.seeds)->capture_default_str();
  ex_cmd->add_option("--lambda-grid", ex.lambda_grid)->capture_default_str();
  ex_cmd->add_option("--rho-scale", ex.rho_scale)->capture_default_str();
  ex_cmd->add_option("--max-steps", ex.max_steps)->capture_default_str();
  ex_cmd->add_option("--rounds", ex.rounds)->capture_default_str();
  ex_cmd->add_option("--admm-iters", ex.admm_iters)->capture_default_str();
  ex_cmd->add_option("--admm-tol", ex.admm_tol)->capture_default_str();
  ex_cmd->add_option("--noise-fraction", ex.noise_fraction)->capture_default_str();
  ex_cmd->add_option("--noise-mean", ex.noise_mean)->capture_default_str();
  ex_cmd->add_flag("--svg", ex.svg, "Also write an SVG line chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) apply_config(app, *sub, g.config);
    for (const auto& [owner, o] : required) {
      if (owner == sub && o->count() == 0) {
        print_error("usage", o->get_name() + " is required");
        return kExitUsage;
      }
    }
    if (g.simd != "auto") {
      const auto isa = wlr::simd::parse_isa(g.simd);
      if (!isa) wlr::fail(wlr::ErrorCode::kInvalidInput, "unknown --simd value");
      wlr::simd::set_isa(*isa);
    }
    const Outputs out{g.out, {sub->get_name(), std::to_string(g.seed),
                              wlr::io::config_hash(canonical(app, *sub))}};
    if (sub == gen_cmd) {
      cmd_gen(g, gen, out);
    } else if (sub == weigh_cmd) {
      cmd_weigh(g, weigh, out);
    } else if (sub == comp_cmd) {
      if (comp.rounds > 0 && comp.k < 1) {
        wlr::fail(wlr::ErrorCode::kInvalidRank, "--rounds needs --k");
      }
      cmd_complete(g, comp, out);
    } else if (sub == rpca_cmd) {
      cmd_rpca(g, rp, out);
    } else {
      cmd_experiment(g, ex);
    }
  } catch (const wlr::Error& e) {
    print_error(wlr::error_code_name(e.code()), e.what());
    return e.code() == wlr::ErrorCode::kIo ? kExitIo : kExitData;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitData;
  }
  return 0;
}
