#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wlr/completion.hpp"
#include "wlr/linalg.hpp"
#include "wlr/weighting.hpp"

namespace wlr {

enum class Scenario {
  kWeightingTrace,   // fig3-weighting-trace
  kRounds,           // fig4-rounds
  kNoisyCompletion,  // fig7-noisy-completion
  kRpcaTrace,        // fig5/6-rpca-trace
  kRpcaError,        // fig8-rpca-error
  kLossCompare,      // appB-loss-compare
};

std::string_view scenario_name(Scenario s);
/// File-system safe form of the name ("fig5-6-rpca-trace").
std::string scenario_slug(Scenario s);
Scenario parse_scenario(std::string_view name);

struct ExperimentSpec {
  Scenario scenario = Scenario::kWeightingTrace;
  Index n1 = 400;
  Index n2 = 200;
  Index k = 8;
  std::vector<double> p_grid{0.2};        // sampling rate, or corruption rate for RPCA
  std::vector<double> sigma_grid{0.0};    // noise std (fig7)
  std::vector<double> s_grid{1000.0};     // corruption magnitude (fig5/6, fig8)
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Completion: lambda = factor * sigma_1(R P_Omega(M) C). RPCA: lambda_rpca =
  /// factor * sqrt(max(n1, n2)).
  std::vector<double> lambda_grid{1e-2, 1e-3, 1e-4};
  double rho_scale = 20.0;  // accuracy rho = rho_scale * sqrt(p) (p = 1 for RPCA)
  Index max_steps = 0;      // 0 = k^2
  Index rounds = 2;         // fig4: rounds to run
  Index admm_iters = 200;   // per lambda
  double admm_tol = 1e-6;
  double noise_fraction = 0.5;
  double noise_mean = 1.0;
  LossNorm appb_threshold_norm = LossNorm::kL1;
  double appb_threshold = 0.5;  // fraction of the initial loss
  Index threads = 1;
  std::filesystem::path out_dir;
  bool svg = false;

  /// Canonical key=value rendering, hashed into every output file.
  std::map<std::string, std::string> canonical() const;
  void validate() const;
};

/// String-celled table; numbers are rendered in shortest round-trip form so
/// that values re-read from CSV compare exactly.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

std::string format_number(double v);

struct ExperimentReport {
  std::string config_hash;
  Table runs;     // one row per (grid point, seed, method)
  Table sweep;    // per-lambda records where a sweep happens
  Table trace;    // per-step traces
  Table summary;  // medians across seeds
  std::vector<std::filesystem::path> files;
};

/// Runs a scenario. Writes CSVs (and SVGs when requested) into spec.out_dir
/// if it is non-empty.
ExperimentReport run_experiment(const ExperimentSpec& spec);

double median(std::vector<double> values);

// Building blocks shared with the CLI, so that a CLI pipeline reproduces the
// harness numbers exactly.

struct LambdaRecord {
  double factor = 0.0;
  double lambda = 0.0;
  Index iterations = 0;
  bool converged = false;
  std::optional<double> relative_error;
};

struct SweepOutcome {
  WeightingResult row_weighting;
  WeightingResult col_weighting;
  std::vector<LambdaRecord> lambdas;
  std::size_t best = 0;  // index into lambdas
  RecoveryResult recovery;
};

/// Scale used for relative lambda factors: sigma_1(R P_Omega(M) C).
double lambda_scale(const SparseObservation& obs, const DiagonalWeights& r,
                    const DiagonalWeights& c);

/// Solves for every factor (in the given order, each warm started from the
/// previous one) and keeps the recovery with the smallest relative error
/// against `truth`, or the last one when no truth is given.
SweepOutcome sweep_lambda(const SparseObservation& obs, const DiagonalWeights& r,
                          const DiagonalWeights& c, const std::vector<double>& factors,
                          const AdmmConfig& base, const DenseMatrix* truth);

/// One weighting-completion round with a lambda sweep. `current` is the
/// matrix the weights are computed from (the trimmed observation in round 1,
/// the previous recovery afterwards). With `weighted = false` the weights
/// are the identity.
SweepOutcome weighted_sweep_round(const SparseObservation& obs, const DenseMatrix& current,
                                  Index k, bool weighted, const WeightingConfig& wcfg,
                                  const std::vector<double>& factors, const AdmmConfig& base,
                                  const DenseMatrix* truth);

/// Rounds of weighted_sweep_round starting from the trimmed observation.
std::vector<SweepOutcome> weighted_sweep_rounds(const SparseObservation& obs, Index k,
                                                Index rounds, const WeightingConfig& wcfg,
                                                const std::vector<double>& factors,
                                                const AdmmConfig& base,
                                                const DenseMatrix* truth);

}  // namespace wlr
