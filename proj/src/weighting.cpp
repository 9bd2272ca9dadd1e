#include "wlr/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <string>

#include "wlr/error.hpp"
#include "wlr/metrics.hpp"
#include "wlr/simd/kernels.hpp"

namespace wlr {

namespace {

constexpr double kViolationTol = 1e-12;

Index resolve_steps(const WeightingConfig& cfg, Index k) {
  return cfg.max_steps > 0 ? cfg.max_steps : k * k;
}

}  // namespace

std::vector<std::uint8_t> TargetScores::active_mask() const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(values.size()), 1);
  for (Index i : abandoned) mask[static_cast<std::size_t>(i)] = 0;
  return mask;
}

DiagonalWeights DiagonalWeights::identity(Index n) { return {Vector::Ones(n), {}}; }

void DiagonalWeights::scale(Index i, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    fail(ErrorCode::kInvalidStep, "weight step gamma must lie in (0, 1)");
  }
  values(i) *= std::sqrt(1.0 - gamma);
}

bool DiagonalWeights::is_abandoned(Index i) const {
  return std::find(abandoned.begin(), abandoned.end(), i) != abandoned.end();
}

TargetScores target_scores_uniform(Index n1, Index k) {
  if (n1 < 1 || k < 1 || k > n1) fail(ErrorCode::kInvalidDims, "target scores need 1 <= k <= n1");
  return {Vector::Constant(n1, static_cast<double>(k) / static_cast<double>(n1)), {}};
}

TargetScores target_scores_from_marginals(const Vector& row_marginals, Index k) {
  const Index n1 = row_marginals.size();
  if (n1 == 0 || (row_marginals.array() < 0.0).any() || !row_marginals.allFinite()) {
    fail(ErrorCode::kInvalidMarginals, "marginals must be finite and nonnegative");
  }
  const double total = row_marginals.sum();
  if (!(total > 0.0)) fail(ErrorCode::kInvalidMarginals, "marginals are all zero");
  const double kd = static_cast<double>(k);
  TargetScores t;
  t.values = (2.0 * kd / total) * row_marginals.array() - kd / static_cast<double>(n1);
  for (Index i = 0; i < n1; ++i) {
    if (t.values(i) < 0.0) t.abandoned.push_back(i);
  }
  return t;
}

double hinge_loss(const Vector& scores, const TargetScores& t, LossNorm q) {
  if (scores.size() != t.size()) fail(ErrorCode::kInvalidInput, "hinge_loss: length mismatch");
  const auto active = t.active_mask();
  const auto n = static_cast<std::size_t>(scores.size());
  switch (q) {
    case LossNorm::kL1:
      return simd::kernels().hinge_l1(scores.data(), t.values.data(), active.data(), n);
    case LossNorm::kL2: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double excess = scores[static_cast<Index>(i)] - t.values[static_cast<Index>(i)];
        if (active[i] && excess > 0.0) sum += excess * excess;
      }
      return std::sqrt(sum);
    }
    case LossNorm::kInf: {
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double excess = scores[static_cast<Index>(i)] - t.values[static_cast<Index>(i)];
        if (active[i]) worst = std::max(worst, excess);
      }
      return worst;
    }
  }
  return 0.0;
}

double hinge_loss(const LeverageProfile& p, const TargetScores& t, LossNorm q) {
  return hinge_loss(p.scores, t, q);
}

double gamma_exact(double mu_i, double mu_target) {
  if (!(mu_target > 0.0 && mu_target <= mu_i && mu_i < 1.0)) {
    fail(ErrorCode::kInvalidLeverage, "gamma_exact needs 0 < target <= mu_i < 1");
  }
  return (1.0 - mu_target / mu_i) / (1.0 - mu_target);
}

double gamma_medium(double mu_hat, Index n1, Index k) {
  if (n1 <= 2 * k) fail(ErrorCode::kInvalidDims, "gamma_medium needs n1 > 2k");
  if (!(mu_hat > 0.0 && mu_hat < 1.0)) {
    fail(ErrorCode::kInvalidLeverage, "gamma_medium needs mu_hat in (0, 1)");
  }
  const double n = static_cast<double>(n1);
  const double twice_k = 2.0 * static_cast<double>(k);
  return std::max(0.0, (n - twice_k / mu_hat) / (n - twice_k));
}

double gamma_large(double mu_hat, double accuracy_rho) {
  const double rho = accuracy_rho;
  if (!(rho > 1.0)) fail(ErrorCode::kInvalidLeverage, "gamma_large needs rho > 1");
  const double shifted = mu_hat - 1.0 / (2.0 * rho);
  if (!(mu_hat > 1.0 - 1.0 / rho && mu_hat < 1.0) || shifted < 1.0 / rho) {
    fail(ErrorCode::kInvalidLeverage, "gamma_large needs mu_hat in (1 - 1/rho, 1) and "
                                      "mu_hat - 1/(2 rho) >= 1/rho");
  }
  return std::max(0.0, (rho - 1.0 / shifted) / (rho - 1.0));
}

double medium_step_upper_bound(Index n1, Index k, double accuracy_rho) {
  const double rho = accuracy_rho;
  const double ratio = 4.0 * static_cast<double>(k) / static_cast<double>(n1);
  const double denom = (rho - 1.0) * (rho - 1.0) - ratio * rho * (rho - 0.5);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return ratio * (rho - 0.5) * (rho - 0.5) / denom;
}

double line_search_step(const LeverageProfile& p, Index i, LossNorm q, const TargetScores& t,
                        Index grid) {
  if (!p.has_cross()) fail(ErrorCode::kNeedsCross, "line_search_step requires cross leverage");
  if (i < 0 || i >= p.size()) fail(ErrorCode::kInvalidInput, "row index out of range");
  const double mu_i = p.scores(i);
  const double target = t.values(i);

  if (q == LossNorm::kL1) {
    // A row with mu_i = 1 is orthogonal to the rest; scaling cannot move it.
    if (!(mu_i > target) || target <= 0.0 || mu_i >= 1.0 - 1e-12) return 0.0;
    return gamma_exact(mu_i, target);
  }

  if (grid < 2) fail(ErrorCode::kInvalidInput, "line search grid must be >= 2");
  const double current = hinge_loss(p, t, q);
  double best_loss = current;
  double best_gamma = 0.0;
  for (Index g = 1; g < grid; ++g) {
    const double gamma = static_cast<double>(g) / static_cast<double>(grid);
    if (!(gamma * mu_i < 1.0)) break;
    const double loss = hinge_loss(rank_one_update(p, i, gamma), t, q);
    if (loss < best_loss) {
      best_loss = loss;
      best_gamma = gamma;
    }
  }
  if (!(best_loss < current - 1e-14 * std::max(1.0, current))) return 0.0;
  return best_gamma;
}

namespace {

// Supplies rank-k leverage of diag(r) * M~ through a reduced basis when
// rank(M~) < n2.
class WeightedLeverage {
 public:
  WeightedLeverage(const DenseMatrix& m, Index k) : k_(k) {
    require_finite(m, "weighting input");
    if (k < 1 || k > std::min(m.rows(), m.cols())) {
      fail(ErrorCode::kInvalidRank, "coordinate_descent: k out of range");
    }
    const SvdFactors f = condensed_svd(m, 1e-12);
    if (f.rank() < k) {
      fail(ErrorCode::kDegenerateObservation,
           "weighting input has rank " + std::to_string(f.rank()) + " < k");
    }
    basis_ = f.rank() < m.cols() ? reduce_to_scaled_bases(f) : m;
  }

  SvdFactors factors(const Vector& r) const {
    return truncated_svd(r.asDiagonal() * basis_, k_, /*with_right=*/false);
  }

  Index basis_cols() const { return basis_.cols(); }

 private:
  Index k_;
  DenseMatrix basis_;
};

struct Diagnostics {
  double coherence;
  double l1_loss;
  double kappa;
};

Diagnostics diagnose(const SvdFactors& f, Index k, const TargetScores& targets) {
  const LeverageProfile p = compute_leverage(f, k);
  const double sk = f.singular(k - 1);
  return {coherence(p), hinge_loss(p, targets, LossNorm::kL1),
          sk > 0.0 ? f.singular(0) / sk : std::numeric_limits<double>::infinity()};
}

}  // namespace

WeightingResult coordinate_descent(const DenseMatrix& observed, Index k,
                                   const WeightingConfig& cfg, const TargetScores& targets,
                                   const DenseMatrix* reference) {
  const Index n1 = observed.rows();
  if (targets.size() != n1) fail(ErrorCode::kInvalidInput, "targets length differs from rows");
  if (!(cfg.accuracy_rho > 1.0)) fail(ErrorCode::kInvalidInput, "accuracy_rho must exceed 1");
  const double rho = cfg.accuracy_rho;
  const double threshold = 1.0 / rho;
  const Index max_steps = resolve_steps(cfg, k);

  const WeightedLeverage estimate(observed, k);
  std::optional<WeightedLeverage> truth;
  if (reference != nullptr) {
    if (reference->rows() != n1) fail(ErrorCode::kInvalidInput, "reference shape mismatch");
    truth.emplace(*reference, k);
  }

  WeightingResult result;
  result.weights = DiagonalWeights::identity(n1);
  for (Index i : targets.abandoned) result.weights.values(i) = 0.0;
  result.weights.abandoned = targets.abandoned;
  const auto active = targets.active_mask();

  Index last_row = -1;
  double last_gamma = 0.0;
  for (Index step = 0;; ++step) {
    const SvdFactors f = estimate.factors(result.weights.values);
    const LeverageProfile p = compute_leverage(f, k);
    const Diagnostics d = truth ? diagnose(truth->factors(result.weights.values), k, targets)
                                : diagnose(f, k, targets);
    result.trace.push_back({step, last_row, last_gamma, d.coherence, d.l1_loss, d.kappa});
    if (step == max_steps) break;

    // Violators ordered by estimated score, descending; ties to smaller index.
    std::vector<Index> order;
    for (Index i = 0; i < n1; ++i) {
      if (active[static_cast<std::size_t>(i)] && p.scores(i) >= threshold &&
          p.scores(i) > targets.values(i) + kViolationTol) {
        order.push_back(i);
      }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return p.scores(a) > p.scores(b); });

    Index chosen = -1;
    double gamma = 0.0;
    for (Index i : order) {
      double mu_hat = p.scores(i);
      if (mu_hat <= 1.0 - threshold) {
        gamma = gamma_medium(mu_hat, n1, k);
      } else {
        if (mu_hat >= 1.0) mu_hat = 1.0 - 1.0 / (2.0 * rho);
        gamma = gamma_large(mu_hat, rho);
      }
      if (gamma > 0.0 && gamma < 1.0) {
        chosen = i;
        break;
      }
    }
    if (chosen < 0) break;

    result.weights.scale(chosen, gamma);
    ++result.steps_taken;
    last_row = chosen;
    last_gamma = gamma;
  }
  return result;
}

WeightingResult coordinate_descent(const SparseObservation& obs, Index k,
                                   const WeightingConfig& cfg, const TargetScores& targets,
                                   const DenseMatrix* reference) {
  if (obs.empty()) fail(ErrorCode::kDegenerateObservation, "empty observation");
  const SparseObservation trimmed = trim(obs, cfg.trim_mode, cfg.seed);
  if (trimmed.empty()) fail(ErrorCode::kDegenerateObservation, "observation empty after trim");
  return coordinate_descent(trimmed.to_dense(), k, cfg, targets, reference);
}

WeightingResult coordinate_descent(const DenseMatrix& observed, Index k,
                                   const WeightingConfig& cfg, const DenseMatrix* reference) {
  return coordinate_descent(observed, k, cfg, target_scores_uniform(observed.rows(), k),
                            reference);
}

WeightingResult coordinate_descent(const SparseObservation& obs, Index k,
                                   const WeightingConfig& cfg, const DenseMatrix* reference) {
  return coordinate_descent(obs, k, cfg, target_scores_uniform(obs.n_rows(), k), reference);
}

ExactDescentResult exact_coordinate_descent(const DenseMatrix& m, Index k,
                                            const WeightingConfig& cfg,
                                            const TargetScores& targets, bool keep_profiles) {
  const Index n1 = m.rows();
  if (targets.size() != n1) fail(ErrorCode::kInvalidInput, "targets length differs from rows");
  const Index max_steps = resolve_steps(cfg, k);
  const Index refresh = std::max<Index>(cfg.refresh_period, 1);
  const WeightedLeverage source(m, k);

  ExactDescentResult result;
  result.weights = DiagonalWeights::identity(n1);
  for (Index i : targets.abandoned) result.weights.values(i) = 0.0;
  result.weights.abandoned = targets.abandoned;
  const auto active = targets.active_mask();

  auto fresh = [&] {
    return compute_leverage(source.factors(result.weights.values), k, /*with_cross=*/true);
  };
  auto record = [&](const LeverageProfile& p) {
    result.losses.push_back({hinge_loss(p, targets, LossNorm::kL1),
                             hinge_loss(p, targets, LossNorm::kL2),
                             hinge_loss(p, targets, LossNorm::kInf)});
  };

  LeverageProfile profile = fresh();
  record(profile);
  Index since_refresh = 0;
  for (Index step = 0; step < max_steps; ++step) {
    std::vector<Index> order;
    for (Index i = 0; i < n1; ++i) {
      if (active[static_cast<std::size_t>(i)] &&
          profile.scores(i) > targets.values(i) + kViolationTol) {
        order.push_back(i);
      }
    }
    if (order.empty()) break;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return profile.scores(a) > profile.scores(b); });

    Index chosen = -1;
    double gamma = 0.0;
    for (Index i : order) {
      gamma = line_search_step(profile, i, cfg.loss_q, targets, cfg.grid);
      if (gamma > 0.0) {
        chosen = i;
        break;
      }
    }
    if (chosen < 0) {
      result.stuck = true;
      break;
    }

    result.weights.scale(chosen, gamma);
    LeverageProfile next = rank_one_update(profile, chosen, gamma);
    if (++since_refresh >= refresh) {
      next = fresh();
      since_refresh = 0;
    }
    if (keep_profiles) {
      result.steps.push_back({chosen, gamma, profile, next});
    } else {
      result.steps.push_back({chosen, gamma, {}, {}});
    }
    profile = std::move(next);
    record(profile);
  }
  return result;
}

void write_weights_csv(std::ostream& out, const DiagonalWeights& w) {
  out << "index,weight\n" << std::setprecision(17);
  for (Index i = 0; i < w.size(); ++i) out << i << ',' << w.values(i) << '\n';
}

void write_trace_csv(std::ostream& out, const std::vector<WeightingStep>& trace) {
  out << "step,chosen_row,gamma,coherence,l1_loss,kappa\n" << std::setprecision(17);
  for (const auto& s : trace) {
    out << s.step << ',' << s.chosen_row << ',' << s.gamma << ',' << s.coherence << ','
        << s.l1_loss << ',' << s.kappa << '\n';
  }
}

}  // namespace wlr
