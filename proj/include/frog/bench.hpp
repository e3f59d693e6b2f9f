#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frog/adcore.hpp"
#include "frog/errors.hpp"
#include "frog/fgrad.hpp"
#include "frog/rng.hpp"
#include "frog/tangent.hpp"

namespace frog {

enum class ObjectiveKind { sphere, rosenbrock, styblinski_tang };

inline const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::sphere: return "sphere";
    case ObjectiveKind::rosenbrock: return "rosenbrock";
    case ObjectiveKind::styblinski_tang: return "styblinski_tang";
  }
  return "?";
}

inline ObjectiveKind objective_from_string(const std::string& s) {
  if (s == "sphere") return ObjectiveKind::sphere;
  if (s == "rosenbrock") return ObjectiveKind::rosenbrock;
  if (s == "styblinski_tang") return ObjectiveKind::styblinski_tang;
  raise(errc::bad_config, "unknown objective '" + s + "'");
}

/// Per-coordinate minimum of the Styblinski-Tang function, the smaller real
/// root of 4x^3 - 32x + 5 plugged back in.
inline constexpr double kStyblinskiMinPerDim = -39.16616570377141;
inline constexpr double kStyblinskiArgminPerDim = -2.903534027771177;

// Evaluators are templated on the scalar so the same code runs on plain
// doubles and on MultiDual for JVP sweeps.

template <class T>
T eval_sphere(std::span<const T> x) {
  T s(0.0);
  for (const auto& xi : x) s = s + xi * xi;
  return s;
}

template <class T>
T eval_rosenbrock(std::span<const T> x) {
  require(x.size() >= 2, errc::bad_dimension, "rosenbrock requires n >= 2");
  T s(0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const T a = x[i + 1] - x[i] * x[i];
    const T b = 1.0 - x[i];
    s = s + 100.0 * (a * a) + b * b;
  }
  return s;
}

template <class T>
T eval_styblinski(std::span<const T> x) {
  T s(0.0);
  for (const auto& xi : x) {
    const T x2 = xi * xi;
    s = s + (x2 * x2 - 16.0 * x2 + 5.0 * xi);
  }
  return 0.5 * s;
}

inline Eigen::VectorXd grad_sphere(const Eigen::VectorXd& x) { return 2.0 * x; }

inline Eigen::VectorXd grad_rosenbrock(const Eigen::VectorXd& x) {
  require(x.size() >= 2, errc::bad_dimension, "rosenbrock requires n >= 2");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x(i + 1) - x(i) * x(i);
    g(i) += -400.0 * x(i) * a - 2.0 * (1.0 - x(i));
    g(i + 1) += 200.0 * a;
  }
  return g;
}

inline Eigen::VectorXd grad_styblinski(const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    g(i) = 0.5 * (4.0 * x(i) * x(i) * x(i) - 32.0 * x(i) + 5.0);
  return g;
}

/// A benchmark objective: evaluator, analytic gradient, canonical start
/// point, and the known optimum when one exists.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::sphere;
  Eigen::Index n = 1;
  Eigen::VectorXd x0;
  std::optional<double> known_min;

  std::string name() const { return objective_name(kind); }

  double value(const Eigen::VectorXd& x) const {
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    switch (kind) {
      case ObjectiveKind::sphere: return eval_sphere(xs);
      case ObjectiveKind::rosenbrock: return eval_rosenbrock(xs);
      case ObjectiveKind::styblinski_tang: return eval_styblinski(xs);
    }
    raise(errc::bad_config, "unhandled objective kind");
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    switch (kind) {
      case ObjectiveKind::sphere: return grad_sphere(x);
      case ObjectiveKind::rosenbrock: return grad_rosenbrock(x);
      case ObjectiveKind::styblinski_tang: return grad_styblinski(x);
    }
    raise(errc::bad_config, "unhandled objective kind");
  }

  MultiDual eval_dual(std::span<const MultiDual> x) const {
    switch (kind) {
      case ObjectiveKind::sphere: return eval_sphere(x);
      case ObjectiveKind::rosenbrock: return eval_rosenbrock(x);
      case ObjectiveKind::styblinski_tang: return eval_styblinski(x);
    }
    raise(errc::bad_config, "unhandled objective kind");
  }
};

inline Objective make_objective(ObjectiveKind kind, Eigen::Index n) {
  require(n >= 1, errc::bad_dimension, "objective dimension must be positive");
  Objective obj;
  obj.kind = kind;
  obj.n = n;
  switch (kind) {
    case ObjectiveKind::sphere:
      obj.x0 = Eigen::VectorXd::Constant(n, -1.0);
      obj.known_min = 0.0;
      break;
    case ObjectiveKind::rosenbrock:
      require(n >= 2, errc::bad_dimension, "rosenbrock requires n >= 2");
      obj.x0 = Eigen::VectorXd::Zero(n);
      obj.x0(0) = -1.0;
      obj.known_min = 0.0;
      break;
    case ObjectiveKind::styblinski_tang:
      obj.x0 = Eigen::VectorXd::Zero(n);
      obj.known_min = kStyblinskiMinPerDim * static_cast<double>(n);
      break;
  }
  return obj;
}

/// Tangent sampling settings for one estimator.
struct TangentSettings {
  Sampler sampler = Sampler::gaussian;
  Eigen::Index k = 1;
  double alpha_deg = 90.0;  // cone sampler only
};

/// Gradient-descent configuration. Fresh tangents are drawn at every step
/// from substream derive_seed(seed, step), so no two steps share a draw.
struct GdConfig {
  double lr = 0.1;
  int max_steps = 1000;
  int patience = 50;
  Estimator estimator = Estimator::exact;
  TangentSettings tangents;
  std::uint64_t seed = 0;
  double rank_tolerance = kDefaultRankTolerance;
  bool record_trace = false;
};

/// Outcome of one optimization run. best_value is the minimum over all
/// visited iterates including x0.
struct RunResult {
  double best_value = 0.0;
  int best_step = 0;
  int steps_taken = 0;
  bool diverged = false;
  std::vector<double> trace;  // best-so-far per step, when recorded
};

namespace detail {

inline TangentSet sample_step_tangents(const TangentSettings& ts, Eigen::Index n,
                                       std::uint64_t step_seed, Estimator estimator) {
  const Eigen::Index k = estimator == Estimator::single ? 1 : ts.k;
  switch (ts.sampler) {
    case Sampler::gaussian: return sample_gaussian(n, k, step_seed);
    case Sampler::normalized: return normalize_paper(sample_gaussian(n, k, step_seed));
    case Sampler::rademacher: return sample_rademacher(n, k, step_seed);
    case Sampler::basis: return standard_basis(n, k, step_seed);
    case Sampler::cone: return sample_cone(n, k, ts.alpha_deg, step_seed);
  }
  raise(errc::bad_config, "unhandled sampler");
}

}  // namespace detail

/// One gradient estimate at x for the configured estimator; forward-gradient
/// estimators run a real JVP sweep over the objective.
inline Eigen::VectorXd estimate_gradient(const Objective& obj, const Eigen::VectorXd& x,
                                         const GdConfig& cfg, std::uint64_t step_seed) {
  if (cfg.estimator == Estimator::exact) return obj.gradient(x);
  const TangentSet v = detail::sample_step_tangents(cfg.tangents, obj.n, step_seed, cfg.estimator);
  const Jvp jvp = propagate([&](std::span<const MultiDual> xs) { return obj.eval_dual(xs); },
                            lift(x, v));
  switch (cfg.estimator) {
    case Estimator::single: return single(v.matrix.col(0), jvp.derivs(0)).g;
    case Estimator::sum: return combine_sum(v, jvp.derivs).g;
    case Estimator::mean: return combine_mean(v, jvp.derivs).g;
    case Estimator::projection: return combine_projection(v, jvp.derivs, cfg.rank_tolerance).g;
    case Estimator::exact: break;
  }
  raise(errc::bad_config, "unhandled estimator");
}

/// Gradient descent with early stopping after `patience` steps without
/// improvement. A non-finite objective value or a failed estimate ends the
/// run as diverged; the best finite value seen is kept.
inline RunResult gd_optimize(const Objective& obj, const GdConfig& cfg) {
  require(cfg.lr > 0.0, errc::bad_config, "learning rate must be positive");
  require(cfg.max_steps >= 1, errc::bad_config, "max_steps must be at least 1");
  require(cfg.patience >= 1 && cfg.patience <= cfg.max_steps, errc::bad_config,
          "patience must lie in [1, max_steps]");

  Eigen::VectorXd x = obj.x0;
  RunResult result;
  result.best_value = obj.value(x);
  result.best_step = 0;
  int last_improvement = 0;

  for (int step = 1; step <= cfg.max_steps; ++step) {
    Eigen::VectorXd g;
    try {
      g = estimate_gradient(obj, x, cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(step)));
    } catch (const Error& e) {
      if (e.code() == errc::non_finite || e.code() == errc::rank_deficient) {
        result.diverged = true;
        break;
      }
      throw;
    }
    x -= cfg.lr * g;
    result.steps_taken = step;

    const double f = obj.value(x);
    if (!std::isfinite(f)) {
      result.diverged = true;
      break;
    }
    if (f < result.best_value) {
      result.best_value = f;
      result.best_step = step;
      last_improvement = step;
    }
    if (cfg.record_trace) result.trace.push_back(result.best_value);
    if (step - last_improvement >= cfg.patience) break;
  }
  return result;
}

/// Result of a learning-rate search: the winning rate and every evaluated
/// (lr, best value) pair.
struct LrSearchResult {
  double best_lr = 0.0;
  double best_value = 0.0;
  std::vector<std::pair<double, double>> evaluated;
};

/// Log-uniform random search over [lo, hi]. Each candidate runs a short
/// optimization from the prototype config (same run seed for every
/// candidate, so rates are compared on common tangent draws). Candidates
/// whose best values tie within 1e-9 relative are broken toward the one
/// closest to the geometric mean of the tied rates.
inline LrSearchResult lr_search(const Objective& obj, GdConfig proto, int budget, double lo,
                                double hi, std::uint64_t seed) {
  require(budget >= 1, errc::bad_config, "lr search budget must be at least 1");
  require(lo > 0.0 && hi >= lo, errc::bad_config, "lr search range must satisfy 0 < lo <= hi");

  Xoshiro256pp rng(derive_seed(seed, 0));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);

  LrSearchResult result;
  result.evaluated.reserve(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) {
    const double lr = std::exp(log_lo + rng.uniform01() * (log_hi - log_lo));
    GdConfig cfg = proto;
    cfg.lr = lr;
    cfg.patience = std::min(100, cfg.max_steps);
    const RunResult run = gd_optimize(obj, cfg);
    result.evaluated.push_back({lr, run.best_value});
  }

  double best_value = result.evaluated.front().second;
  for (const auto& [lr, value] : result.evaluated) best_value = std::min(best_value, value);

  std::vector<double> tied;
  for (const auto& [lr, value] : result.evaluated)
    if (value <= best_value + 1e-9 * std::max(1.0, std::abs(best_value))) tied.push_back(lr);

  double log_mean = 0.0;
  for (const double lr : tied) log_mean += std::log(lr);
  log_mean /= static_cast<double>(tied.size());

  double best_lr = tied.front();
  for (const double lr : tied)
    if (std::abs(std::log(lr) - log_mean) < std::abs(std::log(best_lr) - log_mean)) best_lr = lr;

  result.best_lr = best_lr;
  result.best_value = best_value;
  return result;
}

}  // namespace frog
