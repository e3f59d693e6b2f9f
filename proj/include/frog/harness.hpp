#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "frog/adcore.hpp"
#include "frog/bench.hpp"
#include "frog/csv.hpp"
#include "frog/data.hpp"
#include "frog/detail/pool.hpp"
#include "frog/errors.hpp"
#include "frog/fgrad.hpp"
#include "frog/nn.hpp"
#include "frog/presets.hpp"
#include "frog/tangent.hpp"

namespace frog {

// ---------------------------------------------------------------------------
// approx: approximation quality of the estimator variants against a fixed
// gradient (1, ..., 1), swept over (k, variant, seed).
// ---------------------------------------------------------------------------

struct ApproxConfig {
  Eigen::Index n = 64;
  std::vector<Eigen::Index> ks = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  int seeds = 1000;
  std::vector<Variant> variants = all_variants();
  std::uint64_t base_seed = 0;
  double rank_tolerance = kDefaultRankTolerance;
  int jobs = 0;  // 0 = all cores
};

struct ApproxOutput {
  std::vector<QualityRecord> records;
  std::vector<QualityStats> stats;
};

inline ApproxOutput run_approx(const ApproxConfig& cfg) {
  require(cfg.n >= 1, errc::bad_config, "approx: n must be positive");
  require(cfg.seeds >= 1, errc::bad_config, "approx: need at least one seed");
  require(!cfg.ks.empty() && !cfg.variants.empty(), errc::bad_config,
          "approx: k list and variant list must be non-empty");

  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(cfg.n);
  const std::size_t per_seed = cfg.ks.size() * cfg.variants.size();

  ApproxOutput out;
  out.records.resize(static_cast<std::size_t>(cfg.seeds) * per_seed);
  detail::parallel_for(static_cast<std::size_t>(cfg.seeds), cfg.jobs, [&](std::size_t s) {
    const std::uint64_t tangent_seed = derive_seed(cfg.base_seed, s);
    std::size_t slot = s * per_seed;
    for (const Eigen::Index k : cfg.ks) {
      const TangentSet v = sample_gaussian(cfg.n, k, tangent_seed);
      for (const Variant variant : cfg.variants) {
        const CombinedGradient cg = combine_variant(variant, v, grad, cfg.rank_tolerance);
        QualityRecord& rec = out.records[slot++];
        rec.n = cfg.n;
        rec.k = k;
        rec.variant = variant;
        rec.seed = s;
        rec.cosine = cosine_similarity(cg.g, grad);
        rec.norm_ratio = norm_ratio(cg.g, grad);
      }
    }
  });
  out.stats = summarize_quality(out.records);
  return out;
}

inline void write_approx_csv(const std::string& path, const ApproxOutput& out) {
  CsvWriter csv(path);
  csv.header({"experiment", "n", "k", "combiner", "seed", "cosine", "norm_ratio"});
  for (const auto& rec : out.records)
    csv.row({"approx", std::to_string(rec.n), std::to_string(rec.k), variant_name(rec.variant),
             std::to_string(rec.seed), csv_double(rec.cosine), csv_double(rec.norm_ratio)});
  csv.flush();
}

inline void print_quality_stats(std::ostream& os, const std::vector<QualityStats>& stats) {
  os << "    k     combiner        mean_cos    se_cos      mean_ratio  se_ratio\n";
  for (const auto& s : stats) {
    char line[160];
    std::snprintf(line, sizeof(line), "%5td  %-12s  %10.5f  %10.5f  %10.4f  %10.4f\n",
                  static_cast<std::ptrdiff_t>(s.k), variant_name(s.variant), s.mean_cosine,
                  s.se_cosine, s.mean_norm_ratio, s.se_norm_ratio);
    os << line;
  }
}

// ---------------------------------------------------------------------------
// optimize: the closed-form benchmark sweep.
// ---------------------------------------------------------------------------

struct OptimizeConfig {
  std::vector<ObjectiveKind> objectives = {ObjectiveKind::sphere, ObjectiveKind::rosenbrock,
                                           ObjectiveKind::styblinski_tang};
  std::vector<Eigen::Index> ns = {16, 64, 256};
  std::vector<Estimator> estimators = {Estimator::exact, Estimator::single, Estimator::mean,
                                       Estimator::projection};
  std::vector<Eigen::Index> ks = {2, 4, 16};  // multi-tangent estimators only
  int seeds = 5;
  std::optional<double> lr_override;
  int max_steps = 0;  // 0 = per-objective default (25000 rosenbrock, 1000 otherwise)
  int patience = 50;
  Sampler sampler = Sampler::gaussian;
  double alpha_deg = 90.0;
  double rank_tolerance = kDefaultRankTolerance;
  int jobs = 0;
};

struct OptimizeRow {
  ObjectiveKind objective = ObjectiveKind::sphere;
  Eigen::Index n = 0;
  Estimator estimator = Estimator::exact;
  Eigen::Index k = 0;  // 0 for exact
  double lr = 0.0;
  std::uint64_t seed = 0;
  RunResult result;
  bool error = false;
  std::string error_message;
};

inline int default_max_steps(ObjectiveKind kind) {
  return kind == ObjectiveKind::rosenbrock ? 25000 : 1000;
}

inline std::vector<OptimizeRow> run_optimize(const OptimizeConfig& cfg) {
  require(cfg.seeds >= 1, errc::bad_config, "optimize: need at least one seed");

  std::vector<OptimizeRow> rows;
  for (const ObjectiveKind objective : cfg.objectives) {
    for (const Eigen::Index n : cfg.ns) {
      if (objective == ObjectiveKind::rosenbrock && n < 2) continue;
      for (const Estimator estimator : cfg.estimators) {
        std::vector<Eigen::Index> ks;
        if (estimator == Estimator::exact)
          ks = {0};
        else if (estimator == Estimator::single)
          ks = {1};
        else
          ks = cfg.ks;
        for (const Eigen::Index k : ks) {
          double lr;
          if (cfg.lr_override)
            lr = *cfg.lr_override;
          else
            lr = math_lr(objective, estimator, static_cast<int>(k), static_cast<int>(n));
          for (int seed = 0; seed < cfg.seeds; ++seed) {
            OptimizeRow row;
            row.objective = objective;
            row.n = n;
            row.estimator = estimator;
            row.k = k;
            row.lr = lr;
            row.seed = static_cast<std::uint64_t>(seed);
            rows.push_back(row);
          }
        }
      }
    }
  }

  detail::parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    OptimizeRow& row = rows[i];
    try {
      const Objective obj = make_objective(row.objective, row.n);
      GdConfig gd;
      gd.lr = row.lr;
      gd.max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(row.objective);
      gd.patience = cfg.patience;
      gd.estimator = row.estimator;
      gd.tangents.sampler = cfg.sampler;
      gd.tangents.k = std::max<Eigen::Index>(row.k, 1);
      gd.tangents.alpha_deg = cfg.alpha_deg;
      gd.seed = row.seed;
      gd.rank_tolerance = cfg.rank_tolerance;
      row.result = gd_optimize(obj, gd);
    } catch (const Error& e) {
      row.error = true;
      row.error_message = e.what();
    }
  });
  return rows;
}

inline void write_optimize_csv(const std::string& path, const std::vector<OptimizeRow>& rows) {
  CsvWriter csv(path);
  csv.header({"experiment", "function", "n", "estimator", "k", "lr", "seed", "best_value",
              "best_step", "steps_taken", "diverged", "error"});
  for (const auto& row : rows)
    csv.row({"optimize", objective_name(row.objective), std::to_string(row.n),
             estimator_name(row.estimator), std::to_string(row.k), csv_double(row.lr),
             std::to_string(row.seed), csv_double(row.result.best_value),
             std::to_string(row.result.best_step), std::to_string(row.result.steps_taken),
             csv_bool(row.result.diverged), row.error ? row.error_message : std::string()});
  csv.flush();
}

// ---------------------------------------------------------------------------
// cone: fixed-angle tangents; cosine statistics plus Styblinski-Tang runs.
// ---------------------------------------------------------------------------

struct ConeConfig {
  Eigen::Index n = 64;
  Eigen::Index k = 16;
  std::vector<double> alphas = {15, 30, 45, 60, 75, 90};
  int cosine_seeds = 1000;
  int opt_seeds = 5;
  std::optional<double> lr_override;
  int max_steps = 1000;
  int patience = 50;
  std::uint64_t base_seed = 0;
  double rank_tolerance = kDefaultRankTolerance;
  int jobs = 0;
};

struct ConeCosineRow {
  double alpha_deg = 0.0;
  Variant variant = Variant::mean;
  std::uint64_t seed = 0;
  double cosine = 0.0;
  double norm_ratio = 0.0;
};

struct ConeOptRow {
  double alpha_deg = 0.0;
  Estimator estimator = Estimator::mean;
  Eigen::Index k = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  RunResult result;
  bool error = false;
  std::string error_message;
};

struct ConeOutput {
  std::vector<ConeCosineRow> cosine_rows;
  std::vector<ConeOptRow> opt_rows;
};

inline ConeOutput run_cone(const ConeConfig& cfg) {
  for (const double a : cfg.alphas)
    require(a > 0.0 && a < 180.0, errc::bad_config, "cone: angles must lie in (0, 180)");
  require(cfg.k >= 2, errc::bad_config, "cone: k must be at least 2");

  ConeOutput out;
  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(cfg.n);
  const std::vector<Variant> variants{Variant::mean, Variant::projection};

  // Resolve every learning rate up front so a missing preset fails the
  // config check before any sweep starts.
  for (const double alpha : cfg.alphas) {
    for (const Estimator estimator : {Estimator::mean, Estimator::projection}) {
      double lr;
      if (cfg.lr_override)
        lr = *cfg.lr_override;
      else if (estimator == Estimator::mean)
        lr = cone_lr(static_cast<int>(cfg.k), alpha);
      else
        lr = math_lr(ObjectiveKind::styblinski_tang, estimator, static_cast<int>(cfg.k),
                     static_cast<int>(cfg.n));
      for (int seed = 0; seed < cfg.opt_seeds; ++seed) {
        ConeOptRow row;
        row.alpha_deg = alpha;
        row.estimator = estimator;
        row.k = cfg.k;
        row.lr = lr;
        row.seed = static_cast<std::uint64_t>(seed);
        out.opt_rows.push_back(row);
      }
    }
  }

  // Cosine statistics, swept over (seed, alpha, variant).
  out.cosine_rows.resize(static_cast<std::size_t>(cfg.cosine_seeds) * cfg.alphas.size() *
                         variants.size());
  detail::parallel_for(static_cast<std::size_t>(cfg.cosine_seeds), cfg.jobs, [&](std::size_t s) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, s);
    std::size_t slot = s * cfg.alphas.size() * variants.size();
    for (const double alpha : cfg.alphas) {
      const TangentSet v = sample_cone(cfg.n, cfg.k, alpha, seed);
      for (const Variant variant : variants) {
        const CombinedGradient cg = combine_variant(variant, v, grad, cfg.rank_tolerance);
        ConeCosineRow& row = out.cosine_rows[slot++];
        row.alpha_deg = alpha;
        row.variant = variant;
        row.seed = s;
        row.cosine = cosine_similarity(cg.g, grad);
        row.norm_ratio = norm_ratio(cg.g, grad);
      }
    }
  });

  // Styblinski-Tang n=cfg.n with cone tangents. Mean uses the published
  // per-angle rates; projection reuses the Gaussian-tangent preset for the
  // same (k, n) since its behaviour is angle-independent.
  detail::parallel_for(out.opt_rows.size(), cfg.jobs, [&](std::size_t i) {
    ConeOptRow& row = out.opt_rows[i];
    try {
      const Objective obj = make_objective(ObjectiveKind::styblinski_tang, cfg.n);
      GdConfig gd;
      gd.lr = row.lr;
      gd.max_steps = cfg.max_steps;
      gd.patience = cfg.patience;
      gd.estimator = row.estimator;
      gd.tangents.sampler = Sampler::cone;
      gd.tangents.k = cfg.k;
      gd.tangents.alpha_deg = row.alpha_deg;
      gd.seed = row.seed;
      gd.rank_tolerance = cfg.rank_tolerance;
      row.result = gd_optimize(obj, gd);
    } catch (const Error& e) {
      row.error = true;
      row.error_message = e.what();
    }
  });
  return out;
}

/// Cone output goes to two files: <stem>_cosine.csv and <stem>_opt.csv,
/// where stem is the output path without its .csv suffix.
inline std::pair<std::string, std::string> cone_csv_paths(const std::string& out_path) {
  std::string stem = out_path;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv")
    stem = stem.substr(0, stem.size() - 4);
  return {stem + "_cosine.csv", stem + "_opt.csv"};
}

inline void write_cone_csv(const std::string& out_path, const ConeOutput& out, Eigen::Index n,
                           Eigen::Index k) {
  const auto [cosine_path, opt_path] = cone_csv_paths(out_path);
  {
    CsvWriter csv(cosine_path);
    csv.header({"experiment", "n", "k", "alpha_deg", "combiner", "seed", "cosine", "norm_ratio"});
    for (const auto& row : out.cosine_rows)
      csv.row({"cone_cosine", std::to_string(n), std::to_string(k), csv_double(row.alpha_deg),
               variant_name(row.variant), std::to_string(row.seed), csv_double(row.cosine),
               csv_double(row.norm_ratio)});
    csv.flush();
  }
  {
    CsvWriter csv(opt_path);
    csv.header({"experiment", "function", "n", "alpha_deg", "estimator", "k", "lr", "seed",
                "best_value", "best_step", "steps_taken", "diverged", "error"});
    for (const auto& row : out.opt_rows)
      csv.row({"cone_opt", "styblinski_tang", std::to_string(n), csv_double(row.alpha_deg),
               estimator_name(row.estimator), std::to_string(row.k), csv_double(row.lr),
               std::to_string(row.seed), csv_double(row.result.best_value),
               std::to_string(row.result.best_step), std::to_string(row.result.steps_taken),
               csv_bool(row.result.diverged), row.error ? row.error_message : std::string()});
    csv.flush();
  }
}

// ---------------------------------------------------------------------------
// train: fully-connected network on an MNIST-style dataset.
// ---------------------------------------------------------------------------

struct TrainSpec {
  Estimator estimator = Estimator::exact;
  Eigen::Index k = 1;
  std::optional<double> lr;  // preset when absent
};

struct HarnessTrainConfig {
  std::string data_dir = "data/mnist";
  Eigen::Index n_train = 2000;
  Eigen::Index n_val = 1000;
  Eigen::Index n_test = 1000;
  int width = 256;
  int epochs = 20;
  int batch_size = 64;
  int patience = 10;
  std::vector<TrainSpec> specs = {{Estimator::exact, 1, std::nullopt},
                                  {Estimator::single, 1, std::nullopt},
                                  {Estimator::projection, 16, std::nullopt}};
  int seeds = 3;
  FgMode mode = FgMode::simulation;
  double rank_tolerance = kDefaultRankTolerance;
  int jobs = 0;
};

struct TrainRow {
  Estimator estimator = Estimator::exact;
  Eigen::Index k = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  FgMode mode = FgMode::simulation;
  TrainResult result;
  bool error = false;
  std::string error_message;
};

namespace detail {
inline constexpr std::uint64_t kInitSalt = 0x494e4954ULL;  // "INIT"
}

inline std::vector<TrainRow> run_train(const HarnessTrainConfig& cfg) {
  require(cfg.seeds >= 1, errc::bad_config, "train: need at least one seed");
  const Dataset data = load_mnist_split(cfg.data_dir, cfg.n_train, cfg.n_val, cfg.n_test);

  std::vector<TrainRow> rows;
  for (const TrainSpec& spec : cfg.specs) {
    const double lr = spec.lr ? *spec.lr
                              : nn_lr(cfg.width, spec.estimator, static_cast<int>(spec.k));
    for (int seed = 0; seed < cfg.seeds; ++seed) {
      TrainRow row;
      row.estimator = spec.estimator;
      row.k = spec.estimator == Estimator::exact ? 0
              : spec.estimator == Estimator::single ? 1
                                                    : spec.k;
      row.lr = lr;
      row.seed = static_cast<std::uint64_t>(seed);
      row.mode = cfg.mode;
      rows.push_back(row);
    }
  }

  detail::parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    TrainRow& row = rows[i];
    try {
      // The same seed index gives the same initial weights for every
      // estimator, so estimators are compared from identical starts.
      Mlp net = Mlp::kaiming_init({data.input_dim, cfg.width, cfg.width, 10},
                                  derive_seed(detail::kInitSalt, row.seed));
      TrainConfig tc;
      tc.batch_size = cfg.batch_size;
      tc.epochs = cfg.epochs;
      tc.patience = cfg.patience;
      tc.lr = row.lr;
      tc.estimator = row.estimator;
      tc.k = row.k == 0 ? 1 : row.k;
      tc.mode = cfg.mode;
      tc.seed = row.seed;
      tc.rank_tolerance = cfg.rank_tolerance;
      row.result = train(net, data, tc);
    } catch (const Error& e) {
      row.error = true;
      row.error_message = e.what();
    }
  });
  return rows;
}

inline void write_train_csv(const std::string& path, const std::vector<TrainRow>& rows) {
  CsvWriter csv(path);
  csv.header({"experiment", "estimator", "k", "lr", "mode", "seed", "epoch", "train_loss",
              "val_loss", "test_loss", "test_error_pct", "diverged", "error"});
  for (const auto& row : rows) {
    if (row.error) {
      csv.row({"train", estimator_name(row.estimator), std::to_string(row.k), csv_double(row.lr),
               fg_mode_name(row.mode), std::to_string(row.seed), "-1", "nan", "nan", "nan", "nan",
               "true", row.error_message});
      continue;
    }
    for (const auto& rec : row.result.history)
      csv.row({"train", estimator_name(row.estimator), std::to_string(row.k), csv_double(row.lr),
               fg_mode_name(row.mode), std::to_string(row.seed), std::to_string(rec.epoch),
               csv_double(rec.train_loss), csv_double(rec.val_loss), csv_double(rec.test_loss),
               csv_double(rec.test_error_pct), csv_bool(row.result.diverged), ""});
  }
  csv.flush();
}

// ---------------------------------------------------------------------------
// lr-search: simplified log-uniform random search.
// ---------------------------------------------------------------------------

struct LrSearchConfig {
  ObjectiveKind objective = ObjectiveKind::sphere;
  Eigen::Index n = 16;
  Estimator estimator = Estimator::exact;
  Eigen::Index k = 1;
  int budget = 200;
  double lo = 1e-6;
  double hi = 1.0;
  int max_steps = 0;  // 0 = per-objective default
  std::uint64_t seed = 0;
  Sampler sampler = Sampler::gaussian;
  double alpha_deg = 90.0;
  double rank_tolerance = kDefaultRankTolerance;
};

inline LrSearchResult run_lr_search(const LrSearchConfig& cfg) {
  const Objective obj = make_objective(cfg.objective, cfg.n);
  GdConfig proto;
  proto.max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(cfg.objective);
  proto.estimator = cfg.estimator;
  proto.tangents.sampler = cfg.sampler;
  proto.tangents.k = cfg.k;
  proto.tangents.alpha_deg = cfg.alpha_deg;
  proto.seed = cfg.seed;
  proto.rank_tolerance = cfg.rank_tolerance;
  return lr_search(obj, proto, cfg.budget, cfg.lo, cfg.hi, cfg.seed);
}

inline void write_lr_search_csv(const std::string& path, const LrSearchConfig& cfg,
                                const LrSearchResult& result) {
  CsvWriter csv(path);
  csv.header({"experiment", "function", "n", "estimator", "k", "budget", "seed", "lr",
              "best_value", "selected"});
  for (const auto& [lr, value] : result.evaluated)
    csv.row({"lr_search", objective_name(cfg.objective), std::to_string(cfg.n),
             estimator_name(cfg.estimator), std::to_string(cfg.k), std::to_string(cfg.budget),
             std::to_string(cfg.seed), csv_double(lr), csv_double(value),
             csv_bool(lr == result.best_lr)});
  csv.flush();
}

// ---------------------------------------------------------------------------
// check: bundled oracle suites with measured values and tolerances.
// ---------------------------------------------------------------------------

struct CheckConfig {
  int jobs = 0;
  // Test hook: added to every JVP directional derivative inside the
  // jvp-vs-finite-differences suite. A nonzero value simulates a broken
  // tangent rule and must make that suite fail.
  double jvp_fault = 0.0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

inline std::vector<CheckResult> run_check(const CheckConfig& cfg = {}) {
  std::vector<CheckResult> results;
  const auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  };

  // JVP against central finite differences over every supported primitive.
  {
    struct Case {
      const char* name;
      MultiDual (*dual_fn)(std::span<const MultiDual>);
      double (*plain_fn)(const Eigen::VectorXd&);
      int arity;
    };
    static const std::vector<Case> cases{
        {"add", [](std::span<const MultiDual> x) { return x[0] + x[1]; },
         [](const Eigen::VectorXd& x) { return x(0) + x(1); }, 2},
        {"sub", [](std::span<const MultiDual> x) { return x[0] - x[1]; },
         [](const Eigen::VectorXd& x) { return x(0) - x(1); }, 2},
        {"mul", [](std::span<const MultiDual> x) { return x[0] * x[1]; },
         [](const Eigen::VectorXd& x) { return x(0) * x(1); }, 2},
        {"div", [](std::span<const MultiDual> x) { return x[0] / (x[1] * x[1] + 1.0); },
         [](const Eigen::VectorXd& x) { return x(0) / (x(1) * x(1) + 1.0); }, 2},
        {"pow", [](std::span<const MultiDual> x) { return pow(x[0] * x[0] + 0.5, 2.5); },
         [](const Eigen::VectorXd& x) { return std::pow(x(0) * x(0) + 0.5, 2.5); }, 1},
        {"exp", [](std::span<const MultiDual> x) { return exp(x[0]); },
         [](const Eigen::VectorXd& x) { return std::exp(x(0)); }, 1},
        {"log", [](std::span<const MultiDual> x) { return log(x[0] * x[0] + 0.5); },
         [](const Eigen::VectorXd& x) { return std::log(x(0) * x(0) + 0.5); }, 1},
        {"relu", [](std::span<const MultiDual> x) { return relu(x[0] + 0.3); },
         [](const Eigen::VectorXd& x) { return std::max(x(0) + 0.3, 0.0); }, 1},
        {"dot",
         [](std::span<const MultiDual> x) { return dot(x.subspan(0, 3), x.subspan(3, 3)); },
         [](const Eigen::VectorXd& x) { return x.head(3).dot(x.tail(3)); }, 6},
        {"sum", [](std::span<const MultiDual> x) { return sum(x); },
         [](const Eigen::VectorXd& x) { return x.sum(); }, 5},
    };
    bool pass = true;
    double worst = 0.0;
    std::string worst_name;
    Xoshiro256pp rng(7);
    for (const auto& c : cases) {
      for (int trial = 0; trial < 30; ++trial) {
        Eigen::VectorXd theta(c.arity), v(c.arity);
        for (int i = 0; i < c.arity; ++i) {
          theta(i) = 2.0 * rng.uniform01() - 1.0;
          v(i) = rng.gaussian();
        }
        const Jvp jvp = propagate(c.dual_fn, lift(theta, Eigen::MatrixXd(v)));
        const double ad = jvp.derivs(0) + cfg.jvp_fault;
        const double fd = fd_directional(c.plain_fn, theta, v, 1e-5);
        const double err = std::abs(ad - fd) / std::max(1.0, std::abs(fd));
        if (err > worst) {
          worst = err;
          worst_name = c.name;
        }
        if (err > 1e-6) pass = false;
      }
    }
    std::ostringstream detail;
    detail << "worst relative error " << worst << " (" << worst_name << "), tolerance 1e-6";
    report("jvp_vs_finite_differences", pass, detail.str());
  }

  // Full-basis seeding recovers the analytic gradients of the benchmarks.
  {
    bool pass = true;
    double worst = 0.0;
    for (const ObjectiveKind kind :
         {ObjectiveKind::sphere, ObjectiveKind::rosenbrock, ObjectiveKind::styblinski_tang}) {
      const Objective obj = make_objective(kind, 6);
      Xoshiro256pp rng(11);
      for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd x(6);
        for (int i = 0; i < 6; ++i) x(i) = 3.0 * (2.0 * rng.uniform01() - 1.0);
        const Jvp jvp = propagate([&](std::span<const MultiDual> xs) { return obj.eval_dual(xs); },
                                  lift(x, Eigen::MatrixXd(Eigen::MatrixXd::Identity(6, 6))));
        const Eigen::VectorXd analytic = obj.gradient(x);
        for (int i = 0; i < 6; ++i) {
          const double err =
              std::abs(jvp.derivs(i) - analytic(i)) / std::max(1.0, std::abs(analytic(i)));
          worst = std::max(worst, err);
          if (err > 1e-10) pass = false;
        }
      }
    }
    std::ostringstream detail;
    detail << "worst relative error " << worst << ", tolerance 1e-10";
    report("full_basis_recovers_gradient", pass, detail.str());
  }

  // Backprop against finite differences on a small network.
  {
    const std::vector<int> widths{2, 4, 4, 2};
    Mlp net = Mlp::kaiming_init(widths, 3);
    Eigen::MatrixXd x(3, 2);
    x << 0.2, -1.1, 0.7, 0.4, -0.3, 0.9;
    const std::vector<int> y{0, 1, 0};
    const ForwardPass fwd = forward(net, x, y);
    const Gradients grads = backprop(net, x, y, fwd);

    bool pass = true;
    double worst = 0.0;
    const double h = 1e-6;
    for (int l = 0; l < net.depth(); ++l) {
      for (Eigen::Index r = 0; r < net.weights[static_cast<std::size_t>(l)].rows(); ++r)
        for (Eigen::Index c = 0; c < net.weights[static_cast<std::size_t>(l)].cols(); ++c) {
          Mlp probe = net;
          probe.weights[static_cast<std::size_t>(l)](r, c) += h;
          const double fp = forward(probe, x, y).loss;
          probe.weights[static_cast<std::size_t>(l)](r, c) -= 2.0 * h;
          const double fm = forward(probe, x, y).loss;
          const double fd = (fp - fm) / (2.0 * h);
          const double err =
              std::abs(grads.w[l](r, c) - fd) / std::max(1.0, std::abs(fd));
          worst = std::max(worst, err);
          if (err > 1e-5) pass = false;
        }
    }
    std::ostringstream detail;
    detail << "worst relative error " << worst << ", tolerance 1e-5";
    report("backprop_vs_finite_differences", pass, detail.str());
  }

  // Simulation and JVP modes agree on the directional derivatives.
  {
    const std::vector<int> widths{2, 4, 4, 2};
    Mlp net = Mlp::kaiming_init(widths, 5);
    Eigen::MatrixXd x(4, 2);
    x << 0.5, -0.2, 1.2, 0.3, -0.7, -1.0, 0.1, 0.8;
    const std::vector<int> y{1, 0, 1, 1};
    const auto sim = activity_forward_gradient(net, x, y, 3, Combiner::mean, 17,
                                               FgMode::simulation);
    const auto jvp = activity_forward_gradient(net, x, y, 3, Combiner::mean, 17, FgMode::jvp);
    double worst = 0.0;
    for (int l = 0; l < net.depth(); ++l)
      worst = std::max(worst, (sim.derivs[l] - jvp.derivs[l]).cwiseAbs().maxCoeff());
    const bool pass = worst <= 1e-8;
    std::ostringstream detail;
    detail << "max |d_sim - d_jvp| = " << worst << ", tolerance 1e-8";
    report("simulation_equals_jvp", pass, detail.str());
  }

  // Projection exactness for k = n.
  {
    bool pass = true;
    double worst = 0.0;
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(32);
    for (int s = 0; s < 20; ++s) {
      const TangentSet v = sample_gaussian(32, 32, derive_seed(23, static_cast<std::uint64_t>(s)));
      const CombinedGradient cg = combine_variant(Variant::projection, v, grad);
      worst = std::max(worst, 1.0 - cosine_similarity(cg.g, grad));
      worst = std::max(worst, std::abs(norm_ratio(cg.g, grad) - 1.0));
    }
    if (worst > 1e-6) pass = false;
    std::ostringstream detail;
    detail << "worst deviation " << worst << ", tolerance 1e-6";
    report("projection_exact_at_k_equals_n", pass, detail.str());
  }

  // Statistical expectations for the single-tangent estimator at n=64.
  {
    ApproxConfig ac;
    ac.n = 64;
    ac.ks = {1};
    ac.seeds = 1000;
    ac.variants = {Variant::single};
    ac.jobs = cfg.jobs;
    const ApproxOutput out = run_approx(ac);
    const QualityStats& qs = out.stats.front();
    const bool cos_ok = std::abs(qs.mean_cosine - 0.0997) <= 0.010;
    const bool ratio_ok = std::abs(qs.mean_norm_ratio - 6.383) <= 0.05 * 6.383;
    {
      std::ostringstream detail;
      detail << "measured mean cosine " << qs.mean_cosine << ", target 0.0997 +- 0.010";
      report("cosine_expectation_n64", cos_ok, detail.str());
    }
    {
      std::ostringstream detail;
      detail << "measured mean norm ratio " << qs.mean_norm_ratio << ", target 6.383 +- 5%";
      report("norm_ratio_expectation_n64", ratio_ok, detail.str());
    }
  }

  // Cone tangents at 90 degrees behave like unrotated Gaussian tangents.
  {
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(64);
    double cone_mean = 0.0, gauss_mean = 0.0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
      const std::uint64_t seed = derive_seed(31, static_cast<std::uint64_t>(s));
      const TangentSet cone = sample_cone(64, 16, 90.0, seed);
      const TangentSet gauss = sample_gaussian(64, 16, seed);
      cone_mean += cosine_similarity(combine_variant(Variant::mean, cone, grad).g, grad);
      gauss_mean += cosine_similarity(combine_variant(Variant::mean, gauss, grad).g, grad);
    }
    cone_mean /= seeds;
    gauss_mean /= seeds;
    const bool pass = std::abs(cone_mean - gauss_mean) < 0.01;
    std::ostringstream detail;
    detail << "mean cosine cone@90 " << cone_mean << " vs gaussian " << gauss_mean
           << ", tolerance 0.01";
    report("cone90_matches_gaussian", pass, detail.str());
  }

  return results;
}

inline bool print_check_report(std::ostream& os, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  os << (all ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
  return all;
}

}  // namespace frog
