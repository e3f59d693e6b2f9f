// frogbench: experiment CLI around the frog library. One subcommand per
// experiment family; JSON config files with flag overrides (flags win).
// Exit codes: 0 success, 1 run errors, 2 config errors.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frog/frog.hpp"

namespace {

using nlohmann::json;

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  frog::require(in.is_open(), frog::errc::bad_config, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    frog::raise(frog::errc::bad_config, "config parse error in " + path + ": " + e.what());
  }
  return j;
}

std::vector<frog::Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<frog::Variant> out;
  for (const auto& name : names) out.push_back(frog::variant_from_string(name));
  return out;
}

std::vector<frog::Estimator> parse_estimators(const std::vector<std::string>& names) {
  std::vector<frog::Estimator> out;
  for (const auto& name : names) out.push_back(frog::estimator_from_string(name));
  return out;
}

std::vector<frog::ObjectiveKind> parse_objectives(const std::vector<std::string>& names) {
  std::vector<frog::ObjectiveKind> out;
  for (const auto& name : names) out.push_back(frog::objective_from_string(name));
  return out;
}

template <class T>
void from_json_list(const json& j, const char* key, std::vector<T>& out) {
  if (j.contains(key)) out = j.at(key).get<std::vector<T>>();
}

int main_impl(int argc, char** argv) {
  CLI::App app{"frogbench: multi-tangent forward gradient experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values")
      ->configurable(false);

  // Shared option storage; each subcommand binds what it uses.
  std::int64_t n = 64;
  std::vector<std::int64_t> ks{1, 2, 4, 8, 16, 32, 64, 128, 256};
  int seeds = 1000;
  std::vector<std::string> variant_names;
  std::vector<std::string> estimator_names;
  std::vector<std::string> objective_names;
  std::vector<std::int64_t> dim_list;
  std::vector<double> alphas{15, 30, 45, 60, 75, 90};
  std::uint64_t base_seed = 0;
  int jobs = 0;
  std::string out_path;
  std::string data_dir = "data/mnist";
  double lr = 0.0;
  int max_steps = 0;
  int patience = 0;
  std::string sampler_name = "gaussian";
  double alpha_deg = 90.0;
  std::int64_t k_single = 16;
  int width = 256;
  int epochs = 20;
  int batch_size = 64;
  std::string mode_name = "simulation";
  int budget = 200;
  double lo = 1e-6, hi = 1.0;
  std::string objective_name = "sphere";
  std::string estimator_name = "exact";
  std::uint64_t seed_value = 0;

  auto* approx = app.add_subcommand("approx", "approximation quality vs a fixed gradient");
  approx->add_option("--n", n, "dimension");
  approx->add_option("--k", ks, "tangent counts");
  approx->add_option("--seeds", seeds, "number of seeds");
  approx->add_option("--combiner", variant_names,
                     "variants: single sum mean sum_norm mean_norm projection");
  approx->add_option("--base-seed", base_seed, "base seed");
  approx->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  approx->add_option("--out", out_path, "output CSV path");

  auto* optimize = app.add_subcommand("optimize", "closed-form benchmark sweep");
  optimize->add_option("--function", objective_names, "objectives to run");
  optimize->add_option("--n", dim_list, "dimensions");
  optimize->add_option("--estimator", estimator_names, "estimators to run");
  optimize->add_option("--k", ks, "tangent counts for multi-tangent estimators");
  optimize->add_option("--seeds", seeds, "number of seeds");
  optimize->add_option("--lr", lr, "learning-rate override (presets otherwise)");
  optimize->add_option("--steps", max_steps, "max steps override");
  optimize->add_option("--patience", patience, "early-stop patience");
  optimize->add_option("--tangent", sampler_name, "tangent sampler");
  optimize->add_option("--alpha", alpha_deg, "cone angle in degrees");
  optimize->add_option("--jobs", jobs, "worker threads");
  optimize->add_option("--out", out_path, "output CSV path");

  int opt_seeds = 5;
  auto* cone = app.add_subcommand("cone", "fixed-angle tangent study");
  cone->add_option("--n", n, "dimension");
  cone->add_option("--k", k_single, "tangent count");
  cone->add_option("--alpha", alphas, "cone angles in degrees");
  cone->add_option("--seeds", seeds, "seeds for the cosine statistics");
  cone->add_option("--opt-seeds", opt_seeds, "seeds for the optimization runs");
  cone->add_option("--lr", lr, "learning-rate override");
  cone->add_option("--steps", max_steps, "max steps");
  cone->add_option("--jobs", jobs, "worker threads");
  cone->add_option("--out", out_path, "output CSV stem");

  auto* train = app.add_subcommand("train", "train the fully-connected network");
  train->add_option("--data-dir", data_dir, "directory with MNIST IDX files");
  train->add_option("--width", width, "hidden layer width");
  train->add_option("--epochs", epochs, "epochs");
  train->add_option("--batch", batch_size, "batch size");
  train->add_option("--patience", patience, "early-stop patience in epochs");
  train->add_option("--estimator", estimator_names, "estimators (exact single sum mean projection)");
  train->add_option("--k", ks, "tangent count per non-exact estimator");
  train->add_option("--lr", lr, "learning-rate override for every run");
  train->add_option("--seeds", seeds, "number of seeds");
  train->add_option("--mode", mode_name, "simulation or jvp");
  train->add_option("--jobs", jobs, "worker threads");
  train->add_option("--out", out_path, "output CSV path");

  auto* lrs = app.add_subcommand("lr-search", "log-uniform random learning-rate search");
  lrs->add_option("--function", objective_name, "objective");
  lrs->add_option("--n", n, "dimension");
  lrs->add_option("--estimator", estimator_name, "estimator");
  lrs->add_option("--k", k_single, "tangent count");
  lrs->add_option("--budget", budget, "number of sampled rates");
  lrs->add_option("--lo", lo, "lower bound");
  lrs->add_option("--hi", hi, "upper bound");
  lrs->add_option("--steps", max_steps, "max steps per candidate run");
  lrs->add_option("--seed", seed_value, "search seed");
  lrs->add_option("--tangent", sampler_name, "tangent sampler");
  lrs->add_option("--alpha", alpha_deg, "cone angle in degrees");
  lrs->add_option("--out", out_path, "output CSV path");

  auto* check = app.add_subcommand("check", "run the bundled oracle suites");
  check->add_option("--jobs", jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const json j = load_config_file(config_path);

  if (approx->parsed()) {
    frog::ApproxConfig cfg;
    cfg.n = j.value("n", cfg.n);
    if (j.contains("ks")) {
      std::vector<std::int64_t> v = j.at("ks").get<std::vector<std::int64_t>>();
      cfg.ks.assign(v.begin(), v.end());
    }
    cfg.seeds = j.value("seeds", cfg.seeds);
    if (j.contains("variants")) cfg.variants = parse_variants(j.at("variants"));
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    std::string out = j.value("out", std::string("approx.csv"));

    if (approx->count("--n")) cfg.n = n;
    if (approx->count("--k")) cfg.ks.assign(ks.begin(), ks.end());
    if (approx->count("--seeds")) cfg.seeds = seeds;
    if (approx->count("--combiner")) cfg.variants = parse_variants(variant_names);
    if (approx->count("--base-seed")) cfg.base_seed = base_seed;
    if (approx->count("--jobs")) cfg.jobs = jobs;
    if (approx->count("--out")) out = out_path;

    const frog::ApproxOutput result = frog::run_approx(cfg);
    frog::write_approx_csv(out, result);
    std::cout << "approx: n=" << cfg.n << ", " << cfg.seeds << " seeds -> " << out << "\n";
    frog::print_quality_stats(std::cout, result.stats);
    return 0;
  }

  if (optimize->parsed()) {
    frog::OptimizeConfig cfg;
    if (j.contains("objectives")) cfg.objectives = parse_objectives(j.at("objectives"));
    if (j.contains("ns")) {
      std::vector<std::int64_t> v = j.at("ns").get<std::vector<std::int64_t>>();
      cfg.ns.assign(v.begin(), v.end());
    }
    if (j.contains("estimators")) cfg.estimators = parse_estimators(j.at("estimators"));
    if (j.contains("ks")) {
      std::vector<std::int64_t> v = j.at("ks").get<std::vector<std::int64_t>>();
      cfg.ks.assign(v.begin(), v.end());
    }
    cfg.seeds = j.value("seeds", cfg.seeds);
    if (j.contains("lr")) cfg.lr_override = j.at("lr").get<double>();
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.patience = j.value("patience", cfg.patience);
    if (j.contains("sampler")) cfg.sampler = frog::sampler_from_string(j.at("sampler"));
    cfg.alpha_deg = j.value("alpha_deg", cfg.alpha_deg);
    cfg.jobs = j.value("jobs", cfg.jobs);
    std::string out = j.value("out", std::string("optimize.csv"));

    if (optimize->count("--function")) cfg.objectives = parse_objectives(objective_names);
    if (optimize->count("--n")) cfg.ns.assign(dim_list.begin(), dim_list.end());
    if (optimize->count("--estimator")) cfg.estimators = parse_estimators(estimator_names);
    if (optimize->count("--k")) cfg.ks.assign(ks.begin(), ks.end());
    if (optimize->count("--seeds")) cfg.seeds = seeds;
    if (optimize->count("--lr")) cfg.lr_override = lr;
    if (optimize->count("--steps")) cfg.max_steps = max_steps;
    if (optimize->count("--patience")) cfg.patience = patience;
    if (optimize->count("--tangent")) cfg.sampler = frog::sampler_from_string(sampler_name);
    if (optimize->count("--alpha")) cfg.alpha_deg = alpha_deg;
    if (optimize->count("--jobs")) cfg.jobs = jobs;
    if (optimize->count("--out")) out = out_path;

    const auto rows = frog::run_optimize(cfg);
    frog::write_optimize_csv(out, rows);
    int errors = 0;
    for (const auto& row : rows) errors += row.error ? 1 : 0;
    std::cout << "optimize: " << rows.size() << " runs -> " << out << " (" << errors
              << " errored)\n";
    std::map<std::string, std::pair<double, int>> means;
    for (const auto& row : rows) {
      if (row.error) continue;
      std::string key = std::string(frog::objective_name(row.objective)) + " n=" +
                        std::to_string(row.n) + " " + frog::estimator_name(row.estimator) +
                        " k=" + std::to_string(row.k);
      means[key].first += row.result.best_value;
      means[key].second += 1;
    }
    for (const auto& [key, acc] : means)
      std::cout << "  " << key << ": mean best " << acc.first / acc.second << "\n";
    return errors == 0 ? 0 : 1;
  }

  if (cone->parsed()) {
    frog::ConeConfig cfg;
    cfg.n = j.value("n", cfg.n);
    cfg.k = j.value("k", cfg.k);
    from_json_list(j, "alphas", cfg.alphas);
    cfg.cosine_seeds = j.value("cosine_seeds", cfg.cosine_seeds);
    cfg.opt_seeds = j.value("opt_seeds", cfg.opt_seeds);
    if (j.contains("lr")) cfg.lr_override = j.at("lr").get<double>();
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    std::string out = j.value("out", std::string("cone.csv"));

    if (cone->count("--n")) cfg.n = n;
    if (cone->count("--k")) cfg.k = k_single;
    if (cone->count("--alpha")) cfg.alphas = alphas;
    if (cone->count("--seeds")) cfg.cosine_seeds = seeds;
    if (cone->count("--opt-seeds")) cfg.opt_seeds = opt_seeds;
    if (cone->count("--lr")) cfg.lr_override = lr;
    if (cone->count("--steps")) cfg.max_steps = max_steps;
    if (cone->count("--jobs")) cfg.jobs = jobs;
    if (cone->count("--out")) out = out_path;

    const frog::ConeOutput result = frog::run_cone(cfg);
    frog::write_cone_csv(out, result, cfg.n, cfg.k);
    const auto [cosine_path, opt_path] = frog::cone_csv_paths(out);
    std::cout << "cone: -> " << cosine_path << ", " << opt_path << "\n";
    int errors = 0;
    for (const auto& row : result.opt_rows) errors += row.error ? 1 : 0;
    return errors == 0 ? 0 : 1;
  }

  if (train->parsed()) {
    frog::HarnessTrainConfig cfg;
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    cfg.n_train = j.value("n_train", cfg.n_train);
    cfg.n_val = j.value("n_val", cfg.n_val);
    cfg.n_test = j.value("n_test", cfg.n_test);
    cfg.width = j.value("width", cfg.width);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.seeds = j.value("seeds", cfg.seeds);
    if (j.contains("mode")) cfg.mode = frog::fg_mode_from_string(j.at("mode"));
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("runs")) {
      cfg.specs.clear();
      for (const auto& r : j.at("runs")) {
        frog::TrainSpec spec;
        spec.estimator = frog::estimator_from_string(r.at("estimator"));
        spec.k = r.value("k", 1);
        if (r.contains("lr")) spec.lr = r.at("lr").get<double>();
        cfg.specs.push_back(spec);
      }
    }
    std::string out = j.value("out", std::string("train.csv"));

    if (train->count("--data-dir")) cfg.data_dir = data_dir;
    if (train->count("--width")) cfg.width = width;
    if (train->count("--epochs")) cfg.epochs = epochs;
    if (train->count("--batch")) cfg.batch_size = batch_size;
    if (train->count("--patience")) cfg.patience = patience;
    if (train->count("--seeds")) cfg.seeds = seeds;
    if (train->count("--mode")) cfg.mode = frog::fg_mode_from_string(mode_name);
    if (train->count("--jobs")) cfg.jobs = jobs;
    if (train->count("--out")) out = out_path;
    if (train->count("--estimator")) {
      cfg.specs.clear();
      const auto estimators = parse_estimators(estimator_names);
      for (std::size_t i = 0; i < estimators.size(); ++i) {
        frog::TrainSpec spec;
        spec.estimator = estimators[i];
        spec.k = i < ks.size() ? ks[i] : 1;
        if (train->count("--lr")) spec.lr = lr;
        cfg.specs.push_back(spec);
      }
    }

    const auto rows = frog::run_train(cfg);
    frog::write_train_csv(out, rows);
    int errors = 0;
    for (const auto& row : rows) {
      errors += row.error ? 1 : 0;
      if (row.error) continue;
      const auto& last = row.result.history.back();
      std::cout << "  " << frog::estimator_name(row.estimator) << " k=" << row.k
                << " seed=" << row.seed << ": final test loss " << last.test_loss
                << ", best test error " << row.result.best_test_error_pct << "%"
                << (row.result.diverged ? " (diverged)" : "") << "\n";
    }
    std::cout << "train: " << rows.size() << " runs -> " << out << "\n";
    return errors == 0 ? 0 : 1;
  }

  if (lrs->parsed()) {
    frog::LrSearchConfig cfg;
    if (j.contains("objective")) cfg.objective = frog::objective_from_string(j.at("objective"));
    cfg.n = j.value("n", cfg.n);
    if (j.contains("estimator")) cfg.estimator = frog::estimator_from_string(j.at("estimator"));
    cfg.k = j.value("k", cfg.k);
    cfg.budget = j.value("budget", cfg.budget);
    cfg.lo = j.value("lo", cfg.lo);
    cfg.hi = j.value("hi", cfg.hi);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("sampler")) cfg.sampler = frog::sampler_from_string(j.at("sampler"));
    cfg.alpha_deg = j.value("alpha_deg", cfg.alpha_deg);
    std::string out = j.value("out", std::string("lr_search.csv"));

    if (lrs->count("--function")) cfg.objective = frog::objective_from_string(objective_name);
    if (lrs->count("--n")) cfg.n = n;
    if (lrs->count("--estimator")) cfg.estimator = frog::estimator_from_string(estimator_name);
    if (lrs->count("--k")) cfg.k = k_single;
    if (lrs->count("--budget")) cfg.budget = budget;
    if (lrs->count("--lo")) cfg.lo = lo;
    if (lrs->count("--hi")) cfg.hi = hi;
    if (lrs->count("--steps")) cfg.max_steps = max_steps;
    if (lrs->count("--seed")) cfg.seed = seed_value;
    if (lrs->count("--tangent")) cfg.sampler = frog::sampler_from_string(sampler_name);
    if (lrs->count("--alpha")) cfg.alpha_deg = alpha_deg;
    if (lrs->count("--out")) out = out_path;

    const frog::LrSearchResult result = frog::run_lr_search(cfg);
    frog::write_lr_search_csv(out, cfg, result);
    std::cout << "lr-search: best lr " << frog::csv_double(result.best_lr) << " (best value "
              << result.best_value << ") -> " << out << "\n";
    return 0;
  }

  if (check->parsed()) {
    frog::CheckConfig cfg;
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (check->count("--jobs")) cfg.jobs = jobs;
    const auto results = frog::run_check(cfg);
    const bool ok = frog::print_check_report(std::cout, results);
    return ok ? 0 : 1;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const frog::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == frog::errc::bad_config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
