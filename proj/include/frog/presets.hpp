#pragma once

#include <array>
#include <string>
#include <vector>

#include "frog/bench.hpp"
#include "frog/errors.hpp"
#include "frog/fgrad.hpp"

namespace frog {

// Published learning rates for the benchmark experiments, found by
// log-space search and shipped as presets. The same tables are committed
// as JSON under presets/ for use through the CLI.

inline constexpr std::array<int, 11> kLrDims{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};

struct MathLrRow {
  ObjectiveKind objective;
  Estimator estimator;
  int k;  // 0 for the exact gradient
  std::array<double, 11> by_n;
};

inline const std::vector<MathLrRow>& math_lr_table() {
  using O = ObjectiveKind;
  using E = Estimator;
  static const std::vector<MathLrRow> table{
      {O::rosenbrock, E::exact, 0,
       {8.4e-02, 2.0e-03, 1.2e-03, 1.1e-03, 1.1e-03, 1.0e-03, 1.1e-03, 1.0e-03, 1.1e-03, 1.0e-03,
        1.0e-03}},
      {O::rosenbrock, E::single, 1,
       {8.4e-02, 7.6e-04, 4.7e-04, 2.3e-04, 1.2e-04, 1.1e-04, 8.6e-05, 6.0e-05, 3.6e-05, 1.9e-05,
        5.1e-06}},
      {O::rosenbrock, E::mean, 2,
       {9.8e-02, 1.2e-03, 7.6e-04, 4.2e-04, 2.1e-04, 1.6e-04, 1.4e-04, 1.0e-04, 6.2e-05, 3.7e-05,
        1.8e-05}},
      {O::rosenbrock, E::mean, 4,
       {7.1e-02, 1.9e-03, 9.9e-04, 6.0e-04, 3.3e-04, 2.3e-04, 2.0e-04, 1.8e-04, 1.2e-04, 7.2e-05,
        2.5e-05}},
      {O::rosenbrock, E::mean, 16,
       {8.4e-02, 2.0e-03, 1.3e-03, 1.3e-03, 3.1e-04, 5.7e-04, 3.9e-04, 3.8e-04, 3.1e-04, 2.3e-04,
        1.4e-04}},
      {O::rosenbrock, E::projection, 2,
       {8.5e-02, 1.9e-03, 1.9e-03, 1.9e-03, 1.9e-03, 2.6e-03, 4.5e-03, 6.7e-03, 8.2e-03, 9.1e-03,
        9.5e-03}},
      {O::rosenbrock, E::projection, 4,
       {8.4e-02, 1.9e-03, 1.3e-03, 1.8e-03, 1.9e-03, 1.9e-03, 3.1e-03, 5.3e-03, 8.1e-03, 9.3e-03,
        9.8e-03}},
      {O::rosenbrock, E::projection, 16,
       {1.0e-01, 2.0e-03, 1.2e-03, 1.1e-03, 1.1e-03, 1.5e-03, 1.8e-03, 3.0e-03, 5.4e-03, 7.7e-03,
        8.2e-03}},

      {O::sphere, E::exact, 0,
       {1.8e-01, 3.3e-01, 2.9e-01, 3.3e-01, 2.9e-01, 2.9e-01, 2.9e-01, 3.3e-01, 2.9e-01, 3.3e-01,
        3.3e-01}},
      {O::sphere, E::single, 1,
       {2.9e-01, 1.2e-01, 8.7e-02, 5.4e-02, 3.3e-02, 1.7e-02, 8.5e-03, 3.8e-03, 2.0e-03, 1.0e-03,
        5.0e-04}},
      {O::sphere, E::mean, 2,
       {4.2e-01, 1.9e-01, 1.4e-01, 1.0e-01, 4.8e-02, 3.0e-02, 1.7e-02, 6.9e-03, 4.2e-03, 2.1e-03,
        9.4e-04}},
      {O::sphere, E::mean, 4,
       {3.3e-01, 2.8e-01, 1.9e-01, 1.5e-01, 9.1e-02, 4.7e-02, 3.5e-02, 1.7e-02, 8.1e-03, 4.2e-03,
        1.9e-03}},
      {O::sphere, E::mean, 16,
       {3.7e-01, 2.9e-01, 2.8e-01, 2.5e-01, 1.9e-01, 1.5e-01, 8.3e-02, 4.8e-02, 3.0e-02, 1.7e-02,
        7.5e-03}},
      {O::sphere, E::projection, 2,
       {3.3e-01, 3.3e-01, 3.9e-01, 4.8e-01, 4.9e-01, 4.8e-01, 5.1e-01, 4.8e-01, 5.1e-01, 5.1e-01,
        4.9e-01}},
      {O::sphere, E::projection, 4,
       {3.3e-01, 3.3e-01, 3.3e-01, 4.1e-01, 4.9e-01, 5.1e-01, 5.1e-01, 4.2e-01, 5.1e-01, 5.3e-01,
        4.9e-01}},
      {O::sphere, E::projection, 16,
       {3.3e-01, 3.3e-01, 3.3e-01, 3.3e-01, 3.3e-01, 4.1e-01, 5.1e-01, 4.9e-01, 4.8e-01, 4.9e-01,
        4.9e-01}},

      {O::styblinski_tang, E::exact, 0,
       {5.4e-02, 5.4e-02, 5.2e-02, 5.4e-02, 5.1e-02, 5.4e-02, 5.1e-02, 5.4e-02, 5.4e-02, 5.4e-02,
        5.4e-02}},
      {O::styblinski_tang, E::single, 1,
       {1.2e-02, 5.2e-03, 3.9e-03, 2.7e-03, 7.8e-04, 6.1e-04, 5.4e-04, 3.9e-04, 2.6e-04, 2.0e-04,
        1.4e-04}},
      {O::styblinski_tang, E::mean, 2,
       {2.1e-02, 1.4e-02, 5.7e-03, 7.9e-04, 1.8e-03, 7.1e-04, 3.9e-04, 4.7e-04, 3.6e-04, 2.6e-04,
        1.9e-04}},
      {O::styblinski_tang, E::mean, 4,
       {2.0e-02, 1.6e-02, 5.7e-03, 1.1e-03, 2.1e-03, 1.7e-03, 5.0e-04, 4.7e-04, 5.1e-04, 3.8e-04,
        2.8e-04}},
      {O::styblinski_tang, E::mean, 16,
       {2.4e-02, 2.5e-02, 1.7e-02, 4.2e-03, 5.7e-03, 3.9e-03, 9.6e-04, 5.0e-04, 3.9e-04, 3.9e-04,
        4.0e-04}},
      {O::styblinski_tang, E::projection, 2,
       {2.1e-02, 1.7e-02, 1.8e-02, 5.2e-03, 1.0e-02, 1.3e-02, 2.1e-02, 3.5e-02, 5.7e-02, 7.3e-02,
        1.1e-01}},
      {O::styblinski_tang, E::projection, 4,
       {2.1e-02, 3.1e-02, 1.5e-02, 2.1e-02, 1.0e-02, 1.5e-02, 8.9e-03, 2.3e-02, 3.5e-02, 5.0e-02,
        7.5e-02}},
      {O::styblinski_tang, E::projection, 16,
       {2.0e-02, 8.4e-03, 2.1e-02, 1.0e-02, 1.0e-02, 1.2e-02, 4.2e-03, 4.2e-03, 6.8e-03, 1.4e-02,
        2.9e-02}},
  };
  return table;
}

/// Preset learning rate for a closed-form benchmark run. `k` is ignored
/// for the exact estimator. The sum combiner has no published rates.
inline double math_lr(ObjectiveKind objective, Estimator estimator, int k, int n) {
  int dim_index = -1;
  for (std::size_t i = 0; i < kLrDims.size(); ++i)
    if (kLrDims[i] == n) dim_index = static_cast<int>(i);
  require(dim_index >= 0, errc::bad_config,
          "no preset learning rate for n=" + std::to_string(n) +
              " (preset dimensions are powers of two up to 1024)");
  const int want_k = estimator == Estimator::exact ? 0 : (estimator == Estimator::single ? 1 : k);
  for (const auto& row : math_lr_table())
    if (row.objective == objective && row.estimator == estimator && row.k == want_k)
      return row.by_n[static_cast<std::size_t>(dim_index)];
  raise(errc::bad_config, std::string("no preset learning rate for ") +
                              objective_name(objective) + "/" + estimator_name(estimator) +
                              "/k=" + std::to_string(k));
}

inline constexpr std::array<int, 6> kConeAngles{15, 30, 45, 60, 75, 90};

/// Mean-combiner learning rates for the cone-tangent runs on
/// Styblinski-Tang n=64, per (k, angle).
inline double cone_lr(int k, double alpha_deg) {
  static const std::array<double, 6> k16{2.6e-02, 3.6e-02, 2.6e-02, 3.5e-02, 3.5e-02, 3.5e-02};
  static const std::array<double, 6> k64{2.6e-02, 3.5e-02, 3.5e-02, 3.5e-02, 3.5e-02, 3.5e-02};
  int angle_index = -1;
  for (std::size_t i = 0; i < kConeAngles.size(); ++i)
    if (static_cast<double>(kConeAngles[i]) == alpha_deg) angle_index = static_cast<int>(i);
  require(angle_index >= 0, errc::bad_config,
          "no cone preset for alpha=" + std::to_string(alpha_deg));
  if (k == 16) return k16[static_cast<std::size_t>(angle_index)];
  if (k == 64) return k64[static_cast<std::size_t>(angle_index)];
  raise(errc::bad_config, "cone presets exist for k=16 and k=64 only");
}

struct NnLrRow {
  int width;  // hidden width of the FC-w-ReLU-FC-w-ReLU-FC10 network
  Estimator estimator;
  int k;
  double lr;
};

inline const std::vector<NnLrRow>& nn_lr_table() {
  using E = Estimator;
  static const std::vector<NnLrRow> table{
      {256, E::exact, 0, 2.6e-02},  {1024, E::exact, 0, 3.3e-02},  {4096, E::exact, 0, 3.9e-02},
      {256, E::single, 1, 5.6e-04}, {1024, E::single, 1, 1.6e-04}, {4096, E::single, 1, 7.1e-05},
      {256, E::mean, 2, 8.5e-04},   {1024, E::mean, 2, 2.2e-04},   {4096, E::mean, 2, 1.3e-04},
      {256, E::mean, 4, 8.2e-04},   {1024, E::mean, 4, 6.0e-04},   {4096, E::mean, 4, 1.8e-04},
      {256, E::mean, 16, 1.4e-03},  {1024, E::mean, 16, 2.7e-03},  {4096, E::mean, 16, 5.0e-04},
      {256, E::projection, 2, 2.1e-01},  {1024, E::projection, 2, 2.3e-01},
      {4096, E::projection, 2, 4.6e-01}, {256, E::projection, 4, 1.2e-01},
      {1024, E::projection, 4, 2.0e-01}, {4096, E::projection, 4, 3.5e-01},
      {256, E::projection, 16, 4.2e-02}, {1024, E::projection, 16, 1.3e-01},
      {4096, E::projection, 16, 2.5e-01},
  };
  return table;
}

/// Preset learning rate for training the fully-connected network on MNIST.
inline double nn_lr(int width, Estimator estimator, int k) {
  const int want_k = estimator == Estimator::exact ? 0 : (estimator == Estimator::single ? 1 : k);
  for (const auto& row : nn_lr_table())
    if (row.width == width && row.estimator == estimator && row.k == want_k) return row.lr;
  raise(errc::bad_config, "no preset learning rate for width " + std::to_string(width) + "/" +
                              estimator_name(estimator) + "/k=" + std::to_string(k));
}

}  // namespace frog
