// Minimal library walkthrough: estimate a known gradient from directional
// derivatives with each combiner and print how close the estimates get.

#include <cstdio>

#include "frog/fgrad.hpp"
#include "frog/tangent.hpp"

int main() {
  const Eigen::Index n = 32;
  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n);

  std::printf("%4s  %-12s  %8s  %8s\n", "k", "combiner", "cosine", "ratio");
  for (const Eigen::Index k : {1, 4, 16, 32}) {
    const frog::TangentSet v = frog::sample_gaussian(n, k, /*seed=*/1);
    const Eigen::VectorXd d = v.matrix.transpose() * grad;  // what a JVP sweep returns

    for (const auto variant : {frog::Variant::mean, frog::Variant::projection}) {
      const auto cg = frog::combine_variant(variant, v, grad);
      std::printf("%4td  %-12s  %8.4f  %8.4f\n", static_cast<std::ptrdiff_t>(k),
                  frog::variant_name(variant), frog::cosine_similarity(cg.g, grad),
                  frog::norm_ratio(cg.g, grad));
    }
  }
  return 0;
}
