#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "frog/fgrad.hpp"
#include "frog/rng.hpp"
#include "frog/tangent.hpp"

using frog::CombinedGradient;
using frog::TangentSet;
using frog::Variant;

namespace {

TangentSet tangents_from(const Eigen::MatrixXd& m) {
  TangentSet v;
  v.matrix = m;
  return v;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("single-tangent estimate", "[fgrad]") {
  // Axis tangent picks out one gradient component.
  const CombinedGradient axis = frog::single(vec2(1, 0), 3.0);
  REQUIRE(axis.g == vec2(3, 0));

  const CombinedGradient zero = frog::single(vec2(0.3, -0.8), 0.0);
  REQUIRE(zero.g == vec2(0, 0));

  // v=(1,1), grad=(1,2): d=3, g=(3,3), cosine 9/(3*sqrt(2)*sqrt(5)).
  const Eigen::VectorXd grad = vec2(1, 2);
  const Eigen::VectorXd v = vec2(1, 1);
  const CombinedGradient cg = frog::single(v, grad.dot(v));
  REQUIRE(cg.g == vec2(3, 3));
  REQUIRE(frog::cosine_similarity(cg.g, grad) == Catch::Approx(0.9486832980505138).epsilon(1e-12));
}

TEST_CASE("sum combination", "[fgrad]") {
  const TangentSet eye = tangents_from(Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd grad = vec2(2, 3);
  REQUIRE(frog::combine_sum(eye, eye.matrix.transpose() * grad).g == grad);

  // k=1 reduces to the single-tangent estimate.
  Eigen::MatrixXd one_col(2, 1);
  one_col << 0.7, -0.2;
  const TangentSet v1 = tangents_from(one_col);
  const Eigen::VectorXd d1 = v1.matrix.transpose() * grad;
  REQUIRE(frog::combine_sum(v1, d1).g == frog::single(one_col.col(0), d1(0)).g);

  // Hand-computed: columns (1,0), (1,1), grad (2,3) -> d=(2,5), g=(7,5).
  Eigen::MatrixXd m(2, 2);
  m << 1, 1, 0, 1;
  const TangentSet v = tangents_from(m);
  const Eigen::VectorXd d = v.matrix.transpose() * grad;
  REQUIRE(d == vec2(2, 5));
  REQUIRE(frog::combine_sum(v, d).g == vec2(7, 5));

  REQUIRE_THROWS_WITH(frog::combine_sum(v, Eigen::VectorXd::Ones(3)),
                      Catch::Matchers::ContainsSubstring("DimensionMismatch"));
}

TEST_CASE("mean is the sum scaled by 1/k", "[fgrad]") {
  const Eigen::VectorXd grad = vec2(2, 3);
  const TangentSet eye = tangents_from(Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd d = eye.matrix.transpose() * grad;
  REQUIRE(frog::combine_mean(eye, d).g == vec2(1, 1.5));

  const TangentSet v = frog::sample_gaussian(8, 4, 3);
  const Eigen::VectorXd dv = v.matrix.transpose() * Eigen::VectorXd::Ones(8);
  const Eigen::VectorXd sum = frog::combine_sum(v, dv).g;
  const Eigen::VectorXd mean = frog::combine_mean(v, dv).g;
  REQUIRE((mean - sum / 4.0).cwiseAbs().maxCoeff() <= 1e-15);

  Eigen::MatrixXd one_col(2, 1);
  one_col << 2.0, 1.0;
  const TangentSet v1 = tangents_from(one_col);
  REQUIRE(frog::combine_mean(v1, vec2(3, 0).head(1)).g ==
          frog::single(one_col.col(0), 3.0).g);
}

TEST_CASE("projection on hand-checked cases", "[fgrad]") {
  // k=1: g = d v / |v|^2.
  Eigen::MatrixXd one_col(2, 1);
  one_col << 2.0, 0.0;
  const TangentSet v1 = tangents_from(one_col);
  Eigen::VectorXd d1(1);
  d1 << 6.0;
  REQUIRE(frog::combine_projection(v1, d1).g == vec2(3, 0));

  // Axis-aligned: projecting (1,2,3) onto span(e1,e2) keeps (1,2,0).
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(3, 2);
  axes(0, 0) = 1.0;
  axes(1, 1) = 1.0;
  Eigen::VectorXd grad3(3);
  grad3 << 1, 2, 3;
  const auto proj = frog::combine_projection(tangents_from(axes), axes.transpose() * grad3);
  REQUIRE(proj.g(0) == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(proj.g(1) == Catch::Approx(2.0).margin(1e-14));
  REQUIRE(proj.g(2) == 0.0);

  // Full-rank k=n reconstructs the gradient: Gram [[1,1],[1,2]], x=(-1,3).
  Eigen::MatrixXd m(2, 2);
  m << 1, 1, 0, 1;
  const Eigen::VectorXd grad = vec2(2, 3);
  const auto full = frog::combine_projection(tangents_from(m), m.transpose() * grad);
  REQUIRE(full.g(0) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(full.g(1) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("projection with k > n falls back to an independent subset", "[fgrad]") {
  const TangentSet v = frog::sample_gaussian(4, 9, 5);
  const Eigen::VectorXd grad = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
  const auto proj = frog::combine_projection(v, v.matrix.transpose() * grad);
  REQUIRE((proj.g - grad).norm() <= 1e-9 * grad.norm());
}

TEST_CASE("projection reports rank deficiency for dependent tangents", "[fgrad]") {
  Eigen::MatrixXd m(3, 2);
  m.col(0) = Eigen::Vector3d(1, 2, 3);
  m.col(1) = Eigen::Vector3d(2, 4, 6);
  REQUIRE_THROWS_WITH(frog::combine_projection(tangents_from(m), Eigen::VectorXd::Zero(2)),
                      Catch::Matchers::ContainsSubstring("RankDeficient"));
}

TEST_CASE("cosine similarity and norm ratio basics", "[fgrad]") {
  REQUIRE(frog::cosine_similarity(vec2(2, 0), vec2(5, 0)) == 1.0);
  REQUIRE(frog::cosine_similarity(vec2(1, 0), vec2(0, 1)) == 0.0);
  REQUIRE(frog::cosine_similarity(vec2(1, 0), vec2(1, 1)) ==
          Catch::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
  REQUIRE_THROWS_WITH(frog::cosine_similarity(vec2(0, 0), vec2(1, 1)),
                      Catch::Matchers::ContainsSubstring("ZeroVector"));

  REQUIRE(frog::norm_ratio(vec2(1, 1), vec2(1, 1)) == 1.0);
  REQUIRE(frog::norm_ratio(vec2(0, 0), vec2(1, 1)) == 0.0);
  REQUIRE(frog::norm_ratio(vec2(2, 2), vec2(1, 1)) == Catch::Approx(2.0).epsilon(1e-15));
  REQUIRE_THROWS_WITH(frog::norm_ratio(vec2(1, 1), vec2(0, 0)),
                      Catch::Matchers::ContainsSubstring("ZeroVector"));
}

TEST_CASE("combined gradients stay in the tangent span", "[fgrad]") {
  const Eigen::Index n = 12;
  frog::Xoshiro256pp rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) grad(i) = rng.gaussian();
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(6));
    const TangentSet v = frog::sample_gaussian(n, k, rng.next());
    for (const Variant variant :
         {Variant::single, Variant::sum, Variant::mean, Variant::projection}) {
      const CombinedGradient cg = frog::combine_variant(variant, v, grad);
      // Residual after projecting g back onto span(V) must vanish.
      const auto back = frog::combine_projection(v, v.matrix.transpose() * cg.g);
      REQUIRE((cg.g - back.g).norm() <= 1e-9 * std::max(1.0, cg.g.norm()));
    }
  }
}

TEST_CASE("conical combinations differ in length only", "[fgrad]") {
  const Eigen::Index n = 24;
  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n);
  for (int s = 0; s < 100; ++s) {
    const TangentSet v = frog::sample_gaussian(n, 6, frog::derive_seed(2, static_cast<std::uint64_t>(s)));
    const CombinedGradient sum = frog::combine_variant(Variant::sum, v, grad);
    const CombinedGradient mean = frog::combine_variant(Variant::mean, v, grad);
    REQUIRE(frog::cosine_similarity(sum.g, mean.g) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(std::abs(frog::cosine_similarity(sum.g, grad) -
                     frog::cosine_similarity(mean.g, grad)) <= 1e-12);

    // With paper-normalized tangents the direction may differ from V's,
    // but sum and mean still differ by exactly the factor k.
    const CombinedGradient sum_w = frog::combine_variant(Variant::sum_norm, v, grad);
    const CombinedGradient mean_w = frog::combine_variant(Variant::mean_norm, v, grad);
    REQUIRE((sum_w.g - 6.0 * mean_w.g).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, sum_w.g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("projection is the closest span element to the gradient", "[fgrad]") {
  frog::Xoshiro256pp rng(8);
  for (int instance = 0; instance < 100; ++instance) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(7));  // n <= 8
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) grad(i) = rng.gaussian();
    if (grad.norm() == 0.0) continue;
    const TangentSet v = frog::sample_gaussian(n, k, rng.next());
    const auto proj = frog::combine_projection(v, v.matrix.transpose() * grad);
    const double best = (grad - proj.g).norm();
    for (int probe = 0; probe < 10; ++probe) {
      Eigen::VectorXd coeff(k);
      for (Eigen::Index i = 0; i < k; ++i) coeff(i) = rng.gaussian();
      const Eigen::VectorXd candidate = v.matrix * coeff;
      REQUIRE(best <= (grad - candidate).norm() + 1e-9);
    }
  }
}

TEST_CASE("projection is idempotent", "[fgrad]") {
  const Eigen::Index n = 16;
  frog::Xoshiro256pp rng(10);
  Eigen::VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) grad(i) = rng.gaussian();
  const TangentSet v = frog::sample_gaussian(n, 5, 77);
  const auto once = frog::combine_projection(v, v.matrix.transpose() * grad);
  const auto twice = frog::combine_projection(v, v.matrix.transpose() * once.g);
  REQUIRE((once.g - twice.g).norm() <= 1e-9 * std::max(1.0, once.g.norm()));
}

TEST_CASE("estimates never ascend", "[fgrad]") {
  frog::Xoshiro256pp rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(10));
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) grad(i) = rng.gaussian();
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(4));
    const TangentSet v = frog::sample_gaussian(n, k, rng.next());
    for (const Variant variant : {Variant::single, Variant::sum, Variant::mean}) {
      const CombinedGradient cg = frog::combine_variant(variant, v, grad);
      if (cg.g.norm() > 0.0) REQUIRE(cg.g.dot(grad) >= 0.0);
    }
    const CombinedGradient proj = frog::combine_variant(Variant::projection, v, grad);
    REQUIRE(proj.g.dot(grad) >= -1e-12);
    REQUIRE(proj.g.dot(grad) ==
            Catch::Approx(proj.g.squaredNorm()).margin(1e-9 * std::max(1.0, proj.g.squaredNorm())));
  }
}

TEST_CASE("quality sweep produces one record per (seed, k, variant)", "[fgrad]") {
  const auto records = frog::approx_quality_sweep(16, {1, 2, 4}, frog::all_variants(), 5,
                                                  Eigen::VectorXd::Ones(16));
  REQUIRE(records.size() == 5u * 3u * 6u);
  for (const auto& rec : records) {
    REQUIRE(rec.cosine >= -1.0);
    REQUIRE(rec.cosine <= 1.0);
    REQUIRE(rec.norm_ratio >= 0.0);
  }
  const auto stats = frog::summarize_quality(records);
  REQUIRE(stats.size() == 3u * 6u);
  int total = 0;
  for (const auto& s : stats) total += s.count;
  REQUIRE(total == static_cast<int>(records.size()));
}

TEST_CASE("full standard basis with the sum combiner reproduces the gradient", "[fgrad]") {
  const Eigen::Index n = 12;
  frog::Xoshiro256pp rng(19);
  Eigen::VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) grad(i) = rng.gaussian();
  const TangentSet basis = frog::standard_basis(n, n, 7);
  const auto cg = frog::combine_sum(basis, basis.matrix.transpose() * grad);
  REQUIRE(cg.g == grad);  // V V^T is the identity for a full basis
}

TEST_CASE("projection at k=n is exact for every seed", "[fgrad]") {
  const Eigen::Index n = 32;
  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n);
  for (int s = 0; s < 25; ++s) {
    const TangentSet v = frog::sample_gaussian(n, n, frog::derive_seed(6, static_cast<std::uint64_t>(s)));
    const auto proj = frog::combine_projection(v, v.matrix.transpose() * grad);
    REQUIRE(frog::cosine_similarity(proj.g, grad) >= 1.0 - 1e-6);
    REQUIRE(frog::norm_ratio(proj.g, grad) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("mean cosine grows with k for every variant", "[fgrad]") {
  const Eigen::Index n = 32;
  const std::vector<Eigen::Index> ks{1, 2, 4, 8, 16, 32};
  const auto records =
      frog::approx_quality_sweep(n, ks, frog::all_variants(), 300, Eigen::VectorXd::Ones(n));
  const auto stats = frog::summarize_quality(records);
  for (const Variant variant : frog::all_variants()) {
    double prev = -1.0;
    for (const Eigen::Index k : ks) {
      for (const auto& s : stats)
        if (s.k == k && s.variant == variant) {
          REQUIRE(s.mean_cosine >= prev - 1e-12);
          prev = s.mean_cosine;
        }
    }
  }
  // Projection dominates the conical combinations at every k.
  for (const Eigen::Index k : ks) {
    double proj = 0.0;
    for (const auto& s : stats)
      if (s.k == k && s.variant == Variant::projection) proj = s.mean_cosine;
    for (const Variant variant :
         {Variant::sum, Variant::mean, Variant::sum_norm, Variant::mean_norm}) {
      for (const auto& s : stats)
        if (s.k == k && s.variant == variant) REQUIRE(proj >= s.mean_cosine - 1e-12);
    }
  }
}
