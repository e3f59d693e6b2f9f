#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "frog/errors.hpp"

namespace frog::detail {

/// Cholesky factorization G = L L^T of a symmetric positive-definite matrix.
/// Returns false without throwing if any pivot (the diagonal entry before
/// the square root) falls below `pivot_floor`.
inline bool cholesky(const Eigen::MatrixXd& gram, double pivot_floor, Eigen::MatrixXd& lower) {
  const Eigen::Index k = gram.rows();
  lower = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double pivot = gram(j, j);
    for (Eigen::Index m = 0; m < j; ++m) pivot -= lower(j, m) * lower(j, m);
    if (!(pivot > pivot_floor)) return false;
    const double ljj = std::sqrt(pivot);
    lower(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      double s = gram(i, j);
      for (Eigen::Index m = 0; m < j; ++m) s -= lower(i, m) * lower(j, m);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

inline Eigen::VectorXd solve_lower(const Eigen::MatrixXd& lower, const Eigen::VectorXd& rhs) {
  return lower.triangularView<Eigen::Lower>().solve(rhs);
}

inline Eigen::VectorXd solve_llt(const Eigen::MatrixXd& lower, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Solve G x = rhs from a precomputed Cholesky factor, then apply two steps
/// of iterative refinement with the residual accumulated in long double.
/// Gram matrices square the conditioning of the tangent matrix; the refined
/// solve keeps the forward error near machine precision even for
/// ill-conditioned draws.
inline Eigen::VectorXd solve_llt_refined(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& lower,
                                         const Eigen::VectorXd& rhs) {
  const Eigen::Index k = gram.rows();
  Eigen::VectorXd x = solve_llt(lower, rhs);
  for (int iter = 0; iter < 2; ++iter) {
    Eigen::VectorXd residual(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      long double acc = static_cast<long double>(rhs(i));
      for (Eigen::Index j = 0; j < k; ++j) {
        acc -= static_cast<long double>(gram(i, j)) * static_cast<long double>(x(j));
      }
      residual(i) = static_cast<double>(acc);
    }
    x += solve_llt(lower, residual);
  }
  return x;
}

/// Rank-revealing Cholesky with diagonal pivoting. Factorization stops once
/// the largest remaining diagonal entry drops below rel_tol times the
/// largest initial diagonal entry.
struct PivotedCholesky {
  std::vector<Eigen::Index> permutation;  // permutation[i] = original column of pivot i
  Eigen::Index rank = 0;
  Eigen::MatrixXd lower;  // k x rank lower-trapezoidal factor of G[perm, perm]
};

inline PivotedCholesky pivoted_cholesky(const Eigen::MatrixXd& gram, double rel_tol) {
  const Eigen::Index k = gram.rows();
  Eigen::MatrixXd work = gram;
  PivotedCholesky out;
  out.permutation.resize(static_cast<std::size_t>(k));
  std::iota(out.permutation.begin(), out.permutation.end(), Eigen::Index{0});
  out.lower = Eigen::MatrixXd::Zero(k, k);

  const double max_diag0 = gram.diagonal().maxCoeff();
  const double floor = rel_tol * max_diag0;

  Eigen::Index r = 0;
  for (; r < k; ++r) {
    Eigen::Index pivot = r;
    double best = work(r, r);
    for (Eigen::Index i = r + 1; i < k; ++i) {
      if (work(i, i) > best) {
        best = work(i, i);
        pivot = i;
      }
    }
    if (!(best > floor)) break;
    if (pivot != r) {
      work.row(r).swap(work.row(pivot));
      work.col(r).swap(work.col(pivot));
      out.lower.row(r).swap(out.lower.row(pivot));
      std::swap(out.permutation[static_cast<std::size_t>(r)],
                out.permutation[static_cast<std::size_t>(pivot)]);
    }
    const double ljj = std::sqrt(best);
    out.lower(r, r) = ljj;
    for (Eigen::Index i = r + 1; i < k; ++i) out.lower(i, r) = work(i, r) / ljj;
    for (Eigen::Index i = r + 1; i < k; ++i) {
      for (Eigen::Index j = r + 1; j <= i; ++j) {
        work(i, j) -= out.lower(i, r) * out.lower(j, r);
        work(j, i) = work(i, j);
      }
    }
  }
  out.rank = r;
  out.lower.conservativeResize(k, r);
  return out;
}

}  // namespace frog::detail
