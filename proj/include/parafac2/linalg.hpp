#ifndef PARAFAC2_LINALG_HPP_
#define PARAFAC2_LINALG_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "parafac2/common.hpp"

namespace parafac2 {

struct ThinSvd {
  Matrix u;  // p x r, column-orthonormal
  Vector s;  // r, non-increasing, >= 0
  Matrix v;  // q x r, column-orthonormal
};

// Thin SVD with a fixed sign convention: the largest-magnitude entry of every
// U column is nonnegative. Jacobi backend, deterministic for identical input.
inline ThinSvd thin_svd(const Matrix& m) {
  if (!m.allFinite())
    throw Error(ErrorCode::NonFiniteEntry, "svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw Error(ErrorCode::ConvergenceFailure, "Jacobi SVD did not converge");
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    Eigen::Index imax = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, j) < 0.0) {
      out.u.col(j) = -out.u.col(j);
      out.v.col(j) = -out.v.col(j);
    }
  }
  return out;
}

struct ProcrustesResult {
  Matrix p;              // J x M with orthonormal columns
  Vector singular_values;
  bool rank_deficient = false;  // maximizer not unique; P still valid
};

// Maximizes tr(G P) over J x M matrices with orthonormal columns.
// G is M x J with J >= M; the solution is V U^T from the SVD of G.
inline ProcrustesResult orthonormal_procrustes(const Matrix& g) {
  if (g.rows() > g.cols())
    throw Error(ErrorCode::ShapeMismatch,
                "procrustes needs M <= J, got " + std::to_string(g.rows()) + "x" +
                    std::to_string(g.cols()));
  ThinSvd svd = thin_svd(g);
  ProcrustesResult out;
  out.p = svd.v * svd.u.transpose();
  out.singular_values = svd.s;
  const double smax = svd.s.size() > 0 ? svd.s(0) : 0.0;
  out.rank_deficient = (svd.s.array() < 1e-12 * std::max(smax, 1e-300)).any();
  return out;
}

// E[D a^T a D] for diagonal D = diag(c) with c and a independent:
// (mean_c mean_c^T + cov_c) o (mean_a mean_a^T + cov_a), elementwise product.
inline Matrix hadamard_outer_expectation(const Vector& mean_c, const Matrix& cov_c,
                                         const Vector& mean_a, const Matrix& cov_a) {
  auto check_symmetric = [](const Matrix& s, const char* name) {
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw Error(ErrorCode::AsymmetricInput, std::string(name) + " is not symmetric");
  };
  check_symmetric(cov_c, "cov_c");
  check_symmetric(cov_a, "cov_a");
  const Matrix second_c = mean_c * mean_c.transpose() + cov_c;
  const Matrix second_a = mean_a * mean_a.transpose() + cov_a;
  return second_c.cwiseProduct(second_a);
}

// Symmetric positive-definite inverse via Cholesky with a single jitter retry.
inline Matrix spd_inverse(const Matrix& s, double jitter_scale = 1e-10) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() == Eigen::Success)
    return llt.solve(Matrix::Identity(s.rows(), s.cols()));
  const double jitter = jitter_scale * std::max(s.trace(), 1e-300);
  Matrix sj = s + jitter * Matrix::Identity(s.rows(), s.cols());
  Eigen::LLT<Matrix> retry(sj);
  if (retry.info() != Eigen::Success)
    throw Error(ErrorCode::CovarianceNotPD,
                "matrix not positive definite after jitter retry");
  return retry.solve(Matrix::Identity(s.rows(), s.cols()));
}

inline double log_det_spd(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * std::max(s.trace(), 1e-300);
    llt.compute(s + jitter * Matrix::Identity(s.rows(), s.cols()));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::CovarianceNotPD, "log-det of non-PD matrix");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Moore-Penrose pseudo-inverse; reports rank at the given relative threshold.
inline Matrix pseudo_inverse(const Matrix& m, double rel_tol, int* rank_out = nullptr) {
  ThinSvd svd = thin_svd(m);
  const double cutoff = rel_tol * (svd.s.size() > 0 ? svd.s(0) : 0.0);
  Vector inv = Vector::Zero(svd.s.size());
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.s.size(); ++i) {
    if (svd.s(i) > cutoff && svd.s(i) > 0.0) {
      inv(i) = 1.0 / svd.s(i);
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return svd.v * inv.asDiagonal() * svd.u.transpose();
}

}  // namespace parafac2

#endif  // PARAFAC2_LINALG_HPP_
