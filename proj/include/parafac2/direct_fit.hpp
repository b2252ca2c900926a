#ifndef PARAFAC2_DIRECT_FIT_HPP_
#define PARAFAC2_DIRECT_FIT_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "parafac2/common.hpp"
#include "parafac2/linalg.hpp"
#include "parafac2/rng.hpp"
#include "parafac2/tensor.hpp"

namespace parafac2 {

// Point-estimate PARAFAC2 model. Slab k is reconstructed as
// A diag(C.row(k)) F^T P_k^T with column-orthonormal P_k.
struct Parafac2Point {
  Matrix a;               // I x M
  Matrix f;               // M x M
  Matrix c;               // K x M, row k holds the diagonal of D_k
  std::vector<Matrix> p;  // K matrices, J_k x M, orthonormal columns

  int components() const { return static_cast<int>(a.cols()); }

  Matrix reconstruct_slab(int k) const {
    return a * c.row(k).asDiagonal() * f.transpose() *
           p[static_cast<std::size_t>(k)].transpose();
  }
};

struct DirectFitOptions {
  int max_iters = 10000;
  double rel_tol_r2 = 1e-12;
  int restarts = 1;
  std::uint64_t seed = 0;
};

inline double parafac2_objective(const Parafac2Point& model, const RaggedTensor3& t) {
  double obj = 0.0;
  for (int k = 0; k < t.num_slabs(); ++k)
    obj += (t.slab(k) - model.reconstruct_slab(k)).squaredNorm();
  return obj;
}

// Fraction of the data sum of squares explained by the model.
inline double r2(const Parafac2Point& model, const RaggedTensor3& t) {
  const double denom = frobenius_sq(t);
  if (denom <= 0.0)
    throw Error(ErrorCode::ZeroDataNorm, "R2 undefined for all-zero data");
  return 1.0 - parafac2_objective(model, t) / denom;
}

// Per-slab Procrustes update: P_k maximizes tr(F D_k A^T X_k P_k).
inline std::vector<Matrix> update_projections(const Parafac2Point& model,
                                              const RaggedTensor3& t) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(t.num_slabs()));
  for (int k = 0; k < t.num_slabs(); ++k) {
    const Matrix g =
        model.f * model.c.row(k).asDiagonal() * model.a.transpose() * t.slab(k);
    out.push_back(orthonormal_procrustes(g).p);
  }
  return out;
}

// One alternating least-squares pass (A, then C, then F) on the projected
// slabs Y_k = X_k P_k, i.e. the CP subproblem min sum_k ||Y_k - A D_k F^T||^2.
// Normal-equation Grams get a 1e-12 trace jitter when rank-deficient.
inline void cp_als_sweep(const std::vector<Matrix>& y, Parafac2Point& model) {
  const int k_slabs = static_cast<int>(y.size());
  const int m = model.components();
  auto solve_spd = [&](Matrix gram, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      gram += 1e-12 * std::max(gram.trace(), 1e-300) * Matrix::Identity(m, m);
      llt.compute(gram);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::CovarianceNotPD, "CP normal equations not solvable");
    }
    return llt.solve(rhs);
  };

  // A-step: A <- (sum_k Y_k F D_k)(sum_k D_k F^T F D_k)^-1
  {
    Matrix rhs = Matrix::Zero(model.a.rows(), m);
    for (int k = 0; k < k_slabs; ++k)
      rhs += y[static_cast<std::size_t>(k)] * model.f * model.c.row(k).asDiagonal();
    const Matrix gram = (model.c.transpose() * model.c)
                            .cwiseProduct(model.f.transpose() * model.f);
    model.a = solve_spd(gram, rhs.transpose()).transpose();
  }
  // C-step: row-wise, (A^T A o F^T F) c_k = diag(A^T Y_k F)
  {
    const Matrix gram =
        (model.a.transpose() * model.a).cwiseProduct(model.f.transpose() * model.f);
    for (int k = 0; k < k_slabs; ++k) {
      const Vector rhs =
          (model.a.transpose() * y[static_cast<std::size_t>(k)] * model.f).diagonal();
      model.c.row(k) = solve_spd(gram, rhs).transpose();
    }
  }
  // F-step: F <- (sum_k Y_k^T A D_k)(sum_k D_k A^T A D_k)^-1
  {
    Matrix rhs = Matrix::Zero(m, m);
    for (int k = 0; k < k_slabs; ++k)
      rhs += y[static_cast<std::size_t>(k)].transpose() * model.a *
             model.c.row(k).asDiagonal();
    const Matrix gram = (model.c.transpose() * model.c)
                            .cwiseProduct(model.a.transpose() * model.a);
    model.f = solve_spd(gram, rhs.transpose()).transpose();
  }
}

namespace detail {

inline Parafac2Point direct_init(const RaggedTensor3& t, int m, Rng& rng,
                                 bool jitter) {
  Parafac2Point model;
  const Eigen::Index rows = t.rows();
  Matrix gram = Matrix::Zero(rows, rows);
  for (const Matrix& x : t.slabs()) gram += x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  model.a = Matrix::Zero(rows, m);
  const int available = static_cast<int>(std::min<Eigen::Index>(rows, m));
  for (int j = 0; j < available; ++j) {
    Vector v = eig.eigenvectors().col(rows - 1 - j);  // descending eigenvalues
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    model.a.col(j) = v;
  }
  for (int j = available; j < m; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) model.a(i, j) = rng.gaussian();
  if (jitter)
    for (Eigen::Index j = 0; j < model.a.cols(); ++j)
      for (Eigen::Index i = 0; i < model.a.rows(); ++i)
        model.a(i, j) += 0.1 * rng.gaussian();
  model.c = Matrix::Ones(t.num_slabs(), m);
  model.f = Matrix::Identity(m, m);
  model.p = update_projections(model, t);
  return model;
}

}  // namespace detail

struct DirectFitResult {
  Parafac2Point model;
  std::vector<double> objective_trace;  // sum-of-squares objective per iteration
  std::vector<double> r2_trace;
  int iterations = 0;
  double final_r2 = 0.0;
  int best_restart = 0;
};

// Alternating least squares for min sum_k ||X_k - A D_k F^T P_k^T||^2 with
// P_k^T P_k = I. Stops on max_iters or when the R2 change falls below
// rel_tol_r2; keeps the best restart by final R2.
inline DirectFitResult fit_direct(const RaggedTensor3& t, int m,
                                  const DirectFitOptions& opts = {}) {
  if (m < 1 || m > t.min_cols())
    throw Error(ErrorCode::ModelOrderTooLarge,
                "need 1 <= M <= min_k J_k = " + std::to_string(t.min_cols()));
  const double data_norm = frobenius_sq(t);
  if (data_norm <= 0.0)
    throw Error(ErrorCode::DegenerateData, "all-zero tensor has no PARAFAC2 fit");

  DirectFitResult best;
  bool have_best = false;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    Rng rng(derive_seed(opts.seed, "direct-fit", {static_cast<std::uint64_t>(restart)}));
    DirectFitResult run;
    run.model = detail::direct_init(t, m, rng, restart > 0);
    double prev_r2 = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
      run.model.p = update_projections(run.model, t);
      const std::vector<Matrix> y = project_slabs(t, run.model.p);
      cp_als_sweep(y, run.model);
      const double obj = parafac2_objective(run.model, t);
      const double fit = 1.0 - obj / data_norm;
      run.objective_trace.push_back(obj);
      run.r2_trace.push_back(fit);
      run.iterations = it + 1;
      if (std::abs(fit - prev_r2) <= opts.rel_tol_r2 * std::max(1.0, std::abs(fit)))
        break;
      prev_r2 = fit;
    }
    run.final_r2 = run.r2_trace.back();
    run.best_restart = restart;
    if (!have_best || run.final_r2 > best.final_r2) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

struct CoreConsistencyResult {
  double ccd = 0.0;
  bool singular_design = false;  // a loading matrix was rank-deficient
  std::string diagnostic;
};

// Core consistency diagnostic: re-estimates the full M x M x M Tucker core of
// the projected data with loadings fixed and measures the distance to the
// superdiagonal core of ones, CCD = 100 (1 - ||G - I||^2 / ||I||^2).
inline CoreConsistencyResult core_consistency(const Parafac2Point& model,
                                              const RaggedTensor3& t) {
  const int m = model.components();
  CoreConsistencyResult out;
  int rank_a = 0, rank_f = 0, rank_c = 0;
  const Matrix pinv_a = pseudo_inverse(model.a, 1e-12, &rank_a);
  const Matrix pinv_f = pseudo_inverse(model.f, 1e-12, &rank_f);
  const Matrix pinv_c = pseudo_inverse(model.c, 1e-12, &rank_c);
  if (rank_a < m || rank_f < m || rank_c < m) {
    out.singular_design = true;
    out.ccd = std::numeric_limits<double>::quiet_NaN();
    out.diagnostic = "rank-deficient loadings: rank(A)=" + std::to_string(rank_a) +
                     " rank(F)=" + std::to_string(rank_f) +
                     " rank(C)=" + std::to_string(rank_c);
    return out;
  }
  // G = Y x_1 A^+ x_2 F^+ x_3 C^+ on the projected slabs Y_k = X_k P_k.
  // core[q](p, r): mode-2 index q, mode-1 p, mode-3 r.
  std::vector<Matrix> core(static_cast<std::size_t>(m), Matrix::Zero(m, m));
  for (int k = 0; k < t.num_slabs(); ++k) {
    const Matrix yk = t.slab(k) * model.p[static_cast<std::size_t>(k)];
    const Matrix z = pinv_a * yk * pinv_f.transpose();  // m x m
    for (int q = 0; q < m; ++q)
      for (int p = 0; p < m; ++p)
        for (int r = 0; r < m; ++r)
          core[static_cast<std::size_t>(q)](p, r) += z(p, q) * pinv_c(r, k);
  }
  double dist = 0.0;
  for (int q = 0; q < m; ++q)
    for (int p = 0; p < m; ++p)
      for (int r = 0; r < m; ++r) {
        const double ideal = (p == q && q == r) ? 1.0 : 0.0;
        const double diff = core[static_cast<std::size_t>(q)](p, r) - ideal;
        dist += diff * diff;
      }
  out.ccd = 100.0 * (1.0 - dist / static_cast<double>(m));
  return out;
}

}  // namespace parafac2

#endif  // PARAFAC2_DIRECT_FIT_HPP_
