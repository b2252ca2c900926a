#ifndef PARAFAC2_VMF_HPP_
#define PARAFAC2_VMF_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "parafac2/common.hpp"
#include "parafac2/hyp0f1.hpp"
#include "parafac2/linalg.hpp"
#include "parafac2/rng.hpp"

namespace parafac2 {

inline double log_multivariate_gamma(double a, int m) {
  double r = 0.25 * m * (m - 1) * std::log(M_PI);
  for (int i = 0; i < m; ++i) r += std::lgamma(a - 0.5 * i);
  return r;
}

// log volume of the Stiefel manifold of J x M orthonormal frames:
// 2^M pi^{JM/2} / Gamma_M(J/2).
inline double stiefel_log_volume(int j, int m) {
  if (m < 1 || j < m)
    throw Error(ErrorCode::ShapeMismatch, "stiefel volume needs J >= M >= 1");
  return m * std::log(2.0) + 0.5 * j * m * std::log(M_PI) -
         log_multivariate_gamma(0.5 * j, m);
}

// Matrix von Mises-Fisher distribution on the Stiefel manifold,
// density proportional to exp(tr(B^T P)). Caches the SVD of B.
class VmfMatrix {
 public:
  explicit VmfMatrix(Matrix b) : b_(std::move(b)), svd_(thin_svd(b_)) {
    if (b_.rows() < b_.cols() || b_.cols() < 1)
      throw Error(ErrorCode::ShapeMismatch,
                  "vMF parameter must be J x M with J >= M >= 1");
  }

  int rows() const { return static_cast<int>(b_.rows()); }
  int cols() const { return static_cast<int>(b_.cols()); }
  const Matrix& b() const { return b_; }
  const ThinSvd& svd() const { return svd_; }

  std::vector<double> singular_values() const {
    return {svd_.s.data(), svd_.s.data() + svd_.s.size()};
  }

 private:
  Matrix b_;
  ThinSvd svd_;
};

// log of the normalizing constant: log 0F1(J/2; S^2/4) + log v_{J,M}.
inline double log_norm_const(const VmfMatrix& d) {
  return hyp0f1::log0f1_matrix(d.rows(), d.singular_values()) +
         stiefel_log_volume(d.rows(), d.cols());
}

struct VmfMoments {
  Matrix mean;             // E[P] = U diag(g) V^T
  Vector g;                // per-singular-value gain in [0, 1)
  double log_norm = 0.0;   // log normalizer, shared with the ELBO
  double tr_b_mean = 0.0;  // tr(B^T E[P]) = sum_m s_m g_m
};

inline VmfMoments moments(const VmfMatrix& d) {
  const std::vector<double> s = d.singular_values();
  const std::vector<double> g = hyp0f1::grad_log0f1_matrix(d.rows(), s);
  VmfMoments out;
  out.g = Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(g.size()));
  out.mean = d.svd().u * out.g.asDiagonal() * d.svd().v.transpose();
  out.log_norm = log_norm_const(d);
  out.tr_b_mean = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) out.tr_b_mean += s[i] * g[i];
  return out;
}

// E[P^T P] = I_M identically for the matrix vMF.
inline Matrix vmf_expected_gram(const VmfMatrix& d) {
  return Matrix::Identity(d.cols(), d.cols());
}

inline Matrix vmf_mode(const VmfMatrix& d) {
  return d.svd().u * d.svd().v.transpose();
}

// Entropy relative to the unnormalized Hausdorff measure:
// log kappa(B) - tr(B^T E[P]); equals stiefel_log_volume at B = 0.
inline double vmf_entropy(const VmfMatrix& d) {
  VmfMoments mom = moments(d);
  return mom.log_norm - mom.tr_b_mean;
}

// Uniform draw on the Stiefel manifold: orthonormalization of a Gaussian
// matrix with positive triangular diagonal (modified Gram-Schmidt, cheap
// enough for rejection-sampling loops).
inline Matrix stiefel_uniform(int j, int m, Rng& rng) {
  Matrix q(j, m);
  for (Eigen::Index cc = 0; cc < m; ++cc)
    for (Eigen::Index r = 0; r < j; ++r) q(r, cc) = rng.gaussian();
  for (Eigen::Index cc = 0; cc < m; ++cc) {
    for (Eigen::Index prev = 0; prev < cc; ++prev)
      q.col(cc).noalias() -= q.col(prev).dot(q.col(cc)) * q.col(prev);
    const double norm = q.col(cc).norm();
    if (norm < 1e-12) return stiefel_uniform(j, m, rng);  // measure-zero retry
    q.col(cc) /= norm;
  }
  return q;
}

struct VmfSampleStats {
  long long proposals = 0;
  long long accepted = 0;
};

// Exact sample by rejection: uniform Stiefel proposal, acceptance
// exp(tr(B^T P) - sum_m s_m). The envelope constant is the mode value.
inline Matrix vmf_sample(const VmfMatrix& d, Rng& rng,
                         long long proposal_budget = 10'000'000,
                         VmfSampleStats* stats = nullptr) {
  const double smax = d.svd().s.sum();
  for (long long trial = 0; trial < proposal_budget; ++trial) {
    Matrix p = stiefel_uniform(d.rows(), d.cols(), rng);
    const double log_accept = (d.b().transpose() * p).trace() - smax;
    if (stats) ++stats->proposals;
    if (std::log(rng.uniform() + 1e-300) < log_accept) {
      if (stats) ++stats->accepted;
      return p;
    }
  }
  throw Error(ErrorCode::RejectionBudgetExceeded,
              "no acceptance within " + std::to_string(proposal_budget) +
                  " proposals (acceptance rate below " +
                  std::to_string(1.0 / static_cast<double>(proposal_budget)) + ")");
}

}  // namespace parafac2

#endif  // PARAFAC2_VMF_HPP_
