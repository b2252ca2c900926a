#ifndef PARAFAC2_SYNTH_HPP_
#define PARAFAC2_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "parafac2/common.hpp"
#include "parafac2/direct_fit.hpp"
#include "parafac2/linalg.hpp"
#include "parafac2/rng.hpp"
#include "parafac2/tensor.hpp"

namespace parafac2 {

enum class NoiseMode { Homoscedastic, Heteroscedastic };

inline const char* noise_mode_name(NoiseMode m) {
  return m == NoiseMode::Homoscedastic ? "homo" : "hetero";
}

// Simulation protocol: A standard normal, F the transposed Cholesky factor of
// a unit-diagonal Gram with constant off-diagonal, C uniform, P_k orthonormal
// frames of Gaussian vectors, plus Frobenius-power-calibrated noise.
struct SynthSpec {
  int rows = 50;               // I
  int cols = 50;               // J, shared across slabs by default
  int slabs = 10;              // K
  int true_components = 4;     // M_true
  double snr_db = 4.0;         // +inf sentinel means noise-free
  NoiseMode noise_mode = NoiseMode::Heteroscedastic;
  double offdiag = 0.4;        // F^T F off-diagonal target
  double c_min = 0.0;
  double c_max = 30.0;
  std::uint64_t seed = 0;
};

struct SynthTruth {
  Parafac2Point factors;               // A, F, C, {P_k}
  std::vector<Matrix> clean;           // noise-free slabs
  std::vector<Matrix> noise;           // realized noise, clean + noise = observed
  std::vector<double> noise_variances; // realized per-slab noise power / (I*J_k)
  std::vector<double> slab_scale_factors;  // heteroscedastic draw, ones for homo
  double realized_snr_db = std::numeric_limits<double>::infinity();
};

struct NoiseResult {
  std::vector<Matrix> observed;
  std::vector<Matrix> noise;
  std::vector<double> variances;
  std::vector<double> scale_factors;
};

// Adds Gaussian noise scaled so the global Frobenius SNR is hit exactly:
// 10 log10(||clean||^2 / ||noise||^2) = snr_db. Heteroscedastic mode draws
// per-slab standard-deviation factors log-uniform on [1/3, 3] first.
inline NoiseResult add_noise(const std::vector<Matrix>& clean, double snr_db,
                             NoiseMode mode, Rng& rng) {
  double clean_power = 0.0;
  for (const Matrix& x : clean) clean_power += x.squaredNorm();
  if (clean_power <= 0.0)
    throw Error(ErrorCode::ZeroSignal, "cannot calibrate SNR against zero signal");

  NoiseResult out;
  out.observed = clean;
  out.scale_factors.assign(clean.size(), 1.0);
  if (std::isinf(snr_db) && snr_db > 0.0) {
    for (const Matrix& x : clean) {
      out.noise.push_back(Matrix::Zero(x.rows(), x.cols()));
      out.variances.push_back(0.0);
    }
    return out;
  }

  out.noise.reserve(clean.size());
  for (std::size_t k = 0; k < clean.size(); ++k) {
    Matrix e(clean[k].rows(), clean[k].cols());
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = rng.gaussian();
    if (mode == NoiseMode::Heteroscedastic) {
      out.scale_factors[k] = std::exp(rng.uniform(std::log(1.0 / 3.0), std::log(3.0)));
      e *= out.scale_factors[k];
    }
    out.noise.push_back(std::move(e));
  }
  double noise_power = 0.0;
  for (const Matrix& e : out.noise) noise_power += e.squaredNorm();
  const double target_power = clean_power / std::pow(10.0, snr_db / 10.0);
  const double rescale = std::sqrt(target_power / noise_power);
  for (std::size_t k = 0; k < clean.size(); ++k) {
    out.noise[k] *= rescale;
    out.observed[k] = clean[k] + out.noise[k];
    out.variances.push_back(out.noise[k].squaredNorm() /
                            static_cast<double>(out.noise[k].size()));
  }
  return out;
}

struct SynthDataset {
  RaggedTensor3 observed;
  SynthTruth truth;
};

inline SynthDataset generate(const SynthSpec& spec, Rng& rng) {
  if (spec.true_components < 1 || spec.true_components > std::min(spec.rows, spec.cols))
    throw Error(ErrorCode::ModelOrderTooLarge,
                "true_components must satisfy 1 <= M <= min(I, J)");
  const int m = spec.true_components;

  SynthTruth truth;
  truth.factors.a = Matrix(spec.rows, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < spec.rows; ++i) truth.factors.a(i, j) = rng.gaussian();

  // F = L^T from Phi = L L^T so that F^T F has ones on the diagonal and
  // `offdiag` elsewhere; keeps components from being too similar.
  Matrix phi = Matrix::Constant(m, m, spec.offdiag);
  phi.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(phi);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::CovarianceNotPD, "off-diagonal target is not PD");
  truth.factors.f = Matrix(llt.matrixL()).transpose();

  truth.factors.c = Matrix(spec.slabs, m);
  for (Eigen::Index k = 0; k < spec.slabs; ++k)
    for (Eigen::Index j = 0; j < m; ++j)
      truth.factors.c(k, j) = rng.uniform(spec.c_min, spec.c_max);

  truth.factors.p.reserve(static_cast<std::size_t>(spec.slabs));
  truth.clean.reserve(static_cast<std::size_t>(spec.slabs));
  for (int k = 0; k < spec.slabs; ++k) {
    Matrix g(spec.cols, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < spec.cols; ++i) g(i, j) = rng.gaussian();
    // orthonormalization of Gaussian columns (QR range basis)
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(spec.cols, m);
    Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < m; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    truth.factors.p.push_back(q);
    truth.clean.push_back(truth.factors.a * truth.factors.c.row(k).asDiagonal() *
                          truth.factors.f.transpose() * q.transpose());
  }

  NoiseResult noisy = add_noise(truth.clean, spec.snr_db, spec.noise_mode, rng);
  truth.noise = std::move(noisy.noise);
  truth.noise_variances = std::move(noisy.variances);
  truth.slab_scale_factors = std::move(noisy.scale_factors);
  double clean_power = 0.0, noise_power = 0.0;
  for (std::size_t k = 0; k < truth.clean.size(); ++k) {
    clean_power += truth.clean[k].squaredNorm();
    noise_power += truth.noise[k].squaredNorm();
  }
  truth.realized_snr_db = noise_power > 0.0
                              ? 10.0 * std::log10(clean_power / noise_power)
                              : std::numeric_limits<double>::infinity();
  return SynthDataset{RaggedTensor3(std::move(noisy.observed)), std::move(truth)};
}

inline SynthDataset generate(const SynthSpec& spec) {
  Rng rng(derive_seed(spec.seed, "synth-data"));
  return generate(spec, rng);
}

}  // namespace parafac2

#endif  // PARAFAC2_SYNTH_HPP_
