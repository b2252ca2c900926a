#include <catch2/catch_amalgamated.hpp>

#include "parafac2/synth.hpp"

using namespace parafac2;

TEST_CASE("generator basics and reproducibility", "[synth]") {
  SynthSpec spec;
  spec.rows = 12;
  spec.cols = 10;
  spec.slabs = 4;
  spec.true_components = 3;
  spec.snr_db = 4.0;
  spec.seed = 3;

  SynthDataset a = generate(spec);
  SynthDataset b = generate(spec);
  for (int k = 0; k < a.observed.num_slabs(); ++k)
    CHECK((a.observed.slab(k) - b.observed.slab(k)).cwiseAbs().maxCoeff() == 0.0);

  // clean + noise = observed
  for (int k = 0; k < a.observed.num_slabs(); ++k)
    CHECK((a.truth.clean[static_cast<std::size_t>(k)] +
           a.truth.noise[static_cast<std::size_t>(k)] - a.observed.slab(k))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

  // P_k orthonormal
  for (const Matrix& p : a.truth.factors.p)
    CHECK((p.transpose() * p - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("F gram hits the off-diagonal target", "[synth]") {
  SynthSpec spec;
  spec.true_components = 4;
  spec.seed = 5;
  spec.rows = 10;
  spec.cols = 9;
  spec.slabs = 3;
  SynthDataset data = generate(spec);
  const Matrix gram = data.truth.factors.f.transpose() * data.truth.factors.f;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(gram(i, j) == Catch::Approx(i == j ? 1.0 : 0.4).margin(1e-12));

  SECTION("offdiag zero gives identity gram") {
    spec.offdiag = 0.0;
    SynthDataset iso = generate(spec);
    const Matrix g2 = iso.truth.factors.f.transpose() * iso.truth.factors.f;
    CHECK((g2 - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("noise calibration is exact in decibels", "[synth]") {
  Rng rng(7);
  std::vector<Matrix> clean;
  for (int k = 0; k < 5; ++k) {
    Matrix x(8, 6);
    for (Eigen::Index j = 0; j < 6; ++j)
      for (Eigen::Index i = 0; i < 8; ++i) x(i, j) = rng.gaussian() + 0.5;
    clean.push_back(x);
  }
  double clean_power = 0.0;
  for (const Matrix& x : clean) clean_power += x.squaredNorm();

  for (double snr : {-10.0, 0.0, 4.0, 10.0}) {
    Rng noise_rng(derive_seed(7, "noise", {static_cast<std::uint64_t>(snr + 100)}));
    NoiseResult res = add_noise(clean, snr, NoiseMode::Homoscedastic, noise_rng);
    double noise_power = 0.0;
    for (const Matrix& e : res.noise) noise_power += e.squaredNorm();
    const double realized = 10.0 * std::log10(clean_power / noise_power);
    CHECK(realized == Catch::Approx(snr).margin(1e-10));
    if (snr == 0.0) CHECK(noise_power == Catch::Approx(clean_power).epsilon(1e-12));
    if (snr == 10.0)
      CHECK(noise_power == Catch::Approx(clean_power / 10.0).epsilon(1e-12));
  }
}

TEST_CASE("heteroscedastic mode spreads slab SNRs", "[synth]") {
  SynthSpec spec;
  spec.slabs = 10;
  spec.noise_mode = NoiseMode::Heteroscedastic;
  spec.snr_db = 4.0;
  spec.seed = 11;
  SynthDataset data = generate(spec);

  double clean_power = 0.0, noise_power = 0.0;
  double min_slab_snr = std::numeric_limits<double>::infinity();
  double max_slab_snr = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < data.truth.clean.size(); ++k) {
    const double cp = data.truth.clean[k].squaredNorm();
    const double np = data.truth.noise[k].squaredNorm();
    clean_power += cp;
    noise_power += np;
    const double slab_snr = cp / np;
    min_slab_snr = std::min(min_slab_snr, slab_snr);
    max_slab_snr = std::max(max_slab_snr, slab_snr);
  }
  CHECK(10.0 * std::log10(clean_power / noise_power) ==
        Catch::Approx(4.0).margin(1e-10));
  CHECK(max_slab_snr / min_slab_snr >= 4.0);
}

TEST_CASE("infinite SNR sentinel returns the clean tensor", "[synth]") {
  SynthSpec spec;
  spec.rows = 6;
  spec.cols = 5;
  spec.slabs = 2;
  spec.true_components = 2;
  spec.snr_db = std::numeric_limits<double>::infinity();
  spec.seed = 13;
  SynthDataset data = generate(spec);
  for (int k = 0; k < data.observed.num_slabs(); ++k) {
    CHECK((data.observed.slab(k) - data.truth.clean[static_cast<std::size_t>(k)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(data.truth.noise[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero signal rejected", "[synth]") {
  Rng rng(17);
  std::vector<Matrix> zeros = {Matrix::Zero(3, 3)};
  CHECK_THROWS_AS(add_noise(zeros, 4.0, NoiseMode::Homoscedastic, rng), Error);
}
