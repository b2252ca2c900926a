#include <catch2/catch_amalgamated.hpp>

#include "parafac2/linalg.hpp"
#include "parafac2/rng.hpp"

#include "oracles.hpp"

using namespace parafac2;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.gaussian();
  return m;
}

Matrix random_orthonormal(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(r, c, rng));
  return qr.householderQ() * Matrix::Identity(r, c);
}

}  // namespace

TEST_CASE("thin_svd satisfies its contract", "[linalg]") {
  SECTION("identity") {
    ThinSvd svd = thin_svd(Matrix::Identity(3, 3));
    CHECK((svd.s.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((svd.u * svd.v.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  SECTION("diagonal with zero") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 3.0;
    ThinSvd svd = thin_svd(m);
    CHECK(svd.s(0) == Catch::Approx(3.0));
    CHECK(svd.s(1) == Catch::Approx(0.0).margin(1e-14));
  }
  SECTION("random rectangular vs eig(M^T M) oracle") {
    Rng rng(7);
    const Matrix m = random_matrix(5, 3, rng);
    ThinSvd svd = thin_svd(m);
    // orthonormality and reconstruction
    CHECK((svd.u.transpose() * svd.u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((svd.v.transpose() * svd.v - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    const Matrix rec = svd.u * svd.s.asDiagonal() * svd.v.transpose();
    CHECK((m - rec).norm() <= 1e-8 * std::max(1.0, m.norm()));
    // singular values sorted and matching sqrt of eigenvalues of M^T M
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m);
    for (int i = 0; i < 3; ++i) {
      CHECK(svd.s(i) == Catch::Approx(std::sqrt(eig.eigenvalues()(2 - i))).margin(1e-9));
      if (i > 0) CHECK(svd.s(i) <= svd.s(i - 1) + 1e-14);
    }
  }
  SECTION("deterministic sign convention") {
    Rng rng(9);
    const Matrix m = random_matrix(4, 4, rng);
    ThinSvd a = thin_svd(m);
    ThinSvd b = thin_svd(m);
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < 4; ++j) {
      Eigen::Index imax = 0;
      a.u.col(j).cwiseAbs().maxCoeff(&imax);
      CHECK(a.u(imax, j) >= 0.0);
    }
  }
}

TEST_CASE("procrustes solves trivial cases", "[linalg]") {
  SECTION("identity") {
    ProcrustesResult r = orthonormal_procrustes(Matrix::Identity(3, 3));
    CHECK((r.p - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("positive diagonal") {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 2.0;
    g(1, 1) = 3.0;
    ProcrustesResult r = orthonormal_procrustes(g);
    CHECK((r.p - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g * r.p).trace() == Catch::Approx(5.0));
  }
  SECTION("rotation") {
    Matrix g(2, 2);
    g << 0.0, -1.0, 1.0, 0.0;
    ProcrustesResult r = orthonormal_procrustes(g);
    CHECK((r.p - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g * r.p).trace() == Catch::Approx(2.0));
    // superior to random orthogonal competitors
    Rng rng(13);
    for (int i = 0; i < 10000; ++i) {
      const Matrix q = random_orthonormal(2, 2, rng);
      CHECK((g * q).trace() <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("procrustes optimality and singular-value identity", "[linalg]") {
  Rng rng(17);
  for (int seed = 0; seed < 20; ++seed) {
    Rng local(derive_seed(17, "procrustes", {static_cast<std::uint64_t>(seed)}));
    const int m = 2 + seed % 3;
    const int j = m + 1 + seed % 4;
    const Matrix g = random_matrix(m, j, local);
    ProcrustesResult r = orthonormal_procrustes(g);
    CHECK((r.p.transpose() * r.p - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <
          1e-10);
    const double obj = (g * r.p).trace();
    // objective equals the sum of singular values
    CHECK(obj == Catch::Approx(r.singular_values.sum()).epsilon(1e-9));
    for (int i = 0; i < 1000; ++i) {
      const Matrix q = random_orthonormal(j, m, local);
      CHECK((g * q).trace() <= obj + 1e-12 * std::max(1.0, std::abs(obj)));
    }
  }
}

TEST_CASE("procrustes flags rank deficiency", "[linalg]") {
  Matrix g = Matrix::Zero(2, 3);
  g(0, 0) = 1.0;
  ProcrustesResult r = orthonormal_procrustes(g);
  CHECK(r.rank_deficient);
  CHECK((r.p.transpose() * r.p - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

  Rng rng(23);
  ProcrustesResult full = orthonormal_procrustes(random_matrix(2, 4, rng));
  CHECK_FALSE(full.rank_deficient);
}

TEST_CASE("procrustes requires M <= J", "[linalg]") {
  CHECK_THROWS_AS(orthonormal_procrustes(Matrix::Zero(3, 2)), Error);
}

TEST_CASE("hadamard expectation kernel", "[linalg]") {
  SECTION("point masses of ones") {
    Vector one = Vector::Ones(3);
    Matrix z = Matrix::Zero(3, 3);
    CHECK((hadamard_outer_expectation(one, z, one, z) - Matrix::Ones(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  SECTION("standard normals give the identity") {
    Vector zero = Vector::Zero(3);
    Matrix eye = Matrix::Identity(3, 3);
    CHECK((hadamard_outer_expectation(zero, eye, zero, eye) - eye)
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  SECTION("asymmetric covariance rejected") {
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = 1e-3;
    CHECK_THROWS_AS(
        hadamard_outer_expectation(Vector::Zero(2), bad, Vector::Zero(2),
                                   Matrix::Identity(2, 2)),
        Error);
  }
  SECTION("matches Monte Carlo within 3 standard errors") {
    Rng rng(29);
    const int m = 3;
    Vector mean_c(m), mean_a(m);
    mean_c << 0.3, -1.1, 0.7;
    mean_a << 1.2, 0.4, -0.5;
    Matrix lc = random_matrix(m, m, rng) * 0.4;
    Matrix la = random_matrix(m, m, rng) * 0.3;
    Matrix cov_c = lc * lc.transpose() + 0.2 * Matrix::Identity(m, m);
    Matrix cov_a = la * la.transpose() + 0.2 * Matrix::Identity(m, m);
    const Matrix expect = hadamard_outer_expectation(mean_c, cov_c, mean_a, cov_a);
    // symmetric PSD
    CHECK((expect - expect.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(expect);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);

    Matrix se;
    Rng mc_rng(derive_seed(29, "hadamard-mc"));
    const Matrix mc = oracles::mc_hadamard_second_moment(mean_c, cov_c, mean_a,
                                                         cov_a, 1000000, mc_rng, &se);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        CHECK(std::abs(expect(i, j) - mc(i, j)) <= 3.0 * se(i, j) + 1e-12);
  }
  SECTION("element formula for diagonal D") {
    // element (m, m') must equal E[c_m c_m'] E[a_m a_m']
    Vector mean_c(2), mean_a(2);
    mean_c << 1.0, 2.0;
    mean_a << -1.0, 0.5;
    Matrix cov_c(2, 2), cov_a(2, 2);
    cov_c << 0.5, 0.1, 0.1, 0.3;
    cov_a << 0.2, -0.05, -0.05, 0.4;
    const Matrix out = hadamard_outer_expectation(mean_c, cov_c, mean_a, cov_a);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double ecc = mean_c(i) * mean_c(j) + cov_c(i, j);
        const double eaa = mean_a(i) * mean_a(j) + cov_a(i, j);
        CHECK(out(i, j) == Catch::Approx(ecc * eaa).epsilon(1e-12));
      }
  }
}
