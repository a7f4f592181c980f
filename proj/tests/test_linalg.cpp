#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "gopf/linalg.hpp"
#include "oracles.hpp"

using gopf::linalg::SymMatrix;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("min_eigenvalue on simple matrices") {
  SymMatrix id = SymMatrix::from_dense(MatrixXd::Identity(3, 3));
  CHECK(gopf::linalg::min_eigenvalue(id) == doctest::Approx(1.0).epsilon(1e-12));

  MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  CHECK(gopf::linalg::min_eigenvalue(SymMatrix::from_dense(flip)) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("min_eigenvalue matches the power-iteration oracle") {
  std::mt19937 rng(7);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 20; ++trial) {
    int d = 2 + trial % 9;
    MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
    MatrixXd sym = 0.5 * (a + a.transpose());
    double mine = gopf::linalg::min_eigenvalue(SymMatrix::from_dense(sym));
    double oracle = oracles::min_eigenvalue_power(sym);
    CHECK(mine == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("rayleigh quotient bounds the smallest eigenvalue") {
  std::mt19937 rng(21);
  std::normal_distribution<double> dist;
  int d = 12;
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
  SymMatrix sym = SymMatrix::from_dense(0.5 * (a + a.transpose()));
  double lmin = gopf::linalg::min_eigenvalue(sym);
  for (int k = 0; k < 100; ++k) {
    VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = dist(rng);
    double rq = v.dot(sym.dense() * v) / v.squaredNorm();
    CHECK(lmin <= rq + 1e-12);
  }
}

TEST_CASE("is_psd basic cases") {
  CHECK(gopf::linalg::is_psd(SymMatrix(3), 1e-9));
  MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  CHECK_FALSE(gopf::linalg::is_psd(SymMatrix::from_dense(flip), 1e-9));
  CHECK(gopf::linalg::is_psd(SymMatrix::from_dense(MatrixXd::Identity(4, 4)), 0.0));
}

TEST_CASE("is_psd shift monotonicity at the boundary") {
  std::mt19937 rng(3);
  std::normal_distribution<double> dist;
  int d = 8;
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
  MatrixXd sym = 0.5 * (a + a.transpose());
  double lmin = gopf::linalg::min_eigenvalue(SymMatrix::from_dense(sym));

  MatrixXd above = sym - (lmin - 1e-6) * MatrixXd::Identity(d, d);
  CHECK(gopf::linalg::is_psd(SymMatrix::from_dense(above), 1e-9));
  MatrixXd below = sym - (lmin + 1.0) * MatrixXd::Identity(d, d);
  CHECK_FALSE(gopf::linalg::is_psd(SymMatrix::from_dense(below), 1e-9));
}

TEST_CASE("solve_sym simple and seeded systems") {
  SymMatrix id = SymMatrix::from_dense(MatrixXd::Identity(3, 3));
  VectorXd e1 = VectorXd::Unit(3, 0);
  CHECK((gopf::linalg::solve_sym(id, e1) - e1).norm() == doctest::Approx(0.0));

  MatrixXd d2 = MatrixXd::Zero(2, 2);
  d2(0, 0) = 2.0;
  d2(1, 1) = 4.0;
  VectorXd rhs(2);
  rhs << 2, 4;
  VectorXd sol = gopf::linalg::solve_sym(SymMatrix::from_dense(d2), rhs);
  CHECK(sol[0] == doctest::Approx(1.0));
  CHECK(sol[1] == doctest::Approx(1.0));

  // random SPD with known solution of all ones
  std::mt19937 rng(42);
  std::normal_distribution<double> dist;
  int d = 10;
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
  MatrixXd spd = a * a.transpose() + MatrixXd::Identity(d, d);
  VectorXd ones = VectorXd::Ones(d);
  VectorXd sol2 = gopf::linalg::solve_sym(SymMatrix::from_dense(spd), spd * ones);
  CHECK((sol2 - ones).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("solve_sym residual bound holds on random symmetric systems") {
  std::mt19937 rng(11);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 12; ++trial) {
    int d = 3 + trial;
    MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
    SymMatrix sym = SymMatrix::from_dense(0.5 * (a + a.transpose()) +
                                          0.1 * MatrixXd::Identity(d, d));
    VectorXd rhs(d);
    for (int i = 0; i < d; ++i) rhs[i] = dist(rng);
    VectorXd sol = gopf::linalg::solve_sym(sym, rhs);
    double res = (sym.dense() * sol - rhs).cwiseAbs().maxCoeff();
    CHECK(res <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("solve_sym flags singular input") {
  MatrixXd sing = MatrixXd::Zero(3, 3);
  sing(0, 0) = 1.0;  // rank 1
  VectorXd rhs(3);
  rhs << 1, 1, 1;
  CHECK_THROWS_AS(gopf::linalg::solve_sym(SymMatrix::from_dense(sing), rhs),
                  gopf::linalg::SingularMatrixError);
}
