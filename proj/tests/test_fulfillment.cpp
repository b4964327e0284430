#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"

#include "sgusm/error.hpp"
#include "sgusm/fulfillment.hpp"
#include "sgusm/numeric.hpp"

using namespace sgusm;

namespace {

BilinearParams params_from(const Eigen::MatrixXd& w) {
  BilinearParams p;
  p.weight = w;
  return p;
}

// Scalar probe loss sum(G .* reprs) and its gradient G.
double probe(const FulfillmentReprs& f, const Eigen::MatrixXd& g) { return (f.reprs.array() * g.array()).sum(); }

// Relative error with a magnitude floor: central differences at eps=1e-6 carry
// ~1e-10 absolute noise, so entries below ~1e-6 are compared absolutely.
double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b)); }

}  // namespace

TEST_CASE("softmax basics") {
  CHECK(softmax(Eigen::VectorXd::Constant(1, 5.0))[0] == 1.0);
  const Eigen::VectorXd u = softmax(Eigen::VectorXd::Constant(4, -2.5));
  for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25));
  Eigen::VectorXd s(3);
  s << 0.0, 1.0, 2.0;
  const auto got = softmax(s);
  const auto want = oracle::softmax({0.0, 1.0, 2.0});
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  // huge inputs stay finite thanks to max-shifting
  Eigen::VectorXd big(2);
  big << 1000.0, 999.0;
  CHECK(is_distribution(softmax(big)));
}

TEST_CASE("argmax_lowest breaks ties toward the lower index") {
  Eigen::VectorXd x(4);
  x << 0.1, 0.7, 0.7, 0.2;
  CHECK(argmax_lowest(x) == 1);
}

TEST_CASE("single turn: attention is [1] and every representation is d_1") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd d = Eigen::MatrixXd::Random(1, 4);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(3, 4);
  const auto p = BilinearParams::init(4, rng);
  for (auto mode : {AttentionMode::kStandard, AttentionMode::kLiteral}) {
    const auto f = fulfillment_reprs(d, t, p, mode);
    for (int i = 0; i < 3; ++i) {
      CHECK(f.attention(0, i) == 1.0);
      CHECK(f.reprs.col(i) == d.row(0).transpose());
    }
  }
}

TEST_CASE("equal scores give uniform attention") {
  const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(5, 3);
  Eigen::VectorXd t(3);
  t << 0.3, -0.2, 0.9;
  const auto p = params_from(Eigen::MatrixXd::Random(3, 3));
  for (auto mode : {AttentionMode::kStandard, AttentionMode::kLiteral}) {
    const auto a = attention(d, t, p, mode);
    for (int j = 0; j < 5; ++j) CHECK(a[j] == doctest::Approx(0.2));
  }
}

TEST_CASE("standard mode on scores (0,1,2) matches a direct evaluation") {
  // D = I3 rows scaled so that d_j^T W t = j with W = I, t = (0,1,2).
  const Eigen::MatrixXd d = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd t(3);
  t << 0.0, 1.0, 2.0;
  const auto a = attention(d, t, params_from(Eigen::MatrixXd::Identity(3, 3)), AttentionMode::kStandard);
  const double z = 1.0 + std::exp(1.0) + std::exp(2.0);
  CHECK(a[0] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(a[2] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
}

TEST_CASE("large score gap makes the representation equal the selected turn") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd d = Eigen::MatrixXd::Random(4, 3);
  d.row(2) << 10.0, 0.0, 0.0;
  d.row(0) << 0.0, 0.1, 0.0;
  d.row(1) << 0.0, 0.0, 0.1;
  d.row(3) << -1.0, 0.0, 0.0;
  Eigen::MatrixXd t(1, 3);
  t << 4.0, 0.0, 0.0;  // scores: 0, 0, 40, -4
  const auto f = fulfillment_reprs(d, t, params_from(Eigen::MatrixXd::Identity(3, 3)), AttentionMode::kStandard);
  CHECK((f.reprs.col(0) - d.row(2).transpose()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("identical attribute embeddings give identical columns") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd d = Eigen::MatrixXd::Random(3, 4);
  Eigen::MatrixXd t(2, 4);
  t.row(0) << 0.1, 0.2, 0.3, 0.4;
  t.row(1) = t.row(0);
  const auto f = fulfillment_reprs(d, t, BilinearParams::init(4, rng), AttentionMode::kStandard);
  CHECK(f.reprs.col(0) == f.reprs.col(1));
}

TEST_CASE("literal mode: softmax over exp of clamped scores") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto D = oracle::random_matrix(4, 3, rng, 3.0);
    const auto W = oracle::random_matrix(3, 3, rng, 3.0);
    const auto T = oracle::random_matrix(2, 3, rng, 3.0);
    const auto f = fulfillment_reprs(oracle::to_eigen(D), oracle::to_eigen(T), params_from(oracle::to_eigen(W)),
                                     AttentionMode::kLiteral);
    for (int i = 0; i < 2; ++i) {
      const auto want = oracle::attention(D, W, T[i], true);
      CHECK(is_distribution(f.attention.col(i)));
      for (int j = 0; j < 4; ++j) CHECK(f.attention(j, i) == doctest::Approx(want[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("property: simplex, convex hull and permutation equivariance") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = dim(rng), m = dim(rng), h = dim(rng);
    const auto mode = rep % 2 ? AttentionMode::kLiteral : AttentionMode::kStandard;
    const Eigen::MatrixXd d = oracle::to_eigen(oracle::random_matrix(n, h, rng, 2.0));
    const Eigen::MatrixXd t = oracle::to_eigen(oracle::random_matrix(m, h, rng, 2.0));
    const auto p = params_from(oracle::to_eigen(oracle::random_matrix(h, h, rng, 1.0)));
    const auto f = fulfillment_reprs(d, t, p, mode);
    for (int i = 0; i < m; ++i) {
      REQUIRE(is_distribution(f.attention.col(i), 1e-6));
      for (int k = 0; k < h; ++k) {
        CHECK(f.reprs(k, i) >= d.col(k).minCoeff() - 1e-5);
        CHECK(f.reprs(k, i) <= d.col(k).maxCoeff() + 1e-5);
      }
    }
    // reverse the turns
    const Eigen::MatrixXd rd = d.colwise().reverse();
    const auto g = fulfillment_reprs(rd, t, p, mode);
    CHECK((g.attention - f.attention.colwise().reverse()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.reprs - f.reprs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("shape mismatch and non-finite input are errors") {
  const auto p = params_from(Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(fulfillment_reprs(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(2, 4), p, AttentionMode::kStandard),
                  Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(fulfillment_reprs(bad, Eigen::MatrixXd::Ones(2, 3), p, AttentionMode::kStandard), NumericError);
}

TEST_CASE("gradient check through attention (W, D and T), both modes") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 5);
  const double eps = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = dim(rng), m = dim(rng), h = dim(rng);
    const auto mode = rep % 2 ? AttentionMode::kLiteral : AttentionMode::kStandard;
    Eigen::MatrixXd d = oracle::to_eigen(oracle::random_matrix(n, h, rng, 0.7));
    Eigen::MatrixXd t = oracle::to_eigen(oracle::random_matrix(m, h, rng, 0.7));
    BilinearParams p = params_from(oracle::to_eigen(oracle::random_matrix(h, h, rng, 0.7)));
    const Eigen::MatrixXd g = oracle::to_eigen(oracle::random_matrix(h, m, rng, 1.0));
    const auto fwd = fulfillment_reprs(d, t, p, mode);
    const auto grads = fulfillment_backward(d, t, p, mode, fwd, g);

    auto check = [&](Eigen::MatrixXd& x, const Eigen::MatrixXd& analytic) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          const double keep = x(r, c);
          x(r, c) = keep + eps;
          const double up = probe(fulfillment_reprs(d, t, p, mode), g);
          x(r, c) = keep - eps;
          const double down = probe(fulfillment_reprs(d, t, p, mode), g);
          x(r, c) = keep;
          const double numeric = (up - down) / (2 * eps);
          INFO("mode " << std::string(to_string(mode)) << " numeric " << numeric << " analytic " << analytic(r, c));
          CHECK(rel_err(numeric, analytic(r, c)) <= 1e-3);
        }
      }
    };
    check(p.weight, grads.weight);
    check(d, grads.turns);
    check(t, grads.attributes);
  }
}
