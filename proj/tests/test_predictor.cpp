#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracle.hpp"

#include "sgusm/error.hpp"
#include "sgusm/numeric.hpp"
#include "sgusm/predictor.hpp"

using namespace sgusm;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b)); }

ClassifierParams random_params(int h, std::mt19937_64& rng) {
  ClassifierParams p;
  p.w1 = oracle::to_eigen(oracle::random_matrix(h, h, rng, 0.6));
  p.w2 = oracle::to_eigen(oracle::random_matrix(h, h, rng, 0.6));
  p.w3 = oracle::to_eigen(oracle::random_matrix(3, h, rng, 0.6));
  p.b1 = oracle::to_eigen(oracle::random_matrix(1, h, rng, 0.3)[0]);
  p.b2 = oracle::to_eigen(oracle::random_matrix(1, h, rng, 0.3)[0]);
  p.b3 = oracle::to_eigen(oracle::random_matrix(1, 3, rng, 0.3)[0]);
  return p;
}

oracle::Vec mlp_oracle(const Eigen::VectorXd& h, const ClassifierParams& p) {
  return oracle::mlp(oracle::from_eigen(h), oracle::from_eigen(p.w1), oracle::from_eigen(p.b1),
                     oracle::from_eigen(p.w2), oracle::from_eigen(p.b2), oracle::from_eigen(p.w3),
                     oracle::from_eigen(p.b3));
}

}  // namespace

TEST_CASE("aggregate on hand-built cases") {
  Eigen::MatrixXd r(2, 3);
  r << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd s(3);
  s << 1, 0, 0;
  CHECK(aggregate(r, s).isApprox(r.col(0)));
  s << 0.5, 0.5, 0;
  Eigen::VectorXd want(2);
  want << 1.5, 4.5;
  CHECK((aggregate(r, s) - want).norm() < 1e-15);
  s = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK((aggregate(r, s) - r.rowwise().mean()).norm() < 1e-14);
  CHECK_THROWS_AS(aggregate(r, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("aggregate is linear in each argument") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = oracle::to_eigen(oracle::random_matrix(4, 3, rng));
    const auto b = oracle::to_eigen(oracle::random_matrix(4, 3, rng));
    const auto s = oracle::to_eigen(oracle::random_matrix(1, 3, rng)[0]);
    const auto u = oracle::to_eigen(oracle::random_matrix(1, 3, rng)[0]);
    CHECK((aggregate(a + 2.0 * b, s) - aggregate(a, s) - 2.0 * aggregate(b, s)).norm() < 1e-12);
    CHECK((aggregate(a, s - 3.0 * u) - aggregate(a, s) + 3.0 * aggregate(a, u)).norm() < 1e-12);
  }
}

TEST_CASE("classifier matches the oracle MLP") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 100; ++rep) {
    const int h = 1 + static_cast<int>(rng() % 8);
    const auto p = random_params(h, rng);
    const auto x = oracle::to_eigen(oracle::random_matrix(1, h, rng)[0]);
    const auto got = predict(x, p, false);
    const auto want = mlp_oracle(x, p);
    REQUIRE(got.size() == 3);
    CHECK(is_distribution(got));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(got[c] - want[c]) <= 1e-6);
  }
}

TEST_CASE("zero weights and biases give the uniform distribution") {
  const auto p = ClassifierParams::zeros(5);
  std::mt19937_64 rng(23);
  const auto x = oracle::to_eigen(oracle::random_matrix(1, 5, rng)[0]);
  for (int c = 0; c < 3; ++c) CHECK(predict(x, p, false)[c] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("evaluation mode is deterministic; training mode uses the generator") {
  std::mt19937_64 rng(24);
  const auto p = random_params(6, rng);
  const auto x = oracle::to_eigen(oracle::random_matrix(1, 6, rng)[0]);
  CHECK(predict(x, p, false) == predict(x, p, false));
  std::mt19937_64 a(1), b(1);
  CHECK(predict(x, p, true, 0.5, &a) == predict(x, p, true, 0.5, &b));
  CHECK_THROWS_AS(predict(x, p, true, 0.5, nullptr), Error);
}

TEST_CASE("dropout masks are inverted-dropout scaled") {
  std::mt19937_64 rng(25);
  const auto m = DropoutMasks::sample(1000, 0.2, rng);
  int kept = 0;
  for (Eigen::Index i = 0; i < m.hidden1.size(); ++i) {
    CHECK((m.hidden1[i] == 0.0 || m.hidden1[i] == doctest::Approx(1.25)));
    kept += m.hidden1[i] != 0.0;
  }
  CHECK(kept > 700);
  CHECK(kept < 900);
  const auto none = DropoutMasks::sample(10, 0.0, rng);
  CHECK(none.hidden2 == Eigen::VectorXd::Ones(10));
}

TEST_CASE("non-finite input is an error") {
  std::mt19937_64 rng(26);
  const auto p = random_params(3, rng);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  x[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict(x, p, false), NumericError);
  x[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(predict(x, p, false), NumericError);
}

TEST_CASE("gradient check through aggregate and the classifier") {
  // Loss: -log p[y] with h = R S; gradients w.r.t. MLP params and R.
  std::mt19937_64 rng(27);
  const double eps = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const int h = 1 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 4);
    const int y = static_cast<int>(rng() % 3);
    auto p = random_params(h, rng);
    Eigen::MatrixXd r = oracle::to_eigen(oracle::random_matrix(h, m, rng));
    const Eigen::VectorXd s = oracle::to_eigen(oracle::softmax(oracle::random_matrix(1, m, rng)[0]));
    auto loss = [&]() { return -std::log(predict(aggregate(r, s), p, false)[y]); };

    const Eigen::VectorXd x = aggregate(r, s);
    const auto trace = classifier_forward(x, p);
    Eigen::VectorXd d_logits = trace.probs;
    d_logits[y] -= 1.0;
    const auto g = classifier_backward(x, p, trace, d_logits);
    const Eigen::MatrixXd d_r = g.h * s.transpose();

    auto check = [&](auto& t, const auto& analytic) {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double keep = t.data()[i];
        t.data()[i] = keep + eps;
        const double up = loss();
        t.data()[i] = keep - eps;
        const double down = loss();
        t.data()[i] = keep;
        const double numeric = (up - down) / (2 * eps);
        INFO("numeric " << numeric << " analytic " << analytic.data()[i]);
        CHECK(rel_err(numeric, analytic.data()[i]) <= 1e-3);
      }
    };
    check(p.w1, g.params.w1);
    check(p.b1, g.params.b1);
    check(p.w2, g.params.w2);
    check(p.b2, g.params.b2);
    check(p.w3, g.params.w3);
    check(p.b3, g.params.b3);
    check(r, d_r);
  }
}

TEST_CASE("init draws within +-1/sqrt(fan_in)") {
  std::mt19937_64 rng(28);
  const auto p = ClassifierParams::init(16, rng);
  const double bound = 1.0 / std::sqrt(16.0);
  CHECK(p.w1.cwiseAbs().maxCoeff() <= bound);
  CHECK(p.w3.rows() == 3);
  CHECK(p.b3.cwiseAbs().maxCoeff() <= bound);
}
