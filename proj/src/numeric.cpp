#include "sgusm/numeric.hpp"

#include <cmath>

namespace sgusm {

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  Eigen::VectorXd e = (x.array() - m).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
  const double dot = y.dot(dy);
  return (y.array() * (dy.array() - dot)).matrix();
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& x) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

bool is_distribution(const Eigen::VectorXd& x, double tol) {
  if (x.size() == 0 || !x.allFinite()) return false;
  if (x.minCoeff() < -tol) return false;
  return std::abs(x.sum() - 1.0) <= tol;
}

}  // namespace sgusm
