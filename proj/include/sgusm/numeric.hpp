#pragma once

#include <Eigen/Dense>

namespace sgusm {

// Max-shifted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& x);

// Gradient of L w.r.t. softmax inputs given y = softmax(x) and dL/dy.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& y, const Eigen::VectorXd& dy);

// Index of the largest entry; the lowest index wins ties.
Eigen::Index argmax_lowest(const Eigen::VectorXd& x);

// True when every entry is >= -tol and the entries sum to 1 within tol.
bool is_distribution(const Eigen::VectorXd& x, double tol = 1e-6);

}  // namespace sgusm
