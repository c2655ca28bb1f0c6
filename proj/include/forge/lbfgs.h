#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace forge {

struct LbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-5;  // on the gradient 2-norm
  std::size_t max_line_search = 60;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Returns f(x) and writes its gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

// Minimizes f with limited-memory BFGS and backtracking (Armijo) line
// search. Throws forge::Error when the objective becomes non-finite at the
// starting point or the line search cannot find a finite value.
LbfgsResult MinimizeLbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace forge
