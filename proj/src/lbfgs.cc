#include "forge/lbfgs.h"

#include <cmath>
#include <deque>
#include <sstream>

#include <spdlog/spdlog.h>

#include "forge/error.h"

namespace forge {

LbfgsResult MinimizeLbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Eigen::VectorXd grad(result.x.size());
  result.value = f(result.x, grad);
  if (!std::isfinite(result.value) || !grad.allFinite()) {
    throw Error("lbfgs: non-finite objective at the starting point");
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd new_grad(grad.size());

  for (std::size_t iter = 0;; ++iter) {
    result.gradient_norm = grad.norm();
    result.iterations = iter;
    if (result.gradient_norm <= options.gradient_tolerance) {
      result.converged = true;
      return result;
    }
    if (iter >= options.max_iterations) return result;

    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t j = s_hist.size(); j-- > 0;) {
      alpha[j] = rho_hist[j] * s_hist[j].dot(q);
      q -= alpha[j] * y_hist[j];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, result.gradient_norm);
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      double beta = rho_hist[j] * y_hist[j].dot(q);
      q += (alpha[j] - beta) * s_hist[j];
    }
    Eigen::VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad / std::max(1.0, result.gradient_norm);
      slope = grad.dot(direction);
    }

    double step = 1.0;
    double new_value = 0.0;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (std::size_t ls = 0; ls < options.max_line_search; ++ls) {
      x_new = result.x + step * direction;
      new_value = f(x_new, new_grad);
      if (std::isfinite(new_value) && new_grad.allFinite() &&
          new_value <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(new_value)) {
        std::ostringstream msg;
        msg << "lbfgs: objective diverged at iteration " << iter << " (last finite value "
            << result.value << ", gradient norm " << result.gradient_norm << ")";
        throw Error(msg.str());
      }
      spdlog::debug("lbfgs: line search stalled at iteration {} (gradient norm {:.3g})", iter,
                    result.gradient_norm);
      return result;
    }

    Eigen::VectorXd s = x_new - result.x;
    Eigen::VectorXd y = new_grad - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    result.x = std::move(x_new);
    result.value = new_value;
    grad = new_grad;
  }
}

}  // namespace forge
