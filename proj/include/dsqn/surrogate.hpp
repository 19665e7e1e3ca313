#ifndef DSQN_SURROGATE_HPP
#define DSQN_SURROGATE_HPP

#include <cmath>
#include <numbers>

#include "dsqn/common.hpp"

namespace dsqn {

enum class SurrogateFamily { kArctan, kSigmoid };

struct SurrogateConfig {
  SurrogateFamily family = SurrogateFamily::kArctan;
  double alpha = 2.0;  // smoothness factor; larger is closer to the step

  void validate() const { require(alpha > 0.0, "SurrogateConfig: alpha must be positive"); }
};

// Smooth stand-in for the spike step function. Both families pass through
// 1/2 at x = 0 and approach the step as alpha grows.
inline double surrogate_value(double x, const SurrogateConfig& cfg) {
  require_finite(x, "surrogate_value");
  switch (cfg.family) {
    case SurrogateFamily::kArctan:
      return std::atan(0.5 * std::numbers::pi * cfg.alpha * x) / std::numbers::pi + 0.5;
    case SurrogateFamily::kSigmoid:
      return 1.0 / (1.0 + std::exp(-cfg.alpha * x));
  }
  throw ContractError("surrogate_value: unknown family");
}

// Derivative of surrogate_value; strictly positive, maximal at x = 0
// (alpha/2 for arctan, alpha/4 for sigmoid).
inline double surrogate_grad(double x, const SurrogateConfig& cfg) {
  require_finite(x, "surrogate_grad");
  switch (cfg.family) {
    case SurrogateFamily::kArctan: {
      const double u = 0.5 * std::numbers::pi * cfg.alpha * x;
      return cfg.alpha / (2.0 * (1.0 + u * u));
    }
    case SurrogateFamily::kSigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-cfg.alpha * x));
      return cfg.alpha * s * (1.0 - s);
    }
  }
  throw ContractError("surrogate_grad: unknown family");
}

}  // namespace dsqn

#endif  // DSQN_SURROGATE_HPP
