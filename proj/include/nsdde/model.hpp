#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "nsdde/rational.hpp"

namespace nsdde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using NeutralFn = std::function<Vector(const Vector&)>;
using DriftFn = std::function<Vector(const Vector&, const Vector&)>;
using DiffusionFn = std::function<Matrix(const Vector&, const Vector&)>;
using SegmentFn = std::function<Vector(double)>;

// The NSDDE problem data: d[X(t) - D(X(t-tau))] = b(X(t), X(t-tau)) dt
//                                               + sigma(X(t), X(t-tau)) dW(t),
// with deterministic initial segment xi on [-tau, 0].
struct ProblemSpec {
  int state_dim{1};
  int noise_dim{1};
  Rational delay{1, 1};    // tau > 0
  Rational horizon{2, 1};  // T > tau
  NeutralFn neutral_D;
  DriftFn drift_b;
  DiffusionFn diffusion_sigma;
  SegmentFn initial_xi;
};

// A radius-indexed sampled estimate of a local constant. The growth-ladder
// constants are never given in closed form; they are populated by sampling.
struct LocalConstant {
  double radius{0.0};
  double value{0.0};
};

struct AssumptionConstants {
  double kappa{0.0};  // contraction constant of the neutral map, in (0, 1/2)
  double K1{1.0};     // initial-segment Holder constant
  double K2{0.0};     // growth constant
  double K3{0.0};     // global one-sided Lipschitz constant
  double K4{0.0};     // polynomial Lipschitz constant
  double l{0.0};      // polynomial degree in the K4 bound
  double p{2.0};      // moment order

  std::vector<LocalConstant> L_R;     // local one-sided Lipschitz
  std::vector<LocalConstant> Lbar_R;  // sup of |b| on the radius box
  std::vector<LocalConstant> M_R;     // local one-sided Lipschitz of the balanced drift
  std::vector<LocalConstant> N_R;     // drift taming distance on the radius box
};

enum class ExampleId { CubicGlobal, CosineLocal };

// Built-in deterministic smooth segments: xi(t) = scale * ones, or
// xi(t) = scale * cos(t) * ones.
struct InitialSegmentChoice {
  enum class Kind { Constant, Cosine };
  Kind kind{Kind::Constant};
  double scale{1.0};
};

struct ExampleModel {
  ExampleId id{ExampleId::CubicGlobal};
  double a{0.0};  // CubicGlobal parameter, |a| < 1/2
  ProblemSpec spec;
  AssumptionConstants constants;
};

// Worked one-dimensional examples:
//   CubicGlobal: D(y) = -a y, b(x,y) = x - x^3 + a y - a^3 y^3, sigma = x + a y
//   CosineLocal: D(y) = cos(y)/4, b(x,y) = x - x^3 + cos(y), sigma = y sin x + x sin y
ExampleModel make_example(ExampleId id, double a, const InitialSegmentChoice& xi,
                          const Rational& tau = Rational(1, 1),
                          const Rational& horizon = Rational(2, 1));

const char* example_name(ExampleId id);

// [xi(-m delta), ..., xi(0)], delta = tau/m, evaluated exactly at grid times.
std::vector<Vector> sample_initial_grid(const ProblemSpec& spec, int m);

}  // namespace nsdde
