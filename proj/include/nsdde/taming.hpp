#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "nsdde/model.hpp"

namespace nsdde {

enum class TamingMode { Sigmoidal, Balanced };

struct TamingConfig {
  double alpha{0.5};  // in (0, 1/2]
  double K5{1.0};     // >= 1
  TamingMode mode{TamingMode::Sigmoidal};
};

// Smooth cutoff zeta_R(x, y) = phi(|x|) phi(|y|) built from the quintic
// smoothstep: 1 on the R-box, 0 outside the (R+1)-box, C^2 in between.
// phi' peaks at 15/8, which is also the sampled Lipschitz bound of zeta_R.
struct CutoffConfig {
  double R{3.0};
  static constexpr double lipschitz_constant = 15.0 / 8.0;
};

// phi(r): 1 for r <= R, 0 for r >= R+1, 1 - (6u^5 - 15u^4 + 10u^3) on the band.
double smoothstep_falloff(double r, double R);

double cutoff(const Vector& x, const Vector& y, const CutoffConfig& cfg);

// b / (1 + delta^alpha |b|); norm stays below delta^{-alpha}.
Vector tame_drift_sigmoidal(const Vector& b_val, double delta, double alpha);

// sigma / (1 + delta^alpha ||sigma||^2), Frobenius norm; ||.||^2 <= delta^{-alpha}.
Matrix tame_diffusion_sigmoidal(const Matrix& sigma_val, double delta, double alpha);

// Shared denominator 1 + delta^alpha |b| + delta^{alpha/2} ||sigma|| applied
// to both coefficients.
std::pair<Vector, Matrix> tame_balanced(const Vector& b_val, const Matrix& sigma_val,
                                        double delta, double alpha);

// Balanced drift multiplied by the cutoff: vanishes outside the (R+1)-box,
// equals the balanced drift on the R-box.
Vector truncated_drift(const Vector& b_val, const Matrix& sigma_val, const Vector& x,
                       const Vector& y, double delta, double alpha, const CutoffConfig& cut);

// Coefficient closures bound to a model, evaluated as (x, y, delta).
struct TamedCoefficients {
  std::function<Vector(const Vector&, const Vector&, double)> b_tamed;
  std::function<Matrix(const Vector&, const Vector&, double)> sigma_tamed;
  // Present only in Balanced mode with a cutoff; used by the improved scheme.
  std::function<Vector(const Vector&, const Vector&, double)> b_truncated;

  // False for the raw passthrough used by the divergence comparison arm;
  // the integrator skips its taming-bound assertion in that case.
  bool taming_active{true};
  double alpha{0.5};
  double K5{1.0};
};

TamedCoefficients make_tamed(const ProblemSpec& spec, const TamingConfig& cfg,
                             std::optional<CutoffConfig> cut = std::nullopt);

// b and sigma unmodified (the untamed explicit scheme of the comparison arm).
TamedCoefficients make_untamed(const ProblemSpec& spec);

}  // namespace nsdde
