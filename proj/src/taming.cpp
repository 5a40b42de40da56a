#include "nsdde/taming.hpp"

#include <cmath>
#include <sstream>

#include "nsdde/errors.hpp"

namespace nsdde {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "non-finite " << what << " value [" << v.transpose() << "]";
    throw InvalidCoefficientError(os.str());
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "non-finite " << what << " value (" << m.rows() << "x" << m.cols() << " block)";
    throw InvalidCoefficientError(os.str());
  }
}

}  // namespace

double smoothstep_falloff(double r, double R) {
  if (r <= R) return 1.0;
  if (r >= R + 1.0) return 0.0;
  const double u = r - R;
  const double u3 = u * u * u;
  return 1.0 - (6.0 * u * u * u3 - 15.0 * u * u3 + 10.0 * u3);
}

double cutoff(const Vector& x, const Vector& y, const CutoffConfig& cfg) {
  return smoothstep_falloff(x.norm(), cfg.R) * smoothstep_falloff(y.norm(), cfg.R);
}

Vector tame_drift_sigmoidal(const Vector& b_val, double delta, double alpha) {
  require_finite(b_val, "drift");
  return b_val / (1.0 + std::pow(delta, alpha) * b_val.norm());
}

Matrix tame_diffusion_sigmoidal(const Matrix& sigma_val, double delta, double alpha) {
  require_finite(sigma_val, "diffusion");
  return sigma_val / (1.0 + std::pow(delta, alpha) * sigma_val.squaredNorm());
}

std::pair<Vector, Matrix> tame_balanced(const Vector& b_val, const Matrix& sigma_val,
                                        double delta, double alpha) {
  require_finite(b_val, "drift");
  require_finite(sigma_val, "diffusion");
  const double gamma =
      1.0 + std::pow(delta, alpha) * b_val.norm() + std::pow(delta, alpha / 2.0) * sigma_val.norm();
  return {Vector(b_val / gamma), Matrix(sigma_val / gamma)};
}

Vector truncated_drift(const Vector& b_val, const Matrix& sigma_val, const Vector& x,
                       const Vector& y, double delta, double alpha, const CutoffConfig& cut) {
  return tame_balanced(b_val, sigma_val, delta, alpha).first * cutoff(x, y, cut);
}

TamedCoefficients make_tamed(const ProblemSpec& spec, const TamingConfig& cfg,
                             std::optional<CutoffConfig> cut) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 0.5)) {
    throw SchemaError("taming exponent alpha must lie in (0, 1/2]");
  }
  if (!(cfg.K5 >= 1.0)) throw SchemaError("taming bound K5 must be at least 1");
  if (cut && !(cut->R > 0.0)) throw SchemaError("cutoff radius R must be positive");

  TamedCoefficients out;
  out.alpha = cfg.alpha;
  out.K5 = cfg.K5;

  const DriftFn b = spec.drift_b;
  const DiffusionFn sigma = spec.diffusion_sigma;
  const double alpha = cfg.alpha;

  switch (cfg.mode) {
    case TamingMode::Sigmoidal:
      out.b_tamed = [b, alpha](const Vector& x, const Vector& y, double delta) {
        return tame_drift_sigmoidal(b(x, y), delta, alpha);
      };
      out.sigma_tamed = [sigma, alpha](const Vector& x, const Vector& y, double delta) {
        return tame_diffusion_sigmoidal(sigma(x, y), delta, alpha);
      };
      break;
    case TamingMode::Balanced:
      out.b_tamed = [b, sigma, alpha](const Vector& x, const Vector& y, double delta) {
        return tame_balanced(b(x, y), sigma(x, y), delta, alpha).first;
      };
      out.sigma_tamed = [b, sigma, alpha](const Vector& x, const Vector& y, double delta) {
        return tame_balanced(b(x, y), sigma(x, y), delta, alpha).second;
      };
      if (cut) {
        const CutoffConfig cutoff_cfg = *cut;
        out.b_truncated = [b, sigma, alpha, cutoff_cfg](const Vector& x, const Vector& y,
                                                        double delta) {
          return truncated_drift(b(x, y), sigma(x, y), x, y, delta, alpha, cutoff_cfg);
        };
      }
      break;
  }
  return out;
}

TamedCoefficients make_untamed(const ProblemSpec& spec) {
  TamedCoefficients out;
  out.taming_active = false;
  const DriftFn b = spec.drift_b;
  const DiffusionFn sigma = spec.diffusion_sigma;
  out.b_tamed = [b](const Vector& x, const Vector& y, double) { return b(x, y); };
  out.sigma_tamed = [sigma](const Vector& x, const Vector& y, double) { return sigma(x, y); };
  return out;
}

}  // namespace nsdde
