#include "nsdde/model.hpp"

#include <cmath>

#include "nsdde/errors.hpp"

namespace nsdde {

namespace {

SegmentFn make_segment(const InitialSegmentChoice& choice, int n) {
  switch (choice.kind) {
    case InitialSegmentChoice::Kind::Constant: {
      const double c = choice.scale;
      return [c, n](double) { return Vector::Constant(n, c); };
    }
    case InitialSegmentChoice::Kind::Cosine: {
      const double c = choice.scale;
      return [c, n](double t) { return Vector::Constant(n, c * std::cos(t)); };
    }
  }
  throw SchemaError("unknown initial segment kind");
}

}  // namespace

const char* example_name(ExampleId id) {
  switch (id) {
    case ExampleId::CubicGlobal:
      return "CubicGlobal";
    case ExampleId::CosineLocal:
      return "CosineLocal";
  }
  return "unknown";
}

ExampleModel make_example(ExampleId id, double a, const InitialSegmentChoice& xi,
                          const Rational& tau, const Rational& horizon) {
  if (!(tau > Rational(0, 1))) throw SchemaError("delay tau must be positive");
  if (!(horizon > tau)) throw SchemaError("horizon T must exceed the delay tau");

  ExampleModel model;
  model.id = id;
  model.a = a;
  model.spec.state_dim = 1;
  model.spec.noise_dim = 1;
  model.spec.delay = tau;
  model.spec.horizon = horizon;
  model.spec.initial_xi = make_segment(xi, 1);

  switch (id) {
    case ExampleId::CubicGlobal: {
      if (!(std::abs(a) < 0.5)) {
        throw SchemaError("CubicGlobal requires |a| < 1/2, got a = " + std::to_string(a));
      }
      model.spec.neutral_D = [a](const Vector& y) { return Vector(-a * y); };
      model.spec.drift_b = [a](const Vector& x, const Vector& y) {
        return Vector(x.array() - x.array().cube() + a * y.array() -
                      (a * a * a) * y.array().cube());
      };
      model.spec.diffusion_sigma = [a](const Vector& x, const Vector& y) {
        Matrix s(1, 1);
        s(0, 0) = x(0) + a * y(0);
        return s;
      };
      model.constants.kappa = std::abs(a);
      model.constants.l = 2.0;  // cubic drift
      break;
    }
    case ExampleId::CosineLocal: {
      model.spec.neutral_D = [](const Vector& y) {
        return Vector(0.25 * y.array().cos());
      };
      model.spec.drift_b = [](const Vector& x, const Vector& y) {
        return Vector(x.array() - x.array().cube() + y.array().cos());
      };
      model.spec.diffusion_sigma = [](const Vector& x, const Vector& y) {
        Matrix s(1, 1);
        s(0, 0) = y(0) * std::sin(x(0)) + x(0) * std::sin(y(0));
        return s;
      };
      model.constants.kappa = 0.25;  // |cos y - cos ybar|/4 <= |y - ybar|/4
      model.constants.l = 2.0;
      break;
    }
  }
  return model;
}

std::vector<Vector> sample_initial_grid(const ProblemSpec& spec, int m) {
  if (m < 1) throw SchemaError("sample_initial_grid needs m >= 1");
  const double tau = spec.delay.value();
  std::vector<Vector> grid;
  grid.reserve(static_cast<std::size_t>(m) + 1);
  for (int k = -m; k <= 0; ++k) {
    // t_k = k * (tau/m); the endpoints land exactly on -tau and 0.
    const double t = tau * static_cast<double>(k) / static_cast<double>(m);
    grid.push_back(spec.initial_xi(t));
  }
  return grid;
}

}  // namespace nsdde
