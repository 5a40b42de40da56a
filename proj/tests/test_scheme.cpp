#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "nsdde/model.hpp"
#include "nsdde/paths.hpp"
#include "nsdde/scheme.hpp"
#include "nsdde/taming.hpp"

#include "golden_values.hpp"

using namespace nsdde;

namespace {

Vector scalar(double v) {
  Vector out(1);
  out(0) = v;
  return out;
}

// Independent scalar bisection oracle for u = c + theta*delta*f(u): solves
// F(u) = u - c - theta*delta*f(u) on a bracket derived from |f| < delta^{-alpha}.
double bisect_implicit(const std::function<double(double)>& f, double c, double theta,
                       double delta, double alpha) {
  const double reach = theta * std::pow(delta, 1.0 - alpha) + 1e-6;
  double lo = c - reach;
  double hi = c + reach;
  auto F = [&](double u) { return u - c - theta * delta * f(u); };
  REQUIRE(F(lo) < 0.0);
  REQUIRE(F(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (F(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ProblemSpec zero_dynamics(double xi0) {
  ProblemSpec spec;
  spec.state_dim = 1;
  spec.noise_dim = 1;
  spec.delay = Rational(1, 1);
  spec.horizon = Rational(2, 1);
  spec.neutral_D = [](const Vector& y) { return Vector(Vector::Zero(y.size())); };
  spec.drift_b = [](const Vector& x, const Vector&) { return Vector(Vector::Zero(x.size())); };
  spec.diffusion_sigma = [](const Vector& x, const Vector&) {
    return Matrix(Matrix::Zero(x.size(), 1));
  };
  spec.initial_xi = [xi0](double) { return scalar(xi0); };
  return spec;
}

constexpr double kGoldenOneStepCubic = nsdde_golden::kOneStepCubic;
constexpr double kGoldenOneStepImproved = nsdde_golden::kOneStepImproved;
constexpr double kGoldenTerminalCubic = nsdde_golden::kTerminalCubic;

}  // namespace

TEST_CASE("theta = 0 step is the explicit update") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamingConfig taming{0.5, 1.0, TamingMode::Sigmoidal};
  const TamedCoefficients tamed = make_tamed(model.spec, taming);
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 0.0, Rational(1, 64),
                                        model.spec.delay, model.spec.horizon);

  Matrix initial(cfg.delay_steps + 1, 1);
  initial.setOnes();
  Matrix states(cfg.total_steps + 1, 1);
  states.row(0) << 1.0;
  const DelayView history{&initial, &states, cfg.delay_steps};

  const StepOutcome step = step_tamed_theta(history, 0, scalar(0.0), cfg, tamed, model.spec.neutral_D);

  const double delta = 1.0 / 64.0;
  const double b11 = 0.234375;  // b(1,1)
  const double expected = 1.0 + delta * b11 / (1.0 + std::sqrt(delta) * b11);
  CHECK(step.state(0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(step.iterations == 0);
}

TEST_CASE("zero dynamics give a constant path") {
  const ProblemSpec spec = zero_dynamics(1.5);
  const TamedCoefficients tamed = make_tamed(spec, TamingConfig{});
  for (const auto variant : {SchemeVariant::TamedTheta, SchemeVariant::SplitStep}) {
    for (double theta : {0.0, 0.5, 1.0}) {
      SchemeConfig cfg =
          make_scheme_config(variant, theta, Rational(1, 8), spec.delay, spec.horizon);
      const BrownianGrid noise = generate(3, 0, 1, cfg.delta.value(), cfg.total_steps);
      const PathResult path = integrate(spec, cfg, tamed, noise);
      CHECK_FALSE(path.blew_up);
      for (Eigen::Index k = 0; k <= cfg.total_steps; ++k) CHECK(path.y_grid(k, 0) == 1.5);
      if (variant == SchemeVariant::SplitStep) {
        for (Eigen::Index k = 0; k <= cfg.total_steps; ++k) CHECK(path.z_grid(k, 0) == 1.5);
      }
    }
  }
}

TEST_CASE("one implicit step matches the scalar bisection oracle") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamingConfig taming{0.5, 1.0, TamingMode::Sigmoidal};
  const TamedCoefficients tamed = make_tamed(model.spec, taming);
  const double delta = 1.0 / 64.0;
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 1.0, Rational(1, 64),
                                        model.spec.delay, model.spec.horizon);
  cfg.solver.tol_residual = 1e-13;

  Matrix initial(cfg.delay_steps + 1, 1);
  initial.setOnes();
  Matrix states(cfg.total_steps + 1, 1);
  states.row(0) << 1.0;
  const DelayView history{&initial, &states, cfg.delay_steps};

  const StepOutcome step =
      step_tamed_theta(history, 0, scalar(0.0), cfg, tamed, model.spec.neutral_D);

  // theta = 1: u = c + delta * b_D(u, 1) with c = y_0 (the neutral terms cancel).
  auto f = [&](double u) {
    const double b = model.spec.drift_b(scalar(u), scalar(1.0))(0);
    return b / (1.0 + std::sqrt(delta) * std::abs(b));
  };
  const double oracle = bisect_implicit(f, 1.0, 1.0, delta, 0.5);
  CHECK(step.state(0) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(step.state(0) == doctest::Approx(kGoldenOneStepCubic).epsilon(1e-10));
  CHECK(step.residual <= cfg.solver.tol_residual);
}

TEST_CASE("one improved step matches the scalar bisection oracle") {
  const ExampleModel model = make_example(ExampleId::CosineLocal, 0.0, {});
  TamingConfig taming{0.5, 1.0, TamingMode::Balanced};
  CutoffConfig cut;
  cut.R = 3.0;
  const TamedCoefficients tamed = make_tamed(model.spec, taming, cut);
  const double delta = 1.0 / 128.0;
  SchemeConfig cfg = make_scheme_config(SchemeVariant::ImprovedTruncated, 0.5, Rational(1, 128),
                                        model.spec.delay, model.spec.horizon);
  cfg.solver.tol_residual = 1e-13;

  Matrix initial(cfg.delay_steps + 1, 1);
  initial.setOnes();
  Matrix states(cfg.total_steps + 1, 1);
  states.row(0) << 1.0;
  const DelayView history{&initial, &states, cfg.delay_steps};

  const BrownianGrid noise = generate(7, 0, 1, delta, cfg.total_steps);
  const Vector dW = noise.increments.row(0).transpose();

  const StepOutcome step = step_improved(history, 0, dW, cfg, tamed, model.spec.neutral_D);

  // c collects the explicit terms; the delayed argument is xi = 1 throughout.
  auto b_trunc = [&](double u) {
    return truncated_drift(model.spec.drift_b(scalar(u), scalar(1.0)),
                           model.spec.diffusion_sigma(scalar(u), scalar(1.0)), scalar(u),
                           scalar(1.0), delta, 0.5, cut)(0);
  };
  const double c = 1.0 + (1.0 - 0.5) * delta * b_trunc(1.0) +
                   tame_balanced(model.spec.drift_b(scalar(1.0), scalar(1.0)),
                                 model.spec.diffusion_sigma(scalar(1.0), scalar(1.0)), delta, 0.5)
                           .second(0, 0) *
                       dW(0);
  const double oracle = bisect_implicit(b_trunc, c, 0.5, delta, 0.5);
  CHECK(step.state(0) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(step.state(0) == doctest::Approx(kGoldenOneStepImproved).epsilon(1e-10));
}

TEST_CASE("solve_implicit contract") {
  ImplicitSolverPolicy policy;

  SUBCASE("constant map returns in one iteration") {
    auto g = [](const Vector&) { return scalar(3.25); };
    const ImplicitSolveResult result = solve_implicit(g, scalar(0.0), policy);
    CHECK(result.root(0) == 3.25);
    CHECK(result.iterations == 1);
  }

  SUBCASE("scalar contraction reaches 2/3 within 60 iterations") {
    auto g = [](const Vector& u) { return scalar(1.0 - 0.5 * u(0)); };
    const ImplicitSolveResult result = solve_implicit(g, scalar(1.0), policy);
    CHECK(result.root(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(result.iterations <= 60);
  }

  SUBCASE("distinct starts agree inside the uniqueness window") {
    auto g = [](const Vector& u) { return scalar(0.3 + 0.25 * std::sin(u(0))); };
    const Vector r1 = solve_implicit(g, scalar(0.3), policy).root;
    const Vector r2 = solve_implicit(g, scalar(1.3), policy).root;
    CHECK((r1 - r2).norm() < 10.0 * policy.tol_residual);
  }

  SUBCASE("pure fixed point without fallback reports non-convergence") {
    ImplicitSolverPolicy fixed;
    fixed.method = SolverMethod::FixedPoint;
    fixed.max_iters = 15;
    auto g = [](const Vector& u) { return scalar(1.0 - 2.0 * u(0)); };  // expanding map
    CHECK_THROWS_AS(solve_implicit(g, scalar(0.9), fixed), SolverError);
  }

  SUBCASE("newton fallback rescues an expanding fixed point") {
    auto g = [](const Vector& u) { return scalar(1.0 - 2.0 * u(0)); };  // root 1/3
    const ImplicitSolveResult result = solve_implicit(g, scalar(0.9), policy);
    CHECK(result.root(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-11));
  }
}

TEST_CASE("guard arithmetic") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  TamingConfig taming{0.5, 1.0, TamingMode::Sigmoidal};
  AssumptionConstants constants = model.constants;
  constants.p = 2.0;

  SUBCASE("delta2 closed form") {
    SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 1.0, Rational(1, 64),
                                          model.spec.delay, model.spec.horizon);
    const GuardReport report = check_guards(cfg, constants, taming, {});
    CHECK(report.delta2 == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(report.admissible);
  }

  SUBCASE("theta = 0 admits any step in (0,1)") {
    for (const auto& delta : {Rational(1, 3), Rational(63, 64), Rational(1, 1024)}) {
      SchemeConfig cfg;
      cfg.variant = SchemeVariant::TamedTheta;
      cfg.theta = 0.0;
      cfg.delta = delta;
      cfg.delay_steps = 1;
      cfg.total_steps = 2;
      const GuardReport report = check_guards(cfg, constants, taming, {});
      CHECK(report.admissible);
    }
  }

  SUBCASE("boundary step is rejected under strict enforcement") {
    SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 1.0, Rational(1, 2),
                                          Rational(1, 1), Rational(2, 1));
    GuardConstants estimated;
    estimated.K3_tilde = 2.0;  // delta1 = 1/2 exactly; delta = 1/2 must fail
    CHECK_THROWS_AS(check_guards(cfg, constants, taming, estimated), GuardError);

    cfg.guard_mode = GuardEnforcement::WarnOnly;
    const GuardReport report = check_guards(cfg, constants, taming, estimated);
    CHECK_FALSE(report.admissible);
    CHECK(report.delta1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.detail.find("delta1") != std::string::npos);
  }
}

namespace {

double max_grid_distance(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.rows(); ++k) worst = std::max(worst, (a.row(k) - b.row(k)).norm());
  return worst;
}

}  // namespace

TEST_CASE("tamed theta and split-step agree at every grid point") {
  struct Case {
    ExampleId id;
    TamingMode mode;
  };
  for (const Case c : {Case{ExampleId::CubicGlobal, TamingMode::Sigmoidal},
                       Case{ExampleId::CosineLocal, TamingMode::Balanced}}) {
    const ExampleModel model = make_example(c.id, 0.25, {});
    TamingConfig taming{0.5, 1.0, c.mode};
    const TamedCoefficients tamed = make_tamed(model.spec, taming);
    for (double theta : {0.0, 0.5, 1.0}) {
      for (const auto& delta : {Rational(1, 16), Rational(1, 64)}) {
        SchemeConfig direct = make_scheme_config(SchemeVariant::TamedTheta, theta, delta,
                                                 model.spec.delay, model.spec.horizon);
        SchemeConfig split = direct;
        split.variant = SchemeVariant::SplitStep;
        const BrownianGrid noise =
            generate(42, 11, 1, delta.value(), direct.total_steps);
        const PathResult y_direct = integrate(model.spec, direct, tamed, noise);
        const PathResult y_split = integrate(model.spec, split, tamed, noise);
        REQUIRE_FALSE(y_direct.blew_up);
        REQUIRE_FALSE(y_split.blew_up);
        CHECK(max_grid_distance(y_direct.y_grid, y_split.y_grid) <=
              10.0 * direct.solver.tol_residual);
        CHECK(y_split.z_grid.rows() == y_split.y_grid.rows());
      }
    }
  }
}

TEST_CASE("improved scheme equals the balanced theta scheme on paths inside the cutoff") {
  const ExampleModel model = make_example(ExampleId::CosineLocal, 0.0, {});
  TamingConfig taming{0.5, 1.0, TamingMode::Balanced};
  CutoffConfig cut;
  cut.R = 10.0;  // paths stay well inside
  const TamedCoefficients tamed = make_tamed(model.spec, taming, cut);

  SchemeConfig plain = make_scheme_config(SchemeVariant::TamedTheta, 0.5, Rational(1, 64),
                                          model.spec.delay, model.spec.horizon);
  SchemeConfig improved = plain;
  improved.variant = SchemeVariant::ImprovedTruncated;

  const BrownianGrid noise = generate(1, 5, 1, plain.delta.value(), plain.total_steps);
  const PathResult a = integrate(model.spec, plain, tamed, noise);
  const PathResult b = integrate(model.spec, improved, tamed, noise);
  for (Eigen::Index k = 0; k <= plain.total_steps; ++k) {
    REQUIRE(std::abs(a.y_grid(k, 0)) < cut.R);
  }
  CHECK(max_grid_distance(a.y_grid, b.y_grid) <= 10.0 * plain.solver.tol_residual);
}

TEST_CASE("improved scheme drift vanishes beyond the cutoff shell") {
  const ExampleModel model = make_example(ExampleId::CosineLocal, 0.0, {});
  TamingConfig taming{0.5, 1.0, TamingMode::Balanced};
  CutoffConfig cut;
  cut.R = 3.0;
  const TamedCoefficients tamed = make_tamed(model.spec, taming, cut);
  // both arguments beyond R+1: the truncated drift is exactly zero
  CHECK(tamed.b_truncated(scalar(5.0), scalar(6.0), 0.01)(0) == 0.0);
}

TEST_CASE("full trajectory matches an independent reimplementation") {
  // Straightforward scalar loop, written directly from the update rule, with
  // the same Brownian stream; do not reuse library scheme machinery.
  const double a = 0.25;
  const double delta = 1.0 / 64.0;
  const double alpha = 0.5;
  const int m = 64;
  const int M = 128;

  const BrownianGrid noise = generate(42, 0, 1, delta, M);

  std::vector<double> y(static_cast<std::size_t>(M + m + 1), 1.0);  // xi = 1 on [-tau, 0]
  for (int k = 0; k < M; ++k) {
    const double yk = y[static_cast<std::size_t>(k + m)];
    const double ykm = y[static_cast<std::size_t>(k)];
    const double ykp1m = y[static_cast<std::size_t>(k + 1)];
    const double b = yk - yk * yk * yk + a * ykm - a * a * a * ykm * ykm * ykm;
    const double s = yk + a * ykm;
    const double b_tamed = b / (1.0 + std::pow(delta, alpha) * std::abs(b));
    const double s_tamed = s / (1.0 + std::pow(delta, alpha) * s * s);
    y[static_cast<std::size_t>(k + 1 + m)] = (-a * ykp1m) + yk + a * ykm + delta * b_tamed +
                                             s_tamed * noise.increments(k, 0);
  }
  const double oracle_terminal = y.back();

  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{0.5, 1.0, TamingMode::Sigmoidal});
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 0.0, Rational(1, 64),
                                        model.spec.delay, model.spec.horizon);
  const PathResult path = integrate(model.spec, cfg, tamed, noise);
  REQUIRE_FALSE(path.blew_up);
  CHECK(path.y_grid(M, 0) == doctest::Approx(oracle_terminal).epsilon(1e-12));
  CHECK(path.y_grid(M, 0) == doctest::Approx(kGoldenTerminalCubic).epsilon(1e-8));
}

TEST_CASE("integration is deterministic") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{});
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 0.5, Rational(1, 32),
                                        model.spec.delay, model.spec.horizon);
  const BrownianGrid noise = generate(9, 4, 1, cfg.delta.value(), cfg.total_steps);
  const PathResult p1 = integrate(model.spec, cfg, tamed, noise);
  const PathResult p2 = integrate(model.spec, cfg, tamed, noise);
  CHECK(p1.y_grid == p2.y_grid);
}

TEST_CASE("no blow-up across one thousand tamed paths") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25,
                                          {InitialSegmentChoice::Kind::Constant, 2.0});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{0.5, 1.0, TamingMode::Sigmoidal});
  for (double theta : {0.0, 1.0}) {
    SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, theta, Rational(1, 64),
                                          model.spec.delay, model.spec.horizon);
    for (int path = 0; path < 1000; ++path) {
      const BrownianGrid noise = generate(20240401, path, 1, cfg.delta.value(), cfg.total_steps);
      const PathResult result = integrate(model.spec, cfg, tamed, noise);
      REQUIRE_FALSE(result.blew_up);
    }
  }
}

TEST_CASE("untamed explicit paths from a large start blow up and are flagged") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25,
                                          {InitialSegmentChoice::Kind::Constant, 6.0});
  const TamedCoefficients raw = make_untamed(model.spec);
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 0.0, Rational(1, 4),
                                        model.spec.delay, model.spec.horizon);
  const BrownianGrid noise = generate(11, 0, 1, cfg.delta.value(), cfg.total_steps);
  const PathResult path = integrate(model.spec, cfg, raw, noise);
  CHECK(path.blew_up);
  CHECK(path.blow_up_step >= 0);
  CHECK(path.y_grid.allFinite());  // partial trajectory keeps only finite states
}

TEST_CASE("solver failure carries the step index") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25,
                                          {InitialSegmentChoice::Kind::Constant, 2.0});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{0.5, 1.0, TamingMode::Sigmoidal});
  ImplicitSolverPolicy stubborn;
  stubborn.method = SolverMethod::FixedPoint;
  stubborn.max_iters = 2;
  stubborn.tol_residual = 1e-15;
  SchemeConfig cfg = make_scheme_config(SchemeVariant::TamedTheta, 1.0, Rational(1, 2),
                                        model.spec.delay, model.spec.horizon, stubborn,
                                        GuardEnforcement::WarnOnly);
  const BrownianGrid noise = generate(2, 0, 1, cfg.delta.value(), cfg.total_steps);
  try {
    integrate(model.spec, cfg, tamed, noise);
    FAIL("expected SolverError");
  } catch (const SolverError& err) {
    CHECK(err.step_index >= 0);
    CHECK(err.iterations >= 1);
  }
}

TEST_CASE("theta = 0 and theta = 1 trajectories approach each other as the step shrinks") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{0.5, 1.0, TamingMode::Sigmoidal});

  const Rational fine_level(1, 1024);
  const int n_paths = 4;
  std::vector<double> distances;
  for (int level = 4; level <= 8; ++level) {
    const Rational delta(1, 1 << level);
    SchemeConfig explicit_cfg = make_scheme_config(SchemeVariant::TamedTheta, 0.0, delta,
                                                   model.spec.delay, model.spec.horizon);
    SchemeConfig implicit_cfg = make_scheme_config(SchemeVariant::TamedTheta, 1.0, delta,
                                                   model.spec.delay, model.spec.horizon,
                                                   ImplicitSolverPolicy{},
                                                   GuardEnforcement::WarnOnly);
    std::vector<double> per_path;
    for (int path = 0; path < n_paths; ++path) {
      const BrownianGrid fine = generate(42, path, 1, fine_level.value(),
                                         Rational::divide_exact(model.spec.horizon, fine_level).value);
      const BrownianGrid noise = coarsen(fine, Rational::divide_exact(delta, fine_level).value);
      const PathResult y0 = integrate(model.spec, explicit_cfg, tamed, noise);
      const PathResult y1 = integrate(model.spec, implicit_cfg, tamed, noise);
      const Eigen::Index stride = explicit_cfg.total_steps / 32;
      double worst = 0.0;
      for (Eigen::Index c = 0; c <= 32; ++c) {
        worst = std::max(worst, (y0.y_grid.row(c * stride) - y1.y_grid.row(c * stride)).norm());
      }
      per_path.push_back(worst);
    }
    double mean = 0.0;
    for (double d : per_path) mean += d;
    distances.push_back(mean / n_paths);
  }
  for (std::size_t i = 0; i + 1 < distances.size(); ++i) {
    CHECK(distances[i + 1] <= 1.2 * distances[i]);
  }
}

TEST_CASE("split-step initialization matches its defining relations at theta = 0") {
  const ExampleModel model = make_example(ExampleId::CubicGlobal, 0.25, {});
  const TamedCoefficients tamed = make_tamed(model.spec, TamingConfig{});
  SchemeConfig cfg = make_scheme_config(SchemeVariant::SplitStep, 0.0, Rational(1, 16),
                                        model.spec.delay, model.spec.horizon);
  const BrownianGrid noise = generate(13, 2, 1, cfg.delta.value(), cfg.total_steps);
  const PathResult path = integrate(model.spec, cfg, tamed, noise);

  // z_0 = xi(0) when theta = 0, and y_k solves the y-equation explicitly.
  CHECK(path.z_grid(0, 0) == 1.0);
  const std::int64_t m = cfg.delay_steps;
  for (std::int64_t k = 0; k <= cfg.total_steps; ++k) {
    const double y_del = k - m >= 0 ? path.y_grid(k - m, 0) : path.initial(k, 0);
    const double z_del = k - m >= 0 ? path.z_grid(k - m, 0) : path.initial(k, 0);
    const double expected =
        model.spec.neutral_D(scalar(y_del))(0) + path.z_grid(k, 0) -
        model.spec.neutral_D(scalar(z_del))(0);
    CHECK(path.y_grid(k, 0) == doctest::Approx(expected).epsilon(1e-14));
  }
}
