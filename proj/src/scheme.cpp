#include "nsdde/scheme.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsdde/errors.hpp"

namespace nsdde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Drift used by the scheme variant: the truncated drift for the improved
// scheme, the tamed drift otherwise.
const std::function<Vector(const Vector&, const Vector&, double)>& scheme_drift(
    SchemeVariant variant, const TamedCoefficients& tamed) {
  if (variant == SchemeVariant::ImprovedTruncated) {
    if (!tamed.b_truncated) {
      throw SchemaError(
          "the improved scheme needs Balanced taming with a cutoff (no truncated drift is "
          "configured)");
    }
    return tamed.b_truncated;
  }
  return tamed.b_tamed;
}

StepOutcome theta_step_core(
    const DelayView& history, std::int64_t k, const Vector& dW, const SchemeConfig& cfg,
    const TamedCoefficients& tamed, const NeutralFn& D,
    const std::function<Vector(const Vector&, const Vector&, double)>& drift) {
  const double delta = cfg.delta.value();
  const std::int64_t m = cfg.delay_steps;

  const Vector x = history.at(k).transpose();
  const Vector x_del = history.at(k - m).transpose();
  const Vector x_del_next = history.at(k + 1 - m).transpose();

  const Vector b_explicit = drift(x, x_del, delta);
  const Matrix sigma = tamed.sigma_tamed(x, x_del, delta);

  Vector c = D(x_del_next) + x - D(x_del) + (1.0 - cfg.theta) * delta * b_explicit + sigma * dW;

  StepOutcome out;
  out.explicit_drift_norm = b_explicit.norm();
  if (cfg.theta == 0.0 || !c.allFinite()) {
    // theta = 0 is the explicit scheme; a non-finite c is a blow-up the
    // caller flags, no point solving around it.
    out.state = std::move(c);
    return out;
  }

  const double theta_delta = cfg.theta * delta;
  auto g = [&](const Vector& u) -> Vector { return c + theta_delta * drift(u, x_del_next, delta); };
  ImplicitSolveResult solved = solve_implicit(g, c, cfg.solver);
  out.state = std::move(solved.root);
  out.iterations = solved.iterations;
  out.residual = solved.residual;
  return out;
}

}  // namespace

const char* variant_name(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::TamedTheta:
      return "TamedTheta";
    case SchemeVariant::SplitStep:
      return "SplitStep";
    case SchemeVariant::ImprovedTruncated:
      return "ImprovedTruncated";
  }
  return "unknown";
}

SchemeConfig make_scheme_config(SchemeVariant variant, double theta, const Rational& delta,
                                const Rational& tau, const Rational& horizon,
                                const ImplicitSolverPolicy& solver, GuardEnforcement guard_mode) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw SchemaError("theta must lie in [0, 1]");
  if (!(delta > Rational(0, 1))) throw SchemaError("step delta must be positive");
  if (solver.max_iters < 1) throw SchemaError("solver max_iters must be at least 1");
  if (!(solver.tol_residual > 0.0)) throw SchemaError("solver tol_residual must be positive");

  const auto m = Rational::divide_exact(tau, delta);
  if (!m.exact || m.value < 1) {
    throw GridMismatchError("delta = " + delta.str() + " does not divide the delay tau = " +
                            tau.str() + " into a positive integer");
  }
  const auto M = Rational::divide_exact(horizon, delta);
  if (!M.exact || M.value < 1) {
    throw GridMismatchError("delta = " + delta.str() + " does not divide the horizon T = " +
                            horizon.str() + " into a positive integer");
  }

  SchemeConfig cfg;
  cfg.variant = variant;
  cfg.theta = theta;
  cfg.delta = delta;
  cfg.delay_steps = m.value;
  cfg.total_steps = M.value;
  cfg.solver = solver;
  cfg.guard_mode = guard_mode;
  return cfg;
}

GuardReport check_guards(const SchemeConfig& cfg, const AssumptionConstants& constants,
                         const TamingConfig& taming, const GuardConstants& estimated) {
  GuardReport report;
  report.configured = cfg.delta.value();
  report.delta1 = kInf;
  report.delta2 = kInf;
  report.delta3 = kInf;

  const double p = constants.p;
  const double kappa = constants.kappa;

  if (cfg.theta > 0.0) {
    if (estimated.K3_tilde > 0.0) report.delta1 = 1.0 / (cfg.theta * estimated.K3_tilde);
    report.delta2 = std::pow(6.0, 1.0 - p) * (std::pow(2.0, -p) - std::pow(kappa, p)) /
                    (std::pow(cfg.theta, p) * std::pow(taming.K5, p));
    if (cfg.variant == SchemeVariant::ImprovedTruncated && estimated.Mbar_R0 > 0.0) {
      report.delta3 = 1.0 / (cfg.theta * estimated.Mbar_R0);
    }
  }

  const double delta = report.configured;
  bool ok = delta > 0.0 && delta < 1.0;
  if (cfg.theta > 0.0) {
    ok = ok && delta < report.delta1 && delta < report.delta2 && delta < report.delta3;
  }
  report.admissible = ok;

  std::ostringstream os;
  os << "delta = " << delta << " vs bounds delta1 = " << report.delta1
     << ", delta2 = " << report.delta2 << ", delta3 = " << report.delta3
     << " (theta = " << cfg.theta << ", p = " << p << ", kappa = " << kappa << ")";
  report.detail = os.str();

  if (!ok && cfg.guard_mode == GuardEnforcement::Strict) {
    throw GuardError("step size inadmissible: " + report.detail);
  }
  return report;
}

ImplicitSolveResult solve_implicit(const std::function<Vector(const Vector&)>& g,
                                   const Vector& initial_guess, const ImplicitSolverPolicy& policy) {
  Vector u = initial_guess;
  Vector gu = g(u);
  double residual = (gu - u).norm();
  int iterations = 0;
  int stalled = 0;
  double previous = residual;
  bool fixed_point_phase = true;

  const Eigen::Index n = u.size();
  // Aim two orders below the contract so per-step solver error does not
  // accumulate to the tolerance scale along a trajectory; success is still
  // judged against tol_residual.
  const double target = 0.01 * policy.tol_residual;

  while (residual > target && iterations < policy.max_iters) {
    if (fixed_point_phase) {
      u = gu;
      gu = g(u);
      residual = (gu - u).norm();
      ++iterations;
      if (policy.method == SolverMethod::NewtonFallback) {
        if (!(residual < previous)) {
          if (++stalled >= 10) fixed_point_phase = false;
        } else {
          stalled = 0;
        }
        previous = residual;
      }
    } else {
      // Newton on F(u) = u - g(u), forward-difference Jacobian.
      Vector F = u - gu;
      Matrix J(n, n);
      Vector probe = u;
      for (Eigen::Index j = 0; j < n; ++j) {
        probe(j) += policy.fd_jacobian_eps;
        J.col(j) = ((probe - g(probe)) - F) / policy.fd_jacobian_eps;
        probe(j) = u(j);
      }
      u -= J.partialPivLu().solve(F);
      gu = g(u);
      residual = (gu - u).norm();
      ++iterations;
      if (!std::isfinite(residual)) break;
    }
  }

  if (!(residual <= policy.tol_residual)) {
    throw SolverError("implicit step solver did not converge", iterations, residual);
  }
  return {std::move(u), iterations, residual};
}

StepOutcome step_tamed_theta(const DelayView& history, std::int64_t k, const Vector& dW,
                             const SchemeConfig& cfg, const TamedCoefficients& tamed,
                             const NeutralFn& D) {
  return theta_step_core(history, k, dW, cfg, tamed, D, tamed.b_tamed);
}

StepOutcome step_improved(const DelayView& history, std::int64_t k, const Vector& dW,
                          const SchemeConfig& cfg, const TamedCoefficients& tamed,
                          const NeutralFn& D) {
  return theta_step_core(history, k, dW, cfg, tamed, D,
                         scheme_drift(SchemeVariant::ImprovedTruncated, tamed));
}

SplitStepOutcome step_split_step(const DelayView& y_history, const DelayView& z_history,
                                 std::int64_t k, const Vector& dW, const SchemeConfig& cfg,
                                 const TamedCoefficients& tamed, const NeutralFn& D) {
  const double delta = cfg.delta.value();
  const std::int64_t m = cfg.delay_steps;

  const Vector y_del = y_history.at(k - m).transpose();
  const Vector z_k = z_history.at(k).transpose();
  const Vector z_del = z_history.at(k - m).transpose();

  Vector c = D(y_del) + z_k - D(z_del);

  SplitStepOutcome out;
  if (cfg.theta == 0.0) {
    out.y_k = std::move(c);
  } else {
    const double theta_delta = cfg.theta * delta;
    auto g = [&](const Vector& u) -> Vector {
      return c + theta_delta * tamed.b_tamed(u, y_del, delta);
    };
    ImplicitSolveResult solved = solve_implicit(g, c, cfg.solver);
    out.y_k = std::move(solved.root);
    out.iterations = solved.iterations;
    out.residual = solved.residual;
  }

  const Vector b_k = tamed.b_tamed(out.y_k, y_del, delta);
  const Matrix sigma_k = tamed.sigma_tamed(out.y_k, y_del, delta);
  out.drift_norm = b_k.norm();
  const Vector z_del_next = z_history.at(k + 1 - m).transpose();
  out.z_next = D(z_del_next) + z_k - D(z_del) + delta * b_k + sigma_k * dW;
  return out;
}

PathResult integrate(const ProblemSpec& spec, const SchemeConfig& cfg,
                     const TamedCoefficients& tamed, const BrownianGrid& noise) {
  const double delta = cfg.delta.value();
  if (noise.n_steps != cfg.total_steps) {
    throw GridMismatchError("noise grid has " + std::to_string(noise.n_steps) +
                            " steps, scheme expects " + std::to_string(cfg.total_steps));
  }
  if (noise.step != delta) {
    throw GridMismatchError("noise step does not match the configured delta");
  }
  if (noise.noise_dim != spec.noise_dim) {
    throw GridMismatchError("noise dimension does not match the model");
  }

  const std::int64_t m = cfg.delay_steps;
  const std::int64_t M = cfg.total_steps;
  const int n = spec.state_dim;

  PathResult out;
  out.initial.resize(m + 1, n);
  {
    const auto segment = sample_initial_grid(spec, static_cast<int>(m));
    for (std::int64_t j = 0; j <= m; ++j) out.initial.row(j) = segment[static_cast<std::size_t>(j)];
  }
  out.y_grid.resize(M + 1, n);
  out.y_grid.row(0) = out.initial.row(m);

  const double drift_bound_scale =
      tamed.taming_active ? tamed.K5 * std::pow(delta, -tamed.alpha) : kInf;
  auto state_norm = [&out, m](std::int64_t j) {
    return j >= 0 ? out.y_grid.row(j).norm() : out.initial.row(j + m).norm();
  };
  auto check_drift_bound = [&](double b_norm, std::int64_t current, std::int64_t delayed,
                               std::int64_t k) {
    const double bound = drift_bound_scale * (1.0 + state_norm(current) + state_norm(delayed));
    if (b_norm > bound * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "tamed drift bound violated at step " << k << ": |b_D| = " << b_norm << " exceeds "
         << bound;
      throw Error(ExitCode::Failure, os.str());
    }
  };

  const DelayView history{&out.initial, &out.y_grid, m};

  if (cfg.variant == SchemeVariant::SplitStep) {
    out.z_grid.resize(M + 1, n);
    const Vector xi0 = out.initial.row(m).transpose();
    const Vector xi_tau = out.initial.row(0).transpose();
    out.z_grid.row(0) = (xi0 - cfg.theta * delta * tamed.b_tamed(xi0, xi_tau, delta)).transpose();
    const DelayView z_history{&out.initial, &out.z_grid, m};

    out.solver_iterations.reserve(static_cast<std::size_t>(M) + 1);
    out.solver_residuals.reserve(static_cast<std::size_t>(M) + 1);

    for (std::int64_t k = 0; k < M; ++k) {
      const Vector dW = noise.increments.row(k).transpose();
      SplitStepOutcome step;
      try {
        step = step_split_step(history, z_history, k, dW, cfg, tamed, spec.neutral_D);
      } catch (const SolverError& err) {
        throw SolverError(std::string(err.what()) + " at step " + std::to_string(k),
                          err.iterations, err.last_residual, k);
      }
      if (!step.y_k.allFinite() || !step.z_next.allFinite()) {
        out.blew_up = true;
        out.blow_up_step = k;
        out.y_grid.conservativeResize(k, Eigen::NoChange);
        out.z_grid.conservativeResize(k + 1, Eigen::NoChange);
        return out;
      }
      out.y_grid.row(k) = step.y_k;
      check_drift_bound(step.drift_norm, k, k - m, k);
      out.z_grid.row(k + 1) = step.z_next;
      out.solver_iterations.push_back(step.iterations);
      out.solver_residuals.push_back(step.residual);
    }

    // Terminal y-solve: z_{t_M} is known, close the grid at t = T.
    const Vector y_del = history.at(M - m).transpose();
    const Vector z_M = out.z_grid.row(M).transpose();
    const Vector z_del = z_history.at(M - m).transpose();
    Vector c = spec.neutral_D(y_del) + z_M - spec.neutral_D(z_del);
    try {
      if (cfg.theta == 0.0) {
        out.y_grid.row(M) = c;
        out.solver_iterations.push_back(0);
        out.solver_residuals.push_back(0.0);
      } else {
        const double theta_delta = cfg.theta * delta;
        auto g = [&](const Vector& u) -> Vector {
          return c + theta_delta * tamed.b_tamed(u, y_del, delta);
        };
        ImplicitSolveResult solved = solve_implicit(g, c, cfg.solver);
        out.y_grid.row(M) = solved.root;
        out.solver_iterations.push_back(solved.iterations);
        out.solver_residuals.push_back(solved.residual);
      }
    } catch (const SolverError& err) {
      throw SolverError(std::string(err.what()) + " at step " + std::to_string(M), err.iterations,
                        err.last_residual, M);
    }
    return out;
  }

  const auto& drift = scheme_drift(cfg.variant, tamed);
  out.solver_iterations.reserve(static_cast<std::size_t>(M));
  out.solver_residuals.reserve(static_cast<std::size_t>(M));

  for (std::int64_t k = 0; k < M; ++k) {
    const Vector dW = noise.increments.row(k).transpose();
    StepOutcome step;
    try {
      step = theta_step_core(history, k, dW, cfg, tamed, spec.neutral_D, drift);
    } catch (const SolverError& err) {
      throw SolverError(std::string(err.what()) + " at step " + std::to_string(k), err.iterations,
                        err.last_residual, k);
    }
    if (!step.state.allFinite()) {
      out.blew_up = true;
      out.blow_up_step = k;
      out.y_grid.conservativeResize(k + 1, Eigen::NoChange);
      return out;
    }
    check_drift_bound(step.explicit_drift_norm, k, k - m, k);
    out.y_grid.row(k + 1) = step.state;
    out.solver_iterations.push_back(step.iterations);
    out.solver_residuals.push_back(step.residual);
  }
  return out;
}

}  // namespace nsdde
