#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nsdde/model.hpp"
#include "nsdde/paths.hpp"
#include "nsdde/taming.hpp"

namespace nsdde {

enum class SchemeVariant { TamedTheta, SplitStep, ImprovedTruncated };
enum class GuardEnforcement { Strict, WarnOnly };
enum class SolverMethod { FixedPoint, NewtonFallback };

const char* variant_name(SchemeVariant v);

struct ImplicitSolverPolicy {
  SolverMethod method{SolverMethod::NewtonFallback};
  double tol_residual{1e-12};
  int max_iters{100};
  double fd_jacobian_eps{1e-7};
};

struct SchemeConfig {
  SchemeVariant variant{SchemeVariant::TamedTheta};
  double theta{0.5};        // in [0, 1]
  Rational delta{1, 64};    // step, with delta = tau/m = T/M exactly
  std::int64_t delay_steps{0};  // m
  std::int64_t total_steps{0};  // M
  ImplicitSolverPolicy solver{};
  GuardEnforcement guard_mode{GuardEnforcement::Strict};
};

// Derives m and M from exact rational division; throws GridMismatchError when
// delta does not divide tau and T.
SchemeConfig make_scheme_config(SchemeVariant variant, double theta, const Rational& delta,
                                const Rational& tau, const Rational& horizon,
                                const ImplicitSolverPolicy& solver = {},
                                GuardEnforcement guard_mode = GuardEnforcement::Strict);

// Sampled constants the step-size bounds consume; zero means "not estimated"
// and leaves the corresponding bound unconstrained.
struct GuardConstants {
  double K3_tilde{0.0};  // one-sided Lipschitz constant of the tamed drift
  double Mbar_R0{0.0};   // global one-sided constant of the truncated drift
};

struct GuardReport {
  double delta1{0.0};  // 1/(theta K3~)
  double delta2{0.0};  // 6^{1-p} (2^{-p} - kappa^p) / (theta^p K5^p)
  double delta3{0.0};  // 1/(theta Mbar), improved scheme only
  double configured{0.0};
  bool admissible{true};
  std::string detail;
};

// Computes the admissibility bounds and compares them to the configured step.
// Strict mode throws GuardError on violation; WarnOnly returns the annotated
// report. theta = 0 admits any step in (0, 1).
GuardReport check_guards(const SchemeConfig& cfg, const AssumptionConstants& constants,
                         const TamingConfig& taming, const GuardConstants& estimated);

struct ImplicitSolveResult {
  Vector root;
  int iterations{0};
  double residual{0.0};
};

// Solves u = g(u). Fixed-point iteration from the supplied predictor; with
// NewtonFallback, ten consecutive non-contracting residuals switch to Newton
// on F(u) = u - g(u) with a forward-difference Jacobian.
ImplicitSolveResult solve_implicit(const std::function<Vector(const Vector&)>& g,
                                   const Vector& initial_guess,
                                   const ImplicitSolverPolicy& policy);

// Resolves y_{t_j} across the grid/initial-segment boundary: j >= 0 reads the
// trajectory, j < 0 reads the sampled segment (row j + m holds xi(j delta)).
struct DelayView {
  const Matrix* initial{nullptr};  // (m+1) x n
  const Matrix* states{nullptr};   // rows filled up to the current step
  std::int64_t m{0};

  Eigen::RowVectorXd at(std::int64_t j) const {
    return j >= 0 ? states->row(j) : initial->row(j + m);
  }
};

struct PathResult {
  Matrix y_grid;   // (M+1) x n, y_grid.row(k) = y_{t_k}
  Matrix z_grid;   // (M+1) x n for the split-step variant, otherwise empty
  Matrix initial;  // (m+1) x n sampled initial segment
  std::vector<int> solver_iterations;
  std::vector<double> solver_residuals;
  bool blew_up{false};
  std::int64_t blow_up_step{-1};
};

struct StepOutcome {
  Vector state;
  int iterations{0};
  double residual{0.0};
  double explicit_drift_norm{0.0};  // |b_D(y_k, y_{k-m})|, for the taming-bound assertion
};

// One step k -> k+1 of the tamed theta scheme: solves
//   u = D(y_{k+1-m}) + y_k - D(y_{k-m}) + theta delta b_D(u, y_{k+1-m})
//     + (1-theta) delta b_D(y_k, y_{k-m}) + sigma_D(y_k, y_{k-m}) dW_k.
StepOutcome step_tamed_theta(const DelayView& history, std::int64_t k, const Vector& dW,
                             const SchemeConfig& cfg, const TamedCoefficients& tamed,
                             const NeutralFn& D);

// One step of the split-step scheme: solves the implicit y-equation at index
// k, then advances z explicitly. z_delayed resolves z_{t_{k-m}} and
// z_{t_{k+1-m}} with negative indices mapping to the initial segment.
struct SplitStepOutcome {
  Vector y_k;
  Vector z_next;
  int iterations{0};
  double residual{0.0};
  double drift_norm{0.0};  // |b_D(y_k, y_{k-m})|
};
SplitStepOutcome step_split_step(const DelayView& y_history, const DelayView& z_history,
                                 std::int64_t k, const Vector& dW, const SchemeConfig& cfg,
                                 const TamedCoefficients& tamed, const NeutralFn& D);

// Tamed theta step with the truncated drift in place of the tamed drift.
StepOutcome step_improved(const DelayView& history, std::int64_t k, const Vector& dW,
                          const SchemeConfig& cfg, const TamedCoefficients& tamed,
                          const NeutralFn& D);

// Full trajectory on the grid; deterministic given (spec, cfg, noise). On
// blow-up the partial trajectory is returned with blew_up set.
PathResult integrate(const ProblemSpec& spec, const SchemeConfig& cfg,
                     const TamedCoefficients& tamed, const BrownianGrid& noise);

}  // namespace nsdde
