#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nsdde/model.hpp"
#include "nsdde/scheme.hpp"
#include "nsdde/taming.hpp"

namespace nsdde {

// Shared study context: model, scheme variant, taming, solver, guard policy.
// Every study is deterministic given (context, study parameters, seed) and
// independent of the worker count: per-path results land in slots indexed by
// path and are reduced by fixed-order pairwise summation.
struct StudyContext {
  ExampleModel model;
  SchemeVariant variant{SchemeVariant::TamedTheta};
  double theta{0.5};
  TamingConfig taming{};
  std::optional<CutoffConfig> cutoff{};
  ImplicitSolverPolicy solver{};
  GuardEnforcement guard_mode{GuardEnforcement::Strict};
  GuardConstants guard_constants{};
  int workers{0};
  // Comparison arm: raw coefficients and theta = 0 (the untamed explicit
  // Euler scheme whose paths are allowed to blow up).
  bool untamed{false};
};

struct FitResult {
  double slope{0.0};
  double intercept{0.0};
  double r_squared{0.0};
};

// Least squares on log(error) = slope * log(delta) + intercept.
FitResult fit_order(const std::vector<std::pair<double, double>>& pairs);

struct ConvergenceStudy {
  std::vector<Rational> levels;
  Rational ref_level{1, 8192};
  std::vector<double> errors;  // e_j = (mean of max-grid-error^p)^{1/p}
  double p{2.0};
  std::int64_t n_paths{0};
  std::int64_t excluded{0};
  bool degenerate_zero_error{false};
  std::optional<FitResult> fit;
  std::vector<GuardReport> guard_reports;
  std::uint64_t seed{0};
};

// Couples every level to one fine path per path index, integrates level and
// reference solutions, and measures the discrete sup-error on the coarsest
// grid. Requires >= 3 levels, dyadic ratios, and a reference at least 8x
// finer than every level.
ConvergenceStudy run_convergence(const StudyContext& ctx, const std::vector<Rational>& levels,
                                 const Rational& ref_level, double p, std::int64_t n_paths,
                                 std::uint64_t seed);

struct MomentStudy {
  std::vector<Rational> steps;
  std::vector<double> moments;              // mean of sup_k |y_{t_k}|^p per step
  std::vector<double> divergence_fraction;  // fraction of paths that blew up
  double p{2.0};
  std::int64_t n_paths{0};
  std::int64_t excluded{0};  // solver failures (not blow-ups)
  std::vector<GuardReport> guard_reports;
  std::uint64_t seed{0};
};

MomentStudy run_moment_study(const StudyContext& ctx, const std::vector<Rational>& steps, double p,
                             std::int64_t n_paths, std::uint64_t seed);

struct ModulusStudy {
  std::vector<Rational> levels;
  Rational ref_level{1, 16384};
  std::vector<double> values;  // mean of max_k max_{sub-point} |Y_ref(t) - Y(t_k)|^p
  int refine{8};
  double p{2.0};
  std::int64_t n_paths{0};
  std::int64_t excluded{0};
  std::optional<FitResult> fit;
  std::vector<GuardReport> guard_reports;
  std::uint64_t seed{0};
};

// Within-step deviation proxy: the reference solution sampled at `refine`
// sub-points per coarse step against the coarse left endpoint value.
ModulusStudy run_modulus_study(const StudyContext& ctx, const std::vector<Rational>& levels,
                               const Rational& ref_level, int refine, double p,
                               std::int64_t n_paths, std::uint64_t seed);

}  // namespace nsdde
