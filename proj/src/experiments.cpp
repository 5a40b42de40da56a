#include "nsdde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsdde/errors.hpp"
#include "nsdde/parallel.hpp"
#include "nsdde/paths.hpp"
#include "nsdde/reduction.hpp"

namespace nsdde {

namespace {

struct PreparedCoefficients {
  TamedCoefficients tamed;
  double theta{0.0};
};

PreparedCoefficients prepare(const StudyContext& ctx) {
  if (ctx.untamed) return {make_untamed(ctx.model.spec), 0.0};
  return {make_tamed(ctx.model.spec, ctx.taming, ctx.cutoff), ctx.theta};
}

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

// Mean over the included slots in path order; exclusion flags are
// deterministic, so the reduction tree is too.
double mean_included(const std::vector<double>& values, const std::vector<char>& excluded) {
  std::vector<double> kept;
  kept.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!excluded[i]) kept.push_back(values[i]);
  }
  if (kept.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_mean(kept);
}

double sup_row_norm(const Matrix& rows) {
  double sup = 0.0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) sup = std::max(sup, rows.row(r).norm());
  return sup;
}

}  // namespace

FitResult fit_order(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) {
    throw SchemaError("order regression needs at least 3 (delta, error) pairs, got " +
                      std::to_string(pairs.size()));
  }
  double sx = 0.0, sy = 0.0;
  for (const auto& [delta, error] : pairs) {
    if (!(delta > 0.0) || !(error > 0.0)) {
      throw Error(ExitCode::Failure, "degenerate regression: non-positive delta or error value");
    }
    sx += std::log(delta);
    sy += std::log(error);
  }
  const double n = static_cast<double>(pairs.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [delta, error] : pairs) {
    const double dx = std::log(delta) - mx;
    const double dy = std::log(error) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ExitCode::Failure, "degenerate regression: all deltas equal");

  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

ConvergenceStudy run_convergence(const StudyContext& ctx, const std::vector<Rational>& levels_in,
                                 const Rational& ref_level, double p, std::int64_t n_paths,
                                 std::uint64_t seed) {
  if (levels_in.size() < 3) {
    throw SchemaError("convergence study needs at least 3 levels for the order regression, got " +
                      std::to_string(levels_in.size()));
  }
  if (n_paths < 1) throw SchemaError("convergence study needs at least one path");

  // Coarsest level first; its grid is the comparison grid.
  std::vector<Rational> levels = levels_in;
  std::sort(levels.begin(), levels.end(), [](const Rational& a, const Rational& b) { return b < a; });

  const ProblemSpec& spec = ctx.model.spec;
  const auto [tamed, theta] = prepare(ctx);

  SchemeConfig ref_cfg = make_scheme_config(ctx.variant, theta, ref_level, spec.delay,
                                            spec.horizon, ctx.solver, ctx.guard_mode);
  std::vector<SchemeConfig> level_cfgs;
  std::vector<std::int64_t> factors;
  for (const auto& level : levels) {
    const auto ratio = Rational::divide_exact(level, ref_level);
    if (!ratio.exact || !is_power_of_two(ratio.value)) {
      throw GridMismatchError("level " + level.str() + " is not a dyadic multiple of the reference " +
                              ref_level.str());
    }
    if (ratio.value < 8) {
      throw GridMismatchError("reference level " + ref_level.str() +
                              " must be at least 8x finer than level " + level.str());
    }
    level_cfgs.push_back(make_scheme_config(ctx.variant, theta, level, spec.delay, spec.horizon,
                                            ctx.solver, ctx.guard_mode));
    factors.push_back(ratio.value);
  }

  ConvergenceStudy study;
  study.levels = levels;
  study.ref_level = ref_level;
  study.p = p;
  study.n_paths = n_paths;
  study.seed = seed;

  AssumptionConstants guard_constants = ctx.model.constants;
  guard_constants.p = p;
  for (const auto& cfg : level_cfgs) {
    study.guard_reports.push_back(check_guards(cfg, guard_constants, ctx.taming, ctx.guard_constants));
  }
  study.guard_reports.push_back(
      check_guards(ref_cfg, guard_constants, ctx.taming, ctx.guard_constants));

  const std::size_t n_levels = levels.size();
  std::vector<std::vector<double>> errors_p(n_levels,
                                            std::vector<double>(static_cast<std::size_t>(n_paths)));
  std::vector<char> excluded(static_cast<std::size_t>(n_paths), 0);

  const std::int64_t coarse_steps = level_cfgs.front().total_steps;
  const std::int64_t ref_stride = ref_cfg.total_steps / coarse_steps;

  parallel_for(n_paths, ctx.workers, [&](std::int64_t path) {
    try {
      const BrownianGrid fine = generate(seed, path, spec.noise_dim, ref_level.value(),
                                         ref_cfg.total_steps);
      const PathResult ref = integrate(spec, ref_cfg, tamed, fine);
      if (ref.blew_up) {
        excluded[static_cast<std::size_t>(path)] = 1;
        return;
      }
      for (std::size_t j = 0; j < n_levels; ++j) {
        const BrownianGrid coarse_noise = coarsen(fine, factors[j]);
        const PathResult level_path = integrate(spec, level_cfgs[j], tamed, coarse_noise);
        if (level_path.blew_up) {
          excluded[static_cast<std::size_t>(path)] = 1;
          return;
        }
        const std::int64_t stride = level_cfgs[j].total_steps / coarse_steps;
        double sup = 0.0;
        for (std::int64_t c = 0; c <= coarse_steps; ++c) {
          sup = std::max(sup, (level_path.y_grid.row(c * stride) - ref.y_grid.row(c * ref_stride))
                                  .norm());
        }
        errors_p[j][static_cast<std::size_t>(path)] = std::pow(sup, p);
      }
    } catch (const SolverError&) {
      excluded[static_cast<std::size_t>(path)] = 1;
    }
  });

  study.excluded = std::count(excluded.begin(), excluded.end(), char(1));
  study.errors.resize(n_levels);
  bool any_zero = false;
  for (std::size_t j = 0; j < n_levels; ++j) {
    const double mean_p = mean_included(errors_p[j], excluded);
    study.errors[j] = std::pow(mean_p, 1.0 / p);
    if (!(study.errors[j] > 0.0)) any_zero = true;
  }

  if (any_zero) {
    study.degenerate_zero_error = true;  // zero dynamics: no order to fit
  } else {
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t j = 0; j < n_levels; ++j) pairs.emplace_back(levels[j].value(), study.errors[j]);
    study.fit = fit_order(pairs);
  }
  return study;
}

MomentStudy run_moment_study(const StudyContext& ctx, const std::vector<Rational>& steps, double p,
                             std::int64_t n_paths, std::uint64_t seed) {
  if (steps.empty()) throw SchemaError("moment study needs at least one step size");
  if (n_paths < 1) throw SchemaError("moment study needs at least one path");

  const ProblemSpec& spec = ctx.model.spec;
  const auto [tamed, theta] = prepare(ctx);

  MomentStudy study;
  study.steps = steps;
  study.p = p;
  study.n_paths = n_paths;
  study.seed = seed;

  AssumptionConstants guard_constants = ctx.model.constants;
  guard_constants.p = p;

  std::int64_t excluded_total = 0;
  for (const auto& step : steps) {
    SchemeConfig cfg = make_scheme_config(ctx.variant, theta, step, spec.delay, spec.horizon,
                                          ctx.solver, ctx.guard_mode);
    study.guard_reports.push_back(check_guards(cfg, guard_constants, ctx.taming, ctx.guard_constants));

    std::vector<double> sup_p(static_cast<std::size_t>(n_paths), 0.0);
    std::vector<char> skip(static_cast<std::size_t>(n_paths), 0);
    std::vector<char> blew(static_cast<std::size_t>(n_paths), 0);

    parallel_for(n_paths, ctx.workers, [&](std::int64_t path) {
      try {
        const BrownianGrid noise =
            generate(seed, path, spec.noise_dim, step.value(), cfg.total_steps);
        const PathResult result = integrate(spec, cfg, tamed, noise);
        if (result.blew_up) {
          blew[static_cast<std::size_t>(path)] = 1;
          skip[static_cast<std::size_t>(path)] = 1;
          return;
        }
        sup_p[static_cast<std::size_t>(path)] = std::pow(sup_row_norm(result.y_grid), p);
      } catch (const SolverError&) {
        skip[static_cast<std::size_t>(path)] = 1;
      }
    });

    const std::int64_t blown = std::count(blew.begin(), blew.end(), char(1));
    excluded_total += std::count(skip.begin(), skip.end(), char(1)) - blown;
    study.moments.push_back(mean_included(sup_p, skip));
    study.divergence_fraction.push_back(static_cast<double>(blown) /
                                        static_cast<double>(n_paths));
  }
  study.excluded = excluded_total;
  return study;
}

ModulusStudy run_modulus_study(const StudyContext& ctx, const std::vector<Rational>& levels_in,
                               const Rational& ref_level, int refine, double p,
                               std::int64_t n_paths, std::uint64_t seed) {
  if (levels_in.size() < 3) {
    throw SchemaError("modulus study needs at least 3 levels for the slope fit");
  }
  if (refine < 1) throw SchemaError("modulus study needs refine >= 1");
  if (n_paths < 1) throw SchemaError("modulus study needs at least one path");

  std::vector<Rational> levels = levels_in;
  std::sort(levels.begin(), levels.end(), [](const Rational& a, const Rational& b) { return b < a; });

  const ProblemSpec& spec = ctx.model.spec;
  const auto [tamed, theta] = prepare(ctx);

  SchemeConfig ref_cfg = make_scheme_config(ctx.variant, theta, ref_level, spec.delay,
                                            spec.horizon, ctx.solver, ctx.guard_mode);
  std::vector<SchemeConfig> level_cfgs;
  std::vector<std::int64_t> factors;
  for (const auto& level : levels) {
    const auto ratio = Rational::divide_exact(level, ref_level);
    if (!ratio.exact || !is_power_of_two(ratio.value) || ratio.value < 8) {
      throw GridMismatchError("level " + level.str() +
                              " must be a dyadic multiple (>= 8) of the reference " +
                              ref_level.str());
    }
    if (ratio.value % refine != 0) {
      throw GridMismatchError("refine = " + std::to_string(refine) +
                              " does not divide the level/reference factor " +
                              std::to_string(ratio.value));
    }
    level_cfgs.push_back(make_scheme_config(ctx.variant, theta, level, spec.delay, spec.horizon,
                                            ctx.solver, ctx.guard_mode));
    factors.push_back(ratio.value);
  }

  ModulusStudy study;
  study.levels = levels;
  study.ref_level = ref_level;
  study.refine = refine;
  study.p = p;
  study.n_paths = n_paths;
  study.seed = seed;

  AssumptionConstants guard_constants = ctx.model.constants;
  guard_constants.p = p;
  for (const auto& cfg : level_cfgs) {
    study.guard_reports.push_back(check_guards(cfg, guard_constants, ctx.taming, ctx.guard_constants));
  }
  study.guard_reports.push_back(
      check_guards(ref_cfg, guard_constants, ctx.taming, ctx.guard_constants));

  const std::size_t n_levels = levels.size();
  std::vector<std::vector<double>> dev_p(n_levels,
                                         std::vector<double>(static_cast<std::size_t>(n_paths)));
  std::vector<char> excluded(static_cast<std::size_t>(n_paths), 0);

  parallel_for(n_paths, ctx.workers, [&](std::int64_t path) {
    try {
      const BrownianGrid fine = generate(seed, path, spec.noise_dim, ref_level.value(),
                                         ref_cfg.total_steps);
      const PathResult ref = integrate(spec, ref_cfg, tamed, fine);
      if (ref.blew_up) {
        excluded[static_cast<std::size_t>(path)] = 1;
        return;
      }
      for (std::size_t j = 0; j < n_levels; ++j) {
        const BrownianGrid coarse_noise = coarsen(fine, factors[j]);
        const PathResult coarse = integrate(spec, level_cfgs[j], tamed, coarse_noise);
        if (coarse.blew_up) {
          excluded[static_cast<std::size_t>(path)] = 1;
          return;
        }
        const std::int64_t F = factors[j];
        const std::int64_t sub = F / refine;
        double dev = 0.0;
        for (std::int64_t k = 0; k < level_cfgs[j].total_steps; ++k) {
          for (int s = 0; s < refine; ++s) {
            dev = std::max(dev,
                           (ref.y_grid.row(k * F + s * sub) - coarse.y_grid.row(k)).norm());
          }
        }
        dev_p[j][static_cast<std::size_t>(path)] = std::pow(dev, p);
      }
    } catch (const SolverError&) {
      excluded[static_cast<std::size_t>(path)] = 1;
    }
  });

  study.excluded = std::count(excluded.begin(), excluded.end(), char(1));
  study.values.resize(n_levels);
  bool any_zero = false;
  for (std::size_t j = 0; j < n_levels; ++j) {
    study.values[j] = mean_included(dev_p[j], excluded);
    if (!(study.values[j] > 0.0)) any_zero = true;
  }
  if (!any_zero) {
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t j = 0; j < n_levels; ++j) pairs.emplace_back(levels[j].value(), study.values[j]);
    study.fit = fit_order(pairs);
  }
  return study;
}

}  // namespace nsdde
