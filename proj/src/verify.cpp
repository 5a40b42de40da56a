#include "nsdde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsdde/parallel.hpp"
#include "nsdde/paths.hpp"

namespace nsdde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kChunk = 4096;
constexpr double kDiagEps = 1e-4;
constexpr double kTol = 1e-9;

struct SampleEval {
  double ratio{-kInf};
  // Positive when an inequality with a pinned bound fails at this point.
  double violation{-kInf};
  double lhs{0.0};
  double rhs{0.0};
  const char* note{""};
};

struct ChunkResult {
  double max_ratio{-kInf};
  double worst_violation{-kInf};
  std::int64_t worst_rank{-1};
  Witness worst;
};

// Draws quadruples (x, y, xbar, ybar) on the box; odd-ranked samples probe
// near the diagonal (xbar = x + eps u, ybar = y + eps v with unit u, v)
// because one-sided Lipschitz violations concentrate there. Chunks are
// fixed-size and keyed by index, so a larger sample budget evaluates a
// superset of the points of a smaller one and the max-reduction is exact
// under any worker count.
template <typename Eval>
ChunkResult run_chunks(int n, double radius, std::int64_t samples, std::uint64_t seed, int workers,
                       const Eval& eval) {
  const std::int64_t n_chunks = (samples + kChunk - 1) / kChunk;
  std::vector<ChunkResult> per_chunk(static_cast<std::size_t>(n_chunks));

  parallel_for(n_chunks, workers, [&](std::int64_t chunk) {
    NormalStream stream(seed, static_cast<std::uint64_t>(chunk));
    ChunkResult local;
    Vector x(n), y(n), xbar(n), ybar(n), u(n), v(n);
    for (std::int64_t i = 0; i < kChunk; ++i) {
      const std::int64_t rank = chunk * kChunk + i;
      for (int j = 0; j < n; ++j) x(j) = radius * (2.0 * stream.next_unit() - 1.0);
      for (int j = 0; j < n; ++j) y(j) = radius * (2.0 * stream.next_unit() - 1.0);
      for (int j = 0; j < n; ++j) xbar(j) = radius * (2.0 * stream.next_unit() - 1.0);
      for (int j = 0; j < n; ++j) ybar(j) = radius * (2.0 * stream.next_unit() - 1.0);
      for (int j = 0; j < n; ++j) u(j) = stream.next();
      for (int j = 0; j < n; ++j) v(j) = stream.next();
      if (rank % 2 == 1) {
        const double un = u.norm();
        const double vn = v.norm();
        if (un > 0.0 && vn > 0.0) {
          xbar = x + (kDiagEps / un) * u;
          ybar = y + (kDiagEps / vn) * v;
        }
      }
      const SampleEval s = eval(x, y, xbar, ybar);
      local.max_ratio = std::max(local.max_ratio, s.ratio);
      if (s.violation > kTol && s.violation > local.worst_violation) {
        local.worst_violation = s.violation;
        local.worst_rank = rank;
        local.worst = Witness{x, y, xbar, ybar, s.lhs, s.rhs, s.note};
      }
    }
    per_chunk[static_cast<std::size_t>(chunk)] = std::move(local);
  });

  ChunkResult merged;
  for (const auto& c : per_chunk) {
    merged.max_ratio = std::max(merged.max_ratio, c.max_ratio);
    if (c.worst_rank >= 0 &&
        (c.worst_violation > merged.worst_violation ||
         (c.worst_violation == merged.worst_violation && c.worst_rank < merged.worst_rank))) {
      merged.worst_violation = c.worst_violation;
      merged.worst_rank = c.worst_rank;
      merged.worst = c.worst;
    }
  }
  return merged;
}

double safe_ratio(double lhs, double rhs) { return rhs > 0.0 ? lhs / rhs : 0.0; }

double growth_poly(const Vector& x, const Vector& y) {
  return 1.0 + x.squaredNorm() + y.squaredNorm();
}

double dist_sq(const Vector& x, const Vector& xbar, const Vector& y, const Vector& ybar) {
  return (x - xbar).squaredNorm() + (y - ybar).squaredNorm();
}

}  // namespace

const char* assumption_name(AssumptionId id) {
  switch (id) {
    case AssumptionId::A2: return "A2";
    case AssumptionId::A3: return "A3";
    case AssumptionId::A3Prime: return "A3'";
    case AssumptionId::A4: return "A4";
    case AssumptionId::A5: return "A5";
    case AssumptionId::B1: return "B1";
    case AssumptionId::B2: return "B2";
    case AssumptionId::B2Prime: return "B2'";
    case AssumptionId::B3: return "B3";
    case AssumptionId::B4: return "B4";
    case AssumptionId::C1: return "C1";
    case AssumptionId::C2: return "C2";
    case AssumptionId::C3: return "C3";
    case AssumptionId::C4: return "C4";
  }
  return "?";
}

std::optional<AssumptionId> parse_assumption(const std::string& name) {
  static const std::pair<const char*, AssumptionId> table[] = {
      {"A2", AssumptionId::A2},      {"A3", AssumptionId::A3},
      {"A3'", AssumptionId::A3Prime}, {"A4", AssumptionId::A4},
      {"A5", AssumptionId::A5},      {"B1", AssumptionId::B1},
      {"B2", AssumptionId::B2},      {"B2'", AssumptionId::B2Prime},
      {"B3", AssumptionId::B3},      {"B4", AssumptionId::B4},
      {"C1", AssumptionId::C1},      {"C2", AssumptionId::C2},
      {"C3", AssumptionId::C3},      {"C4", AssumptionId::C4},
  };
  for (const auto& [text, id] : table) {
    if (name == text) return id;
  }
  return std::nullopt;
}

AssumptionReport check_assumption(AssumptionId id, const ProblemSpec& spec,
                                  const AssumptionConstants& constants, const TamingConfig& taming,
                                  const CutoffConfig& /*cut: the truncated-drift surrogate lives in
                                                        estimate_guard_constants*/,
                                  const CheckOptions& options) {
  const int n = spec.state_dim;
  const double alpha = taming.alpha;
  const double K5 = taming.K5;
  const double p = options.p;
  const double l = constants.l;
  const auto& deltas = options.deltas;

  const auto& D = spec.neutral_D;
  const auto& b = spec.drift_b;
  const auto& sg = spec.diffusion_sigma;

  auto b_sig = [&](const Vector& x, const Vector& y, double dt) {
    return tame_drift_sigmoidal(b(x, y), dt, alpha);
  };
  auto s_sig = [&](const Vector& x, const Vector& y, double dt) {
    return tame_diffusion_sigmoidal(sg(x, y), dt, alpha);
  };
  auto bal = [&](const Vector& x, const Vector& y, double dt) {
    return tame_balanced(b(x, y), sg(x, y), dt, alpha);
  };

  AssumptionReport report;
  report.id = id;
  report.box_radius = options.box_radius;

  std::function<SampleEval(const Vector&, const Vector&, const Vector&, const Vector&)> eval;

  switch (id) {
    case AssumptionId::A2:
      eval = [&](const Vector& x, const Vector&, const Vector& xbar, const Vector&) {
        SampleEval s;
        const double d = (x - xbar).norm();
        if (d == 0.0) return s;
        s.lhs = (D(x) - D(xbar)).norm();
        s.rhs = 0.5 * d;
        s.ratio = s.lhs / d;
        s.violation = s.ratio - 0.5;  // the contraction window requires kappa < 1/2
        s.note = "|D(x)-D(xbar)| vs |x-xbar|/2";
        return s;
      };
      break;
    case AssumptionId::A3:
      eval = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        const double num = std::max((x - D(y)).dot(b(x, y)), sg(x, y).squaredNorm());
        s.ratio = num / growth_poly(x, y);
        return s;
      };
      break;
    case AssumptionId::A3Prime:
      eval = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        const double num = 2.0 * (x - D(y)).dot(b(x, y)) + (p - 1.0) * sg(x, y).squaredNorm();
        s.ratio = num / growth_poly(x, y);
        return s;
      };
      break;
    case AssumptionId::A4:
      eval = [&](const Vector& x, const Vector& y, const Vector& xbar, const Vector& ybar) {
        SampleEval s;
        const double d2 = dist_sq(x, xbar, y, ybar);
        if (d2 == 0.0) return s;
        const Vector w = x - D(y) - xbar + D(ybar);
        const double num = 2.0 * w.dot(b(x, y) - b(xbar, ybar)) +
                           (p - 1.0) * (sg(x, y) - sg(xbar, ybar)).squaredNorm();
        s.ratio = num / d2;
        return s;
      };
      break;
    case AssumptionId::A5:
      eval = [&](const Vector& x, const Vector& y, const Vector& xbar, const Vector& ybar) {
        SampleEval s;
        const double d2 = dist_sq(x, xbar, y, ybar);
        if (d2 == 0.0) return s;
        const Vector w = x - D(y) - xbar + D(ybar);
        const double num = std::max(w.dot(b(x, y) - b(xbar, ybar)),
                                    (sg(x, y) - sg(xbar, ybar)).squaredNorm());
        s.ratio = num / d2;
        return s;
      };
      break;
    case AssumptionId::B1:
    case AssumptionId::C1:
      eval = [&, id](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        const Vector b_raw = b(x, y);
        const Matrix s_raw = sg(x, y);
        for (double dt : deltas) {
          Vector b_t;
          Matrix s_t;
          if (id == AssumptionId::B1) {
            b_t = b_sig(x, y, dt);
            s_t = s_sig(x, y, dt);
          } else {
            auto pair = bal(x, y, dt);
            b_t = std::move(pair.first);
            s_t = std::move(pair.second);
          }
          const double cap = K5 * std::pow(dt, -alpha);
          const double rhs_b = std::min(cap * (1.0 + x.norm() + y.norm()), b_raw.norm());
          const double rhs_s =
              std::min(cap * (1.0 + x.squaredNorm() + y.squaredNorm()), s_raw.squaredNorm());
          const double lhs_b = b_t.norm();
          const double lhs_s = s_t.squaredNorm();
          const double slack = 1e-12;
          if (lhs_b > rhs_b * (1.0 + slack)) {
            s.violation = std::max(s.violation, lhs_b - rhs_b);
            s.lhs = lhs_b;
            s.rhs = rhs_b;
            s.note = "|b_D| exceeds min-bound";
          }
          if (lhs_s > rhs_s * (1.0 + slack)) {
            s.violation = std::max(s.violation, lhs_s - rhs_s);
            s.lhs = lhs_s;
            s.rhs = rhs_s;
            s.note = "|sigma_D|^2 exceeds min-bound";
          }
          s.ratio = std::max({s.ratio, safe_ratio(lhs_b, rhs_b), safe_ratio(lhs_s, rhs_s)});
        }
        return s;
      };
      break;
    case AssumptionId::B2:
    case AssumptionId::C2:
      eval = [&, id](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        for (double dt : deltas) {
          Vector b_t;
          Matrix s_t;
          if (id == AssumptionId::B2) {
            b_t = b_sig(x, y, dt);
            s_t = s_sig(x, y, dt);
          } else {
            auto pair = bal(x, y, dt);
            b_t = std::move(pair.first);
            s_t = std::move(pair.second);
          }
          const double num = std::max((x - D(y)).dot(b_t), s_t.squaredNorm());
          s.ratio = std::max(s.ratio, num / growth_poly(x, y));
        }
        return s;
      };
      break;
    case AssumptionId::B2Prime:
      eval = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        for (double dt : deltas) {
          const double num = 2.0 * (x - D(y)).dot(b_sig(x, y, dt)) +
                             (p - 1.0) * s_sig(x, y, dt).squaredNorm();
          s.ratio = std::max(s.ratio, num / growth_poly(x, y));
        }
        return s;
      };
      break;
    case AssumptionId::B3:
    case AssumptionId::C3:
      eval = [&, id](const Vector& x, const Vector& y, const Vector& xbar, const Vector& ybar) {
        SampleEval s;
        const double d2 = dist_sq(x, xbar, y, ybar);
        if (d2 == 0.0) return s;
        const Vector w = x - D(y) - xbar + D(ybar);
        for (double dt : deltas) {
          Vector bd, bd_bar;
          if (id == AssumptionId::B3) {
            bd = b_sig(x, y, dt);
            bd_bar = b_sig(xbar, ybar, dt);
          } else {
            bd = bal(x, y, dt).first;
            bd_bar = bal(xbar, ybar, dt).first;
          }
          s.ratio = std::max(s.ratio, w.dot(bd - bd_bar) / d2);
        }
        return s;
      };
      break;
    case AssumptionId::B4:
      eval = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        const Vector b_raw = b(x, y);
        const Matrix s_raw = sg(x, y);
        const double poly =
            1.0 + std::pow(x.norm(), 2.0 * (l + 1.0)) + std::pow(y.norm(), 2.0 * (l + 1.0));
        // The taming-distance chain bounds the quotient pointwise by
        // |b|^2/poly and ||sigma||^3/poly, uniformly in delta.
        const double env_b = b_raw.squaredNorm() / poly;
        const double env_s = std::pow(s_raw.norm(), 3.0) / poly;
        for (double dt : deltas) {
          const double da = std::pow(dt, alpha);
          const double q_b = (b_raw - b_sig(x, y, dt)).norm() / (da * poly);
          const double q_s = (s_raw - s_sig(x, y, dt)).norm() / (da * poly);
          s.ratio = std::max({s.ratio, q_b, q_s});
          if (q_b > env_b * (1.0 + kTol) + 1e-300) {
            s.violation = std::max(s.violation, q_b - env_b);
            s.lhs = q_b;
            s.rhs = env_b;
            s.note = "drift taming-distance quotient above its envelope";
          }
          if (q_s > env_s * (1.0 + kTol) + 1e-300) {
            s.violation = std::max(s.violation, q_s - env_s);
            s.lhs = q_s;
            s.rhs = env_s;
            s.note = "diffusion taming-distance quotient above its envelope";
          }
        }
        return s;
      };
      break;
    case AssumptionId::C4:
      // Handled below: needs a per-delta sup over the box, not a pointwise max.
      break;
  }

  if (id == AssumptionId::C4) {
    // N_R is fitted at the largest step and must cover all smaller ones.
    std::vector<double> sorted = deltas;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double n_fit = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double dt = sorted[i];
      auto sup_eval = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
        SampleEval s;
        auto pair = bal(x, y, dt);
        s.ratio = std::max((b(x, y) - pair.first).norm(), (sg(x, y) - pair.second).norm());
        return s;
      };
      const ChunkResult r =
          run_chunks(n, options.box_radius, options.samples, options.seed, options.workers,
                     sup_eval);
      const double quotient = r.max_ratio / std::pow(dt, alpha);
      report.estimated_constant = std::max(report.estimated_constant, quotient);
      if (i == 0) {
        n_fit = quotient;
      } else if (quotient > n_fit * 1.01) {
        report.status = CheckStatus::ViolatedWitness;
        Witness w;
        w.lhs = quotient;
        w.rhs = n_fit;
        w.note = "taming-distance quotient at delta = " + std::to_string(dt) +
                 " exceeds the constant fitted at delta = " + std::to_string(sorted[0]);
        report.witness = w;
      }
    }
    report.samples = ((options.samples + kChunk - 1) / kChunk) * kChunk *
                     static_cast<std::int64_t>(sorted.size());
    return report;
  }

  const ChunkResult r =
      run_chunks(n, options.box_radius, options.samples, options.seed, options.workers, eval);
  report.samples = ((options.samples + kChunk - 1) / kChunk) * kChunk;
  report.estimated_constant = r.max_ratio;
  if (r.worst_rank >= 0) {
    report.status = CheckStatus::ViolatedWitness;
    report.witness = r.worst;
  }

  if (id == AssumptionId::A2) {
    const Vector zero = Vector::Zero(n);
    const double at_zero = D(zero).norm();
    if (at_zero > kTol) {
      report.status = CheckStatus::ViolatedWitness;
      Witness w;
      w.x = zero;
      w.lhs = at_zero;
      w.rhs = 0.0;
      w.note = "D(0) != 0";
      report.witness = w;
    }
  }
  return report;
}

double sample_polynomial_lipschitz(const ProblemSpec& spec, double l, const CheckOptions& options) {
  const auto& b = spec.drift_b;
  auto eval = [&](const Vector& x, const Vector& y, const Vector& xbar, const Vector& ybar) {
    SampleEval s;
    const double dist = (x - xbar).norm() + (y - ybar).norm();
    if (dist == 0.0) return s;
    const double poly = 1.0 + std::pow(x.norm(), l) + std::pow(xbar.norm(), l) +
                        std::pow(y.norm(), l) + std::pow(ybar.norm(), l);
    s.ratio = (b(x, y) - b(xbar, ybar)).norm() / (poly * dist);
    return s;
  };
  return run_chunks(spec.state_dim, options.box_radius, options.samples, options.seed,
                    options.workers, eval)
      .max_ratio;
}

void populate_local_constants(ExampleModel& model, const TamingConfig& taming,
                              const CutoffConfig& cut, const std::vector<double>& radii,
                              const CheckOptions& options) {
  model.constants.L_R.clear();
  model.constants.Lbar_R.clear();
  model.constants.M_R.clear();
  model.constants.N_R.clear();
  for (const double radius : radii) {
    CheckOptions at_radius = options;
    at_radius.box_radius = radius;

    const AssumptionReport a5 = check_assumption(AssumptionId::A5, model.spec, model.constants,
                                                 taming, cut, at_radius);
    model.constants.L_R.push_back({radius, a5.estimated_constant});

    const auto& b = model.spec.drift_b;
    auto sup_b = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
      SampleEval s;
      s.ratio = b(x, y).norm();
      return s;
    };
    model.constants.Lbar_R.push_back(
        {radius, run_chunks(model.spec.state_dim, radius, at_radius.samples, at_radius.seed,
                            at_radius.workers, sup_b)
                     .max_ratio});

    const AssumptionReport c3 = check_assumption(AssumptionId::C3, model.spec, model.constants,
                                                 taming, cut, at_radius);
    model.constants.M_R.push_back({radius, c3.estimated_constant});

    // N_R fitted at the coarsest ladder step.
    const double coarsest =
        *std::max_element(at_radius.deltas.begin(), at_radius.deltas.end());
    const auto& sg = model.spec.diffusion_sigma;
    auto taming_distance = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
      SampleEval s;
      const auto pair = tame_balanced(b(x, y), sg(x, y), coarsest, taming.alpha);
      s.ratio = std::max((b(x, y) - pair.first).norm(), (sg(x, y) - pair.second).norm());
      return s;
    };
    const double sup_dist = run_chunks(model.spec.state_dim, radius, at_radius.samples,
                                       at_radius.seed, at_radius.workers, taming_distance)
                                .max_ratio;
    model.constants.N_R.push_back({radius, sup_dist / std::pow(coarsest, taming.alpha)});
  }
}

GuardConstantEstimates estimate_guard_constants(const ProblemSpec& spec, const TamingConfig& taming,
                                                const CutoffConfig& cut, double R0,
                                                std::int64_t samples, std::uint64_t seed,
                                                double smallest_delta, int workers) {
  const int n = spec.state_dim;
  const double alpha = taming.alpha;
  const auto& D = spec.neutral_D;
  const auto& b = spec.drift_b;
  const auto& sg = spec.diffusion_sigma;
  const double dt = smallest_delta;

  GuardConstantEstimates out;

  auto tamed_drift = [&](const Vector& x, const Vector& y) {
    if (taming.mode == TamingMode::Sigmoidal) return tame_drift_sigmoidal(b(x, y), dt, alpha);
    return tame_balanced(b(x, y), sg(x, y), dt, alpha).first;
  };

  auto one_sided = [&](auto&& drift) {
    return [&, drift](const Vector& x, const Vector& y, const Vector& xbar, const Vector& ybar) {
      SampleEval s;
      const double d2 = dist_sq(x, xbar, y, ybar);
      if (d2 == 0.0) return s;
      const Vector w = x - D(y) - xbar + D(ybar);
      s.ratio = w.dot(drift(x, y) - drift(xbar, ybar)) / d2;
      return s;
    };
  };

  out.K3_tilde =
      std::max(0.0, run_chunks(n, R0, samples, seed, workers, one_sided(tamed_drift)).max_ratio);

  auto sup_b = [&](const Vector& x, const Vector& y, const Vector&, const Vector&) {
    SampleEval s;
    s.ratio = b(x, y).norm();
    return s;
  };
  out.Lbar_R0 = run_chunks(n, R0, samples, seed, workers, sup_b).max_ratio;
  out.Lbar_R0_plus1 = run_chunks(n, R0 + 1.0, samples, seed, workers, sup_b).max_ratio;

  auto balanced_drift = [&](const Vector& x, const Vector& y) {
    return tame_balanced(b(x, y), sg(x, y), dt, alpha).first;
  };
  out.M_R0 =
      std::max(0.0, run_chunks(n, R0, samples, seed, workers, one_sided(balanced_drift)).max_ratio);

  auto truncated = [&](const Vector& x, const Vector& y) {
    return truncated_drift(b(x, y), sg(x, y), x, y, dt, alpha, cut);
  };
  // Beyond the (R+1)-box the truncated drift vanishes; sampling out to R0+2
  // covers the transition shell and the mixed inside/outside pairs.
  out.Mbar_sampled =
      std::max(0.0, run_chunks(n, R0 + 2.0, samples, seed, workers, one_sided(truncated)).max_ratio);
  out.Mbar_formula = out.M_R0 + 2.0 * CutoffConfig::lipschitz_constant * out.Lbar_R0;
  return out;
}

}  // namespace nsdde
