#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nsdde/config.hpp"
#include "nsdde/csv.hpp"
#include "nsdde/errors.hpp"
#include "nsdde/paths.hpp"
#include "nsdde/verify.hpp"

namespace nsdde {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kLibraryVersion = "0.1.0";

std::string trim_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", v);
  return buffer;
}

std::string file_base(const char* kind, const RunConfig& cfg, std::uint64_t seed) {
  return std::string(kind) + "_" + example_name(cfg.model.id) + "_" +
         variant_name(cfg.scheme.variant) + "_theta" + trim_number(cfg.scheme.theta) + "_alpha" +
         trim_number(cfg.taming.alpha) + "_seed" + std::to_string(seed);
}

Json guard_report_json(const GuardReport& report) {
  return Json{{"delta1", report.delta1},
              {"delta2", report.delta2},
              {"delta3", report.delta3},
              {"configured", report.configured},
              {"admissible", report.admissible},
              {"detail", report.detail}};
}

struct MetadataWriter {
  Json body;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  MetadataWriter(const RunConfig& cfg, ExperimentKind kind, std::uint64_t seed, int workers) {
    body["kind"] = kind_name(kind);
    body["library_version"] = kLibraryVersion;
    body["seed"] = seed;
    body["workers"] = workers;
    body["config"] = Json::parse(serialize_config(cfg));
  }

  void finish(const std::filesystem::path& path) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    body["wall_time_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    std::ofstream os(path);
    if (!os) throw Error(ExitCode::Failure, "cannot write metadata file " + path.string());
    os << body.dump(2) << "\n";
  }
};

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ExitCode::Failure, "cannot write output file " + path.string());
  return os;
}

}  // namespace

DispatchResult dispatch(ExperimentKind cmd, const RunConfig& cfg_in, const DispatchOptions& opts) {
  RunConfig cfg = cfg_in;
  if (cfg.experiment.kind && *cfg.experiment.kind != cmd) {
    throw SchemaError(std::string("config names experiment.kind = ") +
                      kind_name(*cfg.experiment.kind) + " but the command is " + kind_name(cmd));
  }
  const std::uint64_t seed = opts.seed.value_or(cfg.experiment.seed);
  const int workers = opts.workers.value_or(0);
  const std::filesystem::path out_dir = opts.out_dir.value_or(cfg.output.directory);
  std::filesystem::create_directories(out_dir);
  const int precision = cfg.output.csv_precision;

  ExampleModel model =
      make_example(cfg.model.id, cfg.model.a, cfg.model.xi, cfg.model.tau, cfg.model.horizon);

  TamingConfig taming;
  taming.mode = cfg.taming.mode;
  taming.alpha = cfg.taming.alpha;
  taming.K5 = cfg.taming.K5;
  CutoffConfig cut;
  cut.R = cfg.taming.R;

  StudyContext ctx;
  ctx.model = model;
  ctx.variant = cfg.scheme.variant;
  ctx.theta = cfg.scheme.theta;
  ctx.taming = taming;
  if (taming.mode == TamingMode::Balanced) ctx.cutoff = cut;
  ctx.solver = cfg.scheme.solver;
  ctx.guard_mode = cfg.scheme.guard_mode;
  ctx.workers = workers;
  ctx.untamed = cfg.experiment.untamed;

  // Smallest step the run touches, for the sampled guard constants.
  std::vector<Rational> steps = cfg.scheme.levels;
  if (cfg.scheme.delta) steps.push_back(*cfg.scheme.delta);
  if (cfg.experiment.ref_level) steps.push_back(*cfg.experiment.ref_level);

  GuardConstantEstimates estimates;
  if (!ctx.untamed && ctx.theta > 0.0 && !steps.empty() && cmd != ExperimentKind::CheckAssumptions) {
    const Rational smallest = *std::min_element(steps.begin(), steps.end());
    estimates = estimate_guard_constants(model.spec, taming, cut, cfg.experiment.box_radius,
                                         cfg.experiment.samples, seed, smallest.value(), workers);
    ctx.guard_constants.K3_tilde = estimates.K3_tilde;
    ctx.guard_constants.Mbar_R0 = estimates.Mbar();
  }

  MetadataWriter meta(cfg, cmd, seed, workers);
  meta.body["guard_constants"] = Json{{"K3_tilde", ctx.guard_constants.K3_tilde},
                                      {"Mbar_R0", ctx.guard_constants.Mbar_R0}};

  DispatchResult result;
  auto emit = [&](const std::filesystem::path& path) {
    result.files.push_back(path.string());
  };

  switch (cmd) {
    case ExperimentKind::Simulate: {
      if (!cfg.scheme.delta) throw SchemaError("simulate needs 'scheme.delta'");
      SchemeConfig scheme_cfg =
          make_scheme_config(ctx.variant, ctx.untamed ? 0.0 : ctx.theta, *cfg.scheme.delta,
                             model.spec.delay, model.spec.horizon, ctx.solver, ctx.guard_mode);
      AssumptionConstants with_p = model.constants;
      with_p.p = cfg.experiment.p;
      const GuardReport guard = check_guards(scheme_cfg, with_p, taming, ctx.guard_constants);
      meta.body["guards"] = Json::array({guard_report_json(guard)});

      const TamedCoefficients coeffs =
          ctx.untamed ? make_untamed(model.spec) : make_tamed(model.spec, taming, ctx.cutoff);
      const BrownianGrid noise = generate(seed, 0, model.spec.noise_dim,
                                          cfg.scheme.delta->value(), scheme_cfg.total_steps);
      const PathResult path = integrate(model.spec, scheme_cfg, coeffs, noise);
      meta.body["blew_up"] = path.blew_up;

      const std::string base = file_base("trajectory", cfg, seed);
      auto os = open_csv(out_dir / (base + ".csv"));
      write_trajectory_csv(os, path, scheme_cfg, precision);
      emit(out_dir / (base + ".csv"));
      meta.finish(out_dir / (base + "_meta.json"));
      break;
    }
    case ExperimentKind::Converge: {
      if (cfg.scheme.levels.empty()) throw SchemaError("converge needs 'scheme.levels'");
      if (!cfg.experiment.ref_level) throw SchemaError("converge needs 'experiment.ref_level'");
      const std::int64_t n_paths = cfg.experiment.n_paths.value_or(1000);
      const ConvergenceStudy study = run_convergence(ctx, cfg.scheme.levels,
                                                     *cfg.experiment.ref_level, cfg.experiment.p,
                                                     n_paths, seed);
      const std::string base = file_base("converge", cfg, seed);
      {
        auto os = open_csv(out_dir / (base + ".csv"));
        write_convergence_csv(os, study, precision);
        emit(out_dir / (base + ".csv"));
      }
      {
        auto os = open_csv(out_dir / (base + "_fit.csv"));
        write_fit_csv(os, study.fit ? &*study.fit : nullptr, study.degenerate_zero_error,
                      precision);
        emit(out_dir / (base + "_fit.csv"));
      }
      Json guards = Json::array();
      for (const auto& report : study.guard_reports) guards.push_back(guard_report_json(report));
      meta.body["guards"] = guards;
      meta.body["excluded"] = study.excluded;
      if (study.degenerate_zero_error) meta.body["note"] = "degenerate: zero error";
      meta.finish(out_dir / (base + "_meta.json"));
      break;
    }
    case ExperimentKind::Moments: {
      if (cfg.scheme.levels.empty()) throw SchemaError("moments needs 'scheme.levels'");
      const std::int64_t n_paths = cfg.experiment.n_paths.value_or(500);
      const MomentStudy study =
          run_moment_study(ctx, cfg.scheme.levels, cfg.experiment.p, n_paths, seed);
      const std::string base = file_base("moments", cfg, seed);
      auto os = open_csv(out_dir / (base + ".csv"));
      write_moments_csv(os, study, precision);
      emit(out_dir / (base + ".csv"));
      Json guards = Json::array();
      for (const auto& report : study.guard_reports) guards.push_back(guard_report_json(report));
      meta.body["guards"] = guards;
      meta.body["excluded"] = study.excluded;
      meta.finish(out_dir / (base + "_meta.json"));
      break;
    }
    case ExperimentKind::Modulus: {
      if (cfg.scheme.levels.empty()) throw SchemaError("modulus needs 'scheme.levels'");
      if (!cfg.experiment.ref_level) throw SchemaError("modulus needs 'experiment.ref_level'");
      const std::int64_t n_paths = cfg.experiment.n_paths.value_or(500);
      const ModulusStudy study =
          run_modulus_study(ctx, cfg.scheme.levels, *cfg.experiment.ref_level,
                            cfg.experiment.refine, cfg.experiment.p, n_paths, seed);
      const std::string base = file_base("modulus", cfg, seed);
      {
        auto os = open_csv(out_dir / (base + ".csv"));
        write_modulus_csv(os, study, precision);
        emit(out_dir / (base + ".csv"));
      }
      {
        auto os = open_csv(out_dir / (base + "_fit.csv"));
        write_fit_csv(os, study.fit ? &*study.fit : nullptr, !study.fit.has_value(), precision);
        emit(out_dir / (base + "_fit.csv"));
      }
      Json guards = Json::array();
      for (const auto& report : study.guard_reports) guards.push_back(guard_report_json(report));
      meta.body["guards"] = guards;
      meta.body["excluded"] = study.excluded;
      meta.finish(out_dir / (base + "_meta.json"));
      break;
    }
    case ExperimentKind::CheckAssumptions: {
      CheckOptions options;
      options.box_radius = cfg.experiment.box_radius;
      options.samples = cfg.experiment.samples;
      options.p = cfg.experiment.p;
      options.seed = seed;
      options.workers = workers;

      std::vector<AssumptionId> ids = {AssumptionId::A2,
                                       cfg.experiment.weaker_growth ? AssumptionId::A3Prime
                                                                    : AssumptionId::A3,
                                       AssumptionId::A4,
                                       AssumptionId::A5,
                                       AssumptionId::B1,
                                       cfg.experiment.weaker_growth ? AssumptionId::B2Prime
                                                                    : AssumptionId::B2,
                                       AssumptionId::B3,
                                       AssumptionId::B4,
                                       AssumptionId::C1,
                                       AssumptionId::C2,
                                       AssumptionId::C3,
                                       AssumptionId::C4};
      std::vector<AssumptionReport> reports;
      reports.reserve(ids.size());
      for (const auto id : ids) {
        reports.push_back(check_assumption(id, model.spec, model.constants, taming, cut, options));
      }

      populate_local_constants(model, taming, cut,
                               {cfg.experiment.box_radius, 2.0 * cfg.experiment.box_radius},
                               options);
      Json ladder = Json::array();
      for (std::size_t i = 0; i < model.constants.L_R.size(); ++i) {
        ladder.push_back(Json{{"radius", model.constants.L_R[i].radius},
                              {"L_R", model.constants.L_R[i].value},
                              {"Lbar_R", model.constants.Lbar_R[i].value},
                              {"M_R", model.constants.M_R[i].value},
                              {"N_R", model.constants.N_R[i].value}});
      }
      meta.body["local_constants"] = ladder;

      std::printf("%-6s %-18s %-14s %-10s %-8s %s\n", "id", "status", "constant", "samples",
                  "radius", "witness");
      for (const auto& report : reports) {
        std::printf("%-6s %-18s %-14.6g %-10lld %-8g %s\n", assumption_name(report.id),
                    report.status == CheckStatus::PassSampled ? "pass-sampled" : "violated",
                    report.estimated_constant,
                    static_cast<long long>(report.samples), report.box_radius,
                    report.witness ? report.witness->note.c_str() : "");
      }

      const std::string base = file_base("assumptions", cfg, seed);
      auto os = open_csv(out_dir / (base + ".csv"));
      write_assumption_csv(os, reports, precision);
      emit(out_dir / (base + ".csv"));
      meta.finish(out_dir / (base + "_meta.json"));
      break;
    }
  }
  return result;
}

}  // namespace nsdde
