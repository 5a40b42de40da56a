#include "nsdde/config.hpp"

#include <json.hpp>
#include <set>

#include "nsdde/errors.hpp"

namespace nsdde {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown_keys(const Json& block, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : block.items()) {
    if (!allowed.contains(key)) {
      throw SchemaError("unknown config key '" + path + "." + key + "'");
    }
  }
}

const Json* get(const Json& block, const char* key) {
  const auto it = block.find(key);
  return it == block.end() ? nullptr : &*it;
}

double get_number(const Json& block, const char* key, double fallback, const std::string& path) {
  const Json* v = get(block, key);
  if (!v) return fallback;
  if (!v->is_number()) throw SchemaError("'" + path + "." + key + "' must be a number");
  return v->get<double>();
}

std::int64_t get_integer(const Json& block, const char* key, std::int64_t fallback,
                         const std::string& path) {
  const Json* v = get(block, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw SchemaError("'" + path + "." + key + "' must be an integer");
  return v->get<std::int64_t>();
}

bool get_bool(const Json& block, const char* key, bool fallback, const std::string& path) {
  const Json* v = get(block, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw SchemaError("'" + path + "." + key + "' must be a boolean");
  return v->get<bool>();
}

std::string get_string(const Json& block, const char* key, const std::string& fallback,
                       const std::string& path) {
  const Json* v = get(block, key);
  if (!v) return fallback;
  if (!v->is_string()) throw SchemaError("'" + path + "." + key + "' must be a string");
  return v->get<std::string>();
}

Rational get_rational(const Json& block, const char* key, const Rational& fallback,
                      const std::string& path) {
  const Json* v = get(block, key);
  if (!v) return fallback;
  if (v->is_string()) return parse_rational(v->get<std::string>());
  if (v->is_number_integer()) return Rational(v->get<std::int64_t>(), 1);
  throw SchemaError("'" + path + "." + key + "' must be a rational string like \"1/64\"");
}

}  // namespace

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::Moments: return "moments";
    case ExperimentKind::Modulus: return "modulus";
    case ExperimentKind::CheckAssumptions: return "check-assumptions";
  }
  return "?";
}

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  if (name == "simulate") return ExperimentKind::Simulate;
  if (name == "converge") return ExperimentKind::Converge;
  if (name == "moments") return ExperimentKind::Moments;
  if (name == "modulus") return ExperimentKind::Modulus;
  if (name == "check-assumptions") return ExperimentKind::CheckAssumptions;
  return std::nullopt;
}

RunConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& err) {
    throw SchemaError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!root.is_object()) throw SchemaError("config root must be a JSON object");
  reject_unknown_keys(root, {"model", "scheme", "taming", "experiment", "output"}, "config");

  RunConfig cfg;

  if (const Json* model = get(root, "model")) {
    reject_unknown_keys(*model, {"id", "a", "xi", "tau", "T"}, "model");
    const std::string id = get_string(*model, "id", "CubicGlobal", "model");
    if (id == "CubicGlobal") {
      cfg.model.id = ExampleId::CubicGlobal;
    } else if (id == "CosineLocal") {
      cfg.model.id = ExampleId::CosineLocal;
    } else {
      throw SchemaError("'model.id' must be CubicGlobal or CosineLocal, got '" + id + "'");
    }
    cfg.model.a = get_number(*model, "a", cfg.model.a, "model");
    if (const Json* xi = get(*model, "xi")) {
      reject_unknown_keys(*xi, {"kind", "scale"}, "model.xi");
      const std::string kind = get_string(*xi, "kind", "constant", "model.xi");
      if (kind == "constant") {
        cfg.model.xi.kind = InitialSegmentChoice::Kind::Constant;
      } else if (kind == "cosine") {
        cfg.model.xi.kind = InitialSegmentChoice::Kind::Cosine;
      } else {
        throw SchemaError("'model.xi.kind' must be constant or cosine");
      }
      cfg.model.xi.scale = get_number(*xi, "scale", 1.0, "model.xi");
    }
    cfg.model.tau = get_rational(*model, "tau", cfg.model.tau, "model");
    cfg.model.horizon = get_rational(*model, "T", cfg.model.horizon, "model");
  }

  if (const Json* scheme = get(root, "scheme")) {
    reject_unknown_keys(*scheme, {"variant", "theta", "delta", "levels", "guard_mode", "solver"},
                        "scheme");
    const std::string variant = get_string(*scheme, "variant", "TamedTheta", "scheme");
    if (variant == "TamedTheta") {
      cfg.scheme.variant = SchemeVariant::TamedTheta;
    } else if (variant == "SplitStep") {
      cfg.scheme.variant = SchemeVariant::SplitStep;
    } else if (variant == "ImprovedTruncated") {
      cfg.scheme.variant = SchemeVariant::ImprovedTruncated;
    } else {
      throw SchemaError("'scheme.variant' must be TamedTheta, SplitStep, or ImprovedTruncated");
    }
    cfg.scheme.theta = get_number(*scheme, "theta", cfg.scheme.theta, "scheme");
    if (!(cfg.scheme.theta >= 0.0 && cfg.scheme.theta <= 1.0)) {
      throw SchemaError("'scheme.theta' must lie in [0, 1]");
    }
    if (get(*scheme, "delta")) {
      cfg.scheme.delta = get_rational(*scheme, "delta", Rational(1, 64), "scheme");
    }
    if (const Json* levels = get(*scheme, "levels")) {
      if (!levels->is_array()) throw SchemaError("'scheme.levels' must be an array");
      for (const auto& level : *levels) {
        if (level.is_string()) {
          cfg.scheme.levels.push_back(parse_rational(level.get<std::string>()));
        } else if (level.is_number_integer()) {
          cfg.scheme.levels.push_back(Rational(level.get<std::int64_t>(), 1));
        } else {
          throw SchemaError("'scheme.levels' entries must be rational strings");
        }
      }
    }
    const std::string guard = get_string(*scheme, "guard_mode", "Strict", "scheme");
    if (guard == "Strict") {
      cfg.scheme.guard_mode = GuardEnforcement::Strict;
    } else if (guard == "WarnOnly") {
      cfg.scheme.guard_mode = GuardEnforcement::WarnOnly;
    } else {
      throw SchemaError("'scheme.guard_mode' must be Strict or WarnOnly");
    }
    if (const Json* solver = get(*scheme, "solver")) {
      reject_unknown_keys(*solver, {"method", "tol_residual", "max_iters", "fd_jacobian_eps"},
                          "scheme.solver");
      const std::string method = get_string(*solver, "method", "NewtonFallback", "scheme.solver");
      if (method == "FixedPoint") {
        cfg.scheme.solver.method = SolverMethod::FixedPoint;
      } else if (method == "NewtonFallback") {
        cfg.scheme.solver.method = SolverMethod::NewtonFallback;
      } else {
        throw SchemaError("'scheme.solver.method' must be FixedPoint or NewtonFallback");
      }
      cfg.scheme.solver.tol_residual =
          get_number(*solver, "tol_residual", cfg.scheme.solver.tol_residual, "scheme.solver");
      cfg.scheme.solver.max_iters = static_cast<int>(
          get_integer(*solver, "max_iters", cfg.scheme.solver.max_iters, "scheme.solver"));
      cfg.scheme.solver.fd_jacobian_eps = get_number(*solver, "fd_jacobian_eps",
                                                     cfg.scheme.solver.fd_jacobian_eps,
                                                     "scheme.solver");
    }
  }

  if (const Json* taming = get(root, "taming")) {
    reject_unknown_keys(*taming, {"mode", "alpha", "K5", "R"}, "taming");
    const std::string mode = get_string(*taming, "mode", "Sigmoidal", "taming");
    if (mode == "Sigmoidal") {
      cfg.taming.mode = TamingMode::Sigmoidal;
    } else if (mode == "Balanced") {
      cfg.taming.mode = TamingMode::Balanced;
    } else {
      throw SchemaError("'taming.mode' must be Sigmoidal or Balanced");
    }
    cfg.taming.alpha = get_number(*taming, "alpha", cfg.taming.alpha, "taming");
    if (!(cfg.taming.alpha > 0.0 && cfg.taming.alpha <= 0.5)) {
      throw SchemaError("'taming.alpha' must lie in (0, 1/2]");
    }
    cfg.taming.K5 = get_number(*taming, "K5", cfg.taming.K5, "taming");
    if (!(cfg.taming.K5 >= 1.0)) throw SchemaError("'taming.K5' must be at least 1");
    cfg.taming.R = get_number(*taming, "R", cfg.taming.R, "taming");
    if (!(cfg.taming.R > 0.0)) throw SchemaError("'taming.R' must be positive");
  }

  if (const Json* experiment = get(root, "experiment")) {
    reject_unknown_keys(*experiment,
                        {"kind", "p", "n_paths", "ref_level", "seed", "refine", "untamed",
                         "box_radius", "samples", "weaker_growth"},
                        "experiment");
    if (get(*experiment, "kind")) {
      const std::string kind = get_string(*experiment, "kind", "", "experiment");
      const auto parsed = parse_kind(kind);
      if (!parsed) throw SchemaError("'experiment.kind' is not a known experiment: '" + kind + "'");
      cfg.experiment.kind = parsed;
    }
    cfg.experiment.p = get_number(*experiment, "p", cfg.experiment.p, "experiment");
    if (!(cfg.experiment.p >= 1.0)) throw SchemaError("'experiment.p' must be at least 1");
    if (get(*experiment, "n_paths")) {
      cfg.experiment.n_paths = get_integer(*experiment, "n_paths", 0, "experiment");
      if (*cfg.experiment.n_paths < 1) throw SchemaError("'experiment.n_paths' must be positive");
    }
    if (get(*experiment, "ref_level")) {
      cfg.experiment.ref_level = get_rational(*experiment, "ref_level", Rational(1, 8192),
                                              "experiment");
    }
    const std::int64_t seed = get_integer(*experiment, "seed",
                                          static_cast<std::int64_t>(cfg.experiment.seed),
                                          "experiment");
    if (seed < 0) throw SchemaError("'experiment.seed' must be non-negative");
    cfg.experiment.seed = static_cast<std::uint64_t>(seed);
    cfg.experiment.refine =
        static_cast<int>(get_integer(*experiment, "refine", cfg.experiment.refine, "experiment"));
    cfg.experiment.untamed = get_bool(*experiment, "untamed", cfg.experiment.untamed, "experiment");
    cfg.experiment.box_radius =
        get_number(*experiment, "box_radius", cfg.experiment.box_radius, "experiment");
    cfg.experiment.samples =
        get_integer(*experiment, "samples", cfg.experiment.samples, "experiment");
    cfg.experiment.weaker_growth =
        get_bool(*experiment, "weaker_growth", cfg.experiment.weaker_growth, "experiment");
  }

  if (const Json* output = get(root, "output")) {
    reject_unknown_keys(*output, {"directory", "csv_precision"}, "output");
    cfg.output.directory = get_string(*output, "directory", cfg.output.directory, "output");
    cfg.output.csv_precision = static_cast<int>(
        get_integer(*output, "csv_precision", cfg.output.csv_precision, "output"));
    if (cfg.output.csv_precision < 6 || cfg.output.csv_precision > 17) {
      throw SchemaError("'output.csv_precision' must lie in [6, 17]");
    }
  }

  if (cfg.model.id == ExampleId::CubicGlobal && !(std::abs(cfg.model.a) < 0.5)) {
    throw SchemaError("'model.a' must satisfy |a| < 1/2 for CubicGlobal");
  }
  if (!(cfg.model.tau > Rational(0, 1))) throw SchemaError("'model.tau' must be positive");
  if (!(cfg.model.horizon > cfg.model.tau)) throw SchemaError("'model.T' must exceed 'model.tau'");

  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  Json root;
  root["model"] = {
      {"id", cfg.model.id == ExampleId::CubicGlobal ? "CubicGlobal" : "CosineLocal"},
      {"a", cfg.model.a},
      {"xi",
       {{"kind",
         cfg.model.xi.kind == InitialSegmentChoice::Kind::Constant ? "constant" : "cosine"},
        {"scale", cfg.model.xi.scale}}},
      {"tau", cfg.model.tau.str()},
      {"T", cfg.model.horizon.str()},
  };
  Json scheme;
  scheme["variant"] = variant_name(cfg.scheme.variant);
  scheme["theta"] = cfg.scheme.theta;
  if (cfg.scheme.delta) scheme["delta"] = cfg.scheme.delta->str();
  if (!cfg.scheme.levels.empty()) {
    Json levels = Json::array();
    for (const auto& level : cfg.scheme.levels) levels.push_back(level.str());
    scheme["levels"] = levels;
  }
  scheme["guard_mode"] =
      cfg.scheme.guard_mode == GuardEnforcement::Strict ? "Strict" : "WarnOnly";
  scheme["solver"] = {
      {"method",
       cfg.scheme.solver.method == SolverMethod::FixedPoint ? "FixedPoint" : "NewtonFallback"},
      {"tol_residual", cfg.scheme.solver.tol_residual},
      {"max_iters", cfg.scheme.solver.max_iters},
      {"fd_jacobian_eps", cfg.scheme.solver.fd_jacobian_eps},
  };
  root["scheme"] = scheme;
  root["taming"] = {
      {"mode", cfg.taming.mode == TamingMode::Sigmoidal ? "Sigmoidal" : "Balanced"},
      {"alpha", cfg.taming.alpha},
      {"K5", cfg.taming.K5},
      {"R", cfg.taming.R},
  };
  Json experiment;
  if (cfg.experiment.kind) experiment["kind"] = kind_name(*cfg.experiment.kind);
  experiment["p"] = cfg.experiment.p;
  if (cfg.experiment.n_paths) experiment["n_paths"] = *cfg.experiment.n_paths;
  if (cfg.experiment.ref_level) experiment["ref_level"] = cfg.experiment.ref_level->str();
  experiment["seed"] = cfg.experiment.seed;
  experiment["refine"] = cfg.experiment.refine;
  experiment["untamed"] = cfg.experiment.untamed;
  experiment["box_radius"] = cfg.experiment.box_radius;
  experiment["samples"] = cfg.experiment.samples;
  experiment["weaker_growth"] = cfg.experiment.weaker_growth;
  root["experiment"] = experiment;
  root["output"] = {
      {"directory", cfg.output.directory},
      {"csv_precision", cfg.output.csv_precision},
  };
  return root.dump(2) + "\n";
}

}  // namespace nsdde
