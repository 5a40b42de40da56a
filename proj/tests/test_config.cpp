#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdde/config.hpp"
#include "nsdde/errors.hpp"
#include "nsdde/scheme.hpp"

using namespace nsdde;

TEST_CASE("an empty document yields the documented defaults") {
  const RunConfig cfg = parse_config("{}");
  CHECK(cfg.scheme.theta == 0.5);
  CHECK(cfg.taming.alpha == 0.5);
  CHECK(cfg.experiment.p == 2.0);
  CHECK(cfg.experiment.seed == 20240401);
  CHECK(cfg.model.id == ExampleId::CubicGlobal);
  CHECK(cfg.model.a == 0.25);
  CHECK(cfg.model.tau == Rational(1, 1));
  CHECK(cfg.model.horizon == Rational(2, 1));
  CHECK(cfg.output.csv_precision == 17);
}

TEST_CASE("out-of-range values are schema violations") {
  CHECK_THROWS_AS(parse_config(R"({"scheme": {"theta": 1.5}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"taming": {"alpha": 0.75}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"taming": {"K5": 0.5}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"a": 0.5}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"id": "Unknown"}})"), SchemaError);
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    parse_config(R"({"scheme": {"thetaa": 0.5}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& err) {
    CHECK(std::string(err.what()).find("scheme.thetaa") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"unknown_block": {}})"), SchemaError);
}

TEST_CASE("rational steps: exact ratios pass, non-dyadic decimals fail") {
  const RunConfig cfg = parse_config(R"({"scheme": {"delta": "1/3"}})");
  REQUIRE(cfg.scheme.delta.has_value());
  const SchemeConfig scheme = make_scheme_config(SchemeVariant::TamedTheta, 0.5, *cfg.scheme.delta,
                                                 cfg.model.tau, cfg.model.horizon);
  CHECK(scheme.delay_steps == 3);
  CHECK(scheme.total_steps == 6);

  CHECK_THROWS_AS(parse_config(R"({"scheme": {"delta": "0.3"}})"), SchemaError);
}

TEST_CASE("serialization round-trips losslessly") {
  const std::string text = R"({
    "model": {"id": "CosineLocal", "a": 0.1, "xi": {"kind": "cosine", "scale": 2.5},
              "tau": "1/2", "T": "3/2"},
    "scheme": {"variant": "ImprovedTruncated", "theta": 0.25, "levels": ["1/16", "1/32", "1/64"],
               "guard_mode": "WarnOnly",
               "solver": {"method": "FixedPoint", "tol_residual": 1e-10, "max_iters": 64,
                          "fd_jacobian_eps": 1e-6}},
    "taming": {"mode": "Balanced", "alpha": 0.25, "K5": 2.0, "R": 4.0},
    "experiment": {"kind": "converge", "p": 4.0, "n_paths": 64, "ref_level": "1/1024",
                   "seed": 99, "refine": 4, "untamed": false, "box_radius": 2.0,
                   "samples": 4096, "weaker_growth": true},
    "output": {"directory": "results", "csv_precision": 17}
  })";
  const RunConfig cfg = parse_config(text);
  const std::string serialized = serialize_config(cfg);
  const RunConfig reparsed = parse_config(serialized);
  CHECK(serialize_config(reparsed) == serialized);

  CHECK(reparsed.model.id == ExampleId::CosineLocal);
  CHECK(reparsed.model.tau == Rational(1, 2));
  CHECK(reparsed.scheme.levels.size() == 3);
  CHECK(reparsed.scheme.solver.method == SolverMethod::FixedPoint);
  CHECK(reparsed.experiment.ref_level == Rational(1, 1024));
  CHECK(reparsed.experiment.weaker_growth);
}

TEST_CASE("error types map to the documented exit codes") {
  CHECK(static_cast<int>(SchemaError("x").code()) == 2);
  CHECK(static_cast<int>(GuardError("x").code()) == 3);
  CHECK(static_cast<int>(SolverError("x", 1, 0.5).code()) == 4);
  CHECK(static_cast<int>(GridMismatchError("x").code()) == 5);
  CHECK(static_cast<int>(InvalidCoefficientError("x").code()) == 1);
}

TEST_CASE("experiment kinds parse") {
  CHECK(parse_kind("simulate") == ExperimentKind::Simulate);
  CHECK(parse_kind("converge") == ExperimentKind::Converge);
  CHECK(parse_kind("moments") == ExperimentKind::Moments);
  CHECK(parse_kind("modulus") == ExperimentKind::Modulus);
  CHECK(parse_kind("check-assumptions") == ExperimentKind::CheckAssumptions);
  CHECK_FALSE(parse_kind("frobnicate").has_value());
}
