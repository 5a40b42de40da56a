#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsdde/experiments.hpp"
#include "nsdde/model.hpp"
#include "nsdde/scheme.hpp"
#include "nsdde/taming.hpp"

namespace nsdde {

enum class ExperimentKind { Simulate, Converge, Moments, Modulus, CheckAssumptions };

const char* kind_name(ExperimentKind k);
std::optional<ExperimentKind> parse_kind(const std::string& name);

// Parsed run configuration. Rationals are carried exactly; serialization
// round-trips losslessly and unknown keys are rejected with their path.
struct RunConfig {
  struct ModelBlock {
    ExampleId id{ExampleId::CubicGlobal};
    double a{0.25};
    InitialSegmentChoice xi{};
    Rational tau{1, 1};
    Rational horizon{2, 1};
  } model;

  struct SchemeBlock {
    SchemeVariant variant{SchemeVariant::TamedTheta};
    double theta{0.5};
    std::optional<Rational> delta;        // single-step runs (simulate)
    std::vector<Rational> levels;         // multi-level runs
    GuardEnforcement guard_mode{GuardEnforcement::Strict};
    ImplicitSolverPolicy solver{};
  } scheme;

  struct TamingBlock {
    TamingMode mode{TamingMode::Sigmoidal};
    double alpha{0.5};
    double K5{1.0};
    double R{3.0};
  } taming;

  struct ExperimentBlock {
    std::optional<ExperimentKind> kind;
    double p{2.0};
    std::optional<std::int64_t> n_paths;  // default 1000 (converge) / 500 (moments, modulus)
    std::optional<Rational> ref_level;
    std::uint64_t seed{20240401};
    int refine{8};
    bool untamed{false};
    double box_radius{3.0};
    std::int64_t samples{20000};
    bool weaker_growth{false};  // check A3'/B2' instead of A3/B2
  } experiment;

  struct OutputBlock {
    std::string directory{"out"};
    int csv_precision{17};
  } output;
};

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);

// Runtime overrides from CLI flags.
struct DispatchOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

struct DispatchResult {
  std::vector<std::string> files;
  int exit_code{0};
};

// Runs the selected driver and writes its CSV outputs plus a metadata file.
DispatchResult dispatch(ExperimentKind cmd, const RunConfig& cfg, const DispatchOptions& opts);

}  // namespace nsdde
