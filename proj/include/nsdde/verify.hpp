#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsdde/model.hpp"
#include "nsdde/taming.hpp"

namespace nsdde {

// Sampled checks of the assumption ladder. B-prefixed conditions are
// evaluated for the sigmoidal taming, C-prefixed ones for the balanced
// taming; the primed forms fold the diffusion term into the growth bound.
enum class AssumptionId {
  A2,
  A3,
  A3Prime,
  A4,
  A5,
  B1,
  B2,
  B2Prime,
  B3,
  B4,
  C1,
  C2,
  C3,
  C4,
};

enum class CheckStatus { PassSampled, ViolatedWitness };

struct Witness {
  Vector x, y, xbar, ybar;
  double lhs{0.0};
  double rhs{0.0};
  std::string note;
};

struct AssumptionReport {
  AssumptionId id{AssumptionId::A2};
  CheckStatus status{CheckStatus::PassSampled};
  double estimated_constant{0.0};
  std::optional<Witness> witness;
  std::int64_t samples{0};
  double box_radius{0.0};
};

struct CheckOptions {
  double box_radius{3.0};
  std::int64_t samples{20000};  // rounded up to whole sampling chunks
  double p{2.0};
  std::uint64_t seed{20240401};
  std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  int workers{0};
};

const char* assumption_name(AssumptionId id);
std::optional<AssumptionId> parse_assumption(const std::string& name);

AssumptionReport check_assumption(AssumptionId id, const ProblemSpec& spec,
                                  const AssumptionConstants& constants, const TamingConfig& taming,
                                  const CutoffConfig& cut, const CheckOptions& options);

// The polynomial Lipschitz quotient of the raw drift (second half of the
// global one-sided assumption), sampled on the box.
double sample_polynomial_lipschitz(const ProblemSpec& spec, double l, const CheckOptions& options);

// Constants the step-size guards consume, sampled at the smallest step the
// run will use. Mbar is reported both as the sampled global one-sided
// quotient of the truncated drift and through the lemma form
// M_R0 + 2 C_zeta Lbar_R0; the guard uses the larger of the two.
struct GuardConstantEstimates {
  double K3_tilde{0.0};
  double Lbar_R0{0.0};
  double Lbar_R0_plus1{0.0};
  double M_R0{0.0};
  double Mbar_sampled{0.0};
  double Mbar_formula{0.0};

  double Mbar() const { return Mbar_sampled > Mbar_formula ? Mbar_sampled : Mbar_formula; }
};

GuardConstantEstimates estimate_guard_constants(const ProblemSpec& spec, const TamingConfig& taming,
                                                const CutoffConfig& cut, double R0,
                                                std::int64_t samples, std::uint64_t seed,
                                                double smallest_delta, int workers = 0);

// Fills the radius-indexed estimators on the model's constants: L_R (local
// one-sided Lipschitz), Lbar_R (sup of |b|), M_R (one-sided constant of the
// balanced drift), N_R (drift taming-distance quotient at the coarsest ladder
// step). The ladder constants are never available in closed form; sampling
// is how they get values.
void populate_local_constants(ExampleModel& model, const TamingConfig& taming,
                              const CutoffConfig& cut, const std::vector<double>& radii,
                              const CheckOptions& options);

}  // namespace nsdde
