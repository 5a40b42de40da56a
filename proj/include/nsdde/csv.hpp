#pragma once

#include <ostream>
#include <string>

#include "nsdde/experiments.hpp"
#include "nsdde/scheme.hpp"
#include "nsdde/verify.hpp"

namespace nsdde {

// Shortest-faithful decimal at the requested significant digits; 17 digits
// round-trips doubles exactly, which is what keeps golden CSVs byte-stable.
std::string format_sig(double value, int precision = 17);

void write_trajectory_csv(std::ostream& os, const PathResult& path, const SchemeConfig& cfg,
                          int precision = 17);
void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study, int precision = 17);
void write_fit_csv(std::ostream& os, const FitResult* fit, bool degenerate, int precision = 17);
void write_moments_csv(std::ostream& os, const MomentStudy& study, int precision = 17);
void write_modulus_csv(std::ostream& os, const ModulusStudy& study, int precision = 17);
void write_assumption_csv(std::ostream& os, const std::vector<AssumptionReport>& reports,
                          int precision = 17);

}  // namespace nsdde
