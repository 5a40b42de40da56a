#include "nsdde/csv.hpp"

#include <cstdio>

namespace nsdde {

std::string format_sig(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
  return buffer;
}

void write_trajectory_csv(std::ostream& os, const PathResult& path, const SchemeConfig& cfg,
                          int precision) {
  const Eigen::Index n = path.y_grid.cols();
  os << "k,t";
  for (Eigen::Index j = 0; j < n; ++j) os << ",y_" << (j + 1);
  os << ",iters,residual\n";

  const double delta = cfg.delta.value();
  // For the split-step variant the solve at index k produced y_k itself;
  // otherwise step k-1 produced y_k and row 0 is the initial value.
  const bool solve_at_k = cfg.variant == SchemeVariant::SplitStep;
  for (Eigen::Index k = 0; k < path.y_grid.rows(); ++k) {
    os << k << "," << format_sig(static_cast<double>(k) * delta, precision);
    for (Eigen::Index j = 0; j < n; ++j) os << "," << format_sig(path.y_grid(k, j), precision);
    const std::size_t slot = solve_at_k ? static_cast<std::size_t>(k)
                                        : static_cast<std::size_t>(k > 0 ? k - 1 : 0);
    if ((solve_at_k || k > 0) && slot < path.solver_iterations.size()) {
      os << "," << path.solver_iterations[slot] << ","
         << format_sig(path.solver_residuals[slot], precision);
    } else {
      os << ",0,0";
    }
    os << "\n";
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study, int precision) {
  os << "level,delta,error_p,n_paths,excluded\n";
  for (std::size_t j = 0; j < study.levels.size(); ++j) {
    os << study.levels[j].str() << "," << format_sig(study.levels[j].value(), precision) << ","
       << format_sig(study.errors[j], precision) << "," << study.n_paths << "," << study.excluded
       << "\n";
  }
}

void write_fit_csv(std::ostream& os, const FitResult* fit, bool degenerate, int precision) {
  os << "slope,intercept,r2\n";
  if (degenerate || fit == nullptr) {
    os << "nan,nan,nan\n";
    return;
  }
  os << format_sig(fit->slope, precision) << "," << format_sig(fit->intercept, precision) << ","
     << format_sig(fit->r_squared, precision) << "\n";
}

void write_moments_csv(std::ostream& os, const MomentStudy& study, int precision) {
  os << "delta,moment_p,divergence_fraction\n";
  for (std::size_t j = 0; j < study.steps.size(); ++j) {
    os << format_sig(study.steps[j].value(), precision) << ","
       << format_sig(study.moments[j], precision) << ","
       << format_sig(study.divergence_fraction[j], precision) << "\n";
  }
}

void write_modulus_csv(std::ostream& os, const ModulusStudy& study, int precision) {
  os << "level,delta,deviation_p,n_paths,excluded\n";
  for (std::size_t j = 0; j < study.levels.size(); ++j) {
    os << study.levels[j].str() << "," << format_sig(study.levels[j].value(), precision) << ","
       << format_sig(study.values[j], precision) << "," << study.n_paths << "," << study.excluded
       << "\n";
  }
}

void write_assumption_csv(std::ostream& os, const std::vector<AssumptionReport>& reports,
                          int precision) {
  os << "assumption,status,constant,witness,samples,radius\n";
  for (const auto& report : reports) {
    os << assumption_name(report.id) << ","
       << (report.status == CheckStatus::PassSampled ? "pass-sampled" : "violated-witness") << ","
       << format_sig(report.estimated_constant, precision) << ",";
    if (report.witness) {
      os << '"' << report.witness->note << '"';
    }
    os << "," << report.samples << "," << format_sig(report.box_radius, precision) << "\n";
  }
}

}  // namespace nsdde
