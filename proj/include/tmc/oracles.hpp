#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace tmc::oracles {

// Central finite differences with a relative step h*(1+|x_i|). These are the
// independent references the verification suite checks analytic derivatives
// against; they must never call into the analytic derivative code.

struct FdScheme {
  double gradient_step = 1e-6;
  double jacobian_step = 1e-7;
};

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-6);

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-7);

/// Steady 1D conduction through a stack of layers in series.
struct ConductionLayer {
  double thickness;
  double conductivity;
};

struct ResistanceProfile {
  std::vector<double> heights;       // layer boundaries, heights[0] = 0
  std::vector<double> temperatures;  // temperature at each boundary
  double flux = 0.0;                 // heat flux through the stack, positive toward the top

  /// Piecewise-linear temperature at a height within the stack.
  double temperature_at(double height) const;
};

ResistanceProfile series_resistance_profile(const std::vector<ConductionLayer>& layers,
                                            double t_bottom, double t_top);

} // namespace tmc::oracles
