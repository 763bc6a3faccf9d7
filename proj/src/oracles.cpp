#include "tmc/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace tmc::oracles {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + step;
    const double fp = f(xp);
    xp[i] = x[i] - step;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd xp = x;
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + step;
    const Eigen::VectorXd fp = f(xp);
    xp[j] = x[j] - step;
    const Eigen::VectorXd fm = f(xp);
    xp[j] = x[j];
    if (jac.size() == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

double ResistanceProfile::temperature_at(double height) const {
  if (heights.size() < 2) throw std::invalid_argument("profile has no layers");
  if (height <= heights.front()) return temperatures.front();
  if (height >= heights.back()) return temperatures.back();
  for (std::size_t i = 1; i < heights.size(); ++i) {
    if (height <= heights[i]) {
      const double t = (height - heights[i - 1]) / (heights[i] - heights[i - 1]);
      return (1.0 - t) * temperatures[i - 1] + t * temperatures[i];
    }
  }
  return temperatures.back();
}

ResistanceProfile series_resistance_profile(const std::vector<ConductionLayer>& layers,
                                            double t_bottom, double t_top) {
  if (layers.empty()) throw std::invalid_argument("no layers");
  double resistance = 0.0;
  for (const auto& l : layers) {
    if (l.thickness <= 0.0) throw std::invalid_argument("layer thickness must be positive");
    if (l.conductivity <= 0.0) throw std::invalid_argument("layer conductivity must be positive");
    resistance += l.thickness / l.conductivity;
  }
  ResistanceProfile p;
  p.flux = (t_top - t_bottom) / resistance;
  p.heights.reserve(layers.size() + 1);
  p.temperatures.reserve(layers.size() + 1);
  p.heights.push_back(0.0);
  p.temperatures.push_back(t_bottom);
  double h = 0.0, t = t_bottom;
  for (const auto& l : layers) {
    h += l.thickness;
    t += p.flux * l.thickness / l.conductivity;
    p.heights.push_back(h);
    p.temperatures.push_back(t);
  }
  // Equal flux through every layer pins the top temperature exactly.
  p.temperatures.back() = t_top;
  return p;
}

} // namespace tmc::oracles
