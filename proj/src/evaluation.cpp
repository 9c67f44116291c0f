#include "corrml/evaluation.hpp"

namespace corrml {

Metrics compute_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw ValidationError("compute_metrics: length mismatch");
  if (y.size() == 0) throw ValidationError("compute_metrics: empty input");
  const double n = static_cast<double>(y.size());
  const Eigen::ArrayXd err = (y - y_hat).array();
  Metrics m;
  m.mae = err.abs().sum() / n;
  const double ss_res = err.square().sum();
  m.mse = ss_res / n;
  m.rmse = std::sqrt(m.mse);
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

std::vector<ParamPoint> Grid::points() const {
  std::vector<ParamPoint> out;
  if (axes.empty()) return out;
  for (const auto& [name, values] : axes)
    if (values.empty()) return out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    ParamPoint p;
    for (std::size_t a = 0; a < axes.size(); ++a) p[axes[a].first] = axes[a].second[idx[a]];
    out.push_back(std::move(p));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

bool better_grid_point(const GridPointResult& a, const GridPointResult& b) {
  if (a.mean_r2 != b.mean_r2) return a.mean_r2 > b.mean_r2;
  if (a.mean_rmse != b.mean_rmse) return a.mean_rmse < b.mean_rmse;
  return a.point < b.point;
}

}  // namespace corrml
