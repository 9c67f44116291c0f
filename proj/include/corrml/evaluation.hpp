#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corrml/errors.hpp"
#include "corrml/parallel.hpp"
#include "corrml/preprocess.hpp"

namespace corrml {

struct Metrics {
  std::optional<double> r2;  // undefined when the true values are constant
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

// R2 = 1 - SS_res / SS_tot against the mean of y; MAE, MSE, RMSE = sqrt(MSE).
Metrics compute_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

using ParamPoint = std::map<std::string, double>;

// Cartesian lattice over named axes.
struct Grid {
  std::vector<std::pair<std::string, std::vector<double>>> axes;

  std::vector<ParamPoint> points() const;
};

struct GridPointResult {
  ParamPoint point;
  std::vector<Metrics> folds;
  double mean_r2 = 0.0;  // over folds with a defined R2; -inf if none
  double mean_rmse = 0.0;
};

struct CvResult {
  std::vector<GridPointResult> points;  // in grid enumeration order
  std::size_t best = 0;

  const ParamPoint& best_point() const { return points.at(best).point; }
};

// Ranking: higher mean R2, then lower mean RMSE, then the lexicographically
// smallest parameter point. Independent of enumeration order.
bool better_grid_point(const GridPointResult& a, const GridPointResult& b);

template <class Model>
struct GridSearchResult {
  CvResult cv;
  Model best_model;  // refit on all rows
};

// Family must provide `Model fit(const ParamPoint&, const Eigen::MatrixXd&,
// const Eigen::VectorXd&, std::uint64_t seed) const`, and Model must provide
// `Eigen::VectorXd predict(const Eigen::MatrixXd&) const`.
template <class Family>
auto grid_search(const Family& family, const Grid& grid, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const FoldPlan& plan, std::uint64_t seed) {
  using Model = decltype(family.fit(ParamPoint{}, X, y, seed));
  const auto points = grid.points();
  if (points.empty()) throw ValidationError("grid_search: empty grid");
  if (plan.assignment.size() != static_cast<std::size_t>(X.rows()))
    throw ValidationError("grid_search: fold plan does not match data");

  CvResult cv;
  cv.points.resize(points.size());
  parallel_for(points.size(), [&](std::size_t p) {
    auto& res = cv.points[p];
    res.point = points[p];
    double r2_sum = 0.0, rmse_sum = 0.0;
    int r2_count = 0;
    for (std::size_t f = 0; f < plan.k; ++f) {
      const auto train = plan.training_rows(f);
      const auto val = plan.validation_rows(f);
      const Model model = family.fit(points[p], select_rows(X, train), select_rows(y, train), seed);
      const Metrics m = compute_metrics(select_rows(y, val), model.predict(select_rows(X, val)));
      if (m.r2) {
        r2_sum += *m.r2;
        ++r2_count;
      }
      rmse_sum += m.rmse;
      res.folds.push_back(m);
    }
    res.mean_r2 = r2_count ? r2_sum / r2_count : -std::numeric_limits<double>::infinity();
    res.mean_rmse = rmse_sum / static_cast<double>(plan.k);
  });
  for (std::size_t p = 1; p < cv.points.size(); ++p)
    if (better_grid_point(cv.points[p], cv.points[cv.best])) cv.best = p;

  return GridSearchResult<Model>{cv, family.fit(cv.best_point(), X, y, seed)};
}

}  // namespace corrml
