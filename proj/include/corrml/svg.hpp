#pragma once

// Minimal deterministic SVG charts: grouped bars and true-vs-predicted
// scatter plots. Output depends only on the inputs.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace corrml::svg {

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> groups;   // x-axis categories
  std::vector<std::string> series;   // one bar per series inside each group
  std::vector<std::vector<std::optional<double>>> values;  // [series][group]; nullopt = no bar
};

std::string render_bar_chart(const BarChart& chart);

struct Scatter {
  std::string title;
  std::string x_label = "true";
  std::string y_label = "predicted";
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// Includes the y = x reference line.
std::string render_scatter(const Scatter& plot);

}  // namespace corrml::svg
