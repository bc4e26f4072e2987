#pragma once

#include <string>
#include <utility>
#include <vector>

#include "divsf/envs.hpp"
#include "divsf_cli/persistence.hpp"

namespace divsf::cli {

/// Minimal SVG writer. Coordinates are printed with two decimals so that
/// output bytes depend only on the drawn values.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none");
  void circle(double cx, double cy, double r, const std::string& fill);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
                double width = 1.5);
  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

/// Two-dimensional projection of the policies' successor features (the
/// features themselves when d <= 2, else the top two principal axes).
std::string render_sf_scatter(const StoredPolicySet& set, const std::string& title);

/// Stationary state distribution of one policy laid out on the environment.
std::string render_heatmap(const StoredPolicy& policy, const EnvConfig& env,
                           const std::string& title);

/// sigma(lambda) and v_e against the solver step for one policy.
std::string render_trace(int policy_index, const std::vector<TracePoint>& trace,
                         const std::string& title);

}  // namespace divsf::cli
