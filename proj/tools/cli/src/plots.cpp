#include "divsf_cli/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Eigenvalues>

namespace divsf::cli {
namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  // Avoid "-0.00", which would make identical pictures differ in bytes.
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Piecewise-linear approximation of the viridis colour map.
std::string colour(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops{{{68, 1, 84},
                                                                {59, 82, 139},
                                                                {33, 145, 140},
                                                                {94, 201, 98},
                                                                {253, 231, 37}}};
  t = std::clamp(std::isnan(t) ? 0.0 : t, 0.0, 1.0) * (kStops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) {
    rgb[k] = static_cast<int>(std::lround(kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k])));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range of(const std::vector<double>& xs) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double x : xs) {
      if (std::isnan(x)) continue;
      r.lo = std::min(r.lo, x);
      r.hi = std::max(r.hi, x);
    }
    if (!(r.lo <= r.hi)) return {0.0, 1.0};
    if (r.hi - r.lo < 1e-12) {
      const double pad = std::max(1e-3, std::abs(r.lo) * 0.05);
      r.lo -= pad;
      r.hi += pad;
    }
    return r;
  }
  double unit(double x) const { return (x - lo) / (hi - lo); }
};

// Axes frame with min/max tick labels; maps data to the plot rectangle.
struct Panel {
  double x0, y0, w, h;
  Range xr, yr;

  double px(double x) const { return x0 + w * xr.unit(x); }
  double py(double y) const { return y0 + h * (1.0 - yr.unit(y)); }

  void frame(SvgDocument& svg, const std::string& xlabel, const std::string& ylabel) const {
    svg.rect(x0, y0, w, h, "none", "#444444");
    svg.text(x0, y0 + h + 14, label(xr.lo), 10, "middle");
    svg.text(x0 + w, y0 + h + 14, label(xr.hi), 10, "middle");
    svg.text(x0 - 4, y0 + h, label(yr.lo), 10, "end");
    svg.text(x0 - 4, y0 + 8, label(yr.hi), 10, "end");
    svg.text(x0 + w / 2, y0 + h + 28, xlabel, 11, "middle");
    svg.text(x0 - 4, y0 + h / 2, ylabel, 11, "end");
  }
};

// Projection to two coordinates; principal axes get a deterministic sign.
std::vector<std::pair<double, double>> project(const StoredPolicySet& set,
                                               std::string* xlabel, std::string* ylabel) {
  const int n = static_cast<int>(set.policies.size());
  const int d = set.feature_dim;
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  if (d <= 2) {
    *xlabel = "psi[0]";
    *ylabel = d == 2 ? "psi[1]" : "";
    for (int i = 0; i < n; ++i) {
      const Vector& p = set.policies[static_cast<std::size_t>(i)].psi;
      pts[static_cast<std::size_t>(i)] = {p(0), d == 2 ? p(1) : 0.0};
    }
    return pts;
  }
  Matrix X(n, d);
  for (int i = 0; i < n; ++i) X.row(i) = set.policies[static_cast<std::size_t>(i)].psi.transpose();
  const Vector mean = X.colwise().mean().transpose();
  X.rowwise() -= mean.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(X.transpose() * X);
  Matrix axes(d, 2);
  for (int k = 0; k < 2; ++k) {
    Vector v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(k) = v;
  }
  const Matrix Y = X * axes;
  for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = {Y(i, 0), Y(i, 1)};
  *xlabel = "PC1";
  *ylabel = "PC2";
  return pts;
}

}  // namespace

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& fill,
                       const std::string& stroke) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void SvgDocument::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"" + fill + "\"/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                       double width) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\"/>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points,
                           const std::string& stroke, double width) {
  std::string pts;
  for (const auto& [x, y] : points) {
    if (!pts.empty()) pts += ' ';
    pts += num(x) + "," + num(y);
  }
  body_ += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + stroke +
           "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void SvgDocument::text(double x, double y, const std::string& s, double size,
                       const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" text-anchor=\"" + anchor + "\" font-family=\"sans-serif\">" + escape(s) +
           "</text>\n";
}

std::string SvgDocument::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
         num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

std::string render_sf_scatter(const StoredPolicySet& set, const std::string& title) {
  SvgDocument svg(480, 420);
  svg.text(240, 22, title, 14, "middle");
  std::string xlabel, ylabel;
  const auto pts = project(set, &xlabel, &ylabel);
  std::vector<double> xs, ys;
  for (const auto& [x, y] : pts) {
    xs.push_back(x);
    ys.push_back(y);
  }
  Panel panel{70, 40, 380, 320, Range::of(xs), Range::of(ys)};
  panel.frame(svg, xlabel, ylabel);
  const double n = std::max<double>(1.0, static_cast<double>(pts.size() - 1));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cx = panel.px(pts[i].first);
    const double cy = panel.py(pts[i].second);
    svg.circle(cx, cy, 5, colour(static_cast<double>(i) / n));
    svg.text(cx + 7, cy - 5, std::to_string(set.policies[i].index), 11);
  }
  return svg.str();
}

std::string render_heatmap(const StoredPolicy& policy, const EnvConfig& env,
                           const std::string& title) {
  const int cols = layout_width(env);
  const int rows = layout_height(env);
  const double cell = std::clamp(320.0 / std::max(cols, rows), 12.0, 60.0);
  const double left = 20, top = 40;
  SvgDocument svg(left * 2 + cell * cols + 60, top + cell * rows + 30);
  svg.text(left, 22, title, 14);
  const Vector& d = policy.state_distribution;
  const double peak = d.size() > 0 ? std::max(d.maxCoeff(), 1e-300) : 1.0;
  for (int s = 0; s < static_cast<int>(d.size()); ++s) {
    const GridPos pos = grid_position(env, s);
    const double x = left + cell * pos.x;
    const double y = top + cell * pos.y;
    svg.rect(x, y, cell, cell, colour(d(s) / peak), "#ffffff");
    if (cell >= 30) svg.text(x + cell / 2, y + cell / 2 + 4, label(d(s)), 9, "middle");
  }
  // Colour bar.
  const double bx = left + cell * cols + 20;
  for (int k = 0; k < 20; ++k) {
    svg.rect(bx, top + (19 - k) * cell * rows / 20.0, 14, cell * rows / 20.0,
             colour(k / 19.0));
  }
  svg.text(bx + 18, top + 8, label(peak), 9);
  svg.text(bx + 18, top + cell * rows, "0", 9);
  return svg.str();
}

std::string render_trace(int policy_index, const std::vector<TracePoint>& trace,
                         const std::string& title) {
  SvgDocument svg(520, 440);
  svg.text(260, 22, title, 14, "middle");
  std::vector<double> steps, sigma, ve;
  for (const TracePoint& p : trace) {
    steps.push_back(p.step);
    sigma.push_back(p.sigma_lambda);
    ve.push_back(p.v_e);
  }
  const Range xr = Range::of(steps);
  const Panel top{80, 40, 410, 150, xr, Range{0.0, 1.0}};
  const Panel bottom{80, 240, 410, 150, xr, Range::of(ve)};
  top.frame(svg, "", "sigma(lambda)");
  bottom.frame(svg, "step", "v_e");

  const auto draw = [&](const Panel& panel, const std::vector<double>& ys, const char* stroke) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (std::isnan(ys[i])) continue;
      pts.emplace_back(panel.px(steps[i]), panel.py(ys[i]));
    }
    if (pts.size() == 1) {
      svg.circle(pts[0].first, pts[0].second, 4, stroke);
    } else if (pts.size() > 1) {
      svg.polyline(pts, stroke);
    }
  };
  draw(top, sigma, "#3b528b");
  draw(bottom, ve, "#21918c");
  if (std::all_of(sigma.begin(), sigma.end(), [](double s) { return std::isnan(s); })) {
    svg.text(285, 120, "policy " + std::to_string(policy_index) + ": no multiplier (exact LP)",
             11, "middle");
  }
  return svg.str();
}

}  // namespace divsf::cli
