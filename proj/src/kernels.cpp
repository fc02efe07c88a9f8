#include "permlab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace permlab::kernels {

namespace {

// integral over (-inf, v] of clamp(t, a, b) - a
double clamp_primitive(double v, double a, double b) {
  if (v <= a) return 0.0;
  if (v <= b) return 0.5 * (v - a) * (v - a);
  return 0.5 * (b - a) * (b - a) + (b - a) * (v - b);
}

double frac_below(double x, double a, double b) {
  return std::clamp((x - a) / (b - a), 0.0, 1.0);
}

struct Vec2 {
  double u, v;
};

// Keep the part of the polygon with a*u + b*v + c >= 0.
std::vector<Vec2> clip(const std::vector<Vec2>& poly, double a, double b, double c) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 p = poly[k];
    const Vec2 q = poly[(k + 1) % n];
    const double fp = a * p.u + b * p.v + c;
    const double fq = a * q.u + b * q.v + c;
    if (fp >= 0) out.push_back(p);
    if ((fp >= 0) != (fq >= 0)) {
      const double t = fp / (fp - fq);
      out.push_back({p.u + t * (q.u - p.u), p.v + t * (q.v - p.v)});
    }
  }
  return out;
}

double area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 p = poly[k];
    const Vec2 q = poly[(k + 1) % poly.size()];
    s += p.u * q.v - q.u * p.v;
  }
  return 0.5 * std::abs(s);
}

}  // namespace

double prob_less(double a, double b, double c, double d) {
  const double integral = clamp_primitive(d, a, b) - clamp_primitive(c, a, b);
  return std::clamp(integral / ((b - a) * (d - c)), 0.0, 1.0);
}

double inversion_cell_segment(const Rect& cell, const Segment& s) {
  const double a = cell.x_lo, b = cell.x_hi, c = cell.y_lo, d = cell.y_hi;
  auto q = [&](double x) {
    const double y = s.y_at(x);
    const double left = frac_below(x, a, b);   // P(U < x)
    const double below = frac_below(y, c, d);  // P(V < y)
    return left * (1.0 - below) + (1.0 - left) * below;
  };
  std::vector<double> cuts{s.from.x, s.to.x};
  for (double g : {a, b})
    if (g > s.from.x && g < s.to.x) cuts.push_back(g);
  for (double g : {c, d}) {
    const double x = s.from.x + s.dir * (g - s.from.y);
    if (x > s.from.x && x < s.to.x) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  // q is quadratic between cuts, so Simpson is exact
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    if (hi <= lo) continue;
    total += (hi - lo) / 6.0 * (q(lo) + 4.0 * q(0.5 * (lo + hi)) + q(hi));
  }
  return std::clamp(total / s.length_x(), 0.0, 1.0);
}

double inversion_segment_segment(const Segment& s, const Segment& t) {
  // (u, v) = x-coordinates of the two points; y_s(u) = c1 + d1*u.
  const double d1 = s.dir, d2 = t.dir;
  const double c1 = s.intercept(), c2 = t.intercept();
  const std::vector<Vec2> box{{s.from.x, t.from.x},
                              {s.to.x, t.from.x},
                              {s.to.x, t.to.x},
                              {s.from.x, t.to.x}};
  // u < v and y_s(u) > y_t(v)
  const double a1 = area(clip(clip(box, -1.0, 1.0, 0.0), d1, -d2, c1 - c2));
  // u > v and y_s(u) < y_t(v)
  const double a2 = area(clip(clip(box, 1.0, -1.0, 0.0), -d1, d2, c2 - c1));
  return std::clamp((a1 + a2) / (s.length_x() * t.length_x()), 0.0, 1.0);
}

double area_below_antidiagonal(const Rect& r, double b) {
  const std::vector<Vec2> box{{r.x_lo, r.y_lo}, {r.x_hi, r.y_lo}, {r.x_hi, r.y_hi}, {r.x_lo, r.y_hi}};
  return area(clip(box, -1.0, -1.0, b));
}

}  // namespace permlab::kernels
