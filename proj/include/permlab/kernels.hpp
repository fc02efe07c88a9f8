#pragma once

#include "permlab/measures.hpp"

namespace permlab::kernels {

// P(U < V) for independent U ~ Unif[a,b], V ~ Unif[c,d]; a < b, c < d.
double prob_less(double a, double b, double c, double d);

// Probability that a uniform point of the cell and a uniform point of the
// segment form an inversion (one is above-left of the other).
double inversion_cell_segment(const Rect& cell, const Segment& s);

// Same for two independent uniform points on two segments.
double inversion_segment_segment(const Segment& s, const Segment& t);

// Area of r intersected with {x + y < b}.
double area_below_antidiagonal(const Rect& r, double b);

// Cell-averaged inversion weight of an m x m matrix of cell masses:
// W(i,j) = sum over cells b of mass(b) * P(inversion between a uniform point
// of cell (i,j) and a uniform point of cell b).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
inversion_weight(const Eigen::MatrixBase<Derived>& mass) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index r = mass.rows();
  const Eigen::Index c = mass.cols();
  const Mat p = corner_sums(mass);
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vec col = mass.rowwise().sum();                // same x-column
  const Vec row = mass.colwise().sum().transpose();    // same y-row
  Mat w(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) {
      // strictly right and below, strictly left and above
      const Scalar below_right = p(r, j) - p(i + 1, j);
      const Scalar above_left = p(i, c) - p(i, j + 1);
      w(i, j) = below_right + above_left +
                Scalar(0.5) * (col(i) + row(j) - mass(i, j));
    }
  return w;
}

}  // namespace permlab::kernels
