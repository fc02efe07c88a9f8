#pragma once

#include <vector>

#include "permlab/measures.hpp"
#include "permlab/rng.hpp"

namespace permlab {

// Draws i.i.d. points from a permuton. Precomputes cumulative tables once.
class PointSampler {
 public:
  explicit PointSampler(const Permuton& mu);
  Point operator()(Rng& rng) const;

 private:
  struct Node {
    Permuton::Kind kind;
    std::vector<double> cumulative;  // cells, segments or components
    int m = 0;
    std::vector<Segment> segments;
    std::vector<int> children;
  };
  int build(const Permuton& mu);
  Point draw(int node, Rng& rng) const;

  std::vector<Node> nodes_;
};

}  // namespace permlab
