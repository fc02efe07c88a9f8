#include "permlab/sampler.hpp"

#include <algorithm>

namespace permlab {

namespace {

std::size_t pick(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()),
                  cumulative.size() - 1);
}

}  // namespace

PointSampler::PointSampler(const Permuton& mu) { build(mu); }

int PointSampler::build(const Permuton& mu) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{mu.kind(), {}, 0, {}, {}});
  double acc = 0.0;
  switch (mu.kind()) {
    case Permuton::Kind::Grid: {
      const auto& g = mu.as_grid();
      const int m = g.m();
      std::vector<double> cum;
      cum.reserve(static_cast<std::size_t>(m) * m);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) cum.push_back(acc += g.density(i, j));
      nodes_[id].m = m;
      nodes_[id].cumulative = std::move(cum);
      break;
    }
    case Permuton::Kind::Segments: {
      std::vector<double> cum;
      for (const auto& s : mu.as_segments().segments) cum.push_back(acc += s.weight);
      nodes_[id].segments = mu.as_segments().segments;
      nodes_[id].cumulative = std::move(cum);
      break;
    }
    case Permuton::Kind::Mixture: {
      const auto& mx = mu.as_mixture();
      std::vector<double> cum;
      std::vector<int> kids;
      for (std::size_t c = 0; c < mx.components.size(); ++c) {
        cum.push_back(acc += mx.weights[c]);
        kids.push_back(build(mx.components[c]));
      }
      nodes_[id].cumulative = std::move(cum);
      nodes_[id].children = std::move(kids);
      break;
    }
  }
  return id;
}

Point PointSampler::draw(int node, Rng& rng) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const std::size_t k = pick(n.cumulative, rng);
  switch (n.kind) {
    case Permuton::Kind::Grid: {
      const int i = static_cast<int>(k % static_cast<std::size_t>(n.m));
      const int j = static_cast<int>(k / static_cast<std::size_t>(n.m));
      const double x = (i + rng.uniform()) / n.m;
      const double y = (j + rng.uniform()) / n.m;
      return {x, y};
    }
    case Permuton::Kind::Segments: {
      const Segment& s = n.segments[k];
      const double x = s.from.x + rng.uniform() * s.length_x();
      return {x, std::clamp(s.y_at(x), 0.0, 1.0)};
    }
    case Permuton::Kind::Mixture:
      return draw(n.children[k], rng);
  }
  return {};
}

Point PointSampler::operator()(Rng& rng) const { return draw(0, rng); }

}  // namespace permlab
