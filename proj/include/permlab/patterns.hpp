#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permlab/measures.hpp"

namespace permlab {

// One-line notation, values 1..n.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> values);

  static Permutation identity(int n);
  static Permutation reversed(int n);

  int size() const { return static_cast<int>(v_.size()); }
  // 0-based position, 1-based value
  int operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& values() const { return v_; }
  Permutation inverse() const;

  // "2,1,4,3"
  std::string str() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> v_;
};

// Accepts "2143" (single digits) or "2,1,4,3".
Permutation parse_permutation(std::string_view text);

inline constexpr int kDefaultMaxPatternSize = 4;

class Pattern {
 public:
  explicit Pattern(Permutation p, int max_size = kDefaultMaxPatternSize);
  const Permutation& perm() const { return p_; }
  int size() const { return p_.size(); }
  bool is_inversion() const { return p_.size() == 2 && p_[0] == 2; }
  std::string str() const { return p_.str(); }

 private:
  Permutation p_;
};

Pattern parse_pattern(std::string_view text, int max_size = kDefaultMaxPatternSize);

using PointConfig = std::vector<Point>;

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

// Throws ValidationError on tied x or y coordinates.
Permutation induced_permutation(std::span<const Point> pts);

int h_sigma(const Pattern& sigma, std::span<const Point> pts);

std::int64_t inversion_count(const Permutation& pi);

std::int64_t occurrences(const Pattern& sigma, const Permutation& pi);
// Subset enumeration without the fast paths.
std::int64_t occurrences_brute(const Pattern& sigma, const Permutation& pi);

double t_sigma_perm(const Pattern& sigma, const Permutation& pi);

// Grid resolution limit of the exact k = 3 evaluation.
inline constexpr int kMaxExactGrid3 = 128;

double t_sigma_measure_exact(const Pattern& sigma, const Permuton& nu);

McEstimate t_sigma_measure_mc(const Pattern& sigma, const Permuton& nu,
                              std::int64_t n_samples, std::uint64_t seed,
                              int jobs = 1);

// nu([0,x] x [y,1]) + nu([x,1] x [0,y])
double pair_weight_21(const Permuton& nu, Point p);
double pair_weight_21(const FlatMeasure& nu, Point p);

// Exact t21 of a flattened measure.
double t21_exact(const FlatMeasure& nu);

// Exact t_sigma, k = 3, from an m x m matrix of cell masses.
double t3_grid_exact(const Pattern& sigma, const Eigen::MatrixXd& mass);

}  // namespace permlab
