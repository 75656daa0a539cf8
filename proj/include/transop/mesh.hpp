#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace transop {

/// Uniform grid on [0, ell]; nodes x_i = i*h.
class SpatialMesh {
public:
  SpatialMesh() = default;
  SpatialMesh(double ell, std::size_t n_x) : ell_(ell), n_(n_x) {
    if (!(ell > 0.0))
      throw std::invalid_argument("SpatialMesh: length must be positive, got " + std::to_string(ell));
    if (n_x < 3)
      throw std::invalid_argument("SpatialMesh: need at least 3 nodes, got " + std::to_string(n_x));
    h_ = ell / static_cast<double>(n_x - 1);
  }

  double length() const { return ell_; }
  std::size_t size() const { return n_; }
  double step() const { return h_; }
  // Last node is pinned to ell so that x_{n-1} == ell exactly.
  double node(std::size_t i) const { return i + 1 == n_ ? ell_ : static_cast<double>(i) * h_; }

  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = node(i);
    return xs;
  }

  /// Halves the spacing: 2n-1 nodes over the same interval.
  SpatialMesh refined() const { return SpatialMesh(ell_, 2 * n_ - 1); }

  bool operator==(const SpatialMesh& o) const { return ell_ == o.ell_ && n_ == o.n_; }

private:
  double ell_ = 1.0;
  std::size_t n_ = 3;
  double h_ = 0.5;
};

class TimeMesh {
public:
  TimeMesh() = default;
  TimeMesh(double T, std::size_t n_t) : T_(T), n_(n_t) {
    if (!(T > 0.0))
      throw std::invalid_argument("TimeMesh: horizon must be positive, got " + std::to_string(T));
    if (n_t < 2)
      throw std::invalid_argument("TimeMesh: need at least 2 time levels, got " + std::to_string(n_t));
    dt_ = T / static_cast<double>(n_t - 1);
  }

  double horizon() const { return T_; }
  std::size_t size() const { return n_; }
  double step() const { return dt_; }
  double node(std::size_t j) const { return j + 1 == n_ ? T_ : static_cast<double>(j) * dt_; }

  std::vector<double> nodes() const {
    std::vector<double> ts(n_);
    for (std::size_t j = 0; j < n_; ++j) ts[j] = node(j);
    return ts;
  }

  TimeMesh refined() const { return TimeMesh(T_, 2 * n_ - 1); }

  bool operator==(const TimeMesh& o) const { return T_ == o.T_ && n_ == o.n_; }

private:
  double T_ = 1.0;
  std::size_t n_ = 2;
  double dt_ = 1.0;
};

inline std::pair<SpatialMesh, TimeMesh> make_meshes(double ell, std::size_t n_x, double T, std::size_t n_t) {
  return {SpatialMesh(ell, n_x), TimeMesh(T, n_t)};
}

} // namespace transop
