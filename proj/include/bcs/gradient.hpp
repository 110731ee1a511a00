#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "bcs/image.hpp"

namespace bcs {

/// Horizontal and vertical components of a discrete gradient, each the shape of the image.
template <typename Scalar = double>
struct GradientField {
  Grid<Scalar> dx;
  Grid<Scalar> dy;

  static GradientField zero(Index height, Index width) {
    return {Grid<Scalar>::Zero(height, width), Grid<Scalar>::Zero(height, width)};
  }

  Index height() const noexcept { return dx.rows(); }
  Index width() const noexcept { return dx.cols(); }

  bool same_shape(const GradientField& o) const noexcept {
    return dx.rows() == o.dx.rows() && dx.cols() == o.dx.cols() && dy.rows() == o.dy.rows() &&
           dy.cols() == o.dy.cols();
  }

  Scalar dot(const GradientField& o) const { return dx.cwiseProduct(o.dx).sum() + dy.cwiseProduct(o.dy).sum(); }
  Scalar squared_norm() const { return dx.squaredNorm() + dy.squaredNorm(); }
  bool all_finite() const { return dx.allFinite() && dy.allFinite(); }

  GradientField& operator+=(const GradientField& o) {
    dx += o.dx;
    dy += o.dy;
    return *this;
  }
  GradientField& operator-=(const GradientField& o) {
    dx -= o.dx;
    dy -= o.dy;
    return *this;
  }
  GradientField& operator*=(Scalar s) {
    dx *= s;
    dy *= s;
    return *this;
  }

  friend GradientField operator+(GradientField a, const GradientField& b) { return a += b; }
  friend GradientField operator-(GradientField a, const GradientField& b) { return a -= b; }
  friend GradientField operator*(Scalar s, GradientField a) { return a *= s; }
};

using GradientFieldXd = GradientField<double>;

/// Region over which finite differences are taken.
///
/// Differences are computed across block seams inside a square tile of
/// `span` x `span` blocks and are zero (replicate boundary) at tile edges.
/// per_block is a span of one block; frame is a single tile covering the image.
struct GradientScope {
  enum class Mode { per_block, multi_block, frame };

  Mode mode = Mode::frame;
  Index block_side = 0;
  Index span = 1;

  static GradientScope frame() { return {Mode::frame, 0, 1}; }
  static GradientScope per_block(Index block_side) { return checked({Mode::per_block, block_side, 1}); }
  static GradientScope multi_block(Index block_side, Index span) {
    return checked({Mode::multi_block, block_side, span});
  }

  Index tile_rows(Index height) const noexcept { return mode == Mode::frame ? height : block_side * span; }
  Index tile_cols(Index width) const noexcept { return mode == Mode::frame ? width : block_side * span; }

 private:
  static GradientScope checked(GradientScope s) {
    if (s.block_side <= 0) throw InvalidArgument("gradient scope needs a positive block side");
    if (s.span < 1) throw InvalidArgument("gradient scope span must be at least 1");
    return s;
  }
};

namespace detail {

// True when the forward difference from index i to i + 1 lies inside one tile.
inline bool difference_active(Index i, Index extent, Index tile) noexcept {
  return i + 1 < extent && (i + 1) % tile != 0;
}

}  // namespace detail

/// Forward differences dx(i,j) = u(i,j+1) - u(i,j), dy(i,j) = u(i+1,j) - u(i,j),
/// zero where the difference would leave the scope tile.
template <typename Derived>
GradientField<typename Derived::Scalar> gradient(const Eigen::MatrixBase<Derived>& u, Index height, Index width,
                                                 const GradientScope& scope) {
  using Scalar = typename Derived::Scalar;
  if (u.size() != height * width) throw InvalidDimensions("gradient: vector does not match image shape");
  const Index tr = scope.tile_rows(height);
  const Index tc = scope.tile_cols(width);
  GradientField<Scalar> g = GradientField<Scalar>::zero(height, width);
  for (Index i = 0; i < height; ++i) {
    const bool row_active = detail::difference_active(i, height, tr);
    for (Index j = 0; j < width; ++j) {
      const Scalar here = u[i * width + j];
      if (detail::difference_active(j, width, tc)) g.dx(i, j) = u[i * width + j + 1] - here;
      if (row_active) g.dy(i, j) = u[(i + 1) * width + j] - here;
    }
  }
  return g;
}

template <typename Scalar>
GradientField<Scalar> gradient(const Image<Scalar>& u, const GradientScope& scope) {
  return gradient(u.as_vector(), u.height(), u.width(), scope);
}

/// D^T g for the same scope; returned as a raster vector.
template <typename Scalar>
Vector<Scalar> gradient_adjoint(const GradientField<Scalar>& g, const GradientScope& scope) {
  if (g.dy.rows() != g.dx.rows() || g.dy.cols() != g.dx.cols()) {
    throw InvalidDimensions("gradient_adjoint: dx and dy shapes differ");
  }
  const Index height = g.height();
  const Index width = g.width();
  const Index tr = scope.tile_rows(height);
  const Index tc = scope.tile_cols(width);
  Vector<Scalar> out(height * width);
  for (Index i = 0; i < height; ++i) {
    const bool row_active = detail::difference_active(i, height, tr);
    const bool prev_row_active = i > 0 && detail::difference_active(i - 1, height, tr);
    for (Index j = 0; j < width; ++j) {
      Scalar v = Scalar(0);
      if (detail::difference_active(j, width, tc)) v -= g.dx(i, j);
      if (j > 0 && detail::difference_active(j - 1, width, tc)) v += g.dx(i, j - 1);
      if (row_active) v -= g.dy(i, j);
      if (prev_row_active) v += g.dy(i - 1, j);
      out[i * width + j] = v;
    }
  }
  return out;
}

/// D^T D u, the TV normal operator.
template <typename Derived>
Vector<typename Derived::Scalar> gradient_normal(const Eigen::MatrixBase<Derived>& u, Index height, Index width,
                                                 const GradientScope& scope) {
  return gradient_adjoint(gradient(u, height, width, scope), scope);
}

/// Per-pixel isotropic magnitude sqrt(dx^2 + dy^2).
template <typename Scalar>
Grid<Scalar> isotropic_magnitude(const GradientField<Scalar>& g) {
  if (g.dx.rows() != g.dy.rows() || g.dx.cols() != g.dy.cols()) {
    throw InvalidDimensions("isotropic_magnitude: dx and dy shapes differ");
  }
  return (g.dx.array().square() + g.dy.array().square()).sqrt().matrix();
}

/// Isotropic total variation: sum of gradient magnitudes.
template <typename Scalar>
Scalar total_variation(const Image<Scalar>& u, const GradientScope& scope) {
  return isotropic_magnitude(gradient(u, scope)).sum();
}

}  // namespace bcs
