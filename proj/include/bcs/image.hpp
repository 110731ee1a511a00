#pragma once

#include <Eigen/Dense>

#include <string>

#include "bcs/errors.hpp"

namespace bcs {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row-major so that the flat storage is the raster scan of the grid.
template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXd = Vector<double>;
using GridXd = Grid<double>;

/// Grayscale image with real intensities, nominally in [0, 255].
///
/// Pixels are stored row-major; as_vector() exposes the raster-scan vector
/// that the sensing and gradient operators act on.
template <typename Scalar = double>
class Image {
 public:
  Image() = default;

  Image(Index height, Index width) : pixels_(Grid<Scalar>::Zero(height, width)) {
    if (height < 0 || width < 0) throw InvalidDimensions("image dimensions must be non-negative");
  }

  explicit Image(Grid<Scalar> pixels) : pixels_(std::move(pixels)) {
    if (!pixels_.allFinite()) throw InvalidArgument("image contains non-finite values");
  }

  template <typename Derived>
  static Image from_vector(Index height, Index width, const Eigen::MatrixBase<Derived>& raster) {
    if (raster.size() != height * width) {
      throw InvalidDimensions("raster length " + std::to_string(raster.size()) +
                              " does not match " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
    Grid<Scalar> g(height, width);
    Eigen::Map<Vector<Scalar>>(g.data(), g.size()) = raster.template cast<Scalar>();
    return Image(std::move(g));
  }

  static Image constant(Index height, Index width, Scalar value) {
    return Image(Grid<Scalar>::Constant(height, width, value));
  }

  Index height() const noexcept { return pixels_.rows(); }
  Index width() const noexcept { return pixels_.cols(); }
  Index size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.size() == 0; }

  const Grid<Scalar>& pixels() const noexcept { return pixels_; }
  Grid<Scalar>& pixels() noexcept { return pixels_; }

  Eigen::Map<const Vector<Scalar>> as_vector() const {
    return Eigen::Map<const Vector<Scalar>>(pixels_.data(), pixels_.size());
  }
  Eigen::Map<Vector<Scalar>> as_vector() {
    return Eigen::Map<Vector<Scalar>>(pixels_.data(), pixels_.size());
  }

  Scalar operator()(Index row, Index col) const { return pixels_(row, col); }
  Scalar& operator()(Index row, Index col) { return pixels_(row, col); }

  bool same_shape(const Image& other) const noexcept {
    return height() == other.height() && width() == other.width();
  }

  template <typename Other>
  Image<Other> cast() const {
    return Image<Other>(pixels_.template cast<Other>());
  }

  // Clamped to the 8-bit display range; used for export and quality metrics.
  Image clamped(Scalar lo = Scalar(0), Scalar hi = Scalar(255)) const {
    return Image(pixels_.cwiseMax(lo).cwiseMin(hi));
  }

 private:
  Grid<Scalar> pixels_;
};

using ImageXd = Image<double>;

/// Non-overlapping square tiling of an image into grid_rows x grid_cols blocks.
struct BlockGeometry {
  Index block_side = 0;
  Index grid_rows = 0;
  Index grid_cols = 0;

  static BlockGeometry for_image(Index height, Index width, Index block_side) {
    if (block_side <= 0) throw GeometryError("block side must be positive");
    if (height <= 0 || width <= 0 || height % block_side != 0 || width % block_side != 0) {
      throw GeometryError("image " + std::to_string(height) + "x" + std::to_string(width) +
                          " does not tile into " + std::to_string(block_side) + "x" +
                          std::to_string(block_side) + " blocks");
    }
    return {block_side, height / block_side, width / block_side};
  }

  template <typename Scalar>
  static BlockGeometry for_image(const Image<Scalar>& img, Index block_side) {
    return for_image(img.height(), img.width(), block_side);
  }

  Index block_length() const noexcept { return block_side * block_side; }
  Index block_count() const noexcept { return grid_rows * grid_cols; }
  Index height() const noexcept { return grid_rows * block_side; }
  Index width() const noexcept { return grid_cols * block_side; }
  Index pixel_count() const noexcept { return height() * width(); }

  bool operator==(const BlockGeometry&) const = default;
};

}  // namespace bcs
