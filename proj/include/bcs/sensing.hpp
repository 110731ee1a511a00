#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bcs/image.hpp"

namespace bcs {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// The m x n block matrix A_B shared by every block of a frame.
///
/// The frame operator is block-diagonal with G copies of A_B; it is never
/// materialized (see apply_frame / apply_frame_adjoint).
template <typename Scalar = double>
struct BlockSensingOperator {
  Matrix<Scalar> matrix;
  std::uint64_t seed = 0;

  Index rows() const noexcept { return matrix.rows(); }
  Index cols() const noexcept { return matrix.cols(); }
  double subrate() const noexcept {
    return cols() == 0 ? 0.0 : static_cast<double>(rows()) / static_cast<double>(cols());
  }
};

using SensingOperator = BlockSensingOperator<double>;

/// Per-block measurements; column k holds b_k, so the column-major flat
/// storage is the frame measurement b = [b_1; ...; b_G].
template <typename Scalar = double>
struct MeasurementSet {
  Matrix<Scalar> per_block;  // m x G
  double subrate = 0.0;

  Index block_rows() const noexcept { return per_block.rows(); }
  Index block_count() const noexcept { return per_block.cols(); }
  Index size() const noexcept { return per_block.size(); }

  auto block(Index k) const { return per_block.col(k); }

  Eigen::Map<const Vector<Scalar>> concatenated() const {
    return Eigen::Map<const Vector<Scalar>>(per_block.data(), per_block.size());
  }

  template <typename Derived>
  static MeasurementSet from_concatenated(const Eigen::MatrixBase<Derived>& b, Index m, double subrate) {
    if (m <= 0 || b.size() % m != 0) throw GeometryError("measurement length is not a multiple of m");
    const Vector<Scalar> flat = b;
    MeasurementSet out;
    out.per_block = Eigen::Map<const Matrix<Scalar>>(flat.data(), m, flat.size() / m);
    out.subrate = subrate;
    return out;
  }
};

using Measurements = MeasurementSet<double>;

/// Number of measurements per block for a requested subrate: round(subrate * n), at least 1.
Index measurements_for_subrate(double subrate, Index block_length);

/// i.i.d. N(0, 1) entries scaled by 1/sqrt(m), drawn row-major from a
/// mt19937_64 stream seeded with `seed`.
SensingOperator make_gaussian_operator(Index m, Index n, std::uint64_t seed);

/// Largest normalized inner product between two distinct columns.
template <typename Derived>
double mutual_coherence(const Eigen::MatrixBase<Derived>& a) {
  if (a.cols() < 2) throw InvalidDimensions("mutual coherence needs at least two columns");
  Matrix<double> cols = a.template cast<double>();
  for (Index j = 0; j < cols.cols(); ++j) {
    const double norm = cols.col(j).norm();
    if (!(norm > 0.0)) throw DegenerateColumn("column " + std::to_string(j) + " is zero");
    cols.col(j) /= norm;
  }
  Matrix<double> gram = (cols.transpose() * cols).cwiseAbs();
  gram.diagonal().setZero();
  return std::min(gram.maxCoeff(), 1.0);
}

template <typename Scalar>
double mutual_coherence(const BlockSensingOperator<Scalar>& op) {
  return mutual_coherence(op.matrix);
}

/// Welch lower bound sqrt((n - m) / (m (n - 1))) on the coherence of an m x n matrix.
double welch_bound(Index m, Index n);

/// Blocks as the columns of an n x G matrix, in raster order over the grid.
template <typename Derived>
Matrix<typename Derived::Scalar> gather_blocks(const Eigen::MatrixBase<Derived>& raster,
                                               Index height, Index width, const BlockGeometry& geom) {
  using Scalar = typename Derived::Scalar;
  if (geom.height() != height || geom.width() != width || raster.size() != height * width) {
    throw GeometryError("image does not match block geometry");
  }
  const Index bs = geom.block_side;
  Matrix<Scalar> blocks(geom.block_length(), geom.block_count());
  for (Index gr = 0; gr < geom.grid_rows; ++gr) {
    for (Index gc = 0; gc < geom.grid_cols; ++gc) {
      const Index k = gr * geom.grid_cols + gc;
      for (Index r = 0; r < bs; ++r) {
        blocks.col(k).segment(r * bs, bs) = raster.segment((gr * bs + r) * width + gc * bs, bs);
      }
    }
  }
  return blocks;
}

template <typename Derived>
Vector<typename Derived::Scalar> scatter_blocks(const Eigen::MatrixBase<Derived>& blocks,
                                                const BlockGeometry& geom) {
  using Scalar = typename Derived::Scalar;
  // Evaluate once; column access on a product expression would recompute it.
  const typename Derived::PlainObject evaluated = blocks;
  if (evaluated.rows() != geom.block_length() || evaluated.cols() != geom.block_count()) {
    throw GeometryError("block matrix does not match block geometry");
  }
  const Index bs = geom.block_side;
  const Index width = geom.width();
  Vector<Scalar> raster(geom.pixel_count());
  for (Index gr = 0; gr < geom.grid_rows; ++gr) {
    for (Index gc = 0; gc < geom.grid_cols; ++gc) {
      const Index k = gr * geom.grid_cols + gc;
      for (Index r = 0; r < bs; ++r) {
        raster.segment((gr * bs + r) * width + gc * bs, bs) = evaluated.col(k).segment(r * bs, bs);
      }
    }
  }
  return raster;
}

/// Raster-scan vectors of each block, blocks ordered row-major over the grid.
template <typename Scalar>
std::vector<Vector<Scalar>> partition_blocks(const Image<Scalar>& img, const BlockGeometry& geom) {
  const Matrix<Scalar> blocks = gather_blocks(img.as_vector(), img.height(), img.width(), geom);
  std::vector<Vector<Scalar>> out;
  out.reserve(static_cast<std::size_t>(blocks.cols()));
  for (Index k = 0; k < blocks.cols(); ++k) out.emplace_back(blocks.col(k));
  return out;
}

template <typename Scalar>
Image<Scalar> assemble_blocks(const std::vector<Vector<Scalar>>& blocks, const BlockGeometry& geom) {
  if (static_cast<Index>(blocks.size()) != geom.block_count()) {
    throw GeometryError("expected " + std::to_string(geom.block_count()) + " blocks, got " +
                        std::to_string(blocks.size()));
  }
  Matrix<Scalar> stacked(geom.block_length(), geom.block_count());
  for (Index k = 0; k < geom.block_count(); ++k) {
    const auto& b = blocks[static_cast<std::size_t>(k)];
    if (b.size() != geom.block_length()) throw GeometryError("block " + std::to_string(k) + " has wrong length");
    stacked.col(k) = b;
  }
  return Image<Scalar>::from_vector(geom.height(), geom.width(), scatter_blocks(stacked, geom));
}

inline void check_operator(const SensingOperator& op, const BlockGeometry& geom) {
  if (op.cols() != geom.block_length()) {
    throw GeometryError("operator has " + std::to_string(op.cols()) + " columns but blocks have " +
                        std::to_string(geom.block_length()) + " pixels");
  }
}

/// A u for the block-diagonal frame operator; u is the raster-scan image vector.
template <typename Derived>
VectorXd apply_frame(const SensingOperator& op, const BlockGeometry& geom,
                     const Eigen::MatrixBase<Derived>& u) {
  check_operator(op, geom);
  if (u.size() != geom.pixel_count()) throw GeometryError("frame vector length mismatch");
  const Matrix<double> y = op.matrix * gather_blocks(u, geom.height(), geom.width(), geom);
  return Eigen::Map<const VectorXd>(y.data(), y.size());
}

/// A^T y; y is the concatenated measurement vector.
template <typename Derived>
VectorXd apply_frame_adjoint(const SensingOperator& op, const BlockGeometry& geom,
                             const Eigen::MatrixBase<Derived>& y) {
  check_operator(op, geom);
  if (y.size() != op.rows() * geom.block_count()) throw GeometryError("measurement vector length mismatch");
  const VectorXd yy = y;
  const Eigen::Map<const Matrix<double>> per_block(yy.data(), op.rows(), geom.block_count());
  return scatter_blocks(op.matrix.transpose() * per_block, geom);
}

/// A^T A u without forming either product explicitly at frame size.
template <typename Derived>
VectorXd apply_frame_normal(const SensingOperator& op, const BlockGeometry& geom,
                            const Eigen::MatrixBase<Derived>& u) {
  check_operator(op, geom);
  const Matrix<double> blocks = gather_blocks(u, geom.height(), geom.width(), geom);
  return scatter_blocks(op.matrix.transpose() * (op.matrix * blocks), geom);
}

Measurements sense(const ImageXd& img, const SensingOperator& op, const BlockGeometry& geom);

// Binary operator export: little-endian uint64 m, n, seed followed by m*n
// float64 entries in row-major order.
void write_operator(const std::filesystem::path& path, const SensingOperator& op);
SensingOperator read_operator(const std::filesystem::path& path);

// Binary measurement file: magic "BCSM", uint32 version, uint64 height,
// width, block_side, m, seed, float64 subrate, then the concatenated b.
struct MeasurementFile {
  Index height = 0;
  Index width = 0;
  Index block_side = 0;
  std::uint64_t seed = 0;
  Measurements measurements;
};

void write_measurements(const std::filesystem::path& path, const MeasurementFile& file);
MeasurementFile read_measurements(const std::filesystem::path& path);

}  // namespace bcs
