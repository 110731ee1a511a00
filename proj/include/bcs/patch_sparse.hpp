#pragma once

#include <vector>

#include "bcs/image.hpp"
#include "bcs/sensing.hpp"

namespace bcs {

using MatrixXd = Matrix<double>;

struct PatchConfig {
  Index patch_side = 6;
  Index group_size = 60;
  Index stride = 2;
  Index search_window = 30;

  void validate() const;
  Index patch_length() const noexcept { return patch_side * patch_side; }
};

struct PatchPosition {
  Index row = 0;
  Index col = 0;
  bool operator==(const PatchPosition&) const = default;
};

/// Stride-grid offsets along one axis, with the last admissible offset
/// appended when the grid misses it.
std::vector<Index> patch_offsets(Index extent, Index patch_side, Index stride);

/// Patch positions in raster order over the stride grid.
struct PatchGrid {
  std::vector<Index> rows;
  std::vector<Index> cols;

  static PatchGrid for_image(Index height, Index width, const PatchConfig& cfg);
  Index size() const noexcept { return static_cast<Index>(rows.size() * cols.size()); }
  PatchPosition at(Index k) const;
  std::vector<PatchPosition> positions() const;
};

struct PatchSet {
  std::vector<PatchPosition> positions;
  MatrixXd data;  // s x P, column k is the raster-scanned patch at positions[k]
};

PatchSet extract_patches(const ImageXd& u, const PatchConfig& cfg);

/// Raster-scanned patch at `pos`.
VectorXd patch_at(const ImageXd& u, const PatchPosition& pos, Index patch_side);

/// Per-pixel mean of every patch covering the pixel. Throws CoverageError
/// when a pixel is not covered.
ImageXd aggregate_patches(const std::vector<PatchPosition>& positions, const MatrixXd& data, Index height,
                          Index width, Index patch_side);

struct PatchGroup {
  PatchPosition reference;
  std::vector<PatchPosition> members;  // reference first
  MatrixXd data;                       // s x F
  // Set when the window held fewer than F candidates and the best match was repeated.
  bool padded = false;
};

/// The reference plus the F - 1 candidates with the smallest SSD inside the
/// search window; ties go to the earlier candidate in raster order.
PatchGroup match_group(const PatchPosition& reference, const ImageXd& u, const PatchConfig& cfg);
PatchGroup match_group(const PatchPosition& reference, const ImageXd& u, const PatchConfig& cfg,
                       const PatchGrid& grid);

/// Eigenvectors of X X^T / F (no mean removal), by descending eigenvalue.
/// Each column has its largest-magnitude entry positive.
MatrixXd local_basis(const MatrixXd& group_data);

/// Orthonormal DCT-II matrix; row k is the k-th basis function.
MatrixXd dct_matrix(Index n);
/// Orthonormal Haar matrix for n a power of two; row 0 is the constant.
MatrixXd haar_matrix(Index n);

Index next_power_of_two(Index n);

/// 2-D DCT on every patch followed by a Haar transform along the group axis.
/// The group is padded to a power of two by repeating members from the start.
MatrixXd global_transform(const MatrixXd& group_data, Index patch_side);
/// Inverse of global_transform; returns the first `members` patches.
MatrixXd inverse_global_transform(const MatrixXd& coefficients, Index patch_side, Index members);

/// Zeroes entries with |c| < tau. Row 0 holds the DC of each patch and is
/// left untouched; for a vector this means element 0.
MatrixXd hard_threshold(const MatrixXd& coefficients, double tau);
VectorXd hard_threshold(const VectorXd& coefficients, double tau);

enum class SparseMode { local, global, both };

const char* to_string(SparseMode mode);
SparseMode parse_sparse_mode(const std::string& name);

/// 1.4826 * median |HH| of the finest diagonal Haar band.
double estimate_noise_sigma(const ImageXd& u);

struct SparseSynthesis {
  ImageXd image;
  Index groups = 0;
  Index padded_groups = 0;
};

/// One grouping / transform / threshold / inverse / aggregation pass per
/// stage. `both` runs the local stage, then the global stage on its output
/// with tau scaled by the ratio of noise estimates after and before the
/// first stage.
SparseSynthesis solve_alpha(const ImageXd& u, SparseMode mode, const PatchConfig& cfg, double tau);

struct SimilarityBound {
  double probability = 1.0;
  double center = 0.0;
};

/// Chebyshev lower bound on P(| ||e||_1 / N - sigma sqrt(2/pi) | <= eps)
/// for i.i.d. N(0, sigma^2) errors.
SimilarityBound similarity_bound(double sigma, Index n, double eps);

}  // namespace bcs
