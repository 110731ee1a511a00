#include "bcs/patch_sparse.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bcs {

void PatchConfig::validate() const {
  if (patch_side < 1) throw InvalidArgument("patch side must be positive");
  if (group_size < 1) throw InvalidArgument("group size must be positive");
  if (stride < 1) throw InvalidArgument("patch stride must be at least 1");
  if (search_window < patch_side) throw InvalidArgument("search window is smaller than a patch");
}

std::vector<Index> patch_offsets(Index extent, Index patch_side, Index stride) {
  if (extent < patch_side) throw InvalidDimensions("image is smaller than a patch");
  std::vector<Index> out;
  for (Index p = 0; p + patch_side <= extent; p += stride) out.push_back(p);
  if (out.back() != extent - patch_side) out.push_back(extent - patch_side);
  return out;
}

PatchGrid PatchGrid::for_image(Index height, Index width, const PatchConfig& cfg) {
  cfg.validate();
  return {patch_offsets(height, cfg.patch_side, cfg.stride), patch_offsets(width, cfg.patch_side, cfg.stride)};
}

PatchPosition PatchGrid::at(Index k) const {
  const auto nc = static_cast<Index>(cols.size());
  return {rows[static_cast<std::size_t>(k / nc)], cols[static_cast<std::size_t>(k % nc)]};
}

std::vector<PatchPosition> PatchGrid::positions() const {
  std::vector<PatchPosition> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Index r : rows) {
    for (Index c : cols) out.push_back({r, c});
  }
  return out;
}

VectorXd patch_at(const ImageXd& u, const PatchPosition& pos, Index patch_side) {
  if (pos.row < 0 || pos.col < 0 || pos.row + patch_side > u.height() || pos.col + patch_side > u.width()) {
    throw GeometryError("patch at (" + std::to_string(pos.row) + ", " + std::to_string(pos.col) +
                        ") leaves the image");
  }
  VectorXd v(patch_side * patch_side);
  for (Index r = 0; r < patch_side; ++r) {
    v.segment(r * patch_side, patch_side) = u.pixels().row(pos.row + r).segment(pos.col, patch_side).transpose();
  }
  return v;
}

PatchSet extract_patches(const ImageXd& u, const PatchConfig& cfg) {
  const PatchGrid grid = PatchGrid::for_image(u.height(), u.width(), cfg);
  PatchSet set;
  set.positions = grid.positions();
  set.data.resize(cfg.patch_length(), static_cast<Index>(set.positions.size()));
  for (std::size_t k = 0; k < set.positions.size(); ++k) {
    set.data.col(static_cast<Index>(k)) = patch_at(u, set.positions[k], cfg.patch_side);
  }
  return set;
}

namespace {

void accumulate(GridXd& numer, GridXd& count, const PatchPosition& pos, const Eigen::Ref<const VectorXd>& patch,
                Index ps) {
  for (Index r = 0; r < ps; ++r) {
    for (Index c = 0; c < ps; ++c) {
      numer(pos.row + r, pos.col + c) += patch(r * ps + c);
      count(pos.row + r, pos.col + c) += 1.0;
    }
  }
}

ImageXd normalize(const GridXd& numer, const GridXd& count) {
  if ((count.array() <= 0.0).any()) throw CoverageError("some pixels are not covered by any patch");
  return ImageXd(numer.cwiseQuotient(count));
}

}  // namespace

ImageXd aggregate_patches(const std::vector<PatchPosition>& positions, const MatrixXd& data, Index height,
                          Index width, Index patch_side) {
  if (data.rows() != patch_side * patch_side || data.cols() != static_cast<Index>(positions.size())) {
    throw InvalidDimensions("patch data does not match positions");
  }
  GridXd numer = GridXd::Zero(height, width);
  GridXd count = GridXd::Zero(height, width);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto& p = positions[k];
    if (p.row < 0 || p.col < 0 || p.row + patch_side > height || p.col + patch_side > width) {
      throw GeometryError("patch position outside the image");
    }
    accumulate(numer, count, p, data.col(static_cast<Index>(k)), patch_side);
  }
  return normalize(numer, count);
}

namespace {

// Offsets of `axis` whose patch lies inside the window centred on `ref`.
std::pair<std::size_t, std::size_t> window_range(const std::vector<Index>& axis, Index ref, Index extent,
                                                 const PatchConfig& cfg) {
  const Index span = std::min(cfg.search_window, extent);
  const Index lo = std::clamp<Index>(ref + cfg.patch_side / 2 - span / 2, 0, extent - span);
  const Index hi = lo + span - cfg.patch_side;  // last admissible offset
  const auto first = std::lower_bound(axis.begin(), axis.end(), lo);
  const auto last = std::upper_bound(axis.begin(), axis.end(), hi);
  return {static_cast<std::size_t>(first - axis.begin()), static_cast<std::size_t>(last - axis.begin())};
}

double patch_ssd(const GridXd& g, const PatchPosition& a, const PatchPosition& b, Index ps) {
  double s = 0.0;
  for (Index r = 0; r < ps; ++r) {
    const double* pa = g.data() + (a.row + r) * g.cols() + a.col;
    const double* pb = g.data() + (b.row + r) * g.cols() + b.col;
    for (Index c = 0; c < ps; ++c) {
      const double d = pa[c] - pb[c];
      s += d * d;
    }
  }
  return s;
}

}  // namespace

PatchGroup match_group(const PatchPosition& reference, const ImageXd& u, const PatchConfig& cfg) {
  return match_group(reference, u, cfg, PatchGrid::for_image(u.height(), u.width(), cfg));
}

PatchGroup match_group(const PatchPosition& reference, const ImageXd& u, const PatchConfig& cfg,
                       const PatchGrid& grid) {
  const Index ps = cfg.patch_side;
  if (reference.row < 0 || reference.col < 0 || reference.row + ps > u.height() || reference.col + ps > u.width()) {
    throw GeometryError("reference patch leaves the image");
  }
  const auto [r0, r1] = window_range(grid.rows, reference.row, u.height(), cfg);
  const auto [c0, c1] = window_range(grid.cols, reference.col, u.width(), cfg);

  struct Candidate {
    double ssd;
    std::size_t order;
    PatchPosition pos;
  };
  std::vector<Candidate> candidates;
  candidates.reserve((r1 - r0) * (c1 - c0));
  for (std::size_t i = r0; i < r1; ++i) {
    for (std::size_t j = c0; j < c1; ++j) {
      const PatchPosition p{grid.rows[i], grid.cols[j]};
      if (p == reference) continue;
      candidates.push_back({patch_ssd(u.pixels(), reference, p, ps), candidates.size(), p});
    }
  }
  const auto take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(cfg.group_size - 1));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.ssd < b.ssd || (a.ssd == b.ssd && a.order < b.order);
                    });

  PatchGroup g;
  g.reference = reference;
  g.members.reserve(static_cast<std::size_t>(cfg.group_size));
  g.members.push_back(reference);
  for (std::size_t k = 0; k < take; ++k) g.members.push_back(candidates[k].pos);
  const PatchPosition best = take > 0 ? candidates[0].pos : reference;
  while (static_cast<Index>(g.members.size()) < cfg.group_size) {
    g.members.push_back(best);
    g.padded = true;
  }
  g.data.resize(cfg.patch_length(), cfg.group_size);
  for (std::size_t k = 0; k < g.members.size(); ++k) {
    const auto& p = g.members[k];
    for (Index r = 0; r < ps; ++r) {
      g.data.col(static_cast<Index>(k)).segment(r * ps, ps) =
          u.pixels().row(p.row + r).segment(p.col, ps).transpose();
    }
  }
  return g;
}

MatrixXd local_basis(const MatrixXd& group_data) {
  if (group_data.cols() == 0) throw InvalidDimensions("empty patch group");
  if (!group_data.allFinite()) throw DegenerateInput("patch group contains non-finite values");
  const MatrixXd cov = group_data * group_data.transpose() / static_cast<double>(group_data.cols());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const Index s = cov.rows();
  MatrixXd basis(s, s);
  for (Index k = 0; k < s; ++k) {
    VectorXd v = eig.eigenvectors().col(s - 1 - k);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(k) = v;
  }
  return basis;
}

MatrixXd dct_matrix(Index n) {
  if (n < 1) throw InvalidArgument("DCT size must be positive");
  MatrixXd d(n, n);
  const double nn = static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (Index i = 0; i < n; ++i) {
      d(k, i) = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                                 (2.0 * nn));
    }
  }
  return d;
}

Index next_power_of_two(Index n) {
  Index p = 1;
  while (p < n) p *= 2;
  return p;
}

MatrixXd haar_matrix(Index n) {
  if (n < 1 || next_power_of_two(n) != n) throw InvalidArgument("Haar size must be a power of two");
  MatrixXd h = MatrixXd::Ones(1, 1);
  const double r = 1.0 / std::sqrt(2.0);
  while (h.rows() < n) {
    const Index m = h.rows();
    MatrixXd next(2 * m, 2 * m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        next(i, 2 * j) = r * h(i, j);
        next(i, 2 * j + 1) = r * h(i, j);
      }
    }
    next.bottomRows(m).setZero();
    for (Index i = 0; i < m; ++i) {
      next(m + i, 2 * i) = r;
      next(m + i, 2 * i + 1) = -r;
    }
    h = std::move(next);
  }
  return h;
}

namespace {

struct GlobalBasis {
  MatrixXd patch;  // s x s, kron(D, D) on raster-scanned patches
  MatrixXd group;  // F_pad x F_pad Haar
};

const GlobalBasis& global_basis(Index patch_side, Index padded) {
  thread_local Index cached_side = -1;
  thread_local Index cached_padded = -1;
  thread_local GlobalBasis basis;
  if (cached_side != patch_side || cached_padded != padded) {
    const MatrixXd d = dct_matrix(patch_side);
    const Index s = patch_side * patch_side;
    basis.patch.resize(s, s);
    for (Index k = 0; k < patch_side; ++k) {
      for (Index l = 0; l < patch_side; ++l) {
        for (Index r = 0; r < patch_side; ++r) {
          for (Index c = 0; c < patch_side; ++c) basis.patch(k * patch_side + l, r * patch_side + c) = d(k, r) * d(l, c);
        }
      }
    }
    basis.group = haar_matrix(padded);
    cached_side = patch_side;
    cached_padded = padded;
  }
  return basis;
}

}  // namespace

MatrixXd global_transform(const MatrixXd& group_data, Index patch_side) {
  if (group_data.rows() != patch_side * patch_side || group_data.cols() < 1) {
    throw InvalidDimensions("group data does not match the patch size");
  }
  const Index f = group_data.cols();
  const Index padded = next_power_of_two(f);
  const auto& basis = global_basis(patch_side, padded);
  MatrixXd x(group_data.rows(), padded);
  for (Index k = 0; k < padded; ++k) x.col(k) = group_data.col(k % f);
  return basis.patch * x * basis.group.transpose();
}

MatrixXd inverse_global_transform(const MatrixXd& coefficients, Index patch_side, Index members) {
  const Index padded = coefficients.cols();
  if (coefficients.rows() != patch_side * patch_side || next_power_of_two(padded) != padded || members < 1 ||
      members > padded) {
    throw InvalidDimensions("coefficients do not match the patch size");
  }
  const auto& basis = global_basis(patch_side, padded);
  const MatrixXd x = basis.patch.transpose() * coefficients * basis.group;
  return x.leftCols(members);
}

MatrixXd hard_threshold(const MatrixXd& coefficients, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  MatrixXd out = coefficients;
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 1; i < out.rows(); ++i) {
      if (std::abs(out(i, j)) < tau) out(i, j) = 0.0;
    }
  }
  return out;
}

VectorXd hard_threshold(const VectorXd& coefficients, double tau) {
  return hard_threshold(MatrixXd(coefficients), tau).col(0);
}

const char* to_string(SparseMode mode) {
  switch (mode) {
    case SparseMode::local:
      return "local";
    case SparseMode::global:
      return "global";
    case SparseMode::both:
      return "both";
  }
  return "?";
}

SparseMode parse_sparse_mode(const std::string& name) {
  if (name == "local") return SparseMode::local;
  if (name == "global") return SparseMode::global;
  if (name == "both") return SparseMode::both;
  throw InvalidArgument("unknown sparse mode '" + name + "'");
}

double estimate_noise_sigma(const ImageXd& u) {
  if (u.height() < 2 || u.width() < 2) throw InvalidDimensions("noise estimate needs at least 2x2 pixels");
  const auto& g = u.pixels();
  std::vector<double> hh;
  hh.reserve(static_cast<std::size_t>((u.height() / 2) * (u.width() / 2)));
  for (Index i = 0; i + 1 < u.height(); i += 2) {
    for (Index j = 0; j + 1 < u.width(); j += 2) {
      hh.push_back(std::abs(g(i, j) - g(i, j + 1) - g(i + 1, j) + g(i + 1, j + 1)) / 2.0);
    }
  }
  const auto mid = hh.begin() + static_cast<std::ptrdiff_t>(hh.size() / 2);
  std::nth_element(hh.begin(), mid, hh.end());
  return 1.4826 * *mid;
}

namespace {

ImageXd sparse_pass(const ImageXd& u, bool local, const PatchConfig& cfg, double tau, SparseSynthesis& stats) {
  const PatchGrid grid = PatchGrid::for_image(u.height(), u.width(), cfg);
  const Index ps = cfg.patch_side;
  GridXd numer = GridXd::Zero(u.height(), u.width());
  GridXd count = GridXd::Zero(u.height(), u.width());
  for (Index k = 0; k < grid.size(); ++k) {
    const PatchGroup g = match_group(grid.at(k), u, cfg, grid);
    MatrixXd estimate;
    if (local) {
      const MatrixXd basis = local_basis(g.data);
      estimate = basis * hard_threshold(MatrixXd(basis.transpose() * g.data), tau);
    } else {
      estimate = inverse_global_transform(hard_threshold(global_transform(g.data, ps), tau), ps, g.data.cols());
    }
    for (std::size_t m = 0; m < g.members.size(); ++m) {
      accumulate(numer, count, g.members[m], estimate.col(static_cast<Index>(m)), ps);
    }
    ++stats.groups;
    if (g.padded) ++stats.padded_groups;
  }
  return normalize(numer, count);
}

}  // namespace

SparseSynthesis solve_alpha(const ImageXd& u, SparseMode mode, const PatchConfig& cfg, double tau) {
  cfg.validate();
  if (!(tau >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  SparseSynthesis out;
  switch (mode) {
    case SparseMode::local:
      out.image = sparse_pass(u, true, cfg, tau, out);
      break;
    case SparseMode::global:
      out.image = sparse_pass(u, false, cfg, tau, out);
      break;
    case SparseMode::both: {
      const ImageXd stage1 = sparse_pass(u, true, cfg, tau, out);
      // The second stage sees less noise; scale the threshold with the estimate.
      const double before = estimate_noise_sigma(u);
      const double tau2 = before > 0.0 ? tau * estimate_noise_sigma(stage1) / before : tau;
      out.image = sparse_pass(stage1, false, cfg, tau2, out);
      break;
    }
  }
  return out;
}

SimilarityBound similarity_bound(double sigma, Index n, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(sigma >= 0.0) || n < 1) throw InvalidArgument("sigma must be non-negative and N at least 1");
  const double variance = (1.0 - 2.0 / std::numbers::pi) * sigma * sigma / static_cast<double>(n);
  return {std::clamp(1.0 - variance / (eps * eps), 0.0, 1.0), sigma * std::sqrt(2.0 / std::numbers::pi)};
}

}  // namespace bcs
