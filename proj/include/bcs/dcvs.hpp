#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "bcs/cst_solver.hpp"

namespace bcs {

/// Frame k is a key frame when k is a multiple of the GOP size.
struct GopLayout {
  Index gop_size = 2;

  void validate() const;
  bool is_key(Index frame) const { return frame % gop_size == 0; }
  Index gop_of(Index frame) const { return frame / gop_size; }
  Index key_of(Index frame) const { return gop_of(frame) * gop_size; }
};

struct MhParams {
  Index search_radius = 7;
  double tikhonov_weight = 0.25;

  void validate() const;
};

/// ||b - A u||_2.
double si_score(const Measurements& b, const ImageXd& frame, const SensingOperator& op, const BlockGeometry& geom);

struct SiSelection {
  ImageXd frame;
  std::vector<double> scores;
  std::vector<std::size_t> chosen;  // indices into the candidate list
  bool averaged = false;
};

/// Candidates whose score is within tau2 * sqrt(len(b)) are averaged when
/// their scores are that close to each other too; otherwise the candidate
/// with the smallest score is returned.
SiSelection select_si(const Measurements& b, const std::vector<ImageXd>& candidates, const SensingOperator& op,
                      const BlockGeometry& geom, double tau2);

/// Multi-hypothesis prediction. For every block, the hypotheses are all
/// blocks within search_radius pixels of the co-located block in each
/// reference; the weights solve the distance-weighted Tikhonov problem
///   min ||b_k - A H w||^2 + weight^2 ||Gamma w||^2,
/// Gamma_jj = ||b_k - A h_j||. A singular system falls back to the single
/// hypothesis with the smallest distance.
ImageXd mh_predict(const std::vector<const ImageXd*>& references, const Measurements& b, const SensingOperator& op,
                   const BlockGeometry& geom, const MhParams& params = {});
ImageXd mh_predict(const ImageXd& reference, const Measurements& b, const SensingOperator& op,
                   const BlockGeometry& geom, const MhParams& params = {});

struct NonkeyParams {
  double mu2 = 0.0025;  // sparse synthesis penalty
  double mu3 = 0.055;   // side-information penalty
  double tol = 1e-5;
  int max_iterations = 30;
  USolve u_solve = USolve::exact;
  RefineMode mode = RefineMode::cst;
  PatchConfig patch;
  double threshold_factor = 2.7;
  // Hard threshold in intensity units; empty uses threshold_factor * sigma_est of the input.
  std::optional<double> tau = 12.0;
  MhParams mh;
  // Side information is re-predicted every `si_refresh` iterations; 0 keeps it fixed.
  int si_refresh = 1;

  void validate() const;
};

/// d = mu2 (u - s - lambda2) + mu3 (u - si - lambda3) - A^T (b - A u).
VectorXd nonkey_direction(const VectorXd& u, const VectorXd& synthesized, const VectorXd& side_info,
                          const VectorXd& lambda2, const VectorXd& lambda3, const VectorXd& b, double mu2,
                          double mu3, const SensingOperator& op, const BlockGeometry& geom);

/// <d, d> / <d, G d> with G = A^T A + (mu2 + mu3) I. Returns 0 for d = 0.
double nonkey_step_size(const VectorXd& d, double mu2, double mu3, const SensingOperator& op,
                        const BlockGeometry& geom);

/// Non-key recovery from u = side_info. Each iteration refreshes the side
/// information by MH prediction from {side_info, current iterate},
/// synthesizes from u - lambda2, updates u and then lambda2 -= u - s and
/// lambda3 -= u - si.
RecoveryResult recover_nonkey(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                              const ImageXd& side_info, const NonkeyParams& params = {},
                              const ImageXd* ground_truth = nullptr);

struct DcvsConfig {
  GopLayout gop;
  double key_subrate = 0.7;
  double nonkey_subrate = 0.1;
  Index block_side = 16;
  std::uint64_t key_seed = 1;
  std::uint64_t nonkey_seed = 2;
  double tau2 = 2.0;
  CstParams key;
  NonkeyParams nonkey;

  void validate() const;
};

struct FrameReport {
  Index frame = 0;
  bool key = false;
  double subrate = 0.0;
  double psnr = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

struct DcvsResult {
  std::vector<ImageXd> frames;
  std::vector<FrameReport> report;

  /// Columns frame,type,subrate,psnr,iterations,wall_time.
  void write_report_csv(const std::filesystem::path& path) const;
};

/// Senses and recovers a sequence. Key frames go through solve_refined;
/// each non-key frame starts from the side information selected among the
/// frames already recovered in its GOP.
DcvsResult run_dcvs(const std::vector<ImageXd>& sequence, const DcvsConfig& config);

}  // namespace bcs
