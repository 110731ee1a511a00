#pragma once

#include <optional>
#include <string>

#include "bcs/patch_sparse.hpp"
#include "bcs/tv_solver.hpp"

namespace bcs {

enum class RefineMode { gst, lst, cst };

const char* to_string(RefineMode mode);
RefineMode parse_refine_mode(const std::string& name);
/// GST uses the global transform, LST the local one, CST both in cascade.
SparseMode sparse_mode(RefineMode mode);

/// How the u-subproblem is solved each iteration.
enum class USolve { exact, steepest };

struct CstParams {
  RefineMode mode = RefineMode::cst;
  USolve u_solve = USolve::exact;
  double mu1 = 0.0025;
  double tol = 1e-5;
  int max_iterations = 30;
  PatchConfig patch;
  double threshold_factor = 2.7;
  // Hard threshold in intensity units; empty uses threshold_factor * sigma_est of the input.
  std::optional<double> tau = 12.0;
  // The threshold at iteration t is multiplied by tau_decay^t.
  double tau_decay = 1.0;
  TvParams tv;

  void validate() const;
};

/// d = mu (u - s - lambda1) - A^T (b - A u), with s the synthesized image.
VectorXd cst_direction(const VectorXd& u, const VectorXd& synthesized, const VectorXd& lambda1, const VectorXd& b,
                       double mu1, const SensingOperator& op, const BlockGeometry& geom);

/// <d, d> / <d, G d> with G = A^T A + mu I. Returns 0 for d = 0.
double cst_step_size(const VectorXd& d, double mu1, const SensingOperator& op, const BlockGeometry& geom);

/// Minimizer of 1/2 ||b - A u||^2 + mu/2 ||u - target||^2, i.e.
/// (A^T A + mu I)^{-1} (A^T b + mu target), applied block by block through
/// the m x m system (mu I + A_B A_B^T).
VectorXd solve_data_prox(const VectorXd& target, const VectorXd& b, double mu, const SensingOperator& op,
                         const BlockGeometry& geom);

/// lambda1 - (u_next - synthesized_next).
VectorXd update_lambda1(const VectorXd& lambda1, const VectorXd& u_next, const VectorXd& synthesized_next);

/// 1/2 ||b - A u||^2 + mu/2 ||u - s - lambda1||^2 (the sparsity term is left out).
double cst_objective(const VectorXd& u, const VectorXd& synthesized, const VectorXd& lambda1, const VectorXd& b,
                     double mu1, const SensingOperator& op, const BlockGeometry& geom);

/// Sparse refinement starting from `initial`. Each iteration synthesizes
/// from u - lambda1, updates u (exact prox of the data term with target
/// s + lambda1, or one steepest-descent step) and then lambda1. A non-finite iterate ends the loop with trace.diverged set and
/// the last finite iterate returned.
RecoveryResult refine_from(const ImageXd& initial, const Measurements& b, const SensingOperator& op,
                           const BlockGeometry& geom, const CstParams& params, const ImageXd* ground_truth = nullptr);

/// MBTV-NLLM initial recovery followed by refine_from. The trace holds the
/// refinement iterations only.
RecoveryResult solve_refined(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                             const CstParams& params = {}, const ImageXd* ground_truth = nullptr);

}  // namespace bcs
