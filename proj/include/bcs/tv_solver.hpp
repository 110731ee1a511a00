#pragma once

#include "bcs/gradient.hpp"
#include "bcs/metrics.hpp"
#include "bcs/nlm.hpp"
#include "bcs/sensing.hpp"

namespace bcs {

struct TvParams {
  double beta = 128.0;  // penalty on D u = w
  double mu = 32.0;     // penalty on A u = b
  double inner_tol = 1e-4;
  double outer_tol = 1e-5;
  int max_outer = 50;
  int max_inner = 20;
  // Filter the gradient-domain multiplier with NLM after each outer update.
  bool nonlocal_multiplier = true;
  NlmParams nlm;
  GradientScope scope = GradientScope::frame();
  // The solver runs on intensities divided by this value so that the
  // penalties act on a unit-peak image.
  double intensity_scale = 255.0;

  void validate() const;
};

/// Iterates of the augmented Lagrangian on the normalized intensity scale.
struct TvSolverState {
  VectorXd u;
  GradientFieldXd w;
  GradientFieldXd multiplier;   // for D u = w
  VectorXd lambda;              // for A u = b
};

/// Closed-form minimizer of ||w|| - v^T (Du - w) + beta/2 ||Du - w||^2 per pixel.
GradientFieldXd shrink_w(const GradientFieldXd& du, const GradientFieldXd& multiplier, double beta);

/// d = beta D^T (D u - w) - D^T v + mu A^T (A u - b) - A^T lambda.
VectorXd bb_direction(const VectorXd& u, const GradientFieldXd& w, const GradientFieldXd& multiplier,
                      const VectorXd& lambda, const VectorXd& b, double beta, double mu,
                      const SensingOperator& op, const BlockGeometry& geom, const GradientScope& scope);

/// <d, d> / <d, G d> with G = mu A^T A + beta D^T D. Returns 0 for d = 0.
double bb_step_size(const VectorXd& d, double beta, double mu, const SensingOperator& op,
                    const BlockGeometry& geom, const GradientScope& scope);

/// Augmented Lagrangian value at (w, u).
double augmented_lagrangian(const VectorXd& u, const GradientFieldXd& w, const GradientFieldXd& multiplier,
                            const VectorXd& lambda, const VectorXd& b, double beta, double mu,
                            const SensingOperator& op, const BlockGeometry& geom, const GradientScope& scope);

struct RecoveryResult {
  ImageXd image;  // unclamped; clamp on export
  ConvergenceTrace trace;
};

/// Multi-block TV recovery with a nonlocal-means filtered multiplier.
///
/// Starts from u = A^T b. Each outer iteration runs inner w/u sweeps (one
/// shrinkage plus one steepest-descent step with the exact quadratic step
/// length) until the relative change of ||u|| drops below inner_tol, then
/// updates the gradient multiplier (NLM filtered unless disabled) and the
/// measurement multiplier. `ground_truth`, when given, only feeds the trace.
RecoveryResult solve_mbtv_nllm(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                               const TvParams& params = {}, const ImageXd* ground_truth = nullptr);

/// Relative change of norms | ||a|| - ||b|| | / ||a|| used as the stopping rule.
double relative_norm_change(const VectorXd& previous, const VectorXd& next);

}  // namespace bcs
