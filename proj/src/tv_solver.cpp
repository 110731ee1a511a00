#include "bcs/tv_solver.hpp"

#include <cmath>

namespace bcs {

void TvParams::validate() const {
  if (!(beta > 0.0) || !(mu > 0.0)) throw InvalidArgument("TV penalties beta and mu must be positive");
  if (!(inner_tol >= 0.0) || !(outer_tol >= 0.0)) throw InvalidArgument("TV tolerances must be non-negative");
  if (max_outer < 1 || max_inner < 1) throw InvalidArgument("TV iteration caps must be at least 1");
  if (!(intensity_scale > 0.0)) throw InvalidArgument("intensity scale must be positive");
  if (nonlocal_multiplier) nlm.validate();
}

double relative_norm_change(const VectorXd& previous, const VectorXd& next) {
  const double n0 = previous.norm();
  const double n1 = next.norm();
  if (n0 == 0.0) return n1 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(n0 - n1) / n0;
}

GradientFieldXd shrink_w(const GradientFieldXd& du, const GradientFieldXd& multiplier, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("shrink_w needs beta > 0");
  if (!du.same_shape(multiplier)) throw InvalidDimensions("shrink_w: shape mismatch");
  const double inv_beta = 1.0 / beta;
  GradientFieldXd out = GradientFieldXd::zero(du.height(), du.width());
  for (Index i = 0; i < du.dx.size(); ++i) {
    const double vx = du.dx.data()[i] - multiplier.dx.data()[i] * inv_beta;
    const double vy = du.dy.data()[i] - multiplier.dy.data()[i] * inv_beta;
    const double r = std::hypot(vx, vy);
    if (r > inv_beta) {
      const double scale = (r - inv_beta) / r;
      out.dx.data()[i] = scale * vx;
      out.dy.data()[i] = scale * vy;
    }
  }
  return out;
}

VectorXd bb_direction(const VectorXd& u, const GradientFieldXd& w, const GradientFieldXd& multiplier,
                      const VectorXd& lambda, const VectorXd& b, double beta, double mu,
                      const SensingOperator& op, const BlockGeometry& geom, const GradientScope& scope) {
  const Index h = geom.height();
  const Index wd = geom.width();
  if (u.size() != geom.pixel_count() || w.height() != h || w.width() != wd || !w.same_shape(multiplier) ||
      lambda.size() != b.size()) {
    throw InvalidDimensions("bb_direction: shape mismatch");
  }
  GradientFieldXd residual = beta * (gradient(u, h, wd, scope) - w) - multiplier;
  const VectorXd data = mu * (apply_frame(op, geom, u) - b) - lambda;
  return gradient_adjoint(residual, scope) + apply_frame_adjoint(op, geom, data);
}

double bb_step_size(const VectorXd& d, double beta, double mu, const SensingOperator& op,
                    const BlockGeometry& geom, const GradientScope& scope) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) return 0.0;
  // <d, G d> = mu ||A d||^2 + beta ||D d||^2
  const double curvature = mu * apply_frame(op, geom, d).squaredNorm() +
                           beta * gradient(d, geom.height(), geom.width(), scope).squared_norm();
  if (!(curvature > 0.0)) return 0.0;
  return dd / curvature;
}

double augmented_lagrangian(const VectorXd& u, const GradientFieldXd& w, const GradientFieldXd& multiplier,
                            const VectorXd& lambda, const VectorXd& b, double beta, double mu,
                            const SensingOperator& op, const BlockGeometry& geom, const GradientScope& scope) {
  const GradientFieldXd r = gradient(u, geom.height(), geom.width(), scope) - w;
  const VectorXd data = apply_frame(op, geom, u) - b;
  return isotropic_magnitude(w).sum() - multiplier.dot(r) + 0.5 * beta * r.squared_norm() - lambda.dot(data) +
         0.5 * mu * data.squaredNorm();
}

RecoveryResult solve_mbtv_nllm(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                               const TvParams& params, const ImageXd* ground_truth) {
  params.validate();
  check_operator(op, geom);
  if (b.block_rows() != op.rows() || b.block_count() != geom.block_count()) {
    throw GeometryError("measurements do not match operator and geometry");
  }
  if (ground_truth && (ground_truth->height() != geom.height() || ground_truth->width() != geom.width())) {
    throw GeometryError("ground truth does not match geometry");
  }
  const Index h = geom.height();
  const Index w = geom.width();
  RecoveryResult result;
  if (b.per_block.isZero(0.0)) {
    result.image = ImageXd(h, w);
    result.trace.converged = true;
    return result;
  }

  const double scale = params.intensity_scale;
  const VectorXd bs = b.concatenated() / scale;
  const auto& scope = params.scope;

  TvSolverState s;
  s.u = apply_frame_adjoint(op, geom, bs);
  s.w = GradientFieldXd::zero(h, w);
  s.multiplier = GradientFieldXd::zero(h, w);
  s.lambda = VectorXd::Zero(bs.size());

  for (int outer = 0; outer < params.max_outer; ++outer) {
    const VectorXd u_outer = s.u;
    for (int inner = 0; inner < params.max_inner; ++inner) {
      s.w = shrink_w(gradient(s.u, h, w, scope), s.multiplier, params.beta);
      const VectorXd d = bb_direction(s.u, s.w, s.multiplier, s.lambda, bs, params.beta, params.mu, op, geom, scope);
      const double eta = bb_step_size(d, params.beta, params.mu, op, geom, scope);
      ++result.trace.inner_iterations;
      if (eta == 0.0) break;
      VectorXd next = s.u - eta * d;
      if (!next.allFinite()) throw DivergenceError("solve_mbtv_nllm", outer);
      const double change = relative_norm_change(s.u, next);
      s.u = std::move(next);
      if (change <= params.inner_tol) break;
    }

    TraceRecord rec;
    rec.iteration = outer;
    rec.objective = augmented_lagrangian(s.u, s.w, s.multiplier, s.lambda, bs, params.beta, params.mu, op, geom, scope);
    const VectorXd data = apply_frame(op, geom, s.u) - bs;
    rec.misfit = data.norm() * scale;
    rec.rel_change = relative_norm_change(u_outer, s.u);
    rec.step_change = u_outer.norm() > 0.0 ? (s.u - u_outer).norm() / u_outer.norm() : 0.0;
    if (ground_truth) {
      const ImageXd current = ImageXd::from_vector(h, w, s.u * scale).clamped();
      rec.psnr = psnr(*ground_truth, current);
      rec.mse = mse(*ground_truth, current);
    }
    result.trace.records.push_back(rec);

    const ImageXd u_img = ImageXd::from_vector(h, w, s.u);
    s.multiplier = params.nonlocal_multiplier
                       ? update_multiplier_nllm(s.multiplier, u_img, s.w, params.beta, params.nlm, scope)
                       : update_multiplier_plain(s.multiplier, u_img, s.w, params.beta, scope);
    s.lambda -= params.mu * data;

    if (rec.rel_change <= params.outer_tol) {
      result.trace.converged = true;
      break;
    }
  }
  result.image = ImageXd::from_vector(h, w, s.u * scale);
  return result;
}

}  // namespace bcs
