#include "bcs/cst_solver.hpp"

#include <cmath>

namespace bcs {

const char* to_string(RefineMode mode) {
  switch (mode) {
    case RefineMode::gst:
      return "gst";
    case RefineMode::lst:
      return "lst";
    case RefineMode::cst:
      return "cst";
  }
  return "?";
}

RefineMode parse_refine_mode(const std::string& name) {
  if (name == "gst") return RefineMode::gst;
  if (name == "lst") return RefineMode::lst;
  if (name == "cst") return RefineMode::cst;
  throw InvalidArgument("unknown refinement mode '" + name + "'");
}

SparseMode sparse_mode(RefineMode mode) {
  switch (mode) {
    case RefineMode::gst:
      return SparseMode::global;
    case RefineMode::lst:
      return SparseMode::local;
    case RefineMode::cst:
      return SparseMode::both;
  }
  return SparseMode::both;
}

void CstParams::validate() const {
  if (!(mu1 > 0.0)) throw InvalidArgument("mu1 must be positive");
  if (!(tol >= 0.0)) throw InvalidArgument("refinement tolerance must be non-negative");
  if (max_iterations < 1) throw InvalidArgument("refinement needs at least one iteration");
  if (!(threshold_factor >= 0.0)) throw InvalidArgument("threshold factor must be non-negative");
  if (tau && !(*tau >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  if (!(tau_decay > 0.0 && tau_decay <= 1.0)) throw InvalidArgument("threshold decay must lie in (0, 1]");
  patch.validate();
}

VectorXd cst_direction(const VectorXd& u, const VectorXd& synthesized, const VectorXd& lambda1, const VectorXd& b,
                       double mu1, const SensingOperator& op, const BlockGeometry& geom) {
  if (u.size() != geom.pixel_count() || synthesized.size() != u.size() || lambda1.size() != u.size()) {
    throw InvalidDimensions("cst_direction: shape mismatch");
  }
  return mu1 * (u - synthesized - lambda1) - apply_frame_adjoint(op, geom, b - apply_frame(op, geom, u));
}

double cst_step_size(const VectorXd& d, double mu1, const SensingOperator& op, const BlockGeometry& geom) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) return 0.0;
  return dd / (apply_frame(op, geom, d).squaredNorm() + mu1 * dd);
}

VectorXd solve_data_prox(const VectorXd& target, const VectorXd& b, double mu, const SensingOperator& op,
                         const BlockGeometry& geom) {
  if (!(mu > 0.0)) throw InvalidArgument("solve_data_prox needs mu > 0");
  check_operator(op, geom);
  if (target.size() != geom.pixel_count() || b.size() != op.rows() * geom.block_count()) {
    throw InvalidDimensions("solve_data_prox: shape mismatch");
  }
  // (A^T A + mu I)^{-1} r = (r - A^T (mu I + A A^T)^{-1} A r) / mu with r = A^T b + mu t,
  // which simplifies to t + A^T (mu I + A A^T)^{-1} (b - A t).
  const MatrixXd small = mu * MatrixXd::Identity(op.rows(), op.rows()) + op.matrix * op.matrix.transpose();
  const Eigen::LLT<MatrixXd> llt(small);
  if (llt.info() != Eigen::Success) throw DegenerateInput("solve_data_prox: factorization failed");
  const MatrixXd blocks = gather_blocks(target, geom.height(), geom.width(), geom);
  const Eigen::Map<const MatrixXd> bb(b.data(), op.rows(), geom.block_count());
  const MatrixXd residual = bb - op.matrix * blocks;
  return target + scatter_blocks(op.matrix.transpose() * llt.solve(residual), geom);
}

VectorXd update_lambda1(const VectorXd& lambda1, const VectorXd& u_next, const VectorXd& synthesized_next) {
  if (u_next.size() != lambda1.size() || synthesized_next.size() != lambda1.size()) {
    throw InvalidDimensions("update_lambda1: shape mismatch");
  }
  return lambda1 - (u_next - synthesized_next);
}

double cst_objective(const VectorXd& u, const VectorXd& synthesized, const VectorXd& lambda1, const VectorXd& b,
                     double mu1, const SensingOperator& op, const BlockGeometry& geom) {
  return 0.5 * (b - apply_frame(op, geom, u)).squaredNorm() + 0.5 * mu1 * (u - synthesized - lambda1).squaredNorm();
}

RecoveryResult refine_from(const ImageXd& initial, const Measurements& b, const SensingOperator& op,
                           const BlockGeometry& geom, const CstParams& params, const ImageXd* ground_truth) {
  params.validate();
  check_operator(op, geom);
  if (initial.height() != geom.height() || initial.width() != geom.width()) {
    throw GeometryError("initial image does not match geometry");
  }
  if (b.block_rows() != op.rows() || b.block_count() != geom.block_count()) {
    throw GeometryError("measurements do not match operator and geometry");
  }
  const Index h = geom.height();
  const Index w = geom.width();
  const VectorXd bv = b.concatenated();
  const SparseMode mode = sparse_mode(params.mode);

  VectorXd u = initial.as_vector();
  VectorXd lambda1 = VectorXd::Zero(u.size());
  RecoveryResult result;
  for (int it = 0; it < params.max_iterations; ++it) {
    const ImageXd input = ImageXd::from_vector(h, w, u - lambda1);
    const double tau = (params.tau ? *params.tau : params.threshold_factor * estimate_noise_sigma(input)) *
                       std::pow(params.tau_decay, it);
    const VectorXd synthesized = solve_alpha(input, mode, params.patch, tau).image.as_vector();

    double eta = 1.0;
    VectorXd next;
    if (params.u_solve == USolve::exact) {
      next = solve_data_prox(synthesized + lambda1, bv, params.mu1, op, geom);
    } else {
      const VectorXd d = cst_direction(u, synthesized, lambda1, bv, params.mu1, op, geom);
      eta = cst_step_size(d, params.mu1, op, geom);
      next = u - eta * d;
    }
    if (!next.allFinite()) {
      result.trace.diverged = true;
      break;
    }
    const double change = relative_norm_change(u, next);
    const double step = u.norm() > 0.0 ? (next - u).norm() / u.norm() : 0.0;
    lambda1 = update_lambda1(lambda1, next, synthesized);
    u = std::move(next);

    TraceRecord rec;
    rec.iteration = it;
    rec.objective = cst_objective(u, synthesized, lambda1, bv, params.mu1, op, geom);
    rec.misfit = (apply_frame(op, geom, u) - bv).norm();
    rec.rel_change = change;
    rec.step_change = step;
    if (ground_truth) {
      const ImageXd current = ImageXd::from_vector(h, w, u).clamped();
      rec.psnr = psnr(*ground_truth, current);
      rec.mse = mse(*ground_truth, current);
    }
    result.trace.records.push_back(rec);
    if (eta == 0.0 || step <= params.tol) {
      result.trace.converged = true;
      break;
    }
  }
  result.image = ImageXd::from_vector(h, w, u);
  return result;
}

RecoveryResult solve_refined(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                             const CstParams& params, const ImageXd* ground_truth) {
  params.validate();
  const RecoveryResult initial = solve_mbtv_nllm(b, op, geom, params.tv, ground_truth);
  RecoveryResult out = refine_from(initial.image, b, op, geom, params, ground_truth);
  out.trace.inner_iterations += initial.trace.inner_iterations;
  return out;
}

}  // namespace bcs
