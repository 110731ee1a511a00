#include "bcs/dcvs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "bcs/csv.hpp"

namespace bcs {

void GopLayout::validate() const {
  if (gop_size < 2) throw InvalidArgument("GOP size must be at least 2");
}

void MhParams::validate() const {
  if (search_radius < 0) throw InvalidArgument("MH search radius must be non-negative");
  if (!(tikhonov_weight >= 0.0)) throw InvalidArgument("Tikhonov weight must be non-negative");
}

void NonkeyParams::validate() const {
  if (!(mu2 >= 0.0) || !(mu3 >= 0.0) || !(mu2 + mu3 > 0.0)) {
    throw InvalidArgument("non-key penalties must be non-negative with a positive sum");
  }
  if (!(tol >= 0.0)) throw InvalidArgument("non-key tolerance must be non-negative");
  if (max_iterations < 1) throw InvalidArgument("non-key recovery needs at least one iteration");
  if (!(threshold_factor >= 0.0)) throw InvalidArgument("threshold factor must be non-negative");
  if (tau && !(*tau >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  if (si_refresh < 0) throw InvalidArgument("side-information refresh period must be non-negative");
  patch.validate();
  mh.validate();
}

void DcvsConfig::validate() const {
  gop.validate();
  if (!(key_subrate > 0.0 && key_subrate <= 1.0) || !(nonkey_subrate > 0.0 && nonkey_subrate <= 1.0)) {
    throw InvalidArgument("subrates must lie in (0, 1]");
  }
  if (block_side < 1) throw InvalidArgument("block side must be positive");
  if (!(tau2 >= 0.0)) throw InvalidArgument("tau2 must be non-negative");
  key.validate();
  nonkey.validate();
}

double si_score(const Measurements& b, const ImageXd& frame, const SensingOperator& op, const BlockGeometry& geom) {
  return (b.concatenated() - apply_frame(op, geom, frame.as_vector())).norm();
}

SiSelection select_si(const Measurements& b, const std::vector<ImageXd>& candidates, const SensingOperator& op,
                      const BlockGeometry& geom, double tau2) {
  if (candidates.empty()) throw InvalidArgument("select_si needs at least one candidate");
  if (!(tau2 >= 0.0)) throw InvalidArgument("tau2 must be non-negative");
  SiSelection out;
  for (const auto& c : candidates) out.scores.push_back(si_score(b, c, op, geom));
  const double threshold = tau2 * std::sqrt(static_cast<double>(b.size()));

  std::vector<std::size_t> within;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (out.scores[k] <= threshold) within.push_back(k);
  }
  if (!within.empty()) {
    double lo = out.scores[within.front()];
    double hi = lo;
    for (auto k : within) {
      lo = std::min(lo, out.scores[k]);
      hi = std::max(hi, out.scores[k]);
    }
    if (hi - lo <= threshold) {
      GridXd sum = GridXd::Zero(candidates.front().height(), candidates.front().width());
      for (auto k : within) sum += candidates[k].pixels();
      out.frame = ImageXd(sum / static_cast<double>(within.size()));
      out.chosen = std::move(within);
      out.averaged = out.chosen.size() > 1;
      return out;
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
  out.frame = candidates[best];
  out.chosen = {best};
  return out;
}

namespace {

// Weights for one block; empty when the system could not be solved.
VectorXd tikhonov_weights(const MatrixXd& q, const VectorXd& bk, const VectorXd& dist, double weight) {
  const double g2 = weight * weight;
  if (g2 == 0.0) return q.completeOrthogonalDecomposition().solve(bk);
  if ((dist.array() > 0.0).all()) {
    // (Q^T Q + g^2 Gamma^2)^{-1} Q^T b = Gamma^-2 Q^T (Q Gamma^-2 Q^T + g^2 I)^{-1} b
    const VectorXd inv = dist.array().square().inverse().matrix();
    MatrixXd small = q * inv.asDiagonal() * q.transpose();
    small.diagonal().array() += g2;
    const Eigen::LDLT<MatrixXd> ldlt(small);
    if (ldlt.info() != Eigen::Success) return {};
    return inv.asDiagonal() * (q.transpose() * ldlt.solve(bk));
  }
  MatrixXd normal = q.transpose() * q;
  normal.diagonal() += g2 * dist.array().square().matrix();
  const Eigen::LDLT<MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) return {};
  return ldlt.solve(q.transpose() * bk);
}

}  // namespace

ImageXd mh_predict(const std::vector<const ImageXd*>& references, const Measurements& b, const SensingOperator& op,
                   const BlockGeometry& geom, const MhParams& params) {
  params.validate();
  check_operator(op, geom);
  if (references.empty()) throw InvalidArgument("mh_predict needs a reference frame");
  for (const auto* r : references) {
    if (r->height() != geom.height() || r->width() != geom.width()) {
      throw GeometryError("reference frame does not match geometry");
    }
  }
  if (b.block_rows() != op.rows() || b.block_count() != geom.block_count()) {
    throw GeometryError("measurements do not match operator and geometry");
  }
  const Index bs = geom.block_side;
  const Index n = geom.block_length();
  const Index h = geom.height();
  const Index w = geom.width();
  const Index rad = params.search_radius;
  const Index per_ref = (2 * rad + 1) * (2 * rad + 1);

  MatrixXd predicted(n, geom.block_count());
  MatrixXd hyp(n, per_ref * static_cast<Index>(references.size()));
  for (Index gr = 0; gr < geom.grid_rows; ++gr) {
    for (Index gc = 0; gc < geom.grid_cols; ++gc) {
      const Index k = gr * geom.grid_cols + gc;
      Index count = 0;
      for (const auto* ref : references) {
        for (Index dy = -rad; dy <= rad; ++dy) {
          const Index y = gr * bs + dy;
          if (y < 0 || y + bs > h) continue;
          for (Index dx = -rad; dx <= rad; ++dx) {
            const Index x = gc * bs + dx;
            if (x < 0 || x + bs > w) continue;
            for (Index r = 0; r < bs; ++r) {
              hyp.col(count).segment(r * bs, bs) = ref->pixels().row(y + r).segment(x, bs).transpose();
            }
            ++count;
          }
        }
      }
      const auto hk = hyp.leftCols(count);
      const MatrixXd q = op.matrix * hk;
      const VectorXd bk = b.block(k);
      const VectorXd dist = (q.colwise() - bk).colwise().norm().transpose();
      VectorXd weights = tikhonov_weights(q, bk, dist, params.tikhonov_weight);
      if (weights.size() == count && weights.allFinite()) {
        predicted.col(k) = hk * weights;
      } else {
        Index best = 0;
        dist.minCoeff(&best);
        predicted.col(k) = hk.col(best);
      }
    }
  }
  return ImageXd::from_vector(h, w, scatter_blocks(predicted, geom));
}

ImageXd mh_predict(const ImageXd& reference, const Measurements& b, const SensingOperator& op,
                   const BlockGeometry& geom, const MhParams& params) {
  return mh_predict(std::vector<const ImageXd*>{&reference}, b, op, geom, params);
}

VectorXd nonkey_direction(const VectorXd& u, const VectorXd& synthesized, const VectorXd& side_info,
                          const VectorXd& lambda2, const VectorXd& lambda3, const VectorXd& b, double mu2,
                          double mu3, const SensingOperator& op, const BlockGeometry& geom) {
  if (u.size() != geom.pixel_count() || synthesized.size() != u.size() || side_info.size() != u.size() ||
      lambda2.size() != u.size() || lambda3.size() != u.size()) {
    throw InvalidDimensions("nonkey_direction: shape mismatch");
  }
  return mu2 * (u - synthesized - lambda2) + mu3 * (u - side_info - lambda3) -
         apply_frame_adjoint(op, geom, b - apply_frame(op, geom, u));
}

double nonkey_step_size(const VectorXd& d, double mu2, double mu3, const SensingOperator& op,
                        const BlockGeometry& geom) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) return 0.0;
  return dd / (apply_frame(op, geom, d).squaredNorm() + (mu2 + mu3) * dd);
}

RecoveryResult recover_nonkey(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                              const ImageXd& side_info, const NonkeyParams& params, const ImageXd* ground_truth) {
  params.validate();
  check_operator(op, geom);
  if (side_info.height() != geom.height() || side_info.width() != geom.width()) {
    throw GeometryError("side information does not match geometry");
  }
  if (b.block_rows() != op.rows() || b.block_count() != geom.block_count()) {
    throw GeometryError("measurements do not match operator and geometry");
  }
  const Index h = geom.height();
  const Index w = geom.width();
  const VectorXd bv = b.concatenated();
  const SparseMode mode = sparse_mode(params.mode);
  const double mu = params.mu2 + params.mu3;

  VectorXd u = side_info.as_vector();
  VectorXd si = u;
  VectorXd lambda2 = VectorXd::Zero(u.size());
  VectorXd lambda3 = VectorXd::Zero(u.size());
  RecoveryResult result;
  for (int it = 0; it < params.max_iterations; ++it) {
    if (params.mu3 > 0.0 && params.si_refresh > 0 && it > 0 && it % params.si_refresh == 0) {
      const ImageXd current = ImageXd::from_vector(h, w, u);
      si = mh_predict({&side_info, &current}, b, op, geom, params.mh).as_vector();
    }
    const ImageXd input = ImageXd::from_vector(h, w, u - lambda2);
    const double tau = params.tau ? *params.tau : params.threshold_factor * estimate_noise_sigma(input);
    const VectorXd synthesized = solve_alpha(input, mode, params.patch, tau).image.as_vector();

    double eta = 1.0;
    VectorXd next;
    if (params.u_solve == USolve::exact) {
      const VectorXd target = (params.mu2 * (synthesized + lambda2) + params.mu3 * (si + lambda3)) / mu;
      next = solve_data_prox(target, bv, mu, op, geom);
    } else {
      const VectorXd d =
          nonkey_direction(u, synthesized, si, lambda2, lambda3, bv, params.mu2, params.mu3, op, geom);
      eta = nonkey_step_size(d, params.mu2, params.mu3, op, geom);
      next = u - eta * d;
    }
    if (!next.allFinite()) {
      result.trace.diverged = true;
      break;
    }
    const double change = relative_norm_change(u, next);
    const double step = u.norm() > 0.0 ? (next - u).norm() / u.norm() : 0.0;
    lambda2 -= next - synthesized;
    lambda3 -= next - si;
    u = std::move(next);

    TraceRecord rec;
    rec.iteration = it;
    rec.objective = 0.5 * (bv - apply_frame(op, geom, u)).squaredNorm() +
                    0.5 * params.mu2 * (u - synthesized - lambda2).squaredNorm() +
                    0.5 * params.mu3 * (u - si - lambda3).squaredNorm();
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

void DcvsResult::write_report_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "frame,type,subrate,psnr,iterations,wall_time\n";
  for (const auto& r : report) {
    os << r.frame << ',' << (r.key ? "key" : "nonkey") << ',' << format_number(r.subrate) << ','
       << format_number(r.psnr) << ',' << r.iterations << ',' << format_number(r.wall_seconds) << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

DcvsResult run_dcvs(const std::vector<ImageXd>& sequence, const DcvsConfig& config) {
  config.validate();
  if (sequence.empty()) throw InvalidArgument("empty sequence");
  const auto geom = BlockGeometry::for_image(sequence.front().height(), sequence.front().width(), config.block_side);
  for (const auto& f : sequence) {
    if (f.height() != geom.height() || f.width() != geom.width()) throw GeometryError("frame sizes differ");
  }
  const Index n = geom.block_length();
  const auto key_op = make_gaussian_operator(measurements_for_subrate(config.key_subrate, n), n, config.key_seed);
  const auto nonkey_op =
      make_gaussian_operator(measurements_for_subrate(config.nonkey_subrate, n), n, config.nonkey_seed);

  DcvsResult out;
  out.frames.reserve(sequence.size());
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const Index idx = static_cast<Index>(k);
    const ImageXd& truth = sequence[k];
    FrameReport rep;
    rep.frame = idx;
    rep.key = config.gop.is_key(idx);
    RecoveryResult r;
    if (rep.key) {
      rep.subrate = key_op.subrate();
      r = solve_refined(sense(truth, key_op, geom), key_op, geom, config.key);
    } else {
      rep.subrate = nonkey_op.subrate();
      const Measurements b = sense(truth, nonkey_op, geom);
      std::vector<ImageXd> candidates(out.frames.begin() + config.gop.key_of(idx), out.frames.begin() + idx);
      const SiSelection si = select_si(b, candidates, nonkey_op, geom, config.tau2);
      r = recover_nonkey(b, nonkey_op, geom, si.frame, config.nonkey);
    }
    rep.iterations = r.trace.iterations();
    out.frames.push_back(r.image.clamped());
    rep.psnr = psnr(truth, out.frames.back());
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.report.push_back(rep);
  }
  return out;
}

}  // namespace bcs
