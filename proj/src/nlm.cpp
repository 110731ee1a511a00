#include "bcs/nlm.hpp"

#include <algorithm>
#include <cmath>

namespace bcs {

void NlmParams::validate() const {
  if (patch_side < 1 || patch_side % 2 == 0) throw InvalidArgument("NLM patch side must be odd and positive");
  if (search_side < 1 || search_side % 2 == 0) throw InvalidArgument("NLM search side must be odd and positive");
  if (patch_side > search_side) throw InvalidArgument("NLM patch side exceeds search side");
  if (!(smoothing > 0.0)) throw InvalidArgument("NLM smoothing must be positive");
}

GridXd nlm_denoise(const GridXd& field, const NlmParams& params) {
  params.validate();
  const Index h = field.rows();
  const Index w = field.cols();
  if (h < params.patch_side || w < params.patch_side) {
    throw DegenerateInput("NLM input " + std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than the patch");
  }
  if (!field.allFinite()) throw DegenerateInput("NLM input contains non-finite values");
  const double range = field.maxCoeff() - field.minCoeff();
  if (!(range > 0.0)) return field;
  const double width = params.effective_width(range);
  const double inv_h2 = 1.0 / (width * width);

  const Index pr = params.patch_side / 2;
  const Index sr = params.search_side / 2;
  const Index ph = h + 2 * pr;
  const Index pw = w + 2 * pr;
  GridXd padded(ph, pw);
  for (Index i = 0; i < ph; ++i) {
    const Index si = std::clamp<Index>(i - pr, 0, h - 1);
    for (Index j = 0; j < pw; ++j) padded(i, j) = field(si, std::clamp<Index>(j - pr, 0, w - 1));
  }

  GridXd numer = GridXd::Zero(h, w);
  GridXd denom = GridXd::Zero(h, w);
  GridXd sq(ph, pw);
  GridXd row_sums(ph, w);

  // One search offset at a time: squared differences between the padded
  // grid and its shifted copy, box-summed over the patch footprint.
  for (Index oy = -sr; oy <= sr; ++oy) {
    const Index i0 = std::max<Index>(0, -oy);
    const Index i1 = std::min<Index>(h, h - oy);
    if (i0 >= i1) continue;
    for (Index ox = -sr; ox <= sr; ++ox) {
      const Index j0 = std::max<Index>(0, -ox);
      const Index j1 = std::min<Index>(w, w - ox);
      if (j0 >= j1) continue;
      // padded rows i0 .. i1 + 2pr - 1 hold patch rows of centres i0 .. i1 - 1
      for (Index i = i0; i < i1 + 2 * pr; ++i) {
        for (Index j = j0; j < j1 + 2 * pr; ++j) {
          const double d = padded(i, j) - padded(i + oy, j + ox);
          sq(i, j) = d * d;
        }
      }
      for (Index i = i0; i < i1 + 2 * pr; ++i) {
        for (Index j = j0; j < j1; ++j) {
          double s = 0.0;
          for (Index b = 0; b < params.patch_side; ++b) s += sq(i, j + b);
          row_sums(i, j) = s;
        }
      }
      for (Index i = i0; i < i1; ++i) {
        for (Index j = j0; j < j1; ++j) {
          double dist = 0.0;
          for (Index a = 0; a < params.patch_side; ++a) dist += row_sums(i + a, j);
          const double weight = std::exp(-dist * inv_h2);
          numer(i, j) += weight * field(i + oy, j + ox);
          denom(i, j) += weight;
        }
      }
    }
  }
  return numer.cwiseQuotient(denom);
}

GradientFieldXd update_multiplier_plain(const GradientFieldXd& multiplier, const ImageXd& u_next,
                                        const GradientFieldXd& w_next, double beta, const GradientScope& scope) {
  if (!(beta > 0.0)) throw InvalidArgument("multiplier update needs beta > 0");
  if (!multiplier.same_shape(w_next) || multiplier.height() != u_next.height() ||
      multiplier.width() != u_next.width()) {
    throw InvalidDimensions("multiplier update: shape mismatch");
  }
  GradientFieldXd a = gradient(u_next, scope);
  a -= w_next;
  a *= -beta;
  a += multiplier;
  return a;
}

GradientFieldXd update_multiplier_nllm(const GradientFieldXd& multiplier, const ImageXd& u_next,
                                       const GradientFieldXd& w_next, double beta, const NlmParams& params,
                                       const GradientScope& scope) {
  GradientFieldXd a = update_multiplier_plain(multiplier, u_next, w_next, beta, scope);
  return {nlm_denoise(a.dx, params), nlm_denoise(a.dy, params)};
}

}  // namespace bcs
