#pragma once

#include "bcs/gradient.hpp"
#include "bcs/image.hpp"

namespace bcs {

/// Nonlocal-means settings. `smoothing` is relative: the filter width is
/// smoothing * (max - min of the field) * patch_side.
struct NlmParams {
  Index patch_side = 7;
  Index search_side = 13;
  double smoothing = 0.19;

  void validate() const;
  double effective_width(double dynamic_range) const { return smoothing * dynamic_range * static_cast<double>(patch_side); }
};

/// Nonlocal means over a real grid with uniform patch distance and
/// replicate-padded patches. The search window is clipped to the grid and
/// includes the centre pixel itself.
GridXd nlm_denoise(const GridXd& field, const NlmParams& params);

/// a = v - beta (D u_next - w_next), then NLM on each component independently.
GradientFieldXd update_multiplier_nllm(const GradientFieldXd& multiplier, const ImageXd& u_next,
                                       const GradientFieldXd& w_next, double beta, const NlmParams& params,
                                       const GradientScope& scope = GradientScope::frame());

/// The unfiltered step a = v - beta (D u_next - w_next).
GradientFieldXd update_multiplier_plain(const GradientFieldXd& multiplier, const ImageXd& u_next,
                                        const GradientFieldXd& w_next, double beta,
                                        const GradientScope& scope = GradientScope::frame());

}  // namespace bcs
