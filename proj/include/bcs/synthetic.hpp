#pragma once

#include <cstdint>
#include <vector>

#include "bcs/image.hpp"

namespace bcs::synthetic {

/// Two gray levels separated by a straight edge through the image centre.
ImageXd straight_edge(Index height, Index width, double low, double high, double angle_radians);

/// Background plus `shapes` random rectangles and ellipses with random gray
/// levels in [20, 235]. Deterministic in `seed`.
ImageXd piecewise_constant(Index height, Index width, std::uint64_t seed, int shapes = 6);

/// Piecewise-constant layout with smooth shading, oriented gratings inside
/// some of the shapes and fine stripe texture; deterministic in `seed`.
ImageXd textured(Index height, Index width, std::uint64_t seed);

/// Circular shift by (dy, dx) pixels.
ImageXd shifted(const ImageXd& img, Index dy, Index dx);

/// `frames` copies of `first`, each circularly shifted by (vy, vx) from the previous.
std::vector<ImageXd> panning_sequence(const ImageXd& first, std::size_t frames, Index vy, Index vx);

/// Adds i.i.d. N(0, sigma^2) noise; no clamping.
ImageXd with_gaussian_noise(const ImageXd& img, double sigma, std::uint64_t seed);

}  // namespace bcs::synthetic
