#include "bcs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bcs::synthetic {
namespace {

struct Shape {
  bool ellipse = false;
  double cy = 0, cx = 0, ry = 0, rx = 0, angle = 0;
  double level = 0;

  bool contains(double y, double x) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double dy = y - cy;
    const double dx = x - cx;
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
  }
};

std::vector<Shape> random_shapes(Index height, Index width, std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Shape> shapes;
  for (int k = 0; k < count; ++k) {
    Shape s;
    s.ellipse = unit(rng) < 0.5;
    s.cy = unit(rng) * static_cast<double>(height);
    s.cx = unit(rng) * static_cast<double>(width);
    s.ry = (0.08 + 0.25 * unit(rng)) * static_cast<double>(height);
    s.rx = (0.08 + 0.25 * unit(rng)) * static_cast<double>(width);
    s.angle = unit(rng) * std::numbers::pi;
    s.level = 20.0 + 215.0 * unit(rng);
    shapes.push_back(s);
  }
  return shapes;
}

}  // namespace

ImageXd straight_edge(Index height, Index width, double low, double high, double angle_radians) {
  GridXd g(height, width);
  const double cy = 0.5 * static_cast<double>(height - 1);
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double ny = std::sin(angle_radians);
  const double nx = std::cos(angle_radians);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      g(i, j) = (static_cast<double>(i) - cy) * ny + (static_cast<double>(j) - cx) * nx >= 0.0 ? high : low;
    }
  }
  return ImageXd(std::move(g));
}

ImageXd piecewise_constant(Index height, Index width, std::uint64_t seed, int shapes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double background = 20.0 + 215.0 * unit(rng);
  const auto layout = random_shapes(height, width, rng, shapes);
  GridXd g = GridXd::Constant(height, width, background);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      for (const auto& s : layout) {
        if (s.contains(static_cast<double>(i), static_cast<double>(j))) g(i, j) = s.level;
      }
    }
  }
  return ImageXd(std::move(g));
}

ImageXd textured(Index height, Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double background = 60.0 + 120.0 * unit(rng);
  const double shade_y = (unit(rng) - 0.5) * 60.0;
  const double shade_x = (unit(rng) - 0.5) * 60.0;
  auto layout = random_shapes(height, width, rng, 7);
  struct Grating {
    double freq, angle, amplitude;
  };
  std::vector<Grating> gratings;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    // roughly half of the shapes carry an oriented grating
    gratings.push_back({0.25 + 0.9 * unit(rng), unit(rng) * std::numbers::pi, unit(rng) < 0.5 ? 0.0 : 12.0 + 18.0 * unit(rng)});
  }
  GridXd g(height, width);
  for (Index i = 0; i < height; ++i) {
    const double y = static_cast<double>(i);
    for (Index j = 0; j < width; ++j) {
      const double x = static_cast<double>(j);
      double v = background + shade_y * y / static_cast<double>(height) + shade_x * x / static_cast<double>(width);
      for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto& s = layout[k];
        if (!s.contains(y, x)) continue;
        const auto& gr = gratings[k];
        v = s.level + gr.amplitude * std::sin(gr.freq * (std::cos(gr.angle) * x + std::sin(gr.angle) * y));
      }
      g(i, j) = std::clamp(v, 0.0, 255.0);
    }
  }
  return ImageXd(std::move(g));
}

ImageXd shifted(const ImageXd& img, Index dy, Index dx) {
  const Index h = img.height();
  const Index w = img.width();
  GridXd g(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) g(i, j) = img(((i - dy) % h + h) % h, ((j - dx) % w + w) % w);
  }
  return ImageXd(std::move(g));
}

std::vector<ImageXd> panning_sequence(const ImageXd& first, std::size_t frames, Index vy, Index vx) {
  std::vector<ImageXd> seq;
  seq.reserve(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    seq.push_back(shifted(first, vy * static_cast<Index>(k), vx * static_cast<Index>(k)));
  }
  return seq;
}

ImageXd with_gaussian_noise(const ImageXd& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  GridXd g = img.pixels();
  for (Index i = 0; i < g.size(); ++i) g.data()[i] += normal(rng);
  return ImageXd(std::move(g));
}

}  // namespace bcs::synthetic
