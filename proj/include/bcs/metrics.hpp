#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "bcs/image.hpp"

namespace bcs {

inline constexpr double kPeakIntensity = 255.0;

/// 10 log10(255^2 / MSE); +infinity when the images are identical.
template <typename Scalar>
double psnr(const Image<Scalar>& reference, const Image<Scalar>& test) {
  if (!reference.same_shape(test)) throw InvalidDimensions("psnr: image shapes differ");
  if (reference.empty()) throw InvalidDimensions("psnr: empty images");
  const double mse = (reference.pixels() - test.pixels()).template cast<double>().squaredNorm() /
                     static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeakIntensity * kPeakIntensity / mse);
}

template <typename Scalar>
double mse(const Image<Scalar>& reference, const Image<Scalar>& test) {
  if (!reference.same_shape(test)) throw InvalidDimensions("mse: image shapes differ");
  return (reference.pixels() - test.pixels()).template cast<double>().squaredNorm() /
         static_cast<double>(reference.size());
}

/// One row per outer iteration of a solver.
struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;
  double misfit = 0.0;        // ||A u - b||_2
  double rel_change = 0.0;    // | ||u^k|| - ||u^{k+1}|| | / ||u^k||
  double step_change = 0.0;   // ||u^{k+1} - u^k|| / ||u^k||
  double psnr = std::numeric_limits<double>::quiet_NaN();  // vs ground truth, when supplied
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  // A non-finite iterate stopped the solver; the result is the last finite one.
  bool diverged = false;
  int inner_iterations = 0;

  int iterations() const noexcept { return static_cast<int>(records.size()); }
  const TraceRecord* last() const noexcept { return records.empty() ? nullptr : &records.back(); }

  /// CSV with columns iteration,objective,misfit,rel_change,psnr.
  void write_csv(const std::filesystem::path& path) const;
};

}  // namespace bcs
