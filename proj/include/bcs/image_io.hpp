#pragma once

#include <filesystem>
#include <vector>

#include "bcs/image.hpp"

namespace bcs {

/// Reads a binary (P5) or ASCII (P2) PGM; 16-bit maxval is rescaled to [0, 255].
ImageXd read_pgm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Intensities are clamped to [0, 255] and rounded.
void write_pgm(const std::filesystem::path& path, const ImageXd& img);

enum class RawLayout { luma_only, yuv420 };

/// Frames of a raw planar 8-bit file. With yuv420 the chroma planes after
/// each luma plane are skipped. max_frames = 0 reads every complete frame.
std::vector<ImageXd> read_raw_luma(const std::filesystem::path& path, Index width, Index height,
                                   RawLayout layout = RawLayout::luma_only, std::size_t max_frames = 0);

/// Every *.pgm in a directory, sorted by file name.
std::vector<ImageXd> read_pgm_sequence(const std::filesystem::path& dir, std::size_t max_frames = 0);

}  // namespace bcs
