#include "bcs/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace bcs {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& is) {
  std::string tok;
  int c = 0;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

long parse_header_value(std::istream& is, const std::filesystem::path& path, const char* what) {
  const std::string tok = next_token(is);
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad PGM " + what + " '" + tok + "'");
  }
}

}  // namespace

ImageXd read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  const std::string magic = next_token(is);
  if (magic != "P5" && magic != "P2") throw IoError(path.string() + ": not a PGM file (magic '" + magic + "')");
  const long width = parse_header_value(is, path, "width");
  const long height = parse_header_value(is, path, "height");
  const long maxval = parse_header_value(is, path, "maxval");
  if (maxval > 65535) throw IoError(path.string() + ": maxval out of range");
  const double scale = 255.0 / static_cast<double>(maxval);

  GridXd pixels(height, width);
  if (magic == "P5") {
    const bool wide = maxval > 255;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<unsigned char> raw(count * (wide ? 2 : 1));
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw IoError(path.string() + ": truncated pixel data");
    }
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = wide ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
      pixels.data()[i] = static_cast<double>(v) * scale;
    }
  } else {
    for (Index i = 0; i < pixels.size(); ++i) {
      long v = 0;
      if (!(is >> v) || v < 0 || v > maxval) throw IoError(path.string() + ": bad ASCII pixel value");
      pixels.data()[i] = static_cast<double>(v) * scale;
    }
  }
  return ImageXd(std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const ImageXd& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.size()));
  const auto v = img.as_vector();
  for (Index i = 0; i < v.size(); ++i) {
    raw[static_cast<std::size_t>(i)] = static_cast<unsigned char>(std::lround(std::clamp(v[i], 0.0, 255.0)));
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError(path.string() + ": write failed");
}

std::vector<ImageXd> read_raw_luma(const std::filesystem::path& path, Index width, Index height,
                                   RawLayout layout, std::size_t max_frames) {
  if (width <= 0 || height <= 0) throw InvalidArgument("raw frame dimensions must be positive");
  if (layout == RawLayout::yuv420 && (width % 2 != 0 || height % 2 != 0)) {
    throw InvalidArgument("yuv420 frames need even dimensions");
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  const auto luma = static_cast<std::size_t>(width * height);
  const std::size_t chroma = layout == RawLayout::yuv420 ? luma / 2 : 0;
  std::vector<unsigned char> raw(luma);
  std::vector<ImageXd> frames;
  while (max_frames == 0 || frames.size() < max_frames) {
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(luma))) break;
    GridXd g(height, width);
    for (std::size_t i = 0; i < luma; ++i) g.data()[i] = raw[i];
    frames.emplace_back(std::move(g));
    if (chroma > 0) is.ignore(static_cast<std::streamsize>(chroma));
  }
  if (frames.empty()) throw IoError(path.string() + ": no complete frame");
  return frames;
}

std::vector<ImageXd> read_pgm_sequence(const std::filesystem::path& dir, std::size_t max_frames) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (max_frames != 0 && files.size() > max_frames) files.resize(max_frames);
  if (files.empty()) throw IoError(dir.string() + ": no .pgm frames");
  std::vector<ImageXd> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(read_pgm(f));
  return frames;
}

}  // namespace bcs
