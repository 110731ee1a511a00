#include "bcs/sensing.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace bcs {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written from little-endian hosts only");

void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& is, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError(path.string() + ": truncated header");
  return v;
}

double get_f64(std::istream& is, const std::filesystem::path& path) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError(path.string() + ": truncated data");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  return is;
}

constexpr std::array<char, 4> kMeasurementMagic{'B', 'C', 'S', 'M'};
constexpr std::uint32_t kMeasurementVersion = 1;

}  // namespace

Index measurements_for_subrate(double subrate, Index block_length) {
  if (!(subrate > 0.0 && subrate <= 1.0)) throw InvalidArgument("subrate must lie in (0, 1]");
  const auto m = static_cast<Index>(std::lround(subrate * static_cast<double>(block_length)));
  return std::clamp<Index>(m, 1, block_length);
}

SensingOperator make_gaussian_operator(Index m, Index n, std::uint64_t seed) {
  if (m <= 0 || n <= 0 || m > n) {
    throw InvalidDimensions("sensing operator needs 1 <= m <= n, got m=" + std::to_string(m) +
                            " n=" + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  SensingOperator op;
  op.seed = seed;
  op.matrix.resize(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) op.matrix(i, j) = normal(rng) * scale;
  }
  return op;
}

double welch_bound(Index m, Index n) {
  if (m <= 0 || n < 2) throw InvalidDimensions("welch bound needs m >= 1 and n >= 2");
  return std::sqrt(static_cast<double>(n - m) / (static_cast<double>(m) * static_cast<double>(n - 1)));
}

Measurements sense(const ImageXd& img, const SensingOperator& op, const BlockGeometry& geom) {
  check_operator(op, geom);
  Measurements out;
  out.per_block = op.matrix * gather_blocks(img.as_vector(), img.height(), img.width(), geom);
  out.subrate = op.subrate();
  return out;
}

void write_operator(const std::filesystem::path& path, const SensingOperator& op) {
  auto os = open_out(path);
  put_u64(os, static_cast<std::uint64_t>(op.rows()));
  put_u64(os, static_cast<std::uint64_t>(op.cols()));
  put_u64(os, op.seed);
  for (Index i = 0; i < op.rows(); ++i) {
    for (Index j = 0; j < op.cols(); ++j) put_f64(os, op.matrix(i, j));
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

SensingOperator read_operator(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto m = static_cast<Index>(get_u64(is, path));
  const auto n = static_cast<Index>(get_u64(is, path));
  SensingOperator op;
  op.seed = get_u64(is, path);
  if (m <= 0 || n <= 0 || m > n || n > (Index{1} << 24)) throw IoError(path.string() + ": bad operator shape");
  op.matrix.resize(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) op.matrix(i, j) = get_f64(is, path);
  }
  return op;
}

void write_measurements(const std::filesystem::path& path, const MeasurementFile& file) {
  auto os = open_out(path);
  os.write(kMeasurementMagic.data(), kMeasurementMagic.size());
  os.write(reinterpret_cast<const char*>(&kMeasurementVersion), sizeof kMeasurementVersion);
  put_u64(os, static_cast<std::uint64_t>(file.height));
  put_u64(os, static_cast<std::uint64_t>(file.width));
  put_u64(os, static_cast<std::uint64_t>(file.block_side));
  put_u64(os, static_cast<std::uint64_t>(file.measurements.block_rows()));
  put_u64(os, file.seed);
  put_f64(os, file.measurements.subrate);
  const auto b = file.measurements.concatenated();
  for (Index i = 0; i < b.size(); ++i) put_f64(os, b[i]);
  if (!os) throw IoError(path.string() + ": write failed");
}

MeasurementFile read_measurements(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  if (!is.read(magic.data(), magic.size()) || magic != kMeasurementMagic) {
    throw IoError(path.string() + ": not a measurement file");
  }
  if (!is.read(reinterpret_cast<char*>(&version), sizeof version) || version != kMeasurementVersion) {
    throw IoError(path.string() + ": unsupported measurement file version");
  }
  MeasurementFile file;
  file.height = static_cast<Index>(get_u64(is, path));
  file.width = static_cast<Index>(get_u64(is, path));
  file.block_side = static_cast<Index>(get_u64(is, path));
  const auto m = static_cast<Index>(get_u64(is, path));
  file.seed = get_u64(is, path);
  const double subrate = get_f64(is, path);
  BlockGeometry geom;
  try {
    geom = BlockGeometry::for_image(file.height, file.width, file.block_side);
  } catch (const GeometryError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (m <= 0 || m > geom.block_length()) throw IoError(path.string() + ": bad measurement count");
  VectorXd b(m * geom.block_count());
  for (Index i = 0; i < b.size(); ++i) b[i] = get_f64(is, path);
  file.measurements = Measurements::from_concatenated(b, m, subrate);
  return file;
}

}  // namespace bcs
