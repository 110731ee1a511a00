#include "bcs/metrics.hpp"

#include <fstream>

#include "bcs/csv.hpp"

namespace bcs {

void ConvergenceTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "iteration,objective,misfit,rel_change,psnr\n";
  for (const auto& r : records) {
    os << r.iteration << ',' << format_number(r.objective) << ',' << format_number(r.misfit) << ','
       << format_number(r.rel_change) << ',' << format_number(r.psnr) << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace bcs
