#include "bcs/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "bcs/csv.hpp"

namespace bcs {

const char* to_string(Method m) {
  switch (m) {
    case Method::mbtv:
      return "mbtv";
    case Method::mbtv_nllm:
      return "mbtv-nllm";
    case Method::gst:
      return "gst";
    case Method::lst:
      return "lst";
    case Method::cst:
      return "cst";
    case Method::dcvs:
      return "dcvs";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::mbtv, Method::mbtv_nllm, Method::gst, Method::lst, Method::cst, Method::dcvs}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown method '" + name + "' (expected mbtv, mbtv-nllm, gst, lst, cst or dcvs)");
}

void ExperimentConfig::validate() const {
  if (block_side < 1) throw InvalidArgument("block size must be positive");
  if (subrates.empty()) throw InvalidArgument("no subrates given");
  for (double s : subrates) {
    if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("subrate " + format_number(s) + " is outside (0, 1]");
  }
  if (scope == ScopeKind::multi_block && scope_span < 1) throw InvalidArgument("scope span must be positive");
  refine.validate();
  video.validate();
}

GradientScope ExperimentConfig::gradient_scope() const {
  switch (scope) {
    case ScopeKind::per_block:
      return GradientScope::per_block(block_side);
    case ScopeKind::multi_block:
      return GradientScope::multi_block(block_side, scope_span);
    case ScopeKind::frame:
      break;
  }
  return GradientScope::frame();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw InvalidArgument(key + ": '" + v + "' is not a number");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw InvalidArgument(key + ": '" + v + "' is not an integer");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument(key + ": '" + v + "' is not a boolean");
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto& tv = cfg.refine.tv;
  const auto num = [&] { return to_double(key, value); };
  const auto integer = [&] { return to_integer(key, value); };
  if (key == "inputs") {
    cfg.inputs.clear();
    for (const auto& p : split_list(value)) cfg.inputs.emplace_back(p);
  } else if (key == "block_size") {
    cfg.block_side = integer();
  } else if (key == "subrates") {
    cfg.subrates.clear();
    for (const auto& s : split_list(value)) cfg.subrates.push_back(to_double(key, s));
  } else if (key == "method") {
    cfg.method = parse_method(value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(integer());
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "gradient_scope") {
    if (value == "frame") cfg.scope = ScopeKind::frame;
    else if (value == "per_block") cfg.scope = ScopeKind::per_block;
    else if (value == "multi_block") cfg.scope = ScopeKind::multi_block;
    else throw InvalidArgument(key + ": expected frame, per_block or multi_block");
  } else if (key == "scope_span") {
    cfg.scope_span = integer();
  } else if (key == "beta") {
    tv.beta = num();
  } else if (key == "mu") {
    tv.mu = num();
  } else if (key == "inner_tol") {
    tv.inner_tol = num();
  } else if (key == "outer_tol") {
    tv.outer_tol = num();
  } else if (key == "max_outer") {
    tv.max_outer = static_cast<int>(integer());
  } else if (key == "max_inner") {
    tv.max_inner = static_cast<int>(integer());
  } else if (key == "nlm_patch") {
    tv.nlm.patch_side = integer();
  } else if (key == "nlm_search") {
    tv.nlm.search_side = integer();
  } else if (key == "nlm_smoothing") {
    tv.nlm.smoothing = num();
  } else if (key == "intensity_scale") {
    tv.intensity_scale = num();
  } else if (key == "mu1") {
    cfg.refine.mu1 = num();
  } else if (key == "refine_tol") {
    cfg.refine.tol = num();
    cfg.video.nonkey.tol = cfg.refine.tol;
  } else if (key == "refine_iterations") {
    cfg.refine.max_iterations = static_cast<int>(integer());
    cfg.video.nonkey.max_iterations = cfg.refine.max_iterations;
  } else if (key == "tau") {
    if (value == "auto") cfg.refine.tau.reset();
    else cfg.refine.tau = num();
    cfg.video.nonkey.tau = cfg.refine.tau;
  } else if (key == "threshold_factor") {
    cfg.refine.threshold_factor = num();
    cfg.video.nonkey.threshold_factor = cfg.refine.threshold_factor;
  } else if (key == "tau_decay") {
    cfg.refine.tau_decay = num();
  } else if (key == "u_solve") {
    if (value == "exact") cfg.refine.u_solve = USolve::exact;
    else if (value == "steepest") cfg.refine.u_solve = USolve::steepest;
    else throw InvalidArgument(key + ": expected exact or steepest");
    cfg.video.nonkey.u_solve = cfg.refine.u_solve;
  } else if (key == "patch_side" || key == "group_size" || key == "patch_stride" || key == "search_window") {
    auto& p = cfg.refine.patch;
    const Index v = integer();
    if (key == "patch_side") p.patch_side = v;
    else if (key == "group_size") p.group_size = v;
    else if (key == "patch_stride") p.stride = v;
    else p.search_window = v;
    cfg.video.nonkey.patch = p;
  } else if (key == "gop_size") {
    cfg.video.gop.gop_size = integer();
  } else if (key == "key_subrate") {
    cfg.video.key_subrate = num();
  } else if (key == "tau2") {
    cfg.video.tau2 = num();
  } else if (key == "mu2") {
    cfg.video.nonkey.mu2 = num();
  } else if (key == "mu3") {
    cfg.video.nonkey.mu3 = num();
  } else if (key == "mh_radius") {
    cfg.video.nonkey.mh.search_radius = integer();
  } else if (key == "mh_weight") {
    cfg.video.nonkey.mh.tikhonov_weight = num();
  } else if (key == "si_refresh") {
    cfg.video.nonkey.si_refresh = static_cast<int>(integer());
  } else if (key == "raw_width") {
    cfg.raw_width = integer();
  } else if (key == "raw_height") {
    cfg.raw_height = integer();
  } else if (key == "raw_layout") {
    if (value == "luma") cfg.raw_layout = RawLayout::luma_only;
    else if (value == "yuv420") cfg.raw_layout = RawLayout::yuv420;
    else throw InvalidArgument(key + ": expected luma or yuv420");
  } else if (key == "max_frames") {
    cfg.max_frames = static_cast<std::size_t>(integer());
  } else if (key == "nonlocal_multiplier") {
    tv.nonlocal_multiplier = to_bool(key, value);
  } else {
    throw InvalidArgument("unknown configuration key '" + key + "'");
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(number) + ": expected key = value");
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw InvalidArgument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const Error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

RecoveryResult recover_image(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                             Method method, const ExperimentConfig& cfg, const ImageXd* ground_truth) {
  CstParams params = cfg.refine;
  params.tv.scope = cfg.gradient_scope();
  switch (method) {
    case Method::mbtv:
      params.tv.nonlocal_multiplier = false;
      return solve_mbtv_nllm(b, op, geom, params.tv, ground_truth);
    case Method::mbtv_nllm:
      return solve_mbtv_nllm(b, op, geom, params.tv, ground_truth);
    case Method::gst:
    case Method::lst:
    case Method::cst:
      params.mode = method == Method::gst ? RefineMode::gst : method == Method::lst ? RefineMode::lst : RefineMode::cst;
      return solve_refined(b, op, geom, params, ground_truth);
    case Method::dcvs:
      break;
  }
  throw InvalidArgument("dcvs is a video method; use run_dcvs");
}

std::vector<ImageXd> load_sequence(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  if (std::filesystem::is_directory(path)) return read_pgm_sequence(path, cfg.max_frames);
  return read_raw_luma(path, cfg.raw_width, cfg.raw_height, cfg.raw_layout, cfg.max_frames);
}

namespace {

std::string cell_name(const std::filesystem::path& input, double subrate) {
  return input.stem().string() + "_" + format_number(subrate);
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.inputs.empty()) throw InvalidArgument("no inputs given");
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<ResultRow> rows;
  for (const auto& input : cfg.inputs) {
    if (cfg.method == Method::dcvs) {
      const auto sequence = load_sequence(input, cfg);
      for (double subrate : cfg.subrates) {
        DcvsConfig video = cfg.video;
        video.nonkey_subrate = subrate;
        video.block_side = cfg.block_side;
        video.key_seed = cfg.seed;
        video.nonkey_seed = cfg.seed + 1;
        video.key = cfg.refine;
        const auto t0 = std::chrono::steady_clock::now();
        const DcvsResult res = run_dcvs(sequence, video);
        ResultRow row{input.string(), cfg.method, cfg.block_side, subrate, cfg.seed};
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double sum = 0.0;
        int count = 0;
        for (const auto& r : res.report) {
          row.iterations += r.iterations;
          if (!r.key) {
            sum += r.psnr;
            ++count;
          }
        }
        row.psnr = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
        row.converged = true;
        res.write_report_csv(cfg.output_dir / ("dcvs_" + cell_name(input, subrate) + ".csv"));
        rows.push_back(row);
      }
      continue;
    }
    const ImageXd img = read_pgm(input);
    const auto geom = BlockGeometry::for_image(img.height(), img.width(), cfg.block_side);
    for (double subrate : cfg.subrates) {
      const Index n = geom.block_length();
      const auto op = make_gaussian_operator(measurements_for_subrate(subrate, n), n, cfg.seed);
      const auto t0 = std::chrono::steady_clock::now();
      const Measurements b = sense(img, op, geom);
      const RecoveryResult r = recover_image(b, op, geom, cfg.method, cfg);
      ResultRow row{input.string(), cfg.method, cfg.block_side, subrate, cfg.seed};
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const ImageXd out = r.image.clamped();
      row.psnr = psnr(img, out);
      row.iterations = r.trace.iterations();
      row.converged = r.trace.converged;
      write_pgm(cfg.output_dir / (cell_name(input, subrate) + "_" + to_string(cfg.method) + ".pgm"), out);
      rows.push_back(row);
    }
  }
  write_results_csv(cfg.output_dir / "results.csv", rows);
  write_timing_csv(cfg.output_dir / "timing.csv", rows);
  return rows;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "input,method,block_size,subrate,seed,psnr,iterations,converged,fsim\n";
  for (const auto& r : rows) {
    os << r.input << ',' << to_string(r.method) << ',' << r.block_side << ',' << format_number(r.subrate) << ','
       << r.seed << ',' << format_number(r.psnr) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ",\n";
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "input,method,block_size,subrate,seconds\n";
  for (const auto& r : rows) {
    os << r.input << ',' << to_string(r.method) << ',' << r.block_side << ',' << format_number(r.subrate) << ','
       << format_number(r.seconds) << '\n';
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace bcs
