#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "bcs/csv.hpp"
#include "bcs/experiment.hpp"

namespace fs = std::filesystem;
using namespace bcs;

namespace {

struct CommonFlags {
  std::string method;
  double subrate = 0.0;
  Index block_size = 0;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--method", f.method, "mbtv, mbtv-nllm, gst, lst, cst or dcvs");
  cmd->add_option("--subrate", f.subrate, "measurement ratio m/n in (0, 1]");
  cmd->add_option("--block-size", f.block_size, "block side in pixels");
  cmd->add_option("--seed", f.seed, "sensing matrix seed");
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--set", f.set, "extra key=value override, repeatable");
}

ExperimentConfig build_config(const CLI::App* cmd, const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  if (cmd->count("--method")) cfg.method = parse_method(f.method);
  if (cmd->count("--subrate")) cfg.subrates = {f.subrate};
  if (cmd->count("--block-size")) cfg.block_side = f.block_size;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--out")) cfg.output_dir = f.out;
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int run_sense(const CLI::App* cmd, const CommonFlags& f, const std::string& image) {
  const ExperimentConfig cfg = build_config(cmd, f);
  const ImageXd img = read_pgm(image);
  const auto geom = BlockGeometry::for_image(img.height(), img.width(), cfg.block_side);
  const double subrate = cfg.subrates.front();
  const auto op = make_gaussian_operator(measurements_for_subrate(subrate, geom.block_length()),
                                         geom.block_length(), cfg.seed);
  fs::create_directories(cfg.output_dir);
  MeasurementFile file{img.height(), img.width(), cfg.block_side, cfg.seed, sense(img, op, geom)};
  write_measurements(cfg.output_dir / "measurements.bcsm", file);
  write_operator(cfg.output_dir / "operator.bin", op);
  std::cout << "m=" << op.rows() << " n=" << op.cols() << " blocks=" << geom.block_count() << " -> "
            << (cfg.output_dir / "measurements.bcsm").string() << '\n';
  return 0;
}

int run_recover(const CLI::App* cmd, const CommonFlags& f, const std::string& measurements,
                const std::string& operator_path, const std::string& reference) {
  ExperimentConfig cfg = build_config(cmd, f);
  if (cfg.method == Method::dcvs) throw InvalidArgument("recover works on still images; use the dcvs subcommand");
  const MeasurementFile file = read_measurements(measurements);
  const auto geom = BlockGeometry::for_image(file.height, file.width, file.block_side);
  cfg.block_side = file.block_side;
  const SensingOperator op =
      operator_path.empty()
          ? make_gaussian_operator(file.measurements.block_rows(), geom.block_length(), file.seed)
          : read_operator(operator_path);
  ImageXd truth;
  if (!reference.empty()) truth = read_pgm(reference);
  const RecoveryResult r =
      recover_image(file.measurements, op, geom, cfg.method, cfg, reference.empty() ? nullptr : &truth);
  fs::create_directories(cfg.output_dir);
  write_pgm(cfg.output_dir / "recovered.pgm", r.image);
  r.trace.write_csv(cfg.output_dir / "trace.csv");
  std::cout << to_string(cfg.method) << ": " << r.trace.iterations() << " iterations"
            << (r.trace.converged ? " (converged)" : "");
  if (!reference.empty()) std::cout << ", PSNR " << format_number(psnr(truth, r.image.clamped())) << " dB";
  std::cout << '\n';
  return 0;
}

int run_dcvs_cmd(const CLI::App* cmd, const CommonFlags& f, const std::string& sequence) {
  ExperimentConfig cfg = build_config(cmd, f);
  if (!cmd->count("--block-size") && f.config.empty()) cfg.block_side = 16;
  const auto frames = load_sequence(sequence, cfg);
  DcvsConfig video = cfg.video;
  video.nonkey_subrate = cfg.subrates.front();
  video.block_side = cfg.block_side;
  video.key_seed = cfg.seed;
  video.nonkey_seed = cfg.seed + 1;
  video.key = cfg.refine;
  const DcvsResult res = run_dcvs(frames, video);
  fs::create_directories(cfg.output_dir);
  res.write_report_csv(cfg.output_dir / "report.csv");
  for (std::size_t k = 0; k < res.frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", k);
    write_pgm(cfg.output_dir / name, res.frames[k]);
  }
  std::cout << res.frames.size() << " frames -> " << (cfg.output_dir / "report.csv").string() << '\n';
  return 0;
}

int run_bench(const CLI::App* cmd, const CommonFlags& f, const std::vector<std::string>& inputs) {
  ExperimentConfig cfg = build_config(cmd, f);
  if (!inputs.empty()) cfg.inputs.assign(inputs.begin(), inputs.end());
  const auto rows = run_experiment(cfg);
  for (const auto& r : rows) {
    std::cout << r.input << " subrate " << format_number(r.subrate) << ": " << format_number(r.psnr) << " dB\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block compressive sensing and recovery"};
  app.require_subcommand(1);

  CommonFlags sense_flags, recover_flags, dcvs_flags, bench_flags;
  std::string image, measurements, operator_path, reference, sequence;
  std::vector<std::string> inputs;

  auto* sense_cmd = app.add_subcommand("sense", "sense a PGM image block by block");
  add_common(sense_cmd, sense_flags);
  sense_cmd->add_option("image", image, "input PGM")->required();

  auto* recover_cmd = app.add_subcommand("recover", "recover an image from a measurement file");
  add_common(recover_cmd, recover_flags);
  recover_cmd->add_option("measurements", measurements, "measurement file written by sense")->required();
  recover_cmd->add_option("--operator", operator_path, "operator file; regenerated from the seed when omitted");
  recover_cmd->add_option("--reference", reference, "ground-truth PGM for PSNR reporting");

  auto* dcvs_cmd = app.add_subcommand("dcvs", "sense and recover a video sequence");
  add_common(dcvs_cmd, dcvs_flags);
  dcvs_cmd->add_option("sequence", sequence, "directory of PGM frames or raw planar file")->required();

  auto* bench_cmd = app.add_subcommand("bench", "run an experiment grid and write results.csv");
  add_common(bench_cmd, bench_flags);
  bench_cmd->add_option("inputs", inputs, "input images or sequences (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sense_cmd) return run_sense(sense_cmd, sense_flags, image);
    if (*recover_cmd) return run_recover(recover_cmd, recover_flags, measurements, operator_path, reference);
    if (*dcvs_cmd) return run_dcvs_cmd(dcvs_cmd, dcvs_flags, sequence);
    if (*bench_cmd) return run_bench(bench_cmd, bench_flags, inputs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
