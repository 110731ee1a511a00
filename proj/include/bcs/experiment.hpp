#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bcs/dcvs.hpp"
#include "bcs/image_io.hpp"

namespace bcs {

enum class Method { mbtv, mbtv_nllm, gst, lst, cst, dcvs };

const char* to_string(Method m);
Method parse_method(const std::string& name);

enum class ScopeKind { frame, per_block, multi_block };

struct ExperimentConfig {
  std::vector<std::filesystem::path> inputs;
  Index block_side = 32;
  std::vector<double> subrates{0.1, 0.2, 0.3, 0.4};
  Method method = Method::mbtv_nllm;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  ScopeKind scope = ScopeKind::frame;
  Index scope_span = 2;
  CstParams refine;  // refine.tv holds the TV and NLM settings
  DcvsConfig video;  // nonkey_subrate comes from `subrates`

  // Raw video input; a directory input is read as numbered PGM frames.
  Index raw_width = 176;
  Index raw_height = 144;
  RawLayout raw_layout = RawLayout::yuv420;
  std::size_t max_frames = 0;

  void validate() const;
  GradientScope gradient_scope() const;
};

/// Parses `key = value` lines; '#' starts a comment and list values are
/// comma separated. Unknown keys and malformed values are errors that name
/// the line.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Applies one key/value pair; used by the parser and by command-line overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ResultRow {
  std::string input;
  Method method = Method::mbtv_nllm;
  Index block_side = 0;
  double subrate = 0.0;
  std::uint64_t seed = 0;
  double psnr = 0.0;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;  // written to timing.csv only
};

/// Recovers one still image with the configured method.
RecoveryResult recover_image(const Measurements& b, const SensingOperator& op, const BlockGeometry& geom,
                             Method method, const ExperimentConfig& cfg, const ImageXd* ground_truth = nullptr);

/// Runs every (input, subrate) cell, writes results.csv (deterministic for a
/// given seed) and timing.csv into the output directory, and for DCVS one
/// report per cell.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_timing_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

/// Frames from a directory of PGMs or a raw planar file.
std::vector<ImageXd> load_sequence(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace bcs
