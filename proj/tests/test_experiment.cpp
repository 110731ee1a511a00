#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcs/csv.hpp"
#include "bcs/experiment.hpp"
#include "bcs/synthetic.hpp"

using namespace bcs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(
      "# comment\n"
      "block_size = 16\n"
      "subrates = 0.1, 0.3\n"
      "method = cst   # trailing comment\n"
      "seed = 9\n"
      "gradient_scope = multi_block\n"
      "scope_span = 3\n"
      "tau = auto\n"
      "nlm_smoothing = 0.05\n"
      "gop_size = 4\n");
  CHECK(cfg.block_side == 16);
  CHECK(cfg.subrates == std::vector<double>{0.1, 0.3});
  CHECK(cfg.method == Method::cst);
  CHECK(cfg.seed == 9);
  CHECK_FALSE(cfg.refine.tau.has_value());
  CHECK_FALSE(cfg.video.nonkey.tau.has_value());
  CHECK(cfg.refine.tv.nlm.smoothing == 0.05);
  CHECK(cfg.video.gop.gop_size == 4);
  const auto scope = cfg.gradient_scope();
  CHECK(scope.mode == GradientScope::Mode::multi_block);
  CHECK(scope.span == 3);
}

TEST_CASE("config errors name the line") {
  const auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("seed = 1\nfoo = 2\n").find("line 2") != std::string::npos);
  CHECK(message("block_size = x\n").find("line 1") != std::string::npos);
  CHECK(message("\n\nmethod\n").find("line 3") != std::string::npos);
  CHECK(message("method = fancy\n").find("fancy") != std::string::npos);
  ExperimentConfig bad;
  bad.subrates = {1.2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), IoError);
}

TEST_CASE("number format") {
  CHECK(format_number(26.130000001) == "26.13");
  CHECK(format_number(1234567.0) == "1.23457e+06");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(std::nan("")).empty());
}

TEST_CASE("experiment output is deterministic") {
  const fs::path dir = fs::temp_directory_path() / "bcs_experiment_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_pgm(dir / "img.pgm", synthetic::piecewise_constant(32, 32, 2));
  ExperimentConfig cfg;
  cfg.inputs = {dir / "img.pgm"};
  cfg.block_side = 16;
  cfg.subrates = {0.3};
  cfg.method = Method::mbtv;
  cfg.output_dir = dir / "a";
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].psnr > 15.0);
  cfg.output_dir = dir / "b";
  run_experiment(cfg);
  const std::string a = slurp(dir / "a" / "results.csv");
  CHECK(a == slurp(dir / "b" / "results.csv"));
  CHECK(a.rfind("input,method,block_size,subrate,seed,psnr,iterations,converged,fsim\n", 0) == 0);
  CHECK(slurp(dir / "a" / "timing.csv").rfind("input,method,block_size,subrate,seconds\n", 0) == 0);
  CHECK(fs::exists(dir / "a" / "img_0.3_mbtv.pgm"));
  fs::remove_all(dir);
}

TEST_CASE("method names") {
  CHECK(parse_method("mbtv-nllm") == Method::mbtv_nllm);
  CHECK(std::string(to_string(Method::dcvs)) == "dcvs");
  CHECK_THROWS_AS(parse_method("tv"), InvalidArgument);
}
