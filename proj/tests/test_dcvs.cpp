#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bcs/dcvs.hpp"
#include "bcs/metrics.hpp"
#include "bcs/synthetic.hpp"
#include "oracles.hpp"

using namespace bcs;
namespace fs = std::filesystem;

TEST_CASE("GOP indexing") {
  GopLayout g;
  CHECK(g.is_key(0));
  CHECK_FALSE(g.is_key(1));
  CHECK(g.is_key(86));
  CHECK(g.gop_of(87) == 43);
  CHECK(g.key_of(87) == 86);
  GopLayout g4{4};
  CHECK(g4.key_of(7) == 4);
  CHECK_FALSE(g4.is_key(6));
  GopLayout bad{0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("side information selection") {
  const auto truth = synthetic::textured(32, 32, 1);
  const auto geom = BlockGeometry::for_image(32, 32, 16);
  const auto op = make_gaussian_operator(measurements_for_subrate(0.1, 256), 256, 3);
  const auto b = sense(truth, op, geom);
  CHECK(si_score(b, truth, op, geom) == doctest::Approx(0.0).scale(1.0));

  const auto noisy = synthetic::with_gaussian_noise(truth, 20.0, 1);
  auto sel = select_si(b, {noisy, truth}, op, geom, 2.0);
  CHECK(sel.chosen == std::vector<std::size_t>{1});
  CHECK_FALSE(sel.averaged);
  CHECK(sel.frame.pixels() == truth.pixels());

  // two candidates close to the truth are averaged
  const auto a = synthetic::with_gaussian_noise(truth, 0.5, 2);
  const auto c = synthetic::with_gaussian_noise(truth, 0.5, 3);
  sel = select_si(b, {a, c}, op, geom, 2.0);
  CHECK(sel.averaged);
  CHECK((sel.frame.pixels() - 0.5 * (a.pixels() + c.pixels())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(select_si(b, {}, op, geom, 2.0), InvalidArgument);
}

TEST_CASE("multi-hypothesis prediction recovers an interior shift") {
  const auto f0 = synthetic::textured(64, 64, 3);
  const auto f1 = synthetic::shifted(f0, 1, 2);
  const auto geom = BlockGeometry::for_image(64, 64, 16);
  const auto op = make_gaussian_operator(measurements_for_subrate(0.1, 256), 256, 2);
  const auto pred = mh_predict(f0, sense(f1, op, geom), op, geom);
  // interior blocks have the shifted content inside the search window
  const auto err = (pred.pixels() - f1.pixels()).block(16, 16, 32, 32).cwiseAbs().maxCoeff();
  CHECK(err < 1e-6);
  MhParams p;
  p.tikhonov_weight = 0.0;
  const auto ls = mh_predict(f0, sense(f0, op, geom), op, geom, p);
  CHECK(psnr(f0, ls) > 25.0);
}

TEST_CASE("non-key direction and step match dense algebra") {
  std::mt19937_64 rng(13);
  const auto geom = BlockGeometry::for_image(8, 8, 4);
  const auto op = make_gaussian_operator(5, 16, 4);
  const MatrixXd phi = oracle::dense_frame_operator(op, geom);
  const VectorXd u = oracle::random_vector(64, rng);
  const VectorXd s = oracle::random_vector(64, rng);
  const VectorXd si = oracle::random_vector(64, rng);
  const VectorXd l2 = oracle::random_vector(64, rng);
  const VectorXd l3 = oracle::random_vector(64, rng);
  const VectorXd b = oracle::random_vector(20, rng);
  const double mu2 = 0.2;
  const double mu3 = 0.7;
  const VectorXd want = mu2 * (u - s - l2) + mu3 * (u - si - l3) - phi.transpose() * (b - phi * u);
  const VectorXd d = nonkey_direction(u, s, si, l2, l3, b, mu2, mu3, op, geom);
  CHECK(oracle::rel_err(d, want) <= 1e-12);
  const MatrixXd g = phi.transpose() * phi + (mu2 + mu3) * MatrixXd::Identity(64, 64);
  CHECK(nonkey_step_size(d, mu2, mu3, op, geom) == doctest::Approx(want.squaredNorm() / want.dot(g * want)).epsilon(1e-12));
}

TEST_CASE("static scene non-key frame matches the key frame") {
  const auto img = synthetic::piecewise_constant(32, 32, 5);
  DcvsConfig cfg;
  cfg.key.max_iterations = 3;
  cfg.nonkey.max_iterations = 3;
  const auto res = run_dcvs({img, img, img}, cfg);
  REQUIRE(res.report.size() == 3);
  CHECK(res.report[0].key);
  CHECK_FALSE(res.report[1].key);
  CHECK(res.report[2].key);
  CHECK(res.report[1].subrate == doctest::Approx(0.1).epsilon(0.05));
  CHECK(res.report[1].psnr > res.report[0].psnr - 1.0);

  const fs::path p = fs::temp_directory_path() / "bcs_dcvs_report.csv";
  res.write_report_csv(p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "frame,type,subrate,psnr,iterations,wall_time");
  std::string row;
  std::getline(in, row);
  CHECK(row.rfind("0,key,", 0) == 0);
  std::getline(in, row);
  CHECK(row.rfind("1,nonkey,", 0) == 0);
  fs::remove(p);
}

TEST_CASE("near-oracle side information") {
  const auto truth = synthetic::textured(64, 64, 9);
  const auto geom = BlockGeometry::for_image(truth, 16);
  const auto op = make_gaussian_operator(measurements_for_subrate(0.7, 256), 256, 5);
  NonkeyParams p;
  p.tau = 0.0;
  p.max_iterations = 3;
  const auto r = recover_nonkey(sense(truth, op, geom), op, geom, truth, p);
  CHECK(psnr(truth, r.image.clamped()) >= 40.0);
}

TEST_CASE("without the side-information term non-key recovery is the refinement") {
  const auto truth = synthetic::piecewise_constant(32, 32, 6);
  const auto geom = BlockGeometry::for_image(truth, 16);
  const auto op = make_gaussian_operator(measurements_for_subrate(0.3, 256), 256, 8);
  const auto b = sense(truth, op, geom);
  const auto start = synthetic::with_gaussian_noise(truth, 8.0, 2);
  NonkeyParams np;
  np.mu3 = 0.0;
  np.max_iterations = 4;
  CstParams cp;
  cp.mu1 = np.mu2;
  cp.max_iterations = 4;
  const auto a = recover_nonkey(b, op, geom, start, np);
  const auto c = refine_from(start, b, op, geom, cp);
  CHECK((a.image.pixels() - c.image.pixels()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("least-squares MH prediction is no worse than the best single hypothesis") {
  const auto f0 = synthetic::textured(32, 32, 2);
  const auto f1 = synthetic::with_gaussian_noise(synthetic::shifted(f0, 3, -2), 5.0, 1);
  const auto geom = BlockGeometry::for_image(f0, 16);
  const auto op = make_gaussian_operator(measurements_for_subrate(0.2, 256), 256, 3);
  const auto b = sense(f1, op, geom);
  MhParams p;
  p.search_radius = 3;
  p.tikhonov_weight = 0.0;
  const auto pred = mh_predict(f0, b, op, geom, p);
  MhParams single = p;
  single.search_radius = 0;
  const auto colocated = mh_predict(f0, b, op, geom, single);
  CHECK(si_score(b, pred, op, geom) <= si_score(b, colocated, op, geom) + 1e-9);
  // a huge weight drives the prediction to zero
  MhParams heavy;
  heavy.tikhonov_weight = 1e9;
  CHECK(mh_predict(f0, b, op, geom, heavy).pixels().cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("four-frame GOP layout") {
  const auto img = synthetic::piecewise_constant(32, 32, 3);
  DcvsConfig cfg;
  cfg.key.max_iterations = 1;
  cfg.nonkey.max_iterations = 1;
  cfg.key.tv.max_outer = 2;
  const auto res = run_dcvs({img, img, img, img}, cfg);
  REQUIRE(res.frames.size() == 4);
  CHECK(res.report[0].key);
  CHECK_FALSE(res.report[1].key);
  CHECK(res.report[2].key);
  CHECK_FALSE(res.report[3].key);
}
