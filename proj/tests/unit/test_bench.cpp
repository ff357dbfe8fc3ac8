#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "cssdf/bench.hpp"
#include "cssdf/svg_plot.hpp"

using namespace cssdf;

TEST_CASE("decade scales") {
  const auto s = decade_scales(3);
  REQUIRE(s.size() == 4);
  CHECK(s.front() == 1);
  CHECK(s.back() == 1000);
}

TEST_CASE("latency table shape and csv header") {
  const RobotModel robot = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  FieldNetConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 32;
  const FieldModel model = FieldModel::for_robot(robot, cfg, 1);
  const auto rows = latency_bench(model, {1, 10, 100, 10000}, 3);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.dist_ms > 0.0);
    CHECK(r.grad_ms > 0.0);
  }
  CHECK(rows.back().dist_ms > rows.front().dist_ms);
  CHECK(rows.back().grad_ms >= rows.back().dist_ms);
  const std::string path = "latency_test.csv";
  save_latency_csv(rows, path);
  const CsvTable t = read_csv(path);
  std::remove(path.c_str());
  CHECK(t.header == std::vector<std::string>{"scale", "dist_ms", "dist_grad_ms"});
  CHECK(t.column("scale").size() == 4);
}

TEST_CASE("oracle test set is labelled and banded") {
  const RobotModel robot = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  AblationOptions opts;
  opts.test_uniform = 200;
  opts.test_band = 100;
  opts.grid_cells = 201;
  const Dataset d = oracle_test_set(robot, opts);
  CHECK(d.size() == 300);
  int band = 0;
  for (const auto& s : d.samples) {
    CHECK(sample_is_consistent(s));
    band += std::abs(s.value) <= 0.05;
  }
  CHECK(band >= 100);
}

TEST_CASE("an ablation variant is reproducible and the data ratios follow the strategy") {
  const RobotModel robot = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  AblationOptions opts;
  opts.samples = 1500;
  opts.epochs = 2;
  opts.net.hidden_layers = 2;
  opts.net.width = 16;
  opts.test_uniform = 200;
  opts.test_band = 50;
  std::vector<AblationVariant> variants(2);
  variants[0].name = "uniform";
  variants[0].balance = variants[0].mine = false;
  variants[1].name = "complete";
  const auto a = ablation_run(robot, variants, opts);
  const auto b = ablation_run(robot, variants, opts);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].report.mae == b[i].report.mae);
    CHECK(a[i].report.grad_similarity == b[i].report.grad_similarity);
    CHECK(a[i].final_val_loss == b[i].final_val_loss);
  }
  CHECK(a[0].report.bsr < 1.0);
  CHECK(a[1].report.bsr > 10.0);
}

TEST_CASE("plots render and reject unknown columns") {
  LinePlot plot;
  plot.title = "t";
  plot.log_x = true;
  plot.series.push_back({"a", {1, 10, 100}, {1, 2, 3}});
  const std::string svg = plot.to_svg();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  std::ofstream("plot_test.csv") << "x,y\n1,2\n3,4\n";
  const CsvTable t = read_csv("plot_test.csv");
  std::remove("plot_test.csv");
  CHECK(t.column("y")[1] == 4.0);
  CHECK_THROWS(t.column("z"));
}
