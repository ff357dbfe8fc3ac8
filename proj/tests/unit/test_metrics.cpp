#include <doctest.h>

#include <vector>

#include "cssdf/errors.hpp"
#include "cssdf/metrics.hpp"

using namespace cssdf;

TEST_CASE("false positive rate counts band samples predicted colliding") {
  const std::vector<double> truth{0.01, 0.02, 0.03, 0.04, 0.5};
  const std::vector<double> pred{-0.01, 0.02, -0.2, 0.01, -0.3};
  const FprResult r = fpr(pred, truth, 0.05);
  CHECK(r.band_count == 4);
  CHECK(r.false_positives == 2);
  REQUIRE(r.percent.has_value());
  CHECK(*r.percent == doctest::Approx(50.0));
}

TEST_CASE("an empty band yields an undefined rate") {
  const std::vector<double> truth{0.5, -0.2}, pred{0.5, -0.2};
  const FprResult r = fpr(pred, truth, 0.05);
  CHECK_FALSE(r.percent.has_value());
  EvalReport rep;
  rep.fpr = r.percent;
  CHECK(rep.to_text().find("fpr,N/A") != std::string::npos);
}

TEST_CASE("gradient similarity and mean error") {
  const std::vector<Eigen::VectorXd> truth{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)};
  const std::vector<Eigen::VectorXd> pred{Eigen::Vector2d(2, 0), Eigen::Vector2d(0, -1), Eigen::Vector2d(0, 0)};
  CHECK(grad_similarity(pred, truth) == doctest::Approx(0.0));
  const std::vector<Eigen::VectorXd> zero_truth{Eigen::Vector2d(0, 0)};
  const std::vector<Eigen::VectorXd> one{Eigen::Vector2d(1, 0)};
  CHECK_THROWS(grad_similarity(one, zero_truth));
  const std::vector<double> a{1.0, 2.0}, b{1.5, 1.0};
  CHECK(mean_absolute_error(a, b) == doctest::Approx(0.75));
}

TEST_CASE("evaluating stored labels against themselves is exact") {
  Dataset d;
  d.dof = 2;
  d.point_dim = 2;
  std::vector<double> values;
  std::vector<Eigen::VectorXd> grads;
  for (double v : {0.01, -0.03, 0.4}) {
    FieldSample s;
    s.q = Eigen::Vector2d(v, 0);
    s.value = v;
    s.label = v < 0;
    s.grad = Eigen::Vector2d(0.6, 0.8);
    d.samples.push_back(s);
    values.push_back(v);
    grads.push_back(s.grad);
  }
  const EvalReport rep = evaluate_predictions(d, values, grads);
  CHECK(rep.mae == 0.0);
  CHECK(rep.grad_similarity == doctest::Approx(1.0));
  REQUIRE(rep.fpr.has_value());
  CHECK(*rep.fpr == 0.0);
  CHECK(rep.fpr_band_count == 2);
  CHECK(rep.samples == 3);
}

TEST_CASE("reference predictors") {
  const std::vector<double> truth{0.01, 0.02, 0.04, 0.03};
  std::vector<double> flipped;
  for (double t : truth) flipped.push_back(-t);
  CHECK(*fpr(truth, truth).percent == 0.0);
  CHECK(*fpr(flipped, truth).percent == doctest::Approx(100.0));

  const std::vector<Eigen::VectorXd> g{Eigen::Vector2d(0.3, -0.4), Eigen::Vector2d(1, 2)};
  std::vector<Eigen::VectorXd> opposite, orthogonal;
  for (const auto& v : g) {
    opposite.push_back(-v);
    orthogonal.push_back(Eigen::Vector2d(-v[1], v[0]));
  }
  CHECK(grad_similarity(g, g) == doctest::Approx(1.0));
  CHECK(grad_similarity(opposite, g) == doctest::Approx(-1.0));
  CHECK(grad_similarity(orthogonal, g) == doctest::Approx(0.0));
}
