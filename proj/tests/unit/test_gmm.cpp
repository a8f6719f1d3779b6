#include <cmath>
#include <random>

#include "docqa/error.hpp"
#include "docqa/gmm.hpp"
#include "doctest.h"
#include "test_support.hpp"

using docqa::Vector;

TEST_CASE("single component is the sample mean and variance") {
  std::mt19937_64 rng(1);
  const auto xs = testsupport::gaussian_samples(200, 3, 2.0, 1.5, rng);
  const auto fit = docqa::fit_gmm(xs, 1);
  Vector mean(3, 0.0), var(3, 0.0);
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < 3; ++j) mean[j] += x[j] / 200.0;
  }
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < 3; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]) / 200.0;
  }
  CHECK(fit.model.weights[0] == doctest::Approx(1.0));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(fit.model.means[0][j] == doctest::Approx(mean[j]).epsilon(1e-10));
    CHECK(fit.model.variances[0][j] == doctest::Approx(var[j]).epsilon(1e-10));
  }
}

TEST_CASE("two separated clusters are recovered") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> xs;
  for (int i = 0; i < 400; ++i) {
    const double c = i % 2 == 0 ? 10.0 : -10.0;
    xs.push_back({c + g(rng), g(rng), g(rng)});
  }
  const auto fit = docqa::fit_gmm(xs, 2, {.seed = 4});
  const auto& m = fit.model;
  const std::size_t pos = m.means[0][0] > 0 ? 0 : 1;
  CHECK(std::abs(m.means[pos][0] - 10.0) < 0.2);
  CHECK(std::abs(m.means[1 - pos][0] + 10.0) < 0.2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(m.weights[i] - 0.5) < 0.05);
    CHECK(std::abs(m.means[i][1]) < 0.2);
  }
}

TEST_CASE("property: EM log-likelihood never decreases") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vector> xs = testsupport::gaussian_samples(100, 4, 0.0, 1.0, rng);
    auto more = testsupport::gaussian_samples(60, 4, 3.0, 0.5, rng);
    xs.insert(xs.end(), more.begin(), more.end());
    const auto fit = docqa::fit_gmm(xs, 4, {.max_iter = 60, .tol = 0.0, .seed = seed});
    REQUIRE(fit.log_likelihood_trace.size() == static_cast<std::size_t>(fit.iterations) + 1);
    for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
      REQUIRE(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-9);
    }
    CHECK(fit.log_likelihood_trace.back() == doctest::Approx(docqa::log_likelihood(fit.model, xs)).epsilon(1e-12));
  }
}

TEST_CASE("fit is reproducible for a seed") {
  std::mt19937_64 rng(3);
  const auto xs = testsupport::gaussian_samples(120, 5, 0.0, 1.0, rng);
  const auto a = docqa::fit_gmm(xs, 3, {.seed = 11});
  const auto b = docqa::fit_gmm(xs, 3, {.seed = 11});
  CHECK(docqa::gmm_to_json(a.model) == docqa::gmm_to_json(b.model));
  CHECK(a.log_likelihood_trace == b.log_likelihood_trace);
}

TEST_CASE("degenerate data keeps variances above the floor") {
  std::vector<Vector> xs(30, Vector{1.0, 2.0});
  for (int i = 0; i < 10; ++i) xs.push_back({1.0 + i, 2.0});
  const auto fit = docqa::fit_gmm(xs, 3);
  for (const auto& v : fit.model.variances) {
    for (double x : v) CHECK(x >= fit.variance_floor);
  }
  double total = 0;
  for (double w : fit.model.weights) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_NOTHROW(docqa::validate_gmm(fit.model));
}

TEST_CASE("fit errors") {
  std::mt19937_64 rng(4);
  const auto xs = testsupport::gaussian_samples(3, 2, 0.0, 1.0, rng);
  CHECK_THROWS_AS(docqa::fit_gmm(xs, 4), docqa::ModelError);
  auto bad = xs;
  bad[1][0] = NAN;
  CHECK_THROWS_AS(docqa::fit_gmm(bad, 2), docqa::ModelError);
}

TEST_CASE("posterior examples") {
  docqa::GmmModel one{{1.0}, {{0.0, 0.0}}, {{1.0, 1.0}}};
  CHECK(docqa::posterior(one, Vector{5.0, -3.0})[0] == 1.0);

  docqa::GmmModel two{{0.5, 0.5}, {{-20.0}, {20.0}}, {{1.0}, {1.0}}};
  CHECK(docqa::posterior(two, Vector{-20.0})[0] > 0.999);
  const Vector mid = docqa::posterior(two, Vector{0.0});
  CHECK(std::abs(mid[0] - 0.5) < 1e-9);
  CHECK(std::abs(mid[1] - 0.5) < 1e-9);
}

TEST_CASE("log density of a standard normal at its mean") {
  docqa::GmmModel g{{1.0}, {{0.0}}, {{1.0}}};
  CHECK(docqa::log_density(g, Vector{0.0}) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(docqa::log_likelihood(g, std::vector<Vector>{}), docqa::ModelError);
}

TEST_CASE("property: responsibilities sum to one, even far from every component") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto g = testsupport::random_gmm(1 + t % 5, 1 + t % 4, rng);
    const auto x = testsupport::gaussian_samples(1, g.dim(), 0.0, t < 50 ? 1.0 : 1000.0, rng)[0];
    const Vector r = docqa::posterior(g, x);
    double s = 0;
    for (double v : r) {
      REQUIRE(v >= 0.0);
      s += v;
    }
    REQUIRE(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("model file round trip and validation") {
  std::mt19937_64 rng(6);
  const auto g = testsupport::random_gmm(3, 4, rng);
  testsupport::TempDir dir;
  docqa::save_gmm(g, dir.path() / "g.json");
  const auto back = docqa::load_gmm(dir.path() / "g.json");
  CHECK(back.fingerprint() == g.fingerprint());
  CHECK(back.weights == g.weights);

  docqa::write_file(dir.path() / "bad.json", R"({"K":1,"dim":1,"weights":[0.5],"means":[[0]],"variances":[[1]]})");
  CHECK_THROWS_AS(docqa::load_gmm(dir.path() / "bad.json"), docqa::ModelError);
  docqa::write_file(dir.path() / "neg.json", R"({"K":1,"dim":1,"weights":[1],"means":[[0]],"variances":[[-1]]})");
  CHECK_THROWS_AS(docqa::load_gmm(dir.path() / "neg.json"), docqa::ModelError);
}
