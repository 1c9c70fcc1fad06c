#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ppcl/losses.hpp"

using namespace ppcl;

namespace {

using Mat = TinyLM<double>::Mat;

constexpr double kLn2 = 0.6931471805599453;
constexpr double kLn4 = 1.3862943611198906;

Eigen::VectorXd dist(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (const double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("cross entropy basics") {
  Mat dists(3, 4);
  dists << 1, 0, 0, 0,
           0.25, 0.25, 0.25, 0.25,
           0, 1, 0, 0;
  const std::vector<int> targets = {0, 2, 1};

  SECTION("certain prediction scores zero") {
    CHECK(cross_entropy<double>(dists, targets, {1, 0, 1}) == 0.0);
  }
  SECTION("uniform over four masks to ln 4") {
    CHECK_THAT(cross_entropy<double>(dists, targets, {0, 1, 0}),
               Catch::Matchers::WithinAbs(kLn4, 1e-12));
  }
  SECTION("masked-out distributions are irrelevant") {
    Mat noisy = dists;
    noisy.row(0) << 0.7, 0.1, 0.1, 0.1;
    CHECK(cross_entropy<double>(noisy, targets, {0, 1, 0}) ==
          cross_entropy<double>(dists, targets, {0, 1, 0}));
  }
  SECTION("empty mask is an error") {
    CHECK_THROWS_AS(cross_entropy<double>(dists, targets, {0, 0, 0}), FormatError);
  }
  SECTION("misaligned inputs are an error") {
    CHECK_THROWS_AS(cross_entropy<double>(dists, {1, 2}, {1, 0}), FormatError);
  }
}

TEST_CASE("js divergence properties") {
  SECTION("identity") {
    const auto p = dist({0.2, 0.3, 0.5});
    CHECK_THAT(js_divergence(p, p), Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
  SECTION("disjoint support saturates at ln 2") {
    CHECK_THAT(js_divergence(dist({1, 0}), dist({0, 1})),
               Catch::Matchers::WithinAbs(kLn2, 1e-12));
  }
  SECTION("symmetry and range on random distribution pairs") {
    Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform(8));
      Eigen::VectorXd p(n), q(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = rng.uniform_real() + 1e-9;
        q(i) = rng.uniform_real() + 1e-9;
      }
      p /= p.sum();
      q /= q.sum();
      const double pq = js_divergence(p, q);
      CHECK_THAT(pq, Catch::Matchers::WithinAbs(js_divergence(q, p), 1e-12));
      CHECK(pq >= 0.0);
      CHECK(pq <= kLn2 + 1e-12);
      if (pq < 1e-9) {
        CHECK((p - q).cwiseAbs().maxCoeff() < 1e-3);
      }
    }
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(js_divergence(dist({1, 0}), dist({1, 0, 0})), FormatError);
    CHECK_THROWS_AS(js_divergence(dist({0.7, 0.7}), dist({0.5, 0.5})), FormatError);
    CHECK_THROWS_AS(js_divergence(dist({1.5, -0.5}), dist({0.5, 0.5})), FormatError);
  }
}

TEST_CASE("token-level consistency loss") {
  Mat clean(3, 2), pert(3, 2);
  clean << 1, 0,
           0.5, 0.5,
           1, 0;
  pert << 0, 1,
          0.5, 0.5,
          1, 0;

  SECTION("identical sequences score zero") {
    CHECK(token_js_loss<double>(clean, clean, {1, 1, 1}) == 0.0);
  }
  SECTION("a single masked position reduces to the plain divergence") {
    CHECK_THAT(token_js_loss<double>(clean, pert, {1, 0, 0}),
               Catch::Matchers::WithinAbs(js_divergence(clean.row(0), pert.row(0)), 1e-15));
  }
  SECTION("mean of per-position divergences") {
    // positions contribute ln 2 and 0
    CHECK_THAT(token_js_loss<double>(clean, pert, {1, 0, 1}),
               Catch::Matchers::WithinAbs(kLn2 / 2, 1e-12));
  }
  SECTION("swapping sides changes nothing") {
    CHECK_THAT(token_js_loss<double>(clean, pert, {1, 1, 1}),
               Catch::Matchers::WithinAbs(token_js_loss<double>(pert, clean, {1, 1, 1}), 1e-15));
  }
  SECTION("length mismatch is the paraphrase misuse signal") {
    Mat longer(4, 2);
    longer << 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK_THROWS_WITH(token_js_loss<double>(clean, longer, {1, 1, 1}),
                      Catch::Matchers::ContainsSubstring("length mismatch"));
  }
}

TEST_CASE("averaged-distribution consistency loss") {
  SECTION("constant distributions of unequal lengths score zero") {
    Mat clean(2, 3), pert(5, 3);
    for (Eigen::Index r = 0; r < clean.rows(); ++r) clean.row(r) << 0.2, 0.3, 0.5;
    for (Eigen::Index r = 0; r < pert.rows(); ++r) pert.row(r) << 0.2, 0.3, 0.5;
    const double got = mean_dist_js_loss<double>(clean, {1, 1}, pert, {1, 1, 1, 1, 1});
    CHECK_THAT(got, Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("identical equal-length sequences score zero") {
    Mat clean(2, 2);
    clean << 0.9, 0.1, 0.3, 0.7;
    CHECK_THAT(mean_dist_js_loss<double>(clean, {1, 1}, clean, {1, 1}),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("opposed means saturate at ln 2") {
    Mat clean(1, 2), pert(2, 2);
    clean << 1, 0;
    pert << 0, 1, 0, 1;
    CHECK_THAT(mean_dist_js_loss<double>(clean, {1}, pert, {1, 1}),
               Catch::Matchers::WithinAbs(kLn2, 1e-12));
  }
  SECTION("swap invariance") {
    Mat clean(2, 2), pert(3, 2);
    clean << 0.9, 0.1, 0.4, 0.6;
    pert << 0.2, 0.8, 0.5, 0.5, 0.7, 0.3;
    CHECK_THAT(mean_dist_js_loss<double>(clean, {1, 1}, pert, {1, 1, 1}),
               Catch::Matchers::WithinAbs(
                   mean_dist_js_loss<double>(pert, {1, 1, 1}, clean, {1, 1}), 1e-15));
  }
  SECTION("empty mask on either side is an error") {
    Mat m(1, 2);
    m << 1, 0;
    CHECK_THROWS_AS(mean_dist_js_loss<double>(m, {0}, m, {1}), FormatError);
    CHECK_THROWS_AS(mean_dist_js_loss<double>(m, {1}, m, {0}), FormatError);
  }
}

TEST_CASE("combined objective is the weighted sum") {
  CHECK(combined_loss(0.7, 123.0, 456.0, {1, 0, 0}) == 0.7);
  CHECK_THAT(combined_loss(0.5, 0.3, 0.2, {1, 1, 1}), Catch::Matchers::WithinAbs(1.0, 1e-15));
  // ablation weightings used by the experiment harness
  CHECK_THAT(combined_loss(0.5, 0.3, 0.2, {1, 0, 1}), Catch::Matchers::WithinAbs(0.7, 1e-15));
  CHECK_THAT(combined_loss(0.5, 0.3, 0.2, {1, 1, 0}), Catch::Matchers::WithinAbs(0.8, 1e-15));
  CHECK_THROWS_AS(LossWeights({0, 0, 0}).validate(), FormatError);
}
