#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pnn/taskgen.hpp"

using namespace pnn;

TEST_CASE("quadratic family values and parameter ranges", "[taskgen]") {
  GroundTruth t{Family::Quadratic, QuadraticParams{1.0, 0.0, 0.0}};
  double x;
  x = 0.0;
  REQUIRE(t.evaluate_row(&x) == 0.0);
  x = 1.0;
  REQUIRE(t.evaluate_row(&x) == 1.0);
  x = -1.0;
  REQUIRE(t.evaluate_row(&x) == 1.0);

  // Hand arithmetic: a=2, b=-1, c=0.5 at x=-1 gives 2*2.25-1 = 3.5.
  GroundTruth t2{Family::Quadratic, QuadraticParams{2.0, -1.0, 0.5}};
  x = -1.0;
  REQUIRE(t2.evaluate_row(&x) == Catch::Approx(3.5).margin(1e-15));

  const TaskSet set = gen_quadratic(10000, 1, 5);
  for (const TaskSample& task : set.tasks) {
    const auto& p = std::get<QuadraticParams>(task.truth.params);
    REQUIRE((p.a >= 1.0 && p.a <= 2.0));
    REQUIRE((p.b >= -1.0 && p.b <= 1.0));
    REQUIRE((p.c >= -0.5 && p.c <= 0.5));
    REQUIRE((task.x(0, 0) >= -1.0 && task.x(0, 0) <= 1.0));
  }
}

TEST_CASE("generators are deterministic and independent of the task count", "[taskgen]") {
  const TaskSet a = gen_quadratic(10, 3, 42);
  const TaskSet b = gen_quadratic(10, 3, 42);
  for (std::size_t t = 0; t < 10; ++t) {
    REQUIRE(a.tasks[t].x.data == b.tasks[t].x.data);
    REQUIRE(a.tasks[t].y.data == b.tasks[t].y.data);
  }
  // First tasks unchanged when more tasks are drawn.
  const TaskSet wide = gen_quadratic(20, 3, 42);
  for (std::size_t t = 0; t < 10; ++t) REQUIRE(wide.tasks[t].x.data == a.tasks[t].x.data);
}

TEST_CASE("ground truth matches the closed-form family formulas", "[taskgen]") {
  SplitMix64 rng(77);
  const TaskSet quad = gen_quadratic(20, 2, 1);
  const TaskSet noisy = gen_noisy_quadratic(20, 2, 0.1, 2);
  const TaskSet inter = gen_interdep(20, 3);
  const TaskSet regime = gen_regime(20, 2, 4);
  for (int probe = 0; probe < 200; ++probe) {
    const double x = rng.uniform(-1.0, 1.0);
    {
      const auto& task = quad.tasks[probe % 20];
      const auto& p = std::get<QuadraticParams>(task.truth.params);
      REQUIRE(task.truth.evaluate_row(&x) ==
              Catch::Approx(p.a * (x - p.c) * (x - p.c) + p.b).margin(1e-12));
    }
    {
      const auto& task = noisy.tasks[probe % 20];
      const auto& p = std::get<NoisyQuadraticParams>(task.truth.params);
      REQUIRE(task.truth.evaluate_row(&x) == Catch::Approx(p.a * x * x + p.b * x).margin(1e-12));
    }
    {
      const auto& task = inter.tasks[probe % 20];
      const auto& p = std::get<InterdepParams>(task.truth.params);
      const double xv[2] = {x, static_cast<double>(probe % 2)};
      const double base = p.a * (x - p.c) * (x - p.c) + p.b;
      const double want = probe % 2 ? base + p.d * x : base;
      REQUIRE(task.truth.evaluate_row(xv) == Catch::Approx(want).margin(1e-12));
    }
    {
      const auto& task = regime.tasks[probe % 20];
      const auto& p = std::get<RegimeParams>(task.truth.params);
      const double u = std::abs(x);
      const double want = p.regime == 0 ? p.a * u * u : p.a * u * u * u;
      REQUIRE(task.truth.evaluate_row(&u) == Catch::Approx(want).margin(1e-12));
    }
  }
}

TEST_CASE("noisy quadratic: noise statistics and the zero-at-origin property", "[taskgen]") {
  const TaskSet clean = gen_noisy_quadratic(50, 5, 0.0, 9);
  for (const TaskSample& task : clean.tasks) {
    const Matrix2D truth = task.truth.evaluate(task.x);
    REQUIRE(task.y.data == truth.data);  // sigma = 0: samples equal the truth
    const double zero = 0.0;
    REQUIRE(task.truth.evaluate_row(&zero) == 0.0);
  }

  // Monte Carlo on the generator: std of (y - truth) over 1e5 draws.
  const TaskSet noisy = gen_noisy_quadratic(20000, 5, 0.1, 10);
  double sq = 0.0;
  std::size_t n = 0;
  for (const TaskSample& task : noisy.tasks) {
    const Matrix2D truth = task.truth.evaluate(task.x);
    for (std::size_t r = 0; r < 5; ++r) {
      const double d = task.y(r, 0) - truth(r, 0);
      sq += d * d;
      ++n;
    }
  }
  const double std_hat = std::sqrt(sq / static_cast<double>(n));
  REQUIRE(std_hat > 0.097);
  REQUIRE(std_hat < 0.103);
}

TEST_CASE("interdependency family: branch split and hand value", "[taskgen]") {
  const TaskSet set = gen_interdep(500, 11);
  for (const TaskSample& task : set.tasks) {
    std::size_t zeros = 0, ones = 0;
    for (std::size_t r = 0; r < task.x.rows; ++r)
      (task.x(r, 1) == 0.0 ? zeros : ones) += 1;
    REQUIRE(task.x.rows == 5);
    REQUIRE(zeros == 3);
    REQUIRE(ones == 2);
    const auto& p = std::get<InterdepParams>(task.truth.params);
    REQUIRE((p.d >= 0.1 && p.d <= 1.0));
    // x2 = 0 branch equals the plain quadratic with the same (a, b, c).
    const double xv[2] = {0.3, 0.0};
    REQUIRE(task.truth.evaluate_row(xv) ==
            Catch::Approx(p.a * (0.3 - p.c) * (0.3 - p.c) + p.b).margin(1e-15));
  }
  // a=1, b=0, c=0, d=1 at x=(1,1): 1 + 0 + 1 = 2.
  GroundTruth t{Family::Interdep, InterdepParams{1.0, 0.0, 0.0, 1.0}};
  const double xv[2] = {1.0, 1.0};
  REQUIRE(t.evaluate_row(xv) == 2.0);
}

TEST_CASE("regime family: labels balanced, regimes coincide at x=1", "[taskgen]") {
  const TaskSet set = gen_regime(10000, 4, 13);
  std::size_t quad = 0;
  for (const TaskSample& task : set.tasks)
    if (std::get<RegimeParams>(task.truth.params).regime == 0) ++quad;
  REQUIRE(quad >= 4800);
  REQUIRE(quad <= 5200);

  GroundTruth f1{Family::Regime, RegimeParams{0, 1.7}};
  GroundTruth f2{Family::Regime, RegimeParams{1, 1.7}};
  double x = 1.0;
  REQUIRE(f1.evaluate_row(&x) == f2.evaluate_row(&x));
  x = 0.5;
  REQUIRE(f2.evaluate_row(&x) / f1.evaluate_row(&x) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("nelson-siegel limits and hand evaluation", "[taskgen]") {
  const NelsonSiegelParams p{0.05, 0.02, 0.1, 1.0};
  // T -> infinity: both decaying terms vanish.
  REQUIRE(nelson_siegel(1e6, p) == Catch::Approx(0.05).margin(1e-6));
  // T -> 0+: the analytic limit is beta0 + beta1.
  REQUIRE(nelson_siegel(1e-9, p) == Catch::Approx(0.07).margin(1e-6));
  // Hand evaluation oracle: 0.05 + 0.12*(1-e^-1) - 0.1*e^-1.
  REQUIRE(nelson_siegel(1.0, p) == Catch::Approx(0.089066522942282705).margin(1e-15));

  REQUIRE_THROWS_AS(nelson_siegel(1.0, NelsonSiegelParams{0.05, 0.0, 0.0, 0.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(nelson_siegel(-1.0, p), std::invalid_argument);
}

TEST_CASE("curve pairs: ordering, construction, sampled ranges", "[taskgen]") {
  const Matrix2D grid = test_grid(0.02, 20.0, 200);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const BondCurves curves = sample_task_curves(seed);
    for (std::size_t j = 0; j < 4; ++j) {
      // beta0 + beta1 lands in [0, 0.1] by the shifted beta1 law.
      for (const NelsonSiegelParams* set : {&curves.set1[j], &curves.set2[j]}) {
        REQUIRE(set->beta0 + set->beta1 >= 0.0);
        REQUIRE(set->beta0 + set->beta1 <= 0.1);
      }
      for (std::size_t g = 0; g < grid.rows; ++g) {
        const double T = grid(g, 0);
        const double s1 = curves.s1(j, T);
        const double s2 = curves.s2(j, T);
        REQUIRE(s1 <= s2);
        // s2 - s1 is exactly the Nelson-Siegel curve of the second set.
        REQUIRE(s2 - s1 == Catch::Approx(nelson_siegel(T, curves.set2[j])).margin(1e-12));
      }
    }
  }
}

TEST_CASE("tau reading switch changes only the first curve's decay", "[taskgen]") {
  const BondCurves printed = sample_task_curves(3, TauReading::Printed);
  const BondCurves corrected = sample_task_curves(3, TauReading::Corrected);
  // Same sampled parameters, different curve assembly.
  REQUIRE(printed.set1[0].tau == corrected.set1[0].tau);
  NelsonSiegelParams with_tau2 = printed.set1[0];
  with_tau2.tau = printed.set2[0].tau;
  REQUIRE(printed.s1(0, 5.0) == nelson_siegel(5.0, with_tau2));
  REQUIRE(corrected.s1(0, 5.0) == nelson_siegel(5.0, corrected.set1[0]));
}

TEST_CASE("combined spread endpoints and index validation", "[taskgen]") {
  const BondCurves curves = sample_task_curves(21);
  const double T = 7.0;
  double lo = 0.0, hi = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    lo += kBondCategoryWeights[j] * curves.s1(j, T);
    hi += kBondCategoryWeights[j] * curves.s2(j, T);
  }
  REQUIRE(combined_spread(T, 1, 1, 1, 1, curves) == Catch::Approx(lo).margin(1e-15));
  REQUIRE(combined_spread(T, 9, 5, 11, 3, curves) == Catch::Approx(hi).margin(1e-15));
  REQUIRE_THROWS_AS(combined_spread(T, 0, 1, 1, 1, curves), std::out_of_range);
  REQUIRE_THROWS_AS(combined_spread(T, 1, 6, 1, 1, curves), std::out_of_range);
}

TEST_CASE("combined spread is monotone in every category index", "[taskgen]") {
  const Matrix2D grid = test_grid(0.02, 20.0, 50);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const BondCurves curves = sample_task_curves(seed);
    const int base[4] = {5, 3, 6, 2};
    for (int j = 0; j < 4; ++j) {
      const int n = static_cast<int>(kBondCategorySizes[j]);
      for (std::size_t g = 0; g < grid.rows; g += 7) {
        const double T = grid(g, 0);
        double prev = -1e300;
        for (int k = 1; k <= n; ++k) {
          int idx[4] = {base[0], base[1], base[2], base[3]};
          idx[j] = k;
          const double s = combined_spread(T, idx[0], idx[1], idx[2], idx[3], curves);
          REQUIRE(s >= prev - 1e-15);
          prev = s;
        }
      }
    }
  }
}

TEST_CASE("bond feature encoding", "[taskgen]") {
  BondRecord rec{20.0, 1, 3, 7, 1, 0.0};
  std::vector<double> f = encode_bond_features(rec);
  REQUIRE(f.size() == kBondFeatureDim);
  REQUIRE(f[0] == 1.0);  // 20 years scale to 1.0
  REQUIRE(f[1] == 0.0);  // rating 1
  rec.rating = 9;
  REQUIRE(encode_bond_features(rec)[1] == 1.0);

  double country_sum = 0.0, sector_sum = 0.0;
  for (int j = 0; j < 5; ++j) country_sum += f[3 + j];
  for (int j = 0; j < 11; ++j) sector_sum += f[8 + j];
  REQUIRE(country_sum == 1.0);
  REQUIRE(sector_sum == 1.0);
  REQUIRE(f[3 + 2] == 1.0);  // country 3 occupies its own slot

  rec.sector = 12;
  REQUIRE_THROWS_AS(encode_bond_features(rec), std::out_of_range);
}

TEST_CASE("bond tasks: feature width, spreads, maturity mix", "[taskgen]") {
  const TaskSample day = gen_bond_task(400, 31);
  REQUIRE(day.x.cols == 19);
  // y reproduces combined_spread recomputed from the stored truth, bit for bit.
  const Matrix2D again = day.truth.evaluate(day.x);
  REQUIRE(again.data == day.y.data);

  std::size_t short_count = 0, n = 0;
  for (std::uint64_t t = 0; t < 250; ++t) {
    const TaskSample d = gen_bond_task(400, task_seed(500, t));
    for (std::size_t r = 0; r < d.x.rows; ++r, ++n)
      if (d.x(r, 0) * kBondMaxMaturityYears < 0.25) ++short_count;
  }
  const double share = static_cast<double>(short_count) / static_cast<double>(n);
  REQUIRE(share > 0.0095);
  REQUIRE(share < 0.0135);
}

TEST_CASE("nelson-siegel curves from the sampling law stay non-negative", "[taskgen]") {
  // Checked, not assumed: sampled parameter sets keep r >= 0 on (0, 20].
  const Matrix2D grid = test_grid(0.02, 20.0, 100);
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 1250; ++seed) {
    const BondCurves curves = sample_task_curves(seed);
    for (std::size_t j = 0; j < 4; ++j)
      for (const NelsonSiegelParams* p : {&curves.set1[j], &curves.set2[j]})
        for (std::size_t g = 0; g < grid.rows; ++g)
          if (nelson_siegel(grid(g, 0), *p) < 0.0) ++violations;
  }
  REQUIRE(violations == 0);
}

TEST_CASE("test grid endpoints, ordering, spacing", "[taskgen]") {
  const Matrix2D g3 = test_grid(-1.0, 1.0, 3);
  REQUIRE(g3.rows == 3);
  REQUIRE(g3(0, 0) == -1.0);
  REQUIRE(g3(1, 0) == 0.0);
  REQUIRE(g3(2, 0) == 1.0);

  const Matrix2D g = test_grid(0.0, 1.0, 100);
  REQUIRE(g(0, 0) == 0.0);
  REQUIRE(g(99, 0) == 1.0);
  for (std::size_t i = 1; i < 100; ++i) {
    REQUIRE(g(i, 0) > g(i - 1, 0));
    REQUIRE(g(i, 0) - g(i - 1, 0) == Catch::Approx(1.0 / 99.0).margin(1e-12));
  }
  REQUIRE_THROWS_AS(test_grid(1.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("family grid covers both interdependency branches", "[taskgen]") {
  const Matrix2D g = family_grid(Family::Interdep);
  REQUIRE(g.rows == 100);
  REQUIRE(g.cols == 2);
  std::size_t ones = 0;
  for (std::size_t r = 0; r < g.rows; ++r)
    if (g(r, 1) == 1.0) ++ones;
  REQUIRE(ones == 50);
  REQUIRE_THROWS_AS(family_grid(Family::Bond), std::invalid_argument);
}

TEST_CASE("generate dispatches on the spec", "[taskgen]") {
  GeneratorSpec spec(Family::Regime, 7, 4, 3);
  const TaskSet set = generate(spec);
  REQUIRE(set.family == Family::Regime);
  REQUIRE(set.tasks.size() == 7);
  REQUIRE(set.tasks[0].x.rows == 4);
  spec.n_tasks = 0;
  REQUIRE_THROWS_AS(generate(spec), std::invalid_argument);
}
