#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pnn/baselines.hpp"
#include "pnn/metrics.hpp"

using namespace pnn;

TEST_CASE("task error implements the printed formula literally", "[metrics]") {
  // Perfect predictions.
  Matrix2D y = Matrix2D::from_rows({{1.0}, {2.0}});
  REQUIRE(task_error_from_targets(y, y, 2) == 0.0);

  // Single point, residual 2, m = 1: sqrt(4)/1 = 2.
  Matrix2D t = Matrix2D::from_rows({{2.0}});
  Matrix2D p = Matrix2D::from_rows({{0.0}});
  REQUIRE(task_error_from_targets(t, p, 1) == 2.0);

  // Equal residuals r over a grid of m points: sqrt(m r^2)/m = r/sqrt(m).
  const std::size_t m = 9;
  const double r = 0.7;
  Matrix2D truth(m, 1), pred(m, 1);
  for (std::size_t i = 0; i < m; ++i) pred(i, 0) = truth(i, 0) + r;
  REQUIRE(task_error_from_targets(truth, pred, m) ==
          Catch::Approx(r / std::sqrt(double(m))).margin(1e-14));

  REQUIRE_THROWS_AS(task_error_from_targets(truth, Matrix2D(2, 1), m), ShapeError);
}

TEST_CASE("task error measures against the noiseless generator", "[metrics]") {
  const TaskSet set = gen_noisy_quadratic(1, 5, 0.1, 3);
  const Matrix2D grid = family_grid(Family::NoisyQuadratic);
  const Matrix2D exact = set.tasks[0].truth.evaluate(grid);
  REQUIRE(task_error(set.tasks[0].truth, grid, exact, 5) == 0.0);
}

TEST_CASE("aggregate error", "[metrics]") {
  REQUIRE(aggregate_error({0.0, 0.0, 0.0}) == 0.0);
  REQUIRE(aggregate_error({0.37}) == 0.37);  // single task: e = e1 / 1
  // 250 equal errors c: sqrt(250 c^2)/250 = c/sqrt(250).
  const double c = 0.42;
  std::vector<double> e(250, c);
  REQUIRE(aggregate_error(e) == Catch::Approx(c / std::sqrt(250.0)).margin(1e-14));
  REQUIRE_THROWS_AS(aggregate_error({}), std::invalid_argument);
}

TEST_CASE("errors are scale-consistent", "[metrics]") {
  SplitMix64 rng(5);
  Matrix2D truth(20, 1), pred(20, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    truth(i, 0) = rng.normal();
    pred(i, 0) = truth(i, 0) + rng.normal();
  }
  const double base = task_error_from_targets(truth, pred, 4);
  for (const double c : {0.5, 2.0, 10.0}) {
    Matrix2D scaled = truth;
    for (std::size_t i = 0; i < 20; ++i)
      scaled(i, 0) = truth(i, 0) + c * (pred(i, 0) - truth(i, 0));
    REQUIRE(task_error_from_targets(truth, scaled, 4) ==
            Catch::Approx(c * base).epsilon(1e-12));
  }
  const std::vector<double> errs = {0.1, 0.4, 0.25};
  for (const double c : {0.5, 2.0, 10.0}) {
    std::vector<double> scaled = errs;
    for (double& v : scaled) v *= c;
    REQUIRE(aggregate_error(scaled) == Catch::Approx(c * aggregate_error(errs)).epsilon(1e-12));
  }
}

TEST_CASE("d_nu is a bounded metric", "[metrics]") {
  REQUIRE(d_nu(0.7, 0.7, 1.0) == 0.0);
  REQUIRE(d_nu(0.0, 1.0, 1.0) == 0.5);
  REQUIRE_THROWS_AS(d_nu(1.0, 1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(d_nu(-0.1, 1.0, 1.0), std::invalid_argument);

  SplitMix64 rng(17);
  std::size_t violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double nu = rng.uniform(0.1, 2.0);
    const double x = std::abs(rng.normal()) * 2.0;
    const double y = std::abs(rng.normal()) * 2.0;
    const double z = std::abs(rng.normal()) * 2.0;
    const double dxy = d_nu(x, y, nu), dyz = d_nu(y, z, nu), dxz = d_nu(x, z, nu);
    if (dxy != d_nu(y, x, nu)) ++violations;
    if (dxz > dxy + dyz + 1e-15) ++violations;
    if ((x == y) != (dxy == 0.0)) ++violations;
    if (dxy < 0.0 || dxy >= 1.0) ++violations;
  }
  REQUIRE(violations == 0);
}

TEST_CASE("loss gap: a model equal to the truth has zero gap", "[metrics]") {
  const TaskSet set = gen_quadratic(1, 4, 7);
  const TaskSample& task = set.tasks[0];
  const Matrix2D grid = family_grid(Family::Quadratic);
  const LossGap g =
      loss_gap([&](const Matrix2D& x) { return task.truth.evaluate(x); }, task, grid);
  REQUIRE(g.empirical == 0.0);
  REQUIRE(g.grid == 0.0);
  REQUIRE(g.gap == 0.0);
}

TEST_CASE("loss gap detects an interpolating wiggly fit", "[metrics]") {
  // g = truth + s * prod_j (x - x_j): zero empirical loss by construction,
  // visible grid loss, scaled so the grid loss is about 0.01.
  const TaskSet set = gen_quadratic(1, 3, 11);
  const TaskSample& task = set.tasks[0];
  const Matrix2D grid = family_grid(Family::Quadratic);

  auto bump = [&](double x) {
    double b = 1.0;
    for (std::size_t r = 0; r < task.x.rows; ++r) b *= (x - task.x(r, 0));
    return b;
  };
  double mean_sq = 0.0;
  for (std::size_t g = 0; g < grid.rows; ++g) mean_sq += bump(grid(g, 0)) * bump(grid(g, 0));
  mean_sq /= static_cast<double>(grid.rows);
  const double scale = std::sqrt(0.01 / mean_sq);

  auto wiggly = [&](const Matrix2D& x) {
    Matrix2D out = task.truth.evaluate(x);
    for (std::size_t r = 0; r < x.rows; ++r) out(r, 0) += scale * bump(x(r, 0));
    return out;
  };
  const LossGap g = loss_gap(wiggly, task, grid);
  REQUIRE(g.empirical == Catch::Approx(0.0).margin(1e-20));
  REQUIRE(g.grid == Catch::Approx(0.01).epsilon(1e-6));
  REQUIRE(g.gap > 0.0);
}

TEST_CASE("loss gap shrinks with more training points per task", "[metrics]") {
  // Single-task networks overfit less as points grow from 3 to 6.
  TrainConfig cfg;
  cfg.epochs = 900;
  const Matrix2D grid = family_grid(Family::Quadratic);
  double gap3 = 0.0, gap6 = 0.0;
  const std::size_t n_tasks = 6;
  for (std::size_t m : {std::size_t{3}, std::size_t{6}}) {
    const TaskSet set = gen_quadratic(n_tasks, m, 1234);
    double total = 0.0;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      cfg.seed = 7000 + t;
      const MlpModel net = fit_single_task(set.tasks[t], {24, 24}, cfg);
      total += loss_gap([&](const Matrix2D& x) { return forward(net, x); }, set.tasks[t], grid)
                   .gap;
    }
    (m == 3 ? gap3 : gap6) = total / n_tasks;
  }
  REQUIRE(gap6 < gap3);
}

TEST_CASE("loss gap grid density is converged at 100 points", "[metrics]") {
  // The plain grid mean carries an O(1/n) endpoint term (boundary misfit is
  // heavier than the interior average), so doubling the density moves the
  // grid loss by a few percent relative at most and well under 0.01 absolute.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TaskSet set = gen_quadratic(8, 5, seed);
    TrainConfig cfg;
    cfg.epochs = 1000;
    cfg.seed = seed;
    const PnnModel model = train_joint(set, {16, 16}, 2, cfg).model;
    const TaskSample& task = set.tasks[0];
    const std::vector<double> p = model.params.row(0);
    const double g100 = loss_gap(model, p, task, test_grid(-1, 1, 100)).grid;
    const double g200 = loss_gap(model, p, task, test_grid(-1, 1, 200)).grid;
    REQUIRE(std::abs(g200 - g100) < 0.01);
    REQUIRE(std::abs(g200 - g100) < 0.1 * std::max(g100, 1e-12));
  }
}

TEST_CASE("cluster separation: separated blobs, null labels, permutations", "[metrics]") {
  SplitMix64 rng(3);
  ParamTable blobs;
  blobs.n_tasks = 60;
  blobs.param_dim = 2;
  blobs.values = Matrix2D(60, 2);
  std::vector<int> labels(60);
  for (std::size_t t = 0; t < 60; ++t) {
    labels[t] = t % 2;
    blobs.values(t, 0) = (labels[t] ? 4.0 : -4.0) + 0.3 * rng.normal();
    blobs.values(t, 1) = 0.3 * rng.normal();
  }
  const ClusterResult sep = cluster_separation(blobs, labels, 1);
  REQUIRE(sep.accuracy == 1.0);
  REQUIRE(sep.centroid_distance == Catch::Approx(8.0).margin(0.5));

  // Permutation of the rows leaves the score unchanged.
  ParamTable permuted = blobs;
  std::vector<int> permuted_labels(60);
  std::vector<std::size_t> order(60);
  for (std::size_t i = 0; i < 60; ++i) order[i] = i;
  shuffle(order, rng);
  for (std::size_t i = 0; i < 60; ++i) {
    permuted.values(i, 0) = blobs.values(order[i], 0);
    permuted.values(i, 1) = blobs.values(order[i], 1);
    permuted_labels[i] = labels[order[i]];
  }
  const ClusterResult sep2 = cluster_separation(permuted, permuted_labels, 1);
  REQUIRE(sep2.accuracy == sep.accuracy);
  REQUIRE(sep2.centroid_distance == Catch::Approx(sep.centroid_distance).margin(1e-9));

  // Null distribution: random rows vs random labels hovers near one half.
  double acc_sum = 0.0;
  const int null_runs = 20;
  for (int run = 0; run < null_runs; ++run) {
    ParamTable noise;
    noise.n_tasks = 200;
    noise.param_dim = 2;
    noise.values = Matrix2D(200, 2);
    for (double& v : noise.values.data) v = rng.normal();
    std::vector<int> rand_labels(200);
    for (int& l : rand_labels) l = rng.below(2);
    acc_sum += cluster_separation(noise, rand_labels, 100 + run).accuracy;
  }
  const double mean_acc = acc_sum / null_runs;
  REQUIRE(mean_acc > 0.45);
  REQUIRE(mean_acc < 0.55);

  ParamTable degenerate;
  degenerate.n_tasks = 4;
  degenerate.param_dim = 2;
  degenerate.values = Matrix2D(4, 2, 1.0);
  REQUIRE_THROWS_AS(cluster_separation(degenerate, {0, 1, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("error histogram splits by maturity and conserves counts", "[metrics]") {
  const std::vector<double> residuals = {0.0, 0.0, 0.00012, -0.00007, 0.00035};
  const std::vector<double> maturities = {0.1, 0.3, 2.0, 0.2, 5.0};
  const ErrorHistogram h = error_histogram(residuals, maturities);

  std::size_t total = 0;
  for (const auto& [bin, count] : h.short_bins) total += count;
  for (const auto& [bin, count] : h.long_bins) total += count;
  REQUIRE(total == residuals.size());
  REQUIRE(h.short_bins.size() == 2);  // 0.0 at bin 0 and -0.00007 at bin -1
  REQUIRE(h.short_bins.at(0) == 1);
  REQUIRE(h.short_bins.at(-1) == 1);
  REQUIRE(h.long_bins.at(0) == 1);
  REQUIRE(h.long_bins.at(1) == 1);  // 1.2 bp lands in [1, 2) bp
  REQUIRE(h.long_bins.at(3) == 1);  // 3.5 bp lands in [3, 4) bp

  const std::vector<double> zeros(10, 0.0);
  const std::vector<double> mats(10, 1.0);
  const ErrorHistogram spike = error_histogram(zeros, mats);
  REQUIRE(spike.long_bins.size() == 1);
  REQUIRE(spike.long_bins.at(0) == 10);

  REQUIRE_THROWS_AS(error_histogram(residuals, zeros), std::invalid_argument);
}
