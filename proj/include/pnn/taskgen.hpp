#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class Family { Quadratic, NoisyQuadratic, Interdep, Regime, Bond };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Quadratic: return "quadratic";
    case Family::NoisyQuadratic: return "noisy_quadratic";
    case Family::Interdep: return "interdep";
    case Family::Regime: return "regime";
    case Family::Bond: return "bond";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Family parameter sets (the retained ground truth)
// ---------------------------------------------------------------------------

struct QuadraticParams {
  double a, b, c;  // a*(x-c)^2 + b on [-1,1]
};

struct NoisyQuadraticParams {
  double a, b;  // a*x^2 + b*x on [-1,1]; noise lives only in the samples
};

struct InterdepParams {
  double a, b, c, d;  // a*(x1-c)^2 + b, plus d*x1 when x2 == 1
};

struct RegimeParams {
  int regime;  // 0: a*x^2, 1: a*x^3, both on [0,1]
  double a;
};

// beta0 is the long-end level, beta0+beta1 the short-end level.
struct NelsonSiegelParams {
  double beta0, beta1, beta2;  // rates (0.05 = 5%)
  double tau;                  // years, > 0
};

// r(T) = beta0 + (beta1+beta2)*tau*(1-exp(-T/tau))/T - beta2*exp(-T/tau).
// Below 1e-8 years the analytic limit beta0+beta1 replaces the 0/0 form.
inline double nelson_siegel(double T, const NelsonSiegelParams& p) {
  if (!(p.tau > 0.0)) throw std::invalid_argument("nelson_siegel: tau must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("nelson_siegel: maturity must be positive");
  if (T < 1e-8) return p.beta0 + p.beta1;
  const double decay = std::exp(-T / p.tau);
  return p.beta0 + (p.beta1 + p.beta2) * p.tau * (1.0 - decay) / T - p.beta2 * decay;
}

// The source's s1 curve reuses the second set's tau; Corrected uses the first
// set's own tau instead. Both readings are supported, Printed is the default.
enum class TauReading { Printed, Corrected };

inline constexpr std::array<std::size_t, 4> kBondCategorySizes = {9, 5, 11, 3};
inline constexpr std::array<double, 4> kBondCategoryWeights = {0.1, 0.2, 0.5, 0.2};
inline constexpr double kBondMaxMaturityYears = 20.0;
inline constexpr double kBondMinMaturityYears = 0.02;

// Two Nelson-Siegel parameter sets per category; curve pairs s1 <= s2.
struct BondCurves {
  std::array<NelsonSiegelParams, 4> set1;
  std::array<NelsonSiegelParams, 4> set2;
  TauReading tau_reading = TauReading::Printed;

  double s1(std::size_t j, double T) const {
    NelsonSiegelParams p = set1[j];
    if (tau_reading == TauReading::Printed) p.tau = set2[j].tau;
    return nelson_siegel(T, p);
  }
  double s2(std::size_t j, double T) const { return s1(j, T) + nelson_siegel(T, set2[j]); }
};

struct GroundTruth {
  Family family = Family::Quadratic;
  std::variant<QuadraticParams, NoisyQuadraticParams, InterdepParams, RegimeParams, BondCurves>
      params;

  double evaluate_row(const double* x) const;
  Matrix2D evaluate(const Matrix2D& x) const {
    Matrix2D y(x.rows, 1);
    for (std::size_t r = 0; r < x.rows; ++r) y(r, 0) = evaluate_row(x.row_ptr(r));
    return y;
  }
};

// Per-task samples plus the generator that produced them, so errors can be
// measured against the noiseless target.
struct TaskSample {
  Matrix2D x;  // m x k1
  Matrix2D y;  // m x k2
  GroundTruth truth;
};

struct TaskSet {
  Family family = Family::Quadratic;
  std::size_t k1 = 1;
  std::size_t k2 = 1;
  std::vector<TaskSample> tasks;
};

// Per-task substream: task data depends only on (seed, task_index), never on
// how many tasks are drawn.
inline std::uint64_t task_seed(std::uint64_t seed, std::uint64_t task_index) {
  return mix64(seed ^ mix64(task_index + 0x9E3779B97F4A7C15ull));
}

// ---------------------------------------------------------------------------
// Bond spread construction
// ---------------------------------------------------------------------------

// Draw order per category j: set1 (beta0, beta1, beta2, tau), then set2.
// beta1's range is shifted by -beta0, so beta0+beta1 always lies in [0, 0.1].
inline BondCurves sample_task_curves(std::uint64_t seed,
                                     TauReading reading = TauReading::Printed) {
  SplitMix64 rng = substream(seed, 0);
  BondCurves curves;
  curves.tau_reading = reading;
  for (std::size_t j = 0; j < 4; ++j) {
    for (NelsonSiegelParams* set : {&curves.set1[j], &curves.set2[j]}) {
      set->beta0 = rng.uniform(0.0, 0.15);
      set->beta1 = rng.uniform(-set->beta0, 0.1 - set->beta0);
      set->beta2 = rng.uniform(0.0, 0.2);
      set->tau = rng.uniform(0.2, 2.0);
    }
  }
  return curves;
}

// s(T;k1..k4) = sum_j w_j * [(n_j-k_j)/(n_j-1) * s1_j + (k_j-1)/(n_j-1) * s2_j],
// category indices 1-based.
inline double combined_spread(double T, int k1, int k2, int k3, int k4,
                              const BondCurves& curves) {
  const std::array<int, 4> k = {k1, k2, k3, k4};
  double s = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    const int n = static_cast<int>(kBondCategorySizes[j]);
    if (k[j] < 1 || k[j] > n)
      throw std::out_of_range("combined_spread: category " + std::to_string(j + 1) + " index " +
                              std::to_string(k[j]) + " outside 1.." + std::to_string(n));
    const double t = static_cast<double>(k[j] - 1) / static_cast<double>(n - 1);
    s += kBondCategoryWeights[j] * ((1.0 - t) * curves.s1(j, T) + t * curves.s2(j, T));
  }
  return s;
}

struct BondRecord {
  double maturity_years;  // in (0, 20]
  int rating;             // 1..9
  int country;            // 1..5
  int sector;             // 1..11
  int esg;                // 1..3
  double spread;          // rate
};

// [T/20, (rating-1)/8, (esg-1)/2, one-hot country (5), one-hot sector (11)]
inline constexpr std::size_t kBondFeatureDim = 19;

inline std::vector<double> encode_bond_features(const BondRecord& rec) {
  if (rec.rating < 1 || rec.rating > 9 || rec.country < 1 || rec.country > 5 ||
      rec.sector < 1 || rec.sector > 11 || rec.esg < 1 || rec.esg > 3)
    throw std::out_of_range("encode_bond_features: category index out of range");
  std::vector<double> f(kBondFeatureDim, 0.0);
  f[0] = rec.maturity_years / kBondMaxMaturityYears;
  f[1] = static_cast<double>(rec.rating - 1) / 8.0;
  f[2] = static_cast<double>(rec.esg - 1) / 2.0;
  f[3 + rec.country - 1] = 1.0;
  f[8 + rec.sector - 1] = 1.0;
  return f;
}

inline BondRecord decode_bond_features(const double* x) {
  BondRecord rec;
  rec.maturity_years = x[0] * kBondMaxMaturityYears;
  rec.rating = static_cast<int>(std::lround(x[1] * 8.0)) + 1;
  rec.esg = static_cast<int>(std::lround(x[2] * 2.0)) + 1;
  rec.country = 1;
  rec.sector = 1;
  for (int j = 0; j < 5; ++j)
    if (x[3 + j] > 0.5) rec.country = j + 1;
  for (int j = 0; j < 11; ++j)
    if (x[8 + j] > 0.5) rec.sector = j + 1;
  rec.spread = 0.0;
  return rec;
}

// One task = one trading day: curves drawn first, then per bond the maturity
// and the four category indices. Maturities are U(0.02, 20) years, which puts
// roughly 1.2% of bonds below three months.
inline TaskSample gen_bond_task(std::size_t n_bonds, std::uint64_t seed,
                                TauReading reading = TauReading::Printed) {
  if (n_bonds < 1) throw std::invalid_argument("gen_bond_task: need at least one bond");
  const BondCurves curves = sample_task_curves(seed, reading);
  SplitMix64 rng = substream(seed, 1);
  TaskSample task;
  task.x = Matrix2D(n_bonds, kBondFeatureDim);
  task.y = Matrix2D(n_bonds, 1);
  task.truth = GroundTruth{Family::Bond, curves};
  for (std::size_t i = 0; i < n_bonds; ++i) {
    BondRecord rec;
    rec.maturity_years = rng.uniform(kBondMinMaturityYears, kBondMaxMaturityYears);
    rec.rating = 1 + static_cast<int>(rng.below(kBondCategorySizes[0]));
    rec.country = 1 + static_cast<int>(rng.below(kBondCategorySizes[1]));
    rec.sector = 1 + static_cast<int>(rng.below(kBondCategorySizes[2]));
    rec.esg = 1 + static_cast<int>(rng.below(kBondCategorySizes[3]));
    const std::vector<double> feat = encode_bond_features(rec);
    // The canonical maturity is what the stored feature decodes back to, so
    // spreads recomputed from the features reproduce y bit for bit.
    rec.maturity_years = feat[0] * kBondMaxMaturityYears;
    rec.spread =
        combined_spread(rec.maturity_years, rec.rating, rec.country, rec.sector, rec.esg, curves);
    for (std::size_t c = 0; c < kBondFeatureDim; ++c) task.x(i, c) = feat[c];
    task.y(i, 0) = rec.spread;
  }
  return task;
}

// ---------------------------------------------------------------------------
// Synthetic one-dimensional families
// ---------------------------------------------------------------------------

// Per task: a ~ U[1,2], b ~ U[-1,1], c ~ U[-0.5,0.5], then m x-draws on [-1,1].
inline TaskSet gen_quadratic(std::size_t n_tasks, std::size_t m_points, std::uint64_t seed) {
  if (m_points < 1) throw std::invalid_argument("gen_quadratic: m_points must be >= 1");
  TaskSet set{Family::Quadratic, 1, 1, {}};
  set.tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    SplitMix64 rng = substream(seed, t);
    QuadraticParams p{rng.uniform(1.0, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)};
    TaskSample task;
    task.truth = GroundTruth{Family::Quadratic, p};
    task.x = Matrix2D(m_points, 1);
    for (std::size_t i = 0; i < m_points; ++i) task.x(i, 0) = rng.uniform(-1.0, 1.0);
    task.y = task.truth.evaluate(task.x);
    set.tasks.push_back(std::move(task));
  }
  return set;
}

// a ~ U[1,2], b ~ U[-0.5,0.5]; samples carry N(0, sigma^2) noise, the retained
// truth does not. f(0) = 0 for every member of the family.
inline TaskSet gen_noisy_quadratic(std::size_t n_tasks, std::size_t m_points, double sigma,
                                   std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("gen_noisy_quadratic: sigma must be >= 0");
  TaskSet set{Family::NoisyQuadratic, 1, 1, {}};
  set.tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    SplitMix64 rng = substream(seed, t);
    NoisyQuadraticParams p{rng.uniform(1.0, 2.0), rng.uniform(-0.5, 0.5)};
    TaskSample task;
    task.truth = GroundTruth{Family::NoisyQuadratic, p};
    task.x = Matrix2D(m_points, 1);
    for (std::size_t i = 0; i < m_points; ++i) task.x(i, 0) = rng.uniform(-1.0, 1.0);
    task.y = task.truth.evaluate(task.x);
    for (std::size_t i = 0; i < m_points; ++i) task.y(i, 0) += sigma * rng.normal();
    set.tasks.push_back(std::move(task));
  }
  return set;
}

// Five points per task on [-1,1] x {0,1}: the first three have x2=0, the last
// two x2=1. Draw order: a, b, c, d, then the five x1 values.
inline TaskSet gen_interdep(std::size_t n_tasks, std::uint64_t seed) {
  constexpr std::size_t kPoints = 5;
  constexpr std::size_t kBranchSplit = 3;  // samples with x2 == 0
  TaskSet set{Family::Interdep, 2, 1, {}};
  set.tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    SplitMix64 rng = substream(seed, t);
    InterdepParams p{rng.uniform(1.0, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5),
                     rng.uniform(0.1, 1.0)};
    TaskSample task;
    task.truth = GroundTruth{Family::Interdep, p};
    task.x = Matrix2D(kPoints, 2);
    for (std::size_t i = 0; i < kPoints; ++i) {
      task.x(i, 0) = rng.uniform(-1.0, 1.0);
      task.x(i, 1) = i < kBranchSplit ? 0.0 : 1.0;
    }
    task.y = task.truth.evaluate(task.x);
    set.tasks.push_back(std::move(task));
  }
  return set;
}

// Regime chosen uniformly per task (0: quadratic, 1: cubic), a ~ U[1,2],
// m x-draws on [0,1]. The regime label lives only in the retained truth,
// never in the features.
inline TaskSet gen_regime(std::size_t n_tasks, std::size_t m_points, std::uint64_t seed) {
  TaskSet set{Family::Regime, 1, 1, {}};
  set.tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    SplitMix64 rng = substream(seed, t);
    RegimeParams p;
    p.regime = rng.uniform() < 0.5 ? 0 : 1;
    p.a = rng.uniform(1.0, 2.0);
    TaskSample task;
    task.truth = GroundTruth{Family::Regime, p};
    task.x = Matrix2D(m_points, 1);
    for (std::size_t i = 0; i < m_points; ++i) task.x(i, 0) = rng.uniform(0.0, 1.0);
    task.y = task.truth.evaluate(task.x);
    set.tasks.push_back(std::move(task));
  }
  return set;
}

inline TaskSet gen_bond(std::size_t n_tasks, std::size_t n_bonds, std::uint64_t seed,
                        TauReading reading = TauReading::Printed) {
  TaskSet set{Family::Bond, kBondFeatureDim, 1, {}};
  set.tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t)
    set.tasks.push_back(gen_bond_task(n_bonds, task_seed(seed, t), reading));
  return set;
}

inline double GroundTruth::evaluate_row(const double* x) const {
  switch (family) {
    case Family::Quadratic: {
      const auto& p = std::get<QuadraticParams>(params);
      const double dx = x[0] - p.c;
      return p.a * dx * dx + p.b;
    }
    case Family::NoisyQuadratic: {
      const auto& p = std::get<NoisyQuadraticParams>(params);
      return p.a * x[0] * x[0] + p.b * x[0];
    }
    case Family::Interdep: {
      const auto& p = std::get<InterdepParams>(params);
      const double dx = x[0] - p.c;
      double y = p.a * dx * dx + p.b;
      if (x[1] == 1.0) y += p.d * x[0];
      return y;
    }
    case Family::Regime: {
      const auto& p = std::get<RegimeParams>(params);
      return p.regime == 0 ? p.a * x[0] * x[0] : p.a * x[0] * x[0] * x[0];
    }
    case Family::Bond: {
      const auto& curves = std::get<BondCurves>(params);
      const BondRecord rec = decode_bond_features(x);
      return combined_spread(rec.maturity_years, rec.rating, rec.country, rec.sector, rec.esg,
                             curves);
    }
  }
  throw std::logic_error("GroundTruth: unknown family");
}

// ---------------------------------------------------------------------------
// Evaluation grids
// ---------------------------------------------------------------------------

// n equidistant points including both endpoints.
inline Matrix2D test_grid(double lo, double hi, std::size_t n = 100) {
  if (!(lo < hi)) throw std::invalid_argument("test_grid: need lo < hi");
  Matrix2D g(n, 1);
  if (n == 1) {
    g(0, 0) = lo;
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g(i, 0) = lo + step * static_cast<double>(i);
  g(n - 1, 0) = hi;
  return g;
}

// 100 gridpoints on the family's domain. Interdep splits them over the two
// binary branches (50 each); bond tasks are evaluated on their own bonds.
inline Matrix2D family_grid(Family family, std::size_t n = 100) {
  switch (family) {
    case Family::Quadratic:
    case Family::NoisyQuadratic:
      return test_grid(-1.0, 1.0, n);
    case Family::Regime:
      return test_grid(0.0, 1.0, n);
    case Family::Interdep: {
      const Matrix2D half = test_grid(-1.0, 1.0, n / 2);
      Matrix2D g(half.rows * 2, 2);
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < half.rows; ++i) {
          g(b * half.rows + i, 0) = half(i, 0);
          g(b * half.rows + i, 1) = static_cast<double>(b);
        }
      return g;
    }
    case Family::Bond:
      throw std::invalid_argument("family_grid: bond tasks are evaluated on their own bonds");
  }
  throw std::logic_error("family_grid: unknown family");
}

struct GeneratorSpec {
  Family family = Family::Quadratic;
  std::size_t n_tasks = 100;
  std::size_t m_points = 5;  // bonds per day for the bond family
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;                         // noisy_quadratic only
  TauReading tau_reading = TauReading::Printed;     // bond only

  GeneratorSpec() = default;
  GeneratorSpec(Family f, std::size_t n, std::size_t m, std::uint64_t s) noexcept
      : family(f), n_tasks(n), m_points(m), seed(s) {}
};

inline TaskSet generate(const GeneratorSpec& spec) {
  if (spec.n_tasks < 1 || spec.m_points < 1)
    throw std::invalid_argument("generate: task and point counts must be positive");
  switch (spec.family) {
    case Family::Quadratic: return gen_quadratic(spec.n_tasks, spec.m_points, spec.seed);
    case Family::NoisyQuadratic:
      return gen_noisy_quadratic(spec.n_tasks, spec.m_points, spec.noise_sigma, spec.seed);
    case Family::Interdep: return gen_interdep(spec.n_tasks, spec.seed);
    case Family::Regime: return gen_regime(spec.n_tasks, spec.m_points, spec.seed);
    case Family::Bond:
      return gen_bond(spec.n_tasks, spec.m_points, spec.seed, spec.tau_reading);
  }
  throw std::logic_error("generate: unknown family");
}

}  // namespace pnn
