#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "subnyq/aic.hpp"
#include "subnyq/error.hpp"
#include "subnyq/eval.hpp"
#include "support.hpp"

using namespace subnyq;

namespace {

const RadarParams kRadar = testing::small_radar();  // N = 64, L = 16
const CellSizes kCells = CellSizes::of(kRadar);

MeasurementMatrix small_matrix(int rows = 16, std::uint64_t seed = 5) {
  return make_measurement(kRadar, {seed, MatrixKind::fourier_select, rows, kRadar.nyq_count()});
}

double brute_force_cost(const RMatrix& cost) {
  std::vector<int> cols(static_cast<std::size_t>(cost.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Eigen::Index r = 0; r < cost.rows(); ++r) c += cost(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, c);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// Column-wise relative distance.
double column_error(const CVector& got, const CVector& want) {
  return (got - want).norm() / want.norm();
}

Scene with_target(const Scene& s, std::size_t k, const Target& t) {
  std::vector<Target> ts = s.targets();
  ts[k] = t;
  return Scene(s.params(), ts);
}

}  // namespace

TEST_CASE("top-K selection") {
  CHECK(select_top_k({{1e-6, 0, {1, 0}}}, 0).selected.empty());
  CHECK_THROWS_AS(select_top_k({}, -1), Error);

  const std::vector<TargetEstimate> est{{1e-6, 0, {0.5, 0}}, {2e-6, 0, {1, 0}}, {3e-6, 0, {0, 0.2}}};
  const TopK two = select_top_k(est, 2);
  REQUIRE(two.selected.size() == 2);
  CHECK(two.selected[0].delay_s == 2e-6);
  CHECK(two.selected[1].delay_s == 1e-6);
  CHECK_FALSE(two.shortfall);

  const TopK many = select_top_k(est, 5);
  CHECK(many.shortfall);
  CHECK(many.selected.size() == 3);

  // Equal gains: order by delay then Doppler, whatever the input order.
  std::vector<TargetEstimate> tie{{2e-6, 5, {0, 1}}, {1e-6, 9, {1, 0}}, {1e-6, 3, {-1, 0}}};
  std::sort(tie.begin(), tie.end(), [](auto& a, auto& b) { return a.doppler_hz < b.doppler_hz; });
  do {
    const TopK t = select_top_k(tie, 3);
    CHECK(t.selected[0].doppler_hz == 3);
    CHECK(t.selected[1].doppler_hz == 9);
    CHECK(t.selected[2].doppler_hz == 5);
  } while (std::next_permutation(tie.begin(), tie.end(),
                                 [](auto& a, auto& b) { return a.doppler_hz < b.doppler_hz; }));
}

TEST_CASE("hungarian assignment is optimal") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rows = static_cast<Eigen::Index>(1 + rng() % 5);
    const auto cols = rows + static_cast<Eigen::Index>(rng() % 3);
    RMatrix cost(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) cost(r, c) = testing::uniform(rng, 0, 10);
    }
    const std::vector<int> a = hungarian(cost);
    double total = 0.0;
    std::vector<int> seen;
    for (Eigen::Index r = 0; r < rows; ++r) {
      total += cost(r, a[static_cast<std::size_t>(r)]);
      seen.push_back(a[static_cast<std::size_t>(r)]);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    if (cols == rows) CHECK(total == doctest::Approx(brute_force_cost(cost)));
  }
  CHECK_THROWS_AS(hungarian(RMatrix::Zero(3, 2)), Error);
}

TEST_CASE("target matching") {
  const double t0 = kCells.delay_s;
  SUBCASE("identical lists") {
    const std::vector<Target> truth{{1e-6, 100, {1, 0}}, {5e-6, -300, {1, 0}}};
    const std::vector<TargetEstimate> est{{1e-6, 100, {1, 0}}, {5e-6, -300, {1, 0}}};
    const MatchResult m = match_targets(truth, est, kCells);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(m.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(m.distances[0] == 0.0);
  }
  SUBCASE("cross pairing") {
    const std::vector<Target> truth{{0.0, 0, {1, 0}}, {10 * t0, 0, {1, 0}}};
    const std::vector<TargetEstimate> est{{10.1 * t0, 0, {1, 0}}, {0.1 * t0, 0, {1, 0}}};
    const MatchResult m = match_targets(truth, est, kCells);
    CHECK(m.pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(m.pairs[1] == std::pair<std::size_t, std::size_t>{1, 0});
  }
  SUBCASE("surplus estimates") {
    const std::vector<Target> truth{{2 * t0, 0, {1, 0}}};
    const std::vector<TargetEstimate> est{{9 * t0, 0, {1, 0}}, {2.2 * t0, 0, {1, 0}}, {30 * t0, 0, {1, 0}}};
    const MatchResult m = match_targets(truth, est, kCells);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].second == 1);
    CHECK(m.unmatched_estimates == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("surplus truth") {
    const std::vector<Target> truth{{2 * t0, 0, {1, 0}}, {20 * t0, 0, {1, 0}}};
    const std::vector<TargetEstimate> est{{19 * t0, 0, {1, 0}}};
    const MatchResult m = match_targets(truth, est, kCells);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].first == 1);
    CHECK(m.unmatched_truth == std::vector<std::size_t>{0});
  }
}

TEST_CASE("rrmse") {
  const double t0 = kCells.delay_s;
  const double n0 = kCells.doppler_hz;
  CHECK_THROWS_AS(rrmse(MatchResult{}, kCells), Error);

  const std::vector<Target> truth{{3 * t0, 2 * n0, {1, 0}}};
  const std::vector<TargetEstimate> exact{{3 * t0, 2 * n0, {1, 0}}};
  const Rrmse zero = rrmse(match_targets(truth, exact, kCells), kCells);
  CHECK(zero.tau == 0.0);
  CHECK(zero.nu == 0.0);

  const std::vector<TargetEstimate> off{{4 * t0, 3 * n0, {1, 0}}};
  const Rrmse one = rrmse(match_targets(truth, off, kCells), kCells);
  CHECK(one.tau == doctest::Approx(1.0));
  CHECK(one.nu == doctest::Approx(1.0));

  const std::vector<Target> two{{0, 0, {1, 0}}, {50 * t0, 0, {1, 0}}};
  const std::vector<TargetEstimate> est{{t0, 0, {1, 0}}, {50 * t0, 0, {1, 0}}};
  CHECK(rrmse(match_targets(two, est, kCells), kCells).tau == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("rrmse ignores labelling order") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Target> truth;
    std::vector<TargetEstimate> est;
    for (int k = 0; k < 5; ++k) {
      const double tau = testing::uniform(rng, 0, 50) * kCells.delay_s;
      const double nu = testing::uniform(rng, -5, 5) * kCells.doppler_hz;
      truth.push_back({tau, nu, {1, 0}});
      est.push_back({tau + testing::uniform(rng, -0.3, 0.3) * kCells.delay_s,
                     nu + testing::uniform(rng, -0.3, 0.3) * kCells.doppler_hz, {1, 0}});
    }
    const Rrmse a = rrmse(match_targets(truth, est, kCells), kCells);
    std::shuffle(truth.begin(), truth.end(), rng);
    std::shuffle(est.begin(), est.end(), rng);
    const Rrmse b = rrmse(match_targets(truth, est, kCells), kCells);
    CHECK(a.tau == doctest::Approx(b.tau));
    CHECK(a.nu == doctest::Approx(b.nu));
  }
}

TEST_CASE("flatten groups") {
  GroupEstimate a;
  a.doppler_hz = 10;
  a.delays_s = {1e-6, 2e-6};
  a.gains = {{1, 0}, {0, 1}};
  GroupEstimate b;
  b.doppler_hz = -5;
  const std::vector<GroupEstimate> groups{a, b};
  const auto flat = flatten(groups);
  REQUIRE(flat.size() == 2);
  CHECK(flat[1].delay_s == 2e-6);
  CHECK(flat[1].doppler_hz == 10);
  CHECK(flat[1].gain == cplx(0, 1));
}

TEST_CASE("CRB jacobian against finite differences off the grid") {
  const MeasurementMatrix mm = small_matrix();
  const Scene s(kRadar, {{3.37e-6, 1234.0, {0.8, 0.3}}, {20.61e-6, 1234.0, {-0.2, 0.5}},
                         {12.2e-6, -2100.0, {0.4, -0.4}}});
  const CMatrix jac = crb_jacobian(s, mm);
  const auto k = static_cast<Eigen::Index>(s.num_targets());
  const auto kv = static_cast<Eigen::Index>(s.num_groups());
  REQUIRE(jac.rows() == mm.rows() * kRadar.num_pulses);
  REQUIRE(jac.cols() == 3 * k + kv);

  for (Eigen::Index t = 0; t < k; ++t) {
    const Target base = s.targets()[static_cast<std::size_t>(t)];
    const double h = 1e-4 * kCells.delay_s;
    Target up = base, down = base;
    up.delay_s += h;
    down.delay_s -= h;
    const CVector fd = (vectorised_model(with_target(s, static_cast<std::size_t>(t), up), mm) -
                        vectorised_model(with_target(s, static_cast<std::size_t>(t), down), mm)) / (2 * h);
    CHECK(column_error(jac.col(t), fd) < 1e-4);

    Target re = base, im = base;
    re.gain += 1.0;
    im.gain += cplx(0, 1);
    const CVector base_model = vectorised_model(s, mm);
    CHECK(column_error(jac.col(k + kv + t), vectorised_model(with_target(s, static_cast<std::size_t>(t), re), mm) - base_model) < 1e-10);
    CHECK(column_error(jac.col(2 * k + kv + t), vectorised_model(with_target(s, static_cast<std::size_t>(t), im), mm) - base_model) < 1e-10);
  }
  for (Eigen::Index i = 0; i < kv; ++i) {
    const double h = 1e-3;
    auto shifted = [&](double dnu) {
      std::vector<Target> ts = s.targets();
      for (std::size_t m : s.groups()[static_cast<std::size_t>(i)].members) ts[m].doppler_hz += dnu;
      return vectorised_model(Scene(kRadar, ts), mm);
    };
    CHECK(column_error(jac.col(k + i), (shifted(h) - shifted(-h)) / (2 * h)) < 1e-4);
  }
}

TEST_CASE("CRB delay column on the grid matches the smooth-envelope derivative") {
  // At an on-grid delay the leading sample sits on the pulse edge, so a
  // central difference straddles the envelope jump. Differentiate the chirp
  // extended past its edges over the fixed support instead.
  const MeasurementMatrix mm = small_matrix();
  const double tau = 9 * kRadar.nyq_interval_s();
  const cplx alpha(0.6, 0.2);
  const double nu = 700.0;
  const Scene s(kRadar, {{tau, nu, alpha}});
  const CMatrix jac = crb_jacobian(s, mm);

  const SparseAtom support = sparse_atom(kRadar, tau);
  auto smooth_atom = [&](double d) {
    CVector full = CVector::Zero(kRadar.nyq_count());
    for (Eigen::Index i = 0; i < support.values.size(); ++i) {
      const double t = static_cast<double>(support.first + i) / kRadar.bandwidth_hz - d;
      full(support.first + i) = std::polar(1.0, kPi * kRadar.bandwidth_hz / kRadar.pulse_width_s * t * t);
    }
    return CVector(mm.entries() * full);
  };
  const double h = 1e-4 * kCells.delay_s;
  const CVector dpsi = (smooth_atom(tau + h) - smooth_atom(tau - h)) / (2 * h);
  CVector want(mm.rows() * kRadar.num_pulses);
  for (int l = 0; l < kRadar.num_pulses; ++l) {
    want.segment(l * mm.rows(), mm.rows()) = std::polar(1.0, 2 * kPi * nu * l * kRadar.pri_s) * alpha * dpsi;
  }
  CHECK(column_error(jac.col(0), want) < 1e-4);
}

TEST_CASE("CRB scaling and information ordering") {
  const MeasurementMatrix mm = small_matrix();
  const Scene s(kRadar, {{3.37e-6, 1234.0, {0.8, 0.3}}, {20.61e-6, -2100.0, {-0.2, 0.5}}});
  const CrbReport a = crb(s, mm, 0.5);
  const CrbReport b = crb(s, mm, 1.0);
  CHECK_FALSE(a.singular);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a.tau_s2[k] > 0.0);
    CHECK(b.tau_s2[k] == doctest::Approx(2 * a.tau_s2[k]).epsilon(1e-9));
    CHECK(b.nu_hz2[k] == doctest::Approx(2 * a.nu_hz2[k]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(crb(s, mm, 0.0), Error);

  SUBCASE("removing rows never lowers the bound") {
    const MeasurementMatrix full = small_matrix(kRadar.nyq_count() - 1, 8);
    std::vector<int> rows(static_cast<std::size_t>(full.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    std::mt19937_64 rng(4);
    std::shuffle(rows.begin(), rows.end(), rng);
    const double sigma2 = 1.0;
    CrbReport prev = crb(s, full, sigma2);
    for (int keep : {40, 24, 13}) {
      std::vector<int> subset(rows.begin(), rows.begin() + keep);
      const CrbReport cur = crb(s, full.keep_rows(subset), sigma2);
      for (std::size_t k = 0; k < 2; ++k) {
        CHECK(cur.tau_s2[k] >= prev.tau_s2[k] * (1 - 1e-9));
        CHECK(cur.nu_hz2[k] >= prev.nu_hz2[k] * (1 - 1e-9));
      }
      prev = cur;
    }
  }
  SUBCASE("compressed data bound exceeds the near-Nyquist bound") {
    // Same physical noise N_0 B; per-entry variance is ||M||_F^2 / M times it.
    const double n0b = 1e-2;
    const MeasurementMatrix near = small_matrix(kRadar.nyq_count() - 1, 8);
    const MeasurementMatrix fifth = small_matrix(kRadar.nyq_count() / 5, 9);
    const CrbReport hi = crb(s, near, near.entries().squaredNorm() / near.rows() * n0b);
    const CrbReport lo = crb(s, fifth, fifth.entries().squaredNorm() / fifth.rows() * n0b);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(lo.tau_s2[k] >= hi.tau_s2[k]);
      CHECK(lo.nu_hz2[k] >= hi.nu_hz2[k]);
    }
  }
}

TEST_CASE("singular Fisher information") {
  const MeasurementMatrix mm = small_matrix();
  const Scene twin(kRadar, {{3.37e-6, 1234.0, {0.8, 0.3}}, {3.37e-6, 1234.0, {0.8, 0.3}}});
  const CrbReport r = crb(twin, mm, 1.0);
  CHECK(r.singular);
  CHECK(std::isinf(r.tau_s2[0]));
  CHECK(crb(Scene(kRadar, {}), mm, 1.0).tau_s2.empty());
}

TEST_CASE("empirical SNR") {
  const MeasurementMatrix mm = small_matrix(48, 2);
  const Scene s(kRadar, {{3.37e-6, 1234.0, {0.8, 0.3}}, {20.61e-6, -2100.0, {-0.2, 0.5}}});
  const Scene twice(kRadar, {{3.37e-6, 1234.0, {1.6, 0.6}}, {20.61e-6, -2100.0, {-0.4, 1.0}}});
  const NoiseSpec noise{snr_to_psd(s, mm, 10.0), kRadar.bandwidth_hz};
  Rng rng(1);
  const double measured = empirical_snr(s, mm, noise, 1000, rng);
  CHECK(std::abs(measured - 10.0) <= 0.3);
  Rng r1(2), r2(2);
  CHECK(empirical_snr(twice, mm, noise, 200, r1) - empirical_snr(s, mm, noise, 200, r2) ==
        doctest::Approx(20 * std::log10(2.0)).epsilon(0.1 / 6.02));
  CHECK(empirical_snr(Scene(kRadar, {}), mm, noise, 1, rng) == -std::numeric_limits<double>::infinity());
  CHECK(empirical_snr(s, mm, {0.0, kRadar.bandwidth_hz}, 1, rng) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(empirical_snr(s, mm, noise, 0, rng), Error);
}
