#include <doctest.h>

#include <algorithm>

#include "subnyq/aic.hpp"
#include "subnyq/doppler.hpp"
#include "subnyq/error.hpp"
#include "support.hpp"

using namespace subnyq;

namespace {

const RadarParams kRadar{1e6, 8e-6, 64e-6, 32};  // N = 64, L = 32
const double kCell = kRadar.doppler_cell_hz();

DataMatrix noiseless(const Scene& s, int rows = 16, std::uint64_t seed = 4) {
  const MeasurementMatrix mm = make_measurement(s.params(), {seed, MatrixKind::fourier_select, rows, s.params().nyq_count()});
  Rng rng(0);
  return assemble_data(s, mm, {0.0, s.params().bandwidth_hz}, rng).data;
}

// One target per Doppler, delays spread over the unambiguous range.
Scene spread(const std::vector<double>& dopplers, const RadarParams& p = kRadar, double phase = 0.3) {
  std::vector<Target> ts;
  const double step = p.max_delay_s() / (static_cast<double>(dopplers.size()) + 1);
  for (std::size_t i = 0; i < dopplers.size(); ++i) {
    ts.push_back({step * (static_cast<double>(i) + 0.37), dopplers[i], std::polar(0.5 + 0.1 * static_cast<double>(i), phase * static_cast<double>(i))});
  }
  return Scene(p, ts);
}

void check_close(const std::vector<double>& got, std::vector<double> want, double tol) {
  std::sort(want.begin(), want.end());
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (DopplerMethod m : {DopplerMethod::esprit, DopplerMethod::esprit_fb, DopplerMethod::dft}) {
    CHECK(doppler_method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(doppler_method_from_string("music"), Error);
}

TEST_CASE("esprit recovers noiseless Dopplers") {
  SUBCASE("single off-grid source") {
    const DopplerEstimate e = esprit_doppler(noiseless(spread({2.5 * kCell})), 1);
    check_close(e.dopplers_hz, {2.5 * kCell}, 1e-9 * kCell);
    CHECK(e.spatial_freqs[0] == doctest::Approx(2.5 * kCell * kRadar.pri_s));
    CHECK(e.method == DopplerMethod::esprit);
  }
  SUBCASE("three sources") {
    const std::vector<double> nu{-7.3 * kCell, 1.6 * kCell, 11.2 * kCell};
    check_close(esprit_doppler(noiseless(spread(nu)), 3).dopplers_hz, nu, 1e-8 * kCell);
  }
  SUBCASE("zero Doppler") {
    check_close(esprit_doppler(noiseless(spread({0.0})), 1).dopplers_hz, {0.0}, 1e-9 * kCell);
  }
  SUBCASE("eigenvalues are descending") {
    const RVector ev = esprit_doppler(noiseless(spread({-3.0 * kCell, 4.4 * kCell})), 2).eigenvalues;
    REQUIRE(ev.size() == kRadar.num_pulses);
    for (Eigen::Index k = 1; k < ev.size(); ++k) CHECK(ev(k) <= ev(k - 1));
  }
  SUBCASE("order zero") {
    CHECK(esprit_doppler(noiseless(spread({0.0})), 0).dopplers_hz.empty());
  }
}

TEST_CASE("esprit rejects bad orders") {
  const DataMatrix s = noiseless(spread({2.5 * kCell}));
  CHECK_THROWS_AS(esprit_doppler(s, kRadar.num_pulses), Error);
  CHECK_THROWS_AS(esprit_doppler(s, -1), Error);
  try {
    esprit_doppler(s, 2);
    FAIL("rank-one data accepted at order 2");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_subspace);
  }
}

TEST_CASE("coherent sources need forward-backward smoothing") {
  // Same delay, two Dopplers: the source waveforms are identical up to a gain.
  const std::vector<double> nu{-4.3 * kCell, 6.1 * kCell};
  const Scene s(kRadar, {{10e-6, nu[0], {1.0, 0.0}}, {10e-6, nu[1], {0.0, 0.8}}});
  const DataMatrix d = noiseless(s);
  try {
    esprit_doppler(d, 2);
    FAIL("coherent data accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_subspace);
  }
  const DopplerEstimate fb = esprit_fb_doppler(d, 2);
  CHECK(fb.method == DopplerMethod::esprit_fb);
  CHECK(fb.eigenvalues.size() == default_subarray_len(kRadar.num_pulses));
  check_close(fb.dopplers_hz, nu, 1e-6 * kCell);
}

TEST_CASE("forward-backward agrees with plain esprit on incoherent data") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> nu;
    while (nu.size() < 3) {
      const double v = testing::uniform(rng, -12.0, 12.0) * kCell;
      if (std::all_of(nu.begin(), nu.end(), [&](double x) { return std::abs(x - v) > 2 * kCell; })) nu.push_back(v);
    }
    const DataMatrix d = noiseless(spread(nu, kRadar, testing::uniform(rng, 0, 3)));
    const auto a = esprit_doppler(d, 3).dopplers_hz;
    const auto b = esprit_fb_doppler(d, 3).dopplers_hz;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6 * kCell);
  }
  const DataMatrix one = noiseless(spread({-2.2 * kCell}));
  CHECK(std::abs(esprit_fb_doppler(one, 1).dopplers_hz[0] - esprit_doppler(one, 1).dopplers_hz[0]) < 1e-9 * kCell);
}

TEST_CASE("forward-backward subarray checks") {
  const DataMatrix d = noiseless(spread({1.0 * kCell}));
  CHECK_THROWS_AS(esprit_fb_doppler(d, 1, kRadar.num_pulses + 1), Error);
  CHECK_THROWS_AS(esprit_fb_doppler(d, 4, 4), Error);
  CHECK(default_subarray_len(50) == 37);
  CHECK(default_subarray_len(100) == 75);
}

TEST_CASE("dft baseline") {
  check_close(dft_doppler(noiseless(spread({7.0 * kCell})), 1).dopplers_hz, {7.0 * kCell}, 1e-9);

  const double got = dft_doppler(noiseless(spread({7.5 * kCell})), 1).dopplers_hz.at(0);
  CHECK((std::abs(got - 7 * kCell) < 1e-9 || std::abs(got - 8 * kCell) < 1e-9));

  check_close(dft_doppler(noiseless(spread({-9.0 * kCell, -7.0 * kCell})), 2).dopplers_hz,
              {-9.0 * kCell, -7.0 * kCell}, 1e-9);
  // Negative frequencies map into (-1/2T, 1/2T).
  check_close(dft_doppler(noiseless(spread({-15.0 * kCell})), 1).dopplers_hz, {-15.0 * kCell}, 1e-9);
  CHECK(dft_doppler(noiseless(spread({0.0})), 0).dopplers_hz.empty());
}

TEST_CASE("dft and esprit agree within half a cell on grid") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> nu;
    while (nu.size() < 3) {
      const double v = static_cast<double>(static_cast<int>(rng() % 29) - 14) * kCell;
      if (std::all_of(nu.begin(), nu.end(), [&](double x) { return std::abs(x - v) >= 2 * kCell; })) nu.push_back(v);
    }
    const DataMatrix d = noiseless(spread(nu));
    const auto a = esprit_doppler(d, 3).dopplers_hz;
    const auto b = dft_doppler(d, 3).dopplers_hz;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) <= 0.5 * kCell);
  }
}

TEST_CASE("doppler estimate ignores delays and gains") {
  const std::vector<double> nu{-5.2 * kCell, 0.7 * kCell, 9.9 * kCell};
  const auto ref = esprit_doppler(noiseless(spread(nu)), 3).dopplers_hz;
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Target> ts;
    for (double v : nu) {
      ts.push_back({testing::uniform(rng, 0, kRadar.max_delay_s()), v,
                    std::polar(testing::uniform(rng, 0.1, 1), testing::uniform(rng, 0, 6.28))});
    }
    const auto got = esprit_doppler(noiseless(Scene(kRadar, ts)), 3).dopplers_hz;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(got[i] - ref[i]) < 1e-6 * kCell);
  }
}

TEST_CASE("conjugated data negates spatial frequencies") {
  const std::vector<double> nu{-5.2 * kCell, 0.7 * kCell, 9.9 * kCell};
  DataMatrix d = noiseless(spread(nu));
  const auto a = esprit_doppler(d, 3).spatial_freqs;
  d.entries = d.entries.conjugate();
  const auto b = esprit_doppler(d, 3).spatial_freqs;
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a[i] + b[2 - i]) < 1e-9);
}

TEST_CASE("model order by MDL") {
  CHECK(estimate_model_order(noiseless(spread({-3.1 * kCell, 4.2 * kCell}))) == 2);

  std::vector<double> many;
  for (int i = 0; i < kRadar.num_pulses - 2; ++i) many.push_back((i - 15) * kCell + 0.3 * kCell);
  CHECK(estimate_model_order(noiseless(spread(many), 60)) == kRadar.num_pulses - 2);

  // Pure noise; M >= L so the sample covariance has full rank.
  const MeasurementMatrix mm = make_measurement(kRadar, {4, MatrixKind::fourier_select, 60, 64});
  Rng rng(17);
  int zeros = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    CMatrix n(60, kRadar.num_pulses);
    for (int l = 0; l < kRadar.num_pulses; ++l) n.col(l) = compress(mm, nyquist_noise(kRadar, {1e-6, kRadar.bandwidth_hz}, rng));
    if (estimate_model_order(DataMatrix{n, kRadar, 4.0}) == 0) ++zeros;
  }
  CHECK(zeros >= 0.9 * trials);

  CHECK(estimate_model_order(DataMatrix{CMatrix::Zero(16, kRadar.num_pulses), kRadar, 4.0}) == 0);
}

TEST_CASE("noise variance estimate") {
  const Scene s = spread({-3.1 * kCell, 4.2 * kCell});
  const MeasurementMatrix mm = make_measurement(kRadar, {4, MatrixKind::fourier_select, 60, 64});
  const NoiseSpec noise{1e-7, kRadar.bandwidth_hz};
  Rng rng(3);
  const DataMatrix d = assemble_data(s, mm, noise, rng).data;
  // Sample covariance eigenvalues spread around sigma^2 (Marchenko-Pastur).
  CHECK(estimate_noise_variance(d, 2) == doctest::Approx(noise.compressed_variance(64, 60)).epsilon(0.1));
}

TEST_CASE("merge close estimates") {
  CHECK(merge_close({}, 1.0).empty());
  const auto m = merge_close({10.0, 10.4, 20.0, 30.0, 30.2}, 0.5);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == doctest::Approx(10.2));
  CHECK(m[1] == 20.0);
  CHECK(m[2] == doctest::Approx(30.1));
  CHECK(merge_close({1.0, 1.0}, 0.0).size() == 1);
  CHECK(merge_close({1.0, 2.0}, 0.0).size() == 2);
}
