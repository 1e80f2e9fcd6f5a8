#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "coregen/corruption.hpp"

using namespace coregen;

namespace {

// Equal bucket occupancy fixture: bucket(j) = j % 4, bits with j % 16 < 4
// active (256 active and 768 inactive per bucket).
BucketAssignment round_robin_assignment() {
  std::vector<double> freqs(kFingerprintBits);
  const double values[4] = {0.005, 0.03, 0.1, 0.5};
  for (std::size_t j = 0; j < freqs.size(); ++j) freqs[j] = values[j % 4];
  return build_buckets(freqs, {});
}

Fingerprint striped_fingerprint() {
  Fingerprint fp(kFingerprintBits);
  for (std::size_t j = 0; j < kFingerprintBits; ++j) {
    if (j % 16 < 4) fp.set(j);
  }
  return fp;
}

BucketStats hand_stats() {
  BucketStats stats;
  stats.assignment = round_robin_assignment();
  const double eta_minus[4] = {0.8, 0.6, 0.4, 0.2};
  const double eta_plus[4] = {0.9, 0.5, 0.3, 0.1};
  for (int r = 0; r < kBucketCount; ++r) {
    stats.rates[r].eta_minus = eta_minus[r];
    stats.rates[r].eta_plus = eta_plus[r];
    stats.rates[r].recall = 1.0 - eta_minus[r];
    stats.rates[r].precision = 1.0 - eta_plus[r];
  }
  derive_weights(stats, 0.05, 1.0);
  return stats;
}

}  // namespace

TEST_CASE("bucket boundary hand cases") {
  const BucketBoundaries b;
  CHECK(BucketBoundaries::name(b.bucket_of(0.03)) == std::string("rare"));
  CHECK(BucketBoundaries::name(b.bucket_of(0.0)) == std::string("very_rare"));
  CHECK(BucketBoundaries::name(b.bucket_of(1.0)) == std::string("frequent"));
  CHECK(b.bucket_of(0.01) == 1);   // half-open intervals
  CHECK(b.bucket_of(0.05) == 2);
  CHECK(b.bucket_of(0.20) == 3);
  CHECK_THROWS_AS(b.bucket_of(1.5), std::invalid_argument);
}

TEST_CASE("invalid boundaries are rejected") {
  BucketBoundaries gap;
  gap.lo = {0.0, 0.02, 0.05, 0.20};
  gap.hi = {0.01, 0.05, 0.20, 1.0};
  CHECK_THROWS_AS(gap.validate(), std::invalid_argument);
  BucketBoundaries short_cover;
  short_cover.lo = {0.0, 0.01, 0.05, 0.20};
  short_cover.hi = {0.01, 0.05, 0.20, 0.9};
  CHECK_THROWS_AS(short_cover.validate(), std::invalid_argument);
}

TEST_CASE("table-like bucket sizes") {
  // 3422 / 527 / 122 / 25 bits per bucket.
  std::vector<double> freqs;
  for (int i = 0; i < 3422; ++i) freqs.push_back(0.003);
  for (int i = 0; i < 527; ++i) freqs.push_back(0.02);
  for (int i = 0; i < 122; ++i) freqs.push_back(0.1);
  for (int i = 0; i < 25; ++i) freqs.push_back(0.6);
  const BucketAssignment a = build_buckets(freqs, {});
  CHECK(a.bits_per_bucket == std::array<std::uint32_t, 4>{3422, 527, 122, 25});
}

TEST_CASE("estimate_bucket_stats matches a hand tally") {
  // 8 bits, two occupied buckets: bits 0-3 very rare, bits 4-7 frequent.
  std::vector<double> freqs = {0.005, 0.005, 0.005, 0.005, 0.5, 0.5, 0.5, 0.5};
  const BucketAssignment a = build_buckets(freqs, {});
  auto fp_of = [](std::initializer_list<std::uint32_t> bits) {
    Fingerprint fp(8);
    for (auto b : bits) fp.set(b);
    return fp;
  };
  std::vector<std::pair<Fingerprint, Fingerprint>> pairs;
  pairs.emplace_back(fp_of({0, 1, 4}), fp_of({0, 4, 5}));
  pairs.emplace_back(fp_of({2, 4, 5}), fp_of({0, 2, 5}));
  const BucketStats stats = estimate_bucket_stats(pairs, a);
  CHECK(stats.rates[0].precision == doctest::Approx(2.0 / 3.0));
  CHECK(stats.rates[0].recall == doctest::Approx(2.0 / 3.0));
  CHECK(stats.rates[3].precision == doctest::Approx(2.0 / 3.0));
  CHECK(stats.rates[3].recall == doctest::Approx(2.0 / 3.0));
  CHECK(stats.rates[0].eta_plus == doctest::Approx(1.0 / 3.0));
  CHECK(stats.rates[0].eta_minus == doctest::Approx(1.0 / 3.0));
  // Unoccupied buckets: undefined rates -> eta = 1 with warning flags.
  CHECK(stats.rates[1].precision_undefined);
  CHECK(stats.rates[1].recall_undefined);
  CHECK(stats.rates[1].eta_plus == 1.0);
  CHECK(stats.rates[2].eta_minus == 1.0);
}

TEST_CASE("perfect predictor has zero error tendencies") {
  const BucketAssignment a = round_robin_assignment();
  std::vector<std::pair<Fingerprint, Fingerprint>> pairs;
  pairs.emplace_back(striped_fingerprint(), striped_fingerprint());
  const BucketStats stats = estimate_bucket_stats(pairs, a);
  for (int r = 0; r < kBucketCount; ++r) {
    CHECK(stats.rates[r].eta_minus == 0.0);
    CHECK(stats.rates[r].eta_plus == 0.0);
  }
}

TEST_CASE("derive_weights hand vector") {
  BucketStats stats;
  stats.assignment = round_robin_assignment();
  const double eta_minus[4] = {0.8, 0.6, 0.4, 0.2};
  for (int r = 0; r < 4; ++r) {
    stats.rates[r].eta_minus = eta_minus[r];
    stats.rates[r].eta_plus = 0.3;  // all equal: degenerate family
  }
  derive_weights(stats, 0.05, 1.0);
  CHECK(stats.w_minus[0] == doctest::Approx(1.05).epsilon(1e-4));
  CHECK(stats.w_minus[1] == doctest::Approx(0.7167).epsilon(1e-4));
  CHECK(stats.w_minus[2] == doctest::Approx(0.3833).epsilon(1e-4));
  CHECK(stats.w_minus[3] == doctest::Approx(0.05).epsilon(1e-4));
  for (int r = 0; r < 4; ++r) CHECK(stats.w_plus[r] == 0.05);  // degenerate min == max
}

TEST_CASE("alpha zero gives flat weights") {
  BucketStats stats;
  stats.assignment = round_robin_assignment();
  const double eta[4] = {0.9, 0.1, 0.5, 0.3};
  for (int r = 0; r < 4; ++r) {
    stats.rates[r].eta_minus = eta[r];
    stats.rates[r].eta_plus = eta[3 - r];
  }
  derive_weights(stats, 0.07, 0.0);
  for (int r = 0; r < 4; ++r) {
    CHECK(stats.w_minus[r] == 0.07);
    CHECK(stats.w_plus[r] == 0.07);
  }
}

TEST_CASE("corrupt with closed gate returns the input") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 0.0;
  Rng rng(1);
  const Fingerprint fp = striped_fingerprint();
  for (int i = 0; i < 100; ++i) {
    const CorruptionOutcome out = corrupt(fp, stats, config, rng);
    CHECK_FALSE(out.gate);
    CHECK(out.fingerprint == fp);
  }
}

TEST_CASE("corrupt on an all-zero fingerprint is the identity") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 1.0;
  Rng rng(2);
  const CorruptionOutcome out = corrupt(Fingerprint(kFingerprintBits), stats, config, rng);
  CHECK(out.gate);
  CHECK(out.k_eff == 0);
  CHECK(out.fingerprint == Fingerprint(kFingerprintBits));
}

TEST_CASE("corrupt is deterministic per seed") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 1.0;
  const Fingerprint fp = striped_fingerprint();
  Rng a(42), b(42), c(43);
  const Fingerprint fa = corrupt(fp, stats, config, a).fingerprint;
  const Fingerprint fb = corrupt(fp, stats, config, b).fingerprint;
  const Fingerprint fc = corrupt(fp, stats, config, c).fingerprint;
  CHECK(fa == fb);
  CHECK(fa != fc);
}

TEST_CASE("corrupt preserves popcount when fired") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 1.0;
  Rng rng(7);
  const Fingerprint fp = striped_fingerprint();
  for (int i = 0; i < 2000; ++i) {
    const CorruptionOutcome out = corrupt(fp, stats, config, rng);
    REQUIRE(out.fingerprint.popcount() == fp.popcount());
    CHECK(out.k_eff >= 1);
    CHECK(out.k_eff <= 8);
  }
}

TEST_CASE("gate rate approaches p_corr") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 0.3;
  Rng rng(11);
  const Fingerprint fp = striped_fingerprint();
  const int n = 20000;
  int fired = 0;
  for (int i = 0; i < n; ++i) fired += corrupt(fp, stats, config, rng).gate;
  const double rate = static_cast<double>(fired) / n;
  const double sigma = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(rate - 0.3) < 3.0 * sigma);
}

TEST_CASE("drop and add frequencies track bucket weights") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 1.0;
  Rng rng(17);
  const Fingerprint fp = striped_fingerprint();
  std::array<double, 4> drops{}, adds{};
  for (int i = 0; i < 20000; ++i) {
    const CorruptionOutcome out = corrupt(fp, stats, config, rng);
    for (std::uint32_t j = 0; j < kFingerprintBits; ++j) {
      if (fp.test(j) && !out.fingerprint.test(j)) drops[j % 4] += 1.0;
      if (!fp.test(j) && out.fingerprint.test(j)) adds[j % 4] += 1.0;
    }
  }
  for (int r = 0; r < 3; ++r) {
    const double drop_ratio = drops[r] / drops[3];
    const double w_ratio = stats.w_minus[r] / stats.w_minus[3];
    CHECK(drop_ratio == doctest::Approx(w_ratio).epsilon(0.10));
    const double add_ratio = adds[r] / adds[3];
    const double wp_ratio = stats.w_plus[r] / stats.w_plus[3];
    CHECK(add_ratio == doctest::Approx(wp_ratio).epsilon(0.10));
  }
}

TEST_CASE("clipped poisson budget mean") {
  const BucketStats stats = hand_stats();
  CorruptionConfig config;
  config.p_corr = 1.0;
  config.k_min = 1;
  config.k_max = 8;
  Rng rng(23);
  const Fingerprint fp = striped_fingerprint();
  double total = 0.0;
  const int n = 30000;
  for (int i = 0; i < n; ++i) total += corrupt(fp, stats, config, rng).k_eff;

  // Analytic mean of clip(Poisson(4), 1, 8).
  const double lambda = 4.0;
  double mean = 0.0, pmf = std::exp(-lambda), tail = 1.0 - pmf;
  mean += 1.0 * pmf;  // k = 0 clips to 1
  for (int k = 1; k <= 7; ++k) {
    pmf *= lambda / k;
    mean += k * pmf;
    tail -= pmf;
  }
  mean += 8.0 * tail;  // k >= 8 clips to 8
  CHECK(total / n == doctest::Approx(mean).epsilon(0.02));
}

TEST_CASE("stats json round trip") {
  const BucketStats stats = hand_stats();
  const BucketStats back = BucketStats::from_json(stats.to_json());
  CHECK(back.weights_derived);
  for (int r = 0; r < kBucketCount; ++r) {
    CHECK(back.rates[r].eta_minus == stats.rates[r].eta_minus);
    CHECK(back.rates[r].eta_plus == stats.rates[r].eta_plus);
    CHECK(back.w_minus[r] == stats.w_minus[r]);
    CHECK(back.w_plus[r] == stats.w_plus[r]);
  }
  CHECK(back.assignment.bucket_of_bit == stats.assignment.bucket_of_bit);
}

TEST_CASE("published precisions ingest exactly") {
  const std::string text = R"({
    "d": 4096,
    "boundaries": [[0.0, 0.01], [0.01, 0.05], [0.05, 0.20], [0.20, 1.0]],
    "buckets": [
      {"precision": 0.198}, {"precision": 0.314},
      {"precision": 0.428}, {"precision": 0.692}
    ]
  })";
  const BucketStats stats = BucketStats::from_json(text);
  CHECK(stats.rates[0].eta_plus == 1.0 - 0.198);
  CHECK(stats.rates[1].eta_plus == 1.0 - 0.314);
  CHECK(stats.rates[2].eta_plus == 1.0 - 0.428);
  CHECK(stats.rates[3].eta_plus == 1.0 - 0.692);
  CHECK_FALSE(stats.weights_derived);
}
