#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "kmcsvm/dataset.hpp"
#include "kmcsvm/rng.hpp"
#include "test_util.hpp"

using namespace kmcsvm;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "test");
}

std::string serialize(const Dataset& ds) {
  std::ostringstream out;
  write_csv(ds, out);
  return out.str();
}

}  // namespace

TEST_CASE("csv parse preserves row order") {
  const Dataset ds = parse("speed_kmh,throttle,label\n30.0,0.2,-1\n85.0,0.9,1\n");
  REQUIRE(ds.size() == 2);
  CHECK(ds.samples[0].speed == 30.0);
  CHECK(ds.samples[0].throttle == 0.2);
  CHECK(ds.samples[0].label == kModerateLabel);
  CHECK(ds.samples[1].speed == 85.0);
  CHECK(ds.samples[1].label == kAggressiveLabel);
}

TEST_CASE("csv accepts CRLF") {
  const Dataset ds = parse("speed_kmh,throttle,label\r\n30.0,0.2,-1\r\n");
  CHECK(ds.size() == 1);
}

TEST_CASE("header-only file is an empty dataset error") {
  CHECK_THROWS_WITH_AS(parse("speed_kmh,throttle,label\n"), doctest::Contains("empty dataset"),
                       Error);
}

TEST_CASE("malformed rows cite their line number") {
  CHECK_THROWS_WITH_AS(parse("speed_kmh,throttle,label\n30.0,0.2,-1\n40.0,1.3,1\n"),
                       doctest::Contains("line 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse("speed_kmh,throttle,label\n-3.0,0.2,-1\n"),
                       doctest::Contains("negative speed"), ParseError);
  CHECK_THROWS_WITH_AS(parse("speed_kmh,throttle,label\n3.0,0.2,2\n"),
                       doctest::Contains("label"), ParseError);
  CHECK_THROWS_WITH_AS(parse("speed_kmh,throttle,label\n3.0,0.2\n"),
                       doctest::Contains("3 fields"), ParseError);
  CHECK_THROWS_AS(parse("speed,throttle,label\n1,0.5,1\n"), ParseError);
}

TEST_CASE("load_csv reports missing files") {
  CHECK_THROWS_AS(load_csv("/nonexistent/path.csv"), Error);
}

TEST_CASE("write_csv emits header plus one row per sample") {
  Dataset ds;
  ds.samples = {{30.0, 0.2, kModerateLabel}, {85.0, 0.9, kAggressiveLabel}};
  const std::string text = serialize(ds);
  CHECK(text == "speed_kmh,throttle,label\n30,0.2,-1\n85,0.9,1\n");
}

TEST_CASE("empty dataset refuses to serialize") {
  CHECK_THROWS_AS(serialize(Dataset{}), Error);
}

TEST_CASE("csv round-trip is the identity") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset ds;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      ds.samples.push_back({rng.uniform(0.0, 140.0), rng.uniform01(),
                            rng.below(2) == 0 ? kAggressiveLabel : kModerateLabel});
    }
    const Dataset back = parse(serialize(ds));
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(back.samples[i].speed == ds.samples[i].speed);
      CHECK(back.samples[i].throttle == ds.samples[i].throttle);
      CHECK(back.samples[i].label == ds.samples[i].label);
    }
  }
}

TEST_CASE("save_csv/load_csv round-trip through the filesystem") {
  const Dataset ds = test::two_blob_dataset(5, 7);
  const auto path = std::filesystem::temp_directory_path() / "kmcsvm_roundtrip.csv";
  save_csv(ds, path.string());
  const Dataset back = load_csv(path.string());
  CHECK(dataset_checksum(back) == dataset_checksum(ds));
  std::filesystem::remove(path);
}

TEST_CASE("partition splits 10 samples into five pairs") {
  const Dataset ds = test::two_blob_dataset(5, 1);
  const SubsetPartition part = partition(ds, 5, 99);
  std::vector<int> sizes(5, 0);
  for (int a : part.assignments) {
    REQUIRE(a >= 0);
    REQUIRE(a < 5);
    ++sizes[a];
  }
  for (int s : sizes) CHECK(s == 2);
}

TEST_CASE("partition remainder rule gives sizes within one") {
  Dataset ds = test::two_blob_dataset(5, 1);
  ds.samples.push_back({50.0, 0.5, kAggressiveLabel});  // 11 samples
  const SubsetPartition part = partition(ds, 5, 3);
  std::vector<int> sizes(5, 0);
  for (int a : part.assignments) ++sizes[a];
  std::multiset<int> got(sizes.begin(), sizes.end());
  CHECK(got == std::multiset<int>{2, 2, 2, 2, 3});
}

TEST_CASE("partition is deterministic per seed") {
  const Dataset ds = test::two_blob_dataset(20, 5);
  const auto a = partition(ds, 7, 1234);
  const auto b = partition(ds, 7, 1234);
  CHECK(a.assignments == b.assignments);
  const auto c = partition(ds, 7, 1235);
  CHECK(a.assignments != c.assignments);
}

TEST_CASE("partition rejects out-of-range subset counts") {
  const Dataset ds = test::two_blob_dataset(5, 1);
  CHECK_THROWS_AS(partition(ds, 1, 0), Error);
  CHECK_THROWS_AS(partition(ds, 11, 0), Error);
}

TEST_CASE("partition is a true partition for random shapes") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(60));
    Dataset ds;
    for (int i = 0; i < n; ++i) ds.samples.push_back({10.0 + i, 0.5, kAggressiveLabel});
    const int z = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const SubsetPartition part = partition(ds, z, rng.next_u64());
    REQUIRE(part.assignments.size() == ds.size());
    std::vector<int> sizes(z, 0);
    for (int a : part.assignments) {
      REQUIRE(a >= 0);
      REQUIRE(a < z);
      ++sizes[a];
    }
    int lo = n, hi = 0;
    for (int s : sizes) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    CHECK(hi - lo <= 1);
    CHECK(lo >= 1);
  }
}

TEST_CASE("contiguous partition keeps temporal blocks") {
  Dataset ds;
  for (int i = 0; i < 9; ++i) ds.samples.push_back({double(i), 0.5, kAggressiveLabel});
  const SubsetPartition part = partition(ds, 3, 0, /*contiguous=*/true);
  CHECK(part.assignments == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2});
}

TEST_CASE("standard scaler centers and scales, and inverts") {
  const Dataset ds = test::two_blob_dataset(100, 11);
  const AffineScaler sc = fit_standard_scaler(ds);
  double mean_s = 0.0, mean_t = 0.0;
  for (const Sample& s : ds.samples) {
    const FeaturePoint p = sc.apply(s.point());
    mean_s += p.speed;
    mean_t += p.throttle;
  }
  mean_s /= static_cast<double>(ds.size());
  mean_t /= static_cast<double>(ds.size());
  CHECK(std::abs(mean_s) < 1e-9);
  CHECK(std::abs(mean_t) < 1e-9);

  const FeaturePoint original{72.5, 0.31};
  const FeaturePoint back = sc.invert(sc.apply(original));
  CHECK(back.speed == doctest::Approx(original.speed).epsilon(1e-12));
  CHECK(back.throttle == doctest::Approx(original.throttle).epsilon(1e-12));
}

TEST_CASE("checksum detects any change") {
  Dataset ds = test::two_blob_dataset(10, 3);
  const std::uint64_t sum = dataset_checksum(ds);
  CHECK(dataset_checksum(ds) == sum);
  ds.samples[4].throttle += 1e-12;
  CHECK(dataset_checksum(ds) != sum);
}
