#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "kmcsvm/dataset.hpp"
#include "kmcsvm/model_selection.hpp"
#include "kmcsvm/rng.hpp"
#include "test_util.hpp"

using namespace kmcsvm;

TEST_CASE("default grid has 256 cells in M-major order") {
  const GridSpec spec;
  const auto cells = make_grid(spec);
  REQUIRE(cells.size() == 256);
  CHECK(cells.size() ==
        static_cast<std::size_t>(spec.m_range.count()) * spec.n_range.count());

  // M-major: first 16 cells share M = -5 while N walks -5..10
  for (int i = 0; i < 16; ++i) {
    CHECK(cells[i].m == -5);
    CHECK(cells[i].n == -5 + i);
  }
  CHECK(cells[16].m == -4);

  for (const auto& cell : cells) {
    CHECK(cell.c > 0.0);
    CHECK(cell.gamma > 0.0);
  }
}

TEST_CASE("grid cell (M=7, N=4) is exactly (C=128, gamma=2^-9)") {
  const auto cells = make_grid(GridSpec{});
  bool found = false;
  for (const auto& cell : cells) {
    if (cell.m == 7 && cell.n == 4) {
      found = true;
      CHECK(cell.c == 128.0);
      CHECK(cell.gamma == 0.001953125);  // 2^-9 exactly
    }
    if (cell.m == 0 && cell.n == -5) {
      CHECK(cell.gamma == 512.0);  // exponent -(2*(-5)+1) = 9
    }
    if (cell.m == 0 && cell.n == 0) {
      CHECK(cell.c == 1.0);
      CHECK(cell.gamma == 0.5);  // the usual starting cell (2^0, 2^-1)
    }
  }
  CHECK(found);
}

TEST_CASE("make_grid validates its spec") {
  GridSpec bad;
  bad.c_base = 1.0;
  CHECK_THROWS_AS(make_grid(bad), Error);
  GridSpec empty;
  empty.m_range = {5, 4, 1};
  CHECK_THROWS_AS(make_grid(empty), Error);
  GridSpec bad_step;
  bad_step.n_range = {0, 4, 0};
  CHECK_THROWS_AS(make_grid(bad_step), Error);
}

TEST_CASE("cv_score is perfect on well-separated blobs") {
  const Dataset ds = test::two_blob_dataset(40, 99);
  const SubsetPartition part = partition(ds, 4, 7);
  const double score = cv_score(ds, 1.0, 0.05, part, std::nullopt, 11);
  CHECK(score == 1.0);
}

TEST_CASE("cv_score runs one cycle per fold") {
  // Contiguous folds over separated blobs, with exactly one mislabeled
  // sample planted in fold 2: the mean must be ((z-1) + 2/3) / z.
  Dataset ds;
  for (int f = 0; f < 4; ++f) {
    for (int i = 0; i < 3; ++i) {
      const bool fast = i % 2 == 0;
      ds.samples.push_back({fast ? 90.0 + f : 20.0 + f, fast ? 0.9 : 0.1,
                            fast ? kAggressiveLabel : kModerateLabel});
    }
  }
  ds.samples[2 * 3 + 1].label = kAggressiveLabel;  // fold 2, a slow sample mislabeled
  const SubsetPartition part = partition(ds, 4, 0, /*contiguous=*/true);
  const double score = cv_score(ds, 10.0, 0.01, part, std::nullopt, 5);
  CHECK(score == doctest::Approx((3.0 + 2.0 / 3.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("cv_score on label-randomized data sits near chance") {
  double total = 0.0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    Dataset ds;
    for (int i = 0; i < 160; ++i) {
      // features carry no label signal; labels alternate for exact balance
      ds.samples.push_back({rng.uniform(20.0, 100.0), rng.uniform01(),
                            i % 2 == 0 ? kAggressiveLabel : kModerateLabel});
    }
    const SubsetPartition part = partition(ds, 4, rng.next_u64());
    total += cv_score(ds, 1.0, 0.05, part, std::nullopt, rng.next_u64());
  }
  const double mean = total / seeds;
  CHECK(mean > 0.4);
  CHECK(mean < 0.6);
}

TEST_CASE("cv_score is invariant under fold relabeling") {
  const Dataset ds = test::two_blob_dataset(30, 77, 25.0);
  const SubsetPartition part = partition(ds, 5, 3);
  const double base = cv_score(ds, 2.0, 0.02, part, std::nullopt, 21);
  const double again = cv_score(ds, 2.0, 0.02, part, std::nullopt, 21);
  CHECK(base == again);

  // Permuting subset indices changes nothing but fold visit order; on
  // separable data every fold scores 1.0 either way.
  SubsetPartition permuted = part;
  const int map[5] = {3, 0, 4, 2, 1};
  for (int& a : permuted.assignments) a = map[a];
  const double perm = cv_score(ds, 2.0, 0.02, permuted, std::nullopt, 21);
  CHECK(perm == base);
}

TEST_CASE("cv_score skips degenerate folds and fails when all are") {
  // Two contiguous folds aligned with the classes: each training remainder
  // is single-class.
  Dataset ds;
  for (int i = 0; i < 6; ++i) ds.samples.push_back({90.0 + i, 0.9, kAggressiveLabel});
  for (int i = 0; i < 6; ++i) ds.samples.push_back({20.0 + i, 0.1, kModerateLabel});
  const SubsetPartition part = partition(ds, 2, 0, /*contiguous=*/true);
  CHECK_THROWS_WITH_AS(cv_score(ds, 1.0, 0.1, part, std::nullopt, 0),
                       doctest::Contains("degenerate"), Error);
}

TEST_CASE("grid_search restricted to one cell returns that cell") {
  const Dataset ds = test::two_blob_dataset(30, 5);
  GridSpec spec;
  spec.m_range = {3, 3, 1};
  spec.n_range = {2, 2, 1};
  const GridResult result = grid_search(ds, spec, 3, std::nullopt, 17);
  REQUIRE(result.scores.size() == 1);
  CHECK(result.best_m == 3);
  CHECK(result.best_n == 2);
  CHECK(result.best_c == 8.0);
  CHECK(result.best_gamma == 0.03125);
  CHECK(result.best_score == result.scores[0].score);
}

TEST_CASE("grid_search best score dominates every cell") {
  const Dataset ds = test::two_blob_dataset(50, 123, 35.0);
  GridSpec spec;
  spec.m_range = {0, 7, 1};
  spec.n_range = {0, 4, 1};
  const GridResult result = grid_search(ds, spec, 3, std::nullopt, 9);
  REQUIRE(result.scores.size() == 8 * 5);

  double max_score = 0.0;
  double initial_cell_score = -1.0;
  for (const CellScore& cs : result.scores) {
    REQUIRE(cs.ok);
    CHECK(cs.score >= 0.0);
    CHECK(cs.score <= 1.0);
    max_score = std::max(max_score, cs.score);
    if (cs.cell.m == 0 && cs.cell.n == 0) initial_cell_score = cs.score;
  }
  CHECK(result.best_score == max_score);
  CHECK(initial_cell_score >= 0.0);
  CHECK(result.best_score >= initial_cell_score);
}

TEST_CASE("grid_search tie-break prefers smallest C then largest gamma") {
  // Well-separated data scores 1.0 on every cell of this sub-grid (gammas
  // matched to the km/h feature scale), so the winner must be the first
  // cell in M-major order: smallest C, then largest gamma.
  const Dataset ds = test::two_blob_dataset(30, 2);
  GridSpec spec;
  spec.m_range = {0, 2, 1};
  spec.n_range = {4, 6, 1};  // gamma in {2^-9, 2^-11, 2^-13}
  const GridResult result = grid_search(ds, spec, 3, std::nullopt, 4);
  for (const CellScore& cs : result.scores) REQUIRE(cs.score == 1.0);
  CHECK(result.best_m == 0);
  CHECK(result.best_n == 4);
  CHECK(result.best_gamma == 0.001953125);
}

TEST_CASE("grid_search is deterministic and thread-count independent") {
  const Dataset ds = test::two_blob_dataset(30, 55, 20.0);
  GridSpec spec;
  spec.m_range = {0, 3, 1};
  spec.n_range = {0, 2, 1};

  setenv("KMCSVM_THREADS", "1", 1);
  const GridResult serial = grid_search(ds, spec, 3, KRule::sqrt_n_over_3(), 42);
  setenv("KMCSVM_THREADS", "4", 1);
  const GridResult parallel = grid_search(ds, spec, 3, KRule::sqrt_n_over_3(), 42);
  unsetenv("KMCSVM_THREADS");

  REQUIRE(serial.scores.size() == parallel.scores.size());
  for (std::size_t i = 0; i < serial.scores.size(); ++i) {
    CHECK(serial.scores[i].score == parallel.scores[i].score);
  }
  CHECK(serial.best_score == parallel.best_score);
  CHECK(serial.best_m == parallel.best_m);
  CHECK(serial.best_n == parallel.best_n);
}

TEST_CASE("grid TSV round-trips") {
  const Dataset ds = test::two_blob_dataset(20, 5);
  GridSpec spec;
  spec.m_range = {0, 1, 1};
  spec.n_range = {0, 1, 1};
  const GridResult result = grid_search(ds, spec, 2, std::nullopt, 3);

  std::ostringstream out;
  write_grid_tsv(result, out);
  std::istringstream in(out.str());
  const GridResult back = read_grid_tsv(in, "grid");
  REQUIRE(back.scores.size() == result.scores.size());
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    CHECK(back.scores[i].cell.m == result.scores[i].cell.m);
    CHECK(back.scores[i].cell.gamma == result.scores[i].cell.gamma);
    CHECK(back.scores[i].score == result.scores[i].score);
  }
  CHECK(back.best_score == result.best_score);
}
