#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "metrics.hpp"
#include "common.hpp"

using namespace srnet;
using metrics::BinaryMask;

namespace {

BinaryMask mask_from(std::initializer_list<std::initializer_list<int>> rows) {
  BinaryMask m;
  m.h = static_cast<int>(rows.size());
  m.w = static_cast<int>(rows.begin()->size());
  for (const auto& row : rows)
    for (int v : row) m.v.push_back(static_cast<uint8_t>(v));
  return m;
}

// Exhaustive distance-transform oracle: full per-pixel distance maps to each
// boundary set, then the threshold counts.
double contour_f_oracle(const BinaryMask& pred, const BinaryMask& gt,
                        double tol) {
  const auto pb = metrics::boundary_pixels(pred);
  const auto gb = metrics::boundary_pixels(gt);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  const int h = pred.h, w = pred.w;
  auto dist_map = [&](const std::vector<std::pair<int, int>>& set) {
    std::vector<double> d(static_cast<size_t>(h) * w, 1e18);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (const auto& [by, bx] : set)
          d[static_cast<size_t>(y) * w + x] =
              std::min(d[static_cast<size_t>(y) * w + x],
                       std::sqrt(double((y - by) * (y - by) +
                                        (x - bx) * (x - bx))));
    return d;
  };
  const auto dg = dist_map(gb);
  const auto dp = dist_map(pb);
  int pm = 0, gm = 0;
  for (const auto& [y, x] : pb)
    if (dg[static_cast<size_t>(y) * w + x] <= tol) ++pm;
  for (const auto& [y, x] : gb)
    if (dp[static_cast<size_t>(y) * w + x] <= tol) ++gm;
  const double precision = double(pm) / double(pb.size());
  const double recall = double(gm) / double(gb.size());
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

}  // namespace

TEST_CASE("jaccard basics") {
  BinaryMask a = mask_from({{1, 1, 0}, {0, 0, 0}});
  BinaryMask b = mask_from({{0, 1, 1}, {0, 0, 0}});
  SUBCASE("identical nonempty masks score 1") {
    CHECK(metrics::jaccard(a, a) == doctest::Approx(1.0));
  }
  SUBCASE("disjoint nonempty masks score 0") {
    BinaryMask c = mask_from({{0, 0, 0}, {1, 1, 0}});
    CHECK(metrics::jaccard(a, c) == doctest::Approx(0.0));
  }
  SUBCASE("2x1 rectangles overlapping in 1 of 3 union pixels score 1/3") {
    CHECK(metrics::jaccard(a, b) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("both empty masks score 1 by definition") {
    BinaryMask e = mask_from({{0, 0, 0}, {0, 0, 0}});
    CHECK(metrics::jaccard(e, e) == doctest::Approx(1.0));
  }
  SUBCASE("extent mismatch is rejected") {
    BinaryMask wrong = mask_from({{1, 0}});
    CHECK_THROWS_AS(metrics::jaccard(a, wrong), Error);
  }
}

TEST_CASE("jaccard monotonicity for nested predictions growing toward gt") {
  Rng rng(91);
  const int h = 8, w = 8;
  BinaryMask gt{h, w, std::vector<uint8_t>(size_t(h) * w, 0)};
  for (int y = 2; y < 7; ++y)
    for (int x = 1; x < 6; ++x) gt.v[size_t(y) * w + x] = 1;
  // grow pred one gt-pixel at a time; J must never decrease
  BinaryMask pred{h, w, std::vector<uint8_t>(size_t(h) * w, 0)};
  double last = metrics::jaccard(pred, gt);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!gt.v[size_t(y) * w + x]) continue;
      pred.v[size_t(y) * w + x] = 1;
      const double j = metrics::jaccard(pred, gt);
      CHECK(j >= last - 1e-12);
      last = j;
    }
  CHECK(last == doctest::Approx(1.0));
}

TEST_CASE("contour_f basics") {
  BinaryMask a = mask_from({{0, 0, 0, 0, 0},
                            {0, 1, 1, 1, 0},
                            {0, 1, 1, 1, 0},
                            {0, 0, 0, 0, 0}});
  SUBCASE("identical masks score 1") {
    CHECK(metrics::contour_f(a, a, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("empty prediction against nonempty gt scores 0") {
    BinaryMask e{4, 5, std::vector<uint8_t>(20, 0)};
    CHECK(metrics::contour_f(e, a, 1.0) == doctest::Approx(0.0));
  }
  SUBCASE("1px shift is perfect at tol 1 and drops at tol 0") {
    BinaryMask shifted = mask_from({{0, 0, 0, 0, 0},
                                    {0, 0, 1, 1, 1},
                                    {0, 0, 1, 1, 1},
                                    {0, 0, 0, 0, 0}});
    CHECK(metrics::contour_f(a, shifted, 1.0) == doctest::Approx(1.0));
    const double f0 = metrics::contour_f(a, shifted, 0.0);
    CHECK(f0 < 1.0);
    CHECK(f0 == doctest::Approx(contour_f_oracle(a, shifted, 0.0)));
  }
}

TEST_CASE("contour_f agrees with the exhaustive distance-transform oracle") {
  Rng rng(92);
  for (int trial = 0; trial < 15; ++trial) {
    const int h = 6 + rng.uniform_int(6), w = 6 + rng.uniform_int(6);
    BinaryMask a{h, w, std::vector<uint8_t>(size_t(h) * w)};
    BinaryMask b{h, w, std::vector<uint8_t>(size_t(h) * w)};
    for (size_t i = 0; i < a.v.size(); ++i) {
      a.v[i] = rng.uniform() < 0.4 ? 1 : 0;
      b.v[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    for (double tol : {0.0, 1.0, 2.0}) {
      CHECK(metrics::contour_f(a, b, tol) ==
            doctest::Approx(contour_f_oracle(a, b, tol)).epsilon(1e-12));
    }
    // symmetry under simultaneous pred/gt swap
    CHECK(metrics::contour_f(a, b, 1.0) ==
          doctest::Approx(metrics::contour_f(b, a, 1.0)));
  }
}

TEST_CASE("default boundary tolerance follows the 0.8% diagonal convention") {
  CHECK(metrics::default_boundary_tol(480, 854) ==
        doctest::Approx(std::ceil(0.008 * std::hypot(480.0, 854.0))));
}

TEST_CASE("aggregate G") {
  metrics::EvalReport report;
  report.rows = {{"a", 1, 0.8, 0.6}, {"b", 1, 0.4, 0.2}};
  SUBCASE("single split: G equals the mean J&F") {
    auto res = metrics::aggregate(report, {"a", "b"}, {});
    CHECK(res.unseen_missing);
    CHECK_FALSE(res.seen_missing);
    CHECK(res.g == doctest::Approx(report.mean_jf()));
  }
  SUBCASE("symmetric splits with equal scores give that score") {
    metrics::EvalReport eq;
    eq.rows = {{"a", 1, 0.7, 0.7}, {"b", 1, 0.7, 0.7}};
    auto res = metrics::aggregate(eq, {"a"}, {"b"});
    CHECK(res.g == doctest::Approx(0.7));
  }
  SUBCASE("hand-built 2+2 case") {
    metrics::EvalReport r4;
    r4.rows = {{"s1", 1, 0.9, 0.7},
               {"s2", 1, 0.5, 0.3},
               {"u1", 1, 0.8, 0.6},
               {"u2", 1, 0.4, 0.2}};
    auto res = metrics::aggregate(r4, {"s1", "s2"}, {"u1", "u2"});
    // J_s=0.7 F_s=0.5 J_u=0.6 F_u=0.4, mean = 0.55
    CHECK(res.g == doctest::Approx(0.55));
  }
  SUBCASE("sequence in both partitions is rejected") {
    CHECK_THROWS_AS(metrics::aggregate(report, {"a"}, {"a"}), Error);
  }
}

TEST_CASE("csv report format") {
  namespace fs = std::filesystem;
  metrics::EvalReport report;
  report.rows = {{"seq", 1, 0.5, 0.25}};
  const fs::path p = fs::temp_directory_path() / "report_test.csv";
  report.write_csv(p.string());
  std::ifstream is(p);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "sequence,object,J,F,JF");
  CHECK(row == "seq,1,0.500000,0.250000,0.375000");
  fs::remove(p);
}
