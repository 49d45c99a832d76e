#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

// DAVIS-style evaluation: region similarity J, boundary accuracy F, their
// mean, and the seen/unseen average G.
namespace srnet::metrics {

struct BinaryMask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;  // 0/1

  static BinaryMask from_labels(const std::vector<int>& labels, int h, int w,
                                int object);
};

// |pred & gt| / |pred | gt|; 1 when both masks are empty.
double jaccard(const BinaryMask& pred, const BinaryMask& gt);

// Boundary pixels are foreground pixels with a background (or out-of-image)
// 4-neighbor. Precision/recall match boundary pixels within `tol` pixels
// (Euclidean); tol < 0 selects the default ceil(0.8% of the image diagonal).
double contour_f(const BinaryMask& pred, const BinaryMask& gt,
                 double tol = -1.0);

std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& m);

double default_boundary_tol(int h, int w);

struct ScoreRow {
  std::string sequence;
  int object = 0;
  double j = 0.0;
  double f = 0.0;
  double jf() const { return (j + f) / 2.0; }
};

struct EvalReport {
  std::vector<ScoreRow> rows;

  double mean_j() const;
  double mean_f() const;
  double mean_jf() const;
  void write_csv(const std::string& path) const;
  std::string summary() const;
};

struct AggregateResult {
  double g = 0.0;
  bool seen_missing = false;
  bool unseen_missing = false;
};

// G = mean(J_seen, F_seen, J_unseen, F_unseen); a partition with no
// sequences contributes nothing and is flagged.
AggregateResult aggregate(const EvalReport& report,
                          const std::vector<std::string>& seen_ids,
                          const std::vector<std::string>& unseen_ids);

}  // namespace srnet::metrics
