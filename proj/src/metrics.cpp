#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace srnet::metrics {

BinaryMask BinaryMask::from_labels(const std::vector<int>& labels, int h,
                                   int w, int object) {
  if (static_cast<size_t>(h) * w != labels.size())
    fail(ErrorCode::invalid_argument, "mask label count does not match extents");
  BinaryMask m{h, w, std::vector<uint8_t>(labels.size())};
  for (size_t i = 0; i < labels.size(); ++i)
    m.v[i] = labels[i] == object ? 1 : 0;
  return m;
}

double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.h != gt.h || pred.w != gt.w)
    fail(ErrorCode::invalid_argument, "jaccard: mask extents differ");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    inter += pred.v[i] && gt.v[i];
    uni += pred.v[i] || gt.v[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& m) {
  std::vector<std::pair<int, int>> out;
  auto bg = [&](int y, int x) {
    if (y < 0 || y >= m.h || x < 0 || x >= m.w) return true;
    return m.v[static_cast<size_t>(y) * m.w + x] == 0;
  };
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      if (!m.v[static_cast<size_t>(y) * m.w + x]) continue;
      if (bg(y - 1, x) || bg(y + 1, x) || bg(y, x - 1) || bg(y, x + 1))
        out.emplace_back(y, x);
    }
  return out;
}

double default_boundary_tol(int h, int w) {
  return std::ceil(0.008 * std::sqrt(static_cast<double>(h) * h +
                                     static_cast<double>(w) * w));
}

namespace {

// Fraction of `from` within tol of some pixel in `to`; nearest-neighbor by
// brute force with early exit on the squared threshold.
double matched_fraction(const std::vector<std::pair<int, int>>& from,
                        const std::vector<std::pair<int, int>>& to,
                        double tol) {
  if (from.empty()) return 0.0;
  const double tol2 = tol * tol;
  int64_t matched = 0;
  for (const auto& [fy, fx] : from) {
    for (const auto& [ty, tx] : to) {
      const double dy = fy - ty, dx = fx - tx;
      if (dy * dy + dx * dx <= tol2) {
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(from.size());
}

}  // namespace

double contour_f(const BinaryMask& pred, const BinaryMask& gt, double tol) {
  if (pred.h != gt.h || pred.w != gt.w)
    fail(ErrorCode::invalid_argument, "contour_f: mask extents differ");
  if (tol < 0) tol = default_boundary_tol(pred.h, pred.w);
  const auto pb = boundary_pixels(pred);
  const auto gb = boundary_pixels(gt);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  const double precision = matched_fraction(pb, gb, tol);
  const double recall = matched_fraction(gb, pb, tol);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double EvalReport::mean_j() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.j;
  return s / static_cast<double>(rows.size());
}

double EvalReport::mean_f() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.f;
  return s / static_cast<double>(rows.size());
}

double EvalReport::mean_jf() const { return (mean_j() + mean_f()) / 2.0; }

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write report: " + path);
  os << "sequence,object,J,F,JF\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f\n",
                  r.sequence.c_str(), r.object, r.j, r.f, r.jf());
    os << buf;
  }
}

std::string EvalReport::summary() const {
  std::ostringstream os;
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s object %d: J=%.4f F=%.4f J&F=%.4f\n",
                  r.sequence.c_str(), r.object, r.j, r.f, r.jf());
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "mean: J=%.4f F=%.4f J&F=%.4f over %zu rows\n", mean_j(),
                mean_f(), mean_jf(), rows.size());
  os << buf;
  return os.str();
}

AggregateResult aggregate(const EvalReport& report,
                          const std::vector<std::string>& seen_ids,
                          const std::vector<std::string>& unseen_ids) {
  const std::set<std::string> seen(seen_ids.begin(), seen_ids.end());
  const std::set<std::string> unseen(unseen_ids.begin(), unseen_ids.end());
  for (const auto& s : seen)
    if (unseen.count(s))
      fail(ErrorCode::invalid_argument,
           "aggregate: sequence in both partitions: " + s);
  double js = 0, fs = 0, ju = 0, fu = 0;
  int ns = 0, nu = 0;
  for (const auto& r : report.rows) {
    if (seen.count(r.sequence)) {
      js += r.j;
      fs += r.f;
      ++ns;
    } else if (unseen.count(r.sequence)) {
      ju += r.j;
      fu += r.f;
      ++nu;
    } else {
      fail(ErrorCode::invalid_argument,
           "aggregate: sequence not in either partition: " + r.sequence);
    }
  }
  AggregateResult res;
  res.seen_missing = ns == 0;
  res.unseen_missing = nu == 0;
  double sum = 0.0;
  int terms = 0;
  if (ns > 0) {
    sum += js / ns + fs / ns;
    terms += 2;
  }
  if (nu > 0) {
    sum += ju / nu + fu / nu;
    terms += 2;
  }
  res.g = terms > 0 ? sum / terms : 0.0;
  return res;
}

}  // namespace srnet::metrics
