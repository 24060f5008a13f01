#pragma once
// Finite point sets in R^d with the Euclidean metric: hypercubic boxes,
// slabs bounded in some axes, and explicit point lists. Ball counting and
// growth-condition certification live here; the point order fixes the
// tensor-factor order used by every other module.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwmw/util.hpp"

namespace mwmw {

using json = nlohmann::json;

inline bool lex_less(const Point& a, const Point& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

class Lattice {
 public:
  static Lattice hypercubic(int d, int half_extent) {
    if (d < 1 || half_extent < 1)
      throw std::invalid_argument("hypercubic: d and half_extent must be positive");
    const double count = std::pow(2.0 * half_extent + 1.0, d);
    if (count > 2e7)
      throw std::overflow_error("hypercubic: point count overflow");
    Lattice lat;
    lat.kind_ = "hypercubic";
    lat.dim_ = d;
    lat.half_extent_ = half_extent;
    std::vector<int> lo(d, -half_extent), hi(d, half_extent);
    lat.points_ = enumerate_box(lo, hi);
    lat.gamma_ = static_cast<double>(d);
    lat.finalize();
    return lat;
  }

  // Free axes run over {-free_extent..free_extent}; bounded axes over
  // {0..size-1}, so |x_j| <= M_j with M_j = size_j - 1.
  static Lattice slab(int free_dims, int free_extent,
                      const std::vector<int>& bounded_sizes) {
    if (free_dims < 1 || free_extent < 1)
      throw std::invalid_argument("slab: free part must be nonempty");
    for (int s : bounded_sizes)
      if (s < 1) throw std::invalid_argument("slab: bounded sizes must be positive");
    const int d = free_dims + static_cast<int>(bounded_sizes.size());
    double count = std::pow(2.0 * free_extent + 1.0, free_dims);
    for (int s : bounded_sizes) count *= s;
    if (count > 2e7) throw std::overflow_error("slab: point count overflow");
    Lattice lat;
    lat.kind_ = "slab";
    lat.dim_ = d;
    lat.half_extent_ = free_extent;
    lat.free_dims_ = free_dims;
    lat.bounded_sizes_ = bounded_sizes;
    std::vector<int> lo(d), hi(d);
    for (int j = 0; j < free_dims; ++j) {
      lo[j] = -free_extent;
      hi[j] = free_extent;
    }
    for (std::size_t b = 0; b < bounded_sizes.size(); ++b) {
      lo[free_dims + b] = 0;
      hi[free_dims + b] = bounded_sizes[b] - 1;
      lat.slab_bounds_[free_dims + static_cast<int>(b) + 1] =
          static_cast<double>(bounded_sizes[b] - 1);
    }
    lat.points_ = enumerate_box(lo, hi);
    lat.gamma_ = static_cast<double>(free_dims);
    lat.finalize();
    return lat;
  }

  static Lattice from_points(int d, std::vector<Point> pts) {
    Lattice lat;
    lat.kind_ = "points";
    lat.dim_ = d;
    lat.points_ = std::move(pts);
    for (const auto& p : lat.points_)
      if (p.size() != d) throw std::invalid_argument("from_points: dimension mismatch");
    lat.finalize();
    return lat;
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(points_.size()); }
  const Point& point(int site) const { return points_.at(site); }
  const std::vector<Point>& points() const { return points_; }
  const std::string& kind() const { return kind_; }
  std::optional<double> gamma() const { return gamma_; }
  void set_gamma(double g) { gamma_ = g; }
  // 1-based axis index -> bound M_j
  const std::map<int, double>& slab_bounds() const { return slab_bounds_; }
  bool integer_coordinates() const { return integer_coords_; }

  int site_of(const Point& p) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), p, lex_less);
    if (it == points_.end()) return -1;
    if ((*it - p).cwiseAbs().maxCoeff() > 0.0) return -1;
    return static_cast<int>(it - points_.begin());
  }

  json to_json() const {
    json j;
    j["kind"] = kind_;
    j["d"] = dim_;
    if (kind_ == "hypercubic") j["half_extent"] = half_extent_;
    if (kind_ == "slab") {
      j["half_extent"] = half_extent_;
      j["free_dims"] = free_dims_;
      j["bounded_sizes"] = bounded_sizes_;
    }
    if (kind_ == "points") {
      json pts = json::array();
      for (const auto& p : points_) {
        json row = json::array();
        for (int i = 0; i < p.size(); ++i) row.push_back(p[i]);
        pts.push_back(row);
      }
      j["points"] = pts;
    }
    if (gamma_) j["gamma"] = *gamma_;
    return j;
  }

  static Lattice from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    Lattice lat;
    if (kind == "hypercubic") {
      lat = hypercubic(j.at("d").get<int>(), j.at("half_extent").get<int>());
    } else if (kind == "slab") {
      lat = slab(j.at("free_dims").get<int>(), j.at("half_extent").get<int>(),
                 j.at("bounded_sizes").get<std::vector<int>>());
    } else if (kind == "points") {
      const int d = j.at("d").get<int>();
      std::vector<Point> pts;
      for (const auto& row : j.at("points")) {
        Point p(d);
        for (int i = 0; i < d; ++i) p[i] = row.at(i).get<double>();
        pts.push_back(p);
      }
      lat = from_points(d, std::move(pts));
    } else {
      throw std::invalid_argument("unknown lattice kind: " + kind);
    }
    if (j.contains("gamma") && !j["gamma"].is_null())
      lat.set_gamma(j["gamma"].get<double>());
    return lat;
  }

 private:
  static std::vector<Point> enumerate_box(const std::vector<int>& lo,
                                          const std::vector<int>& hi) {
    const int d = static_cast<int>(lo.size());
    std::vector<Point> pts;
    std::vector<int> cur(lo);
    for (;;) {
      Point p(d);
      for (int i = 0; i < d; ++i) p[i] = cur[i];
      pts.push_back(p);
      int axis = d - 1;
      while (axis >= 0) {
        if (++cur[axis] <= hi[axis]) break;
        cur[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) break;
    }
    return pts;
  }

  void finalize() {
    std::sort(points_.begin(), points_.end(), lex_less);
    for (std::size_t i = 1; i < points_.size(); ++i)
      if ((points_[i] - points_[i - 1]).cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("lattice points must be pairwise distinct");
    integer_coords_ = true;
    for (const auto& p : points_)
      for (int i = 0; i < p.size(); ++i)
        if (p[i] != std::nearbyint(p[i])) integer_coords_ = false;
  }

  std::string kind_ = "points";
  int dim_ = 0;
  int half_extent_ = 0;
  int free_dims_ = 0;
  std::vector<int> bounded_sizes_;
  std::vector<Point> points_;
  std::optional<double> gamma_;
  std::map<int, double> slab_bounds_;
  bool integer_coords_ = false;
};

// Open ball: strict |x-z| < r. Comparison is on squared distances; a
// 1e-12-relative band around r^2 counts as the boundary and is excluded,
// which is exact for integer coordinates and boundary-stable otherwise.
inline bool in_open_ball(double dist2, double r2) {
  return dist2 < r2 - 1e-12 * std::max(1.0, r2);
}

inline long ball_count(const Lattice& lat, const Point& center, double r) {
  if (lat.site_of(center) < 0)
    throw std::invalid_argument("ball_count: center is not a lattice point");
  const double r2 = r * r;
  long n = 0;
  for (const auto& p : lat.points())
    if (in_open_ball((p - center).squaredNorm(), r2)) ++n;
  return n;
}

struct GrowthReport {
  bool pass = false;
  double worst_ratio = 0.0;          // max count / (C r^gamma)
  int witness_site = -1;             // violating center (or worst site)
  double witness_r = 0.0;
  double r_min = 0.0, r_max = 0.0;   // tested range
  std::string note;
  json to_json() const {
    json j;
    j["pass"] = pass;
    j["worst_ratio"] = worst_ratio;
    j["witness_site"] = witness_site;
    j["witness_r"] = witness_r;
    j["tested_r_min"] = r_min;
    j["tested_r_max"] = r_max;
    j["note"] = note;
    return j;
  }
};

inline GrowthReport verify_growth(const Lattice& lat, double C, double gamma,
                                  double r0, const std::vector<double>& r_grid) {
  if (r_grid.empty()) throw std::invalid_argument("verify_growth: empty radius grid");
  for (double r : r_grid)
    if (r < r0) throw std::invalid_argument("verify_growth: grid radius below r0");
  GrowthReport rep;
  rep.r_min = *std::min_element(r_grid.begin(), r_grid.end());
  rep.r_max = *std::max_element(r_grid.begin(), r_grid.end());
  rep.pass = true;
  for (int z = 0; z < lat.size(); ++z) {
    for (double r : r_grid) {
      const long cnt = ball_count(lat, lat.point(z), r);
      const double bound = C * std::pow(r, gamma);
      const double ratio = bound > 0 ? cnt / bound : (cnt > 0 ? 1e300 : 0.0);
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.witness_site = z;
        rep.witness_r = r;
      }
      if (cnt > bound) rep.pass = false;
    }
  }
  rep.note = "growth condition certified only on the tested radius grid and the finite extent of this lattice";
  return rep;
}

// Log-log least-squares fit of the maximal ball count against r. This is an
// estimate, not a certificate; reports must label it as such.
inline double estimate_gamma(const Lattice& lat, const std::vector<double>& r_grid) {
  if (r_grid.size() < 2) throw std::invalid_argument("estimate_gamma: need >= 2 radii");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double r : r_grid) {
    long mx = 0;
    for (int z = 0; z < lat.size(); ++z)
      mx = std::max(mx, ball_count(lat, lat.point(z), r));
    if (mx <= 0 || r <= 0) continue;
    const double lx = std::log(r), ly = std::log(static_cast<double>(mx));
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("estimate_gamma: degenerate grid");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// All lattice sites with |x|_inf <= m + margin, canonical order.
inline std::vector<int> box_sites(const Lattice& lat, double m, double margin) {
  const double bound = m + margin + 1e-12 * std::max(1.0, m + margin);
  std::vector<int> out;
  for (int i = 0; i < lat.size(); ++i)
    if (lat.point(i).cwiseAbs().maxCoeff() <= bound) out.push_back(i);
  return out;
}

}  // namespace mwmw
