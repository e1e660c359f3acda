#include "hardylab/convexbody.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hardylab {

ConvexBody::ConvexBody(int m, std::vector<double> flat_generators) : m_(m), g_(std::move(flat_generators)) {
  if (g_.size() % std::size_t(m) != 0) throw Error(ErrorCode::GridMismatch, "generator list length not a multiple of m");
}

ConvexBody ConvexBody::segment(const double* v, int m) {
  ConvexBody K(m);
  K.add(v);
  return K;
}

ConvexBody ConvexBody::segment(const Vec& v) { return segment(v.data(), int(v.size())); }

ConvexBody ConvexBody::ball(int m, double eps) {
  ConvexBody K(m);
  for (const Vec& z : probe_mesh(m)) {
    Vec w = eps * z;
    K.add(w.data());
  }
  return K;
}

double ConvexBody::norm() const {
  double best = 0.0;
  for (std::size_t k = 0; k < count(); ++k) best = std::max(best, euclid(generator(k), m_));
  return best;
}

double ConvexBody::support(const double* z) const {
  double best = 0.0;
  for (std::size_t k = 0; k < count(); ++k) {
    const double* g = generator(k);
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s += z[i] * g[i];
    best = std::max(best, std::abs(s));
  }
  return best;
}

double ConvexBody::norm_after(const double* A) const {
  double best = 0.0;
  double y[8];
  for (std::size_t k = 0; k < count(); ++k) {
    mat_vec(A, generator(k), y, m_);
    best = std::max(best, euclid(y, m_));
  }
  return best;
}

void ConvexBody::add(const double* v) { g_.insert(g_.end(), v, v + m_); }

void ConvexBody::scale(double c) {
  for (auto& x : g_) x *= c;
}

ConvexBody transform(const double* A, const ConvexBody& K) {
  const int m = K.dim();
  std::vector<double> out(K.flat().size());
  for (std::size_t k = 0; k < K.count(); ++k) mat_vec(A, K.generator(k), out.data() + k * std::size_t(m), m);
  return ConvexBody(m, std::move(out));
}

ConvexBody transform(const Mat& A, const ConvexBody& K) { return transform(A.data(), K); }

namespace {

struct P2 {
  double x, y;
  std::size_t gen;
};

double cross(const P2& o, const P2& a, const P2& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<std::size_t> hull_vertices_2d(const ConvexBody& K) {
  std::vector<P2> pts;
  for (std::size_t k = 0; k < K.count(); ++k) {
    const double* g = K.generator(k);
    if (g[0] == 0.0 && g[1] == 0.0) continue;
    pts.push_back({g[0], g[1], k});
    pts.push_back({-g[0], -g[1], k});
  }
  if (pts.empty()) return {};
  std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.gen < b.gen;
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const P2& a, const P2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() <= 2) {
    std::vector<std::size_t> out;
    for (auto& p : pts) out.push_back(p.gen);
    return out;
  }
  std::vector<P2> H(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(H[k - 2], H[k - 1], pts[i]) <= 0.0) --k;
    H[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(H[k - 2], H[k - 1], pts[i]) <= 0.0) --k;
    H[k++] = pts[i];
  }
  H.resize(k - 1);
  std::vector<std::size_t> out;
  for (auto& p : H) out.push_back(p.gen);
  if (out.empty()) out.push_back(pts.back().gen);
  return out;
}

ConvexBody select(const ConvexBody& K, std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  ConvexBody out(K.dim());
  for (auto k : keep) out.add(K.generator(k));
  return out;
}

ConvexBody cap_by_mesh(const ConvexBody& K, std::size_t cap) {
  const int m = K.dim();
  std::vector<Vec> mesh = probe_mesh(m, m == 2 ? int(cap) : 64);
  std::vector<std::size_t> keep;
  for (const Vec& z : mesh) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t k = 0; k < K.count(); ++k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += z[i] * K.generator(k)[i];
      if (std::abs(s) > bv) {
        bv = std::abs(s);
        best = k;
      }
    }
    keep.push_back(best);
    if (keep.size() >= cap) break;
  }
  return select(K, keep);
}

}  // namespace

ConvexBody prune(const ConvexBody& K, std::size_t cap) {
  const int m = K.dim();
  if (K.count() <= 1) {
    if (K.count() == 1 && K.norm() == 0.0) return ConvexBody(m);
    return K;
  }
  ConvexBody out(m);
  if (m == 1) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K.count(); ++k)
      if (std::abs(K.generator(k)[0]) > std::abs(K.generator(best)[0])) best = k;
    if (K.generator(best)[0] != 0.0) out.add(K.generator(best));
    return out;
  }
  if (m == 2) {
    out = select(K, hull_vertices_2d(K));
  } else {
    std::vector<Vec> mesh = probe_mesh(m);
    std::vector<std::uint8_t> keep(K.count(), 0);
    std::size_t longest = 0;
    for (std::size_t k = 0; k < K.count(); ++k)
      if (euclid(K.generator(k), m) > euclid(K.generator(longest), m)) longest = k;
    keep[longest] = 1;
    for (const Vec& z : mesh) {
      double bv = -1.0;
      std::size_t best = 0;
      for (std::size_t k = 0; k < K.count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += z[i] * K.generator(k)[i];
        if (std::abs(s) > bv + 1e-12) {
          bv = std::abs(s);
          best = k;
        }
      }
      keep[best] = 1;
    }
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < K.count(); ++k)
      if (keep[k] && euclid(K.generator(k), m) > 0.0) idx.push_back(k);
    out = select(K, idx);
  }
  if (out.count() > cap) out = cap_by_mesh(out, cap);
  return out;
}

ConvexBody hull_union(const std::vector<ConvexBody>& bodies, std::size_t cap) {
  const int m = bodies.front().dim();
  std::vector<double> all;
  for (const auto& b : bodies) all.insert(all.end(), b.flat().begin(), b.flat().end());
  return prune(ConvexBody(m, std::move(all)), cap);
}

EllipsoidFit cb_reducing_operator(const BodyField& F, const std::vector<std::size_t>& cells, double u, int mesh_count) {
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "convex-body reducing operator over an empty cube");
  std::vector<Vec> mesh = probe_mesh(F.m, mesh_count);
  std::vector<double> norms(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    double s = 0.0;
    for (auto i : cells) s += std::pow(F.bodies[i].support(mesh[k]), u);
    norms[k] = std::pow(s / double(cells.size()), 1.0 / u);
    if (!(norms[k] > 0.0)) throw Error(ErrorCode::NotAbsorbing, "body average vanishes on probe direction " + std::to_string(k));
  }
  return fit_norm_ellipsoid(mesh, norms);
}

EllipsoidFit cb_reducing_operator(const BodyField& F, const Cube& q, double u, int mesh_count) {
  return cb_reducing_operator(F, cells_in(F.grid, q), u, mesh_count);
}

}  // namespace hardylab
