#include "hardylab/czops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hardylab/linalg.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/rng.hpp"

namespace hardylab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double factorial(int k) {
  double v = 1.0;
  for (int i = 2; i <= k; ++i) v *= i;
  return v;
}

// Riesz kernel c z_j / |z|^3 and its z-derivatives up to order 2.
double riesz_derivative(int j, const std::array<int, 2>& g, double z0, double z1) {
  const double c = 1.0 / (2.0 * kPi);
  const double z[2] = {z0, z1};
  const double r2 = z0 * z0 + z1 * z1;
  const double r = std::sqrt(r2);
  const int order = g[0] + g[1];
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  if (order == 0) return c * z[j] / (r2 * r);
  if (order == 1) {
    const int i = g[0] == 1 ? 0 : 1;
    return c * (delta(i, j) / (r2 * r) - 3.0 * z[i] * z[j] / (r2 * r2 * r));
  }
  if (order == 2) {
    int i, k;
    if (g[0] == 2) { i = 0; k = 0; }
    else if (g[1] == 2) { i = 1; k = 1; }
    else { i = 0; k = 1; }
    const double r5 = r2 * r2 * r, r7 = r5 * r2;
    return c * (-3.0 * delta(i, j) * z[k] / r5 - 3.0 * (delta(j, k) * z[i] + delta(i, k) * z[j]) / r5 +
                15.0 * z[i] * z[j] * z[k] / r7);
  }
  // Higher orders: central difference of an order-2 derivative along the first axis with a positive remaining count.
  std::array<int, 2> lower = g;
  const int axis = g[0] > 0 ? 0 : 1;
  lower[std::size_t(axis)] -= 1;
  const double step = 1e-4 * r;
  double zp[2] = {z0, z1}, zm[2] = {z0, z1};
  zp[axis] += step;
  zm[axis] -= step;
  return (riesz_derivative(j, lower, zp[0], zp[1]) - riesz_derivative(j, lower, zm[0], zm[1])) / (2.0 * step);
}
}  // namespace

std::string Kernel::name() const {
  switch (kind) {
    case KernelKind::hilbert: return "hilbert";
    case KernelKind::riesz1: return "riesz_1";
    case KernelKind::riesz2: return "riesz_2";
  }
  return "unknown";
}

double Kernel::operator()(const Point& x, const Point& y) const { return derivative({0, 0}, x, y); }

double Kernel::derivative(const std::array<int, 2>& gamma, const Point& x, const Point& y) const {
  if (kind == KernelKind::hilbert) {
    const double z = x[0] - y[0];
    if (z == 0.0) return 0.0;
    const int k = gamma[0];
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * factorial(k) / (kPi * std::pow(z, k + 1));
  }
  const double z0 = x[0] - y[0], z1 = x[1] - y[1];
  if (z0 == 0.0 && z1 == 0.0) return 0.0;
  return riesz_derivative(kind == KernelKind::riesz1 ? 0 : 1, gamma, z0, z1);
}

Kernel make_kernel(const std::string& name) {
  Kernel K;
  if (name == "hilbert") {
    K.kind = KernelKind::hilbert;
    K.n = 1;
  } else if (name == "riesz_1" || name == "riesz_2") {
    K.kind = name == "riesz_1" ? KernelKind::riesz1 : KernelKind::riesz2;
    K.n = 2;
  } else {
    throw Error(ErrorCode::ConfigInvalid, "kernel.name: expected hilbert, riesz_1 or riesz_2, got " + name);
  }
  return K;
}

KernelConstants kernel_certify(const Kernel& K, int gamma_max, int samples, std::uint64_t seed) {
  KernelConstants out;
  out.size.assign(std::size_t(gamma_max + 1), 0.0);
  CounterRng rng(seed, 0xC2);
  const int n = K.n;
  const auto gammas = multi_indices(n, gamma_max);
  for (int t = 0; t < samples; ++t) {
    Point x{rng.uniform(-4, 4), n == 2 ? rng.uniform(-4, 4) : 0.0};
    Point y{rng.uniform(-4, 4), n == 2 ? rng.uniform(-4, 4) : 0.0};
    const double d = std::hypot(x[0] - y[0], x[1] - y[1]);
    if (d < 1e-6) continue;
    for (const auto& g : gammas) {
      const int o = g[0] + g[1];
      const double v = std::abs(K.derivative(g, x, y)) * std::pow(d, n + o);
      out.size[std::size_t(o)] = std::max(out.size[std::size_t(o)], v);
    }
    out.antisymmetry = std::max(out.antisymmetry, std::abs(K(x, y) + K(y, x)));
    // Hoelder quotient with |x - x'| <= |x - y| / 2.
    const double rho = 0.5 * d * rng.uniform();
    const double ang = 2.0 * kPi * rng.uniform();
    Point xp{x[0] + (n == 1 ? (rng.uniform() < 0.5 ? -rho : rho) : rho * std::cos(ang)), n == 2 ? x[1] + rho * std::sin(ang) : 0.0};
    if (rho > 0.0) {
      const double q = std::abs(K(x, y) - K(xp, y)) * std::pow(d, n + K.delta) / std::pow(rho, K.delta);
      out.holder = std::max(out.holder, q);
    }
  }
  return out;
}

namespace {

// Kernel samples on grid offsets: index (di + N - 1) [* (2N - 1) + dj + N - 1].
std::vector<double> offset_table(const CZOperator& T, const Grid& g) {
  const long N = g.per_axis();
  const long W = 2 * N - 1;
  const double h = g.h();
  const Point o{0.0, 0.0};
  std::vector<double> tab(g.n() == 1 ? std::size_t(W) : std::size_t(W * W), 0.0);
  if (g.n() == 1) {
    for (long d = -(N - 1); d <= N - 1; ++d) {
      const double z = double(d) * h;
      if (d == 0 || std::abs(z) < T.trunc) continue;
      tab[std::size_t(d + N - 1)] = T.kernel(Point{z, 0.0}, o);
    }
  } else {
    for (long a = -(N - 1); a <= N - 1; ++a)
      for (long b = -(N - 1); b <= N - 1; ++b) {
        if (a == 0 && b == 0) continue;
        const double z0 = double(a) * h, z1 = double(b) * h;
        if (std::hypot(z0, z1) < T.trunc) continue;
        tab[std::size_t((a + N - 1) * W + (b + N - 1))] = T.kernel(Point{z0, z1}, o);
      }
  }
  return tab;
}

void check_dim(const CZOperator& T, const Grid& g) {
  if (T.kernel.n != g.n())
    throw Error(ErrorCode::GridMismatch, "kernel " + T.kernel.name() + " needs n = " + std::to_string(T.kernel.n));
}

}  // namespace

VectorField apply(const CZOperator& T, const VectorField& f) {
  const Grid& g = f.grid;
  check_dim(T, g);
  const int m = f.m;
  const std::vector<double> tab = offset_table(T, g);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (f.norm_at(i) != 0.0) support.push_back(i);
  VectorField out(g, m, 0.0);
  const long N = g.per_axis(), W = 2 * N - 1;
  const double vol = g.cell_volume();
  parallel_for(g.size(), [&](std::size_t x) {
    const auto xi = g.multi_index(x);
    double* o = out.at(x);
    for (std::size_t y : support) {
      const auto yi = g.multi_index(y);
      const double k = g.n() == 1 ? tab[std::size_t(xi[0] - yi[0] + N - 1)]
                                  : tab[std::size_t((xi[0] - yi[0] + N - 1) * W + (xi[1] - yi[1] + N - 1))];
      if (k == 0.0) continue;
      const double* fy = f.at(y);
      for (int c = 0; c < m; ++c) o[c] += k * fy[c] * vol;
    }
  });
  return out;
}

ScalarField apply(const CZOperator& T, const ScalarField& f) {
  VectorField v(f.grid, 1, f.values);
  return ScalarField(f.grid, apply(T, v).values);
}

void apply_at(const CZOperator& T, const VectorField& f, const Point& x, double* out) {
  const Grid& g = f.grid;
  for (int c = 0; c < f.m; ++c) out[c] = 0.0;
  for (std::size_t y = 0; y < g.size(); ++y) {
    const double* fy = f.at(y);
    bool nz = false;
    for (int c = 0; c < f.m; ++c) nz = nz || fy[c] != 0.0;
    if (!nz) continue;
    const double k = T.kernel(x, g.midpoint(y)) * g.cell_volume();
    for (int c = 0; c < f.m; ++c) out[c] += k * fy[c];
  }
}

DecayFit atom_image_decay(const CZOperator& T, const AtomRecord& a, const MatrixWeight& W, const ExponentProfile& p,
                          int far_levels, int points_per_annulus) {
  if (far_levels < 8)
    throw Error(ErrorCode::InsufficientFarField, "only " + std::to_string(far_levels) + " dyadic radii beyond 4 r_Q");
  const Grid& g = W.grid();
  check_dim(T, g);
  const int n = g.n(), m = W.m();
  DecayFit fit;
  bool any = false;
  for (double v : a.values) any = any || v != 0.0;
  if (!any) return fit;
  const std::vector<std::size_t> Qcells = cells_in(g, a.support);
  const Mat Ainv = reducing_operator(W, p, Qcells).A.inverse();
  const double ind = vnorm_indicator(p, Qcells);
  const Point c = a.support.center();
  const double rQ = 0.5 * a.support.edge() * std::sqrt(double(n));
  std::vector<Point> ys(a.cells.size());
  for (std::size_t r = 0; r < a.cells.size(); ++r) ys[r] = g.midpoint(a.cells[r]);
  std::vector<double> lx, ly;
  for (int j = 0; j < far_levels; ++j) {
    const double rho = 4.0 * rQ * std::ldexp(1.0, j);
    double env = 0.0;
    for (int t = 0; t < points_per_annulus; ++t) {
      Point x{c[0], c[1]};
      const double rad = rho * (1.0 + double(t / 2) / double(std::max(1, points_per_annulus / 2)));
      if (n == 1) {
        x[0] += (t % 2 == 0 ? rad : -rad);
      } else {
        const double ang = 2.0 * kPi * (double(t) + 0.5) / double(points_per_annulus);
        x[0] += rad * std::cos(ang);
        x[1] += rad * std::sin(ang);
      }
      double Ta[3] = {0.0, 0.0, 0.0};
      for (std::size_t r = 0; r < ys.size(); ++r) {
        const double k = T.kernel(x, ys[r]) * g.cell_volume();
        for (int cc = 0; cc < m; ++cc) Ta[cc] += k * a.values[r * std::size_t(m) + std::size_t(cc)];
      }
      const Mat Wx = W.at(x);
      double WT[3];
      mat_vec(Wx.data(), Ta, WT, m);
      const double den = spectral_norm(Mat(Wx * Ainv)) / ind;
      env = std::max(env, euclid(WT, m) / den);
    }
    fit.radius.push_back(rho);
    fit.envelope.push_back(env);
    if (env > 0.0) {
      lx.push_back(std::log(rho / a.support.edge()));
      ly.push_back(std::log(env));
    }
  }
  fit.radii = lx.size();
  if (lx.size() < 2) return fit;
  fit.empty = false;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= double(lx.size());
  my /= double(lx.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

MomentCheck moment_preservation(const VectorField& Tf, const Point& c, int s, double tol) {
  const Grid& g = Tf.grid;
  const int n = g.n(), m = Tf.m;
  MomentCheck mc;
  double R = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a)
    R = std::min({R, g.L_box() - c[std::size_t(a)], g.L_box() + c[std::size_t(a)]});
  const double decay = double(n + s + 1);
  double C = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.midpoint(i);
    const double d = std::hypot(x[0] - c[0], n == 2 ? x[1] - c[1] : 0.0);
    if (d >= 0.5 * R) C = std::max(C, Tf.norm_at(i) * std::pow(d, decay));
  }
  const double omega = n == 1 ? 2.0 : 2.0 * kPi;
  mc.worst = -std::numeric_limits<double>::infinity();
  for (const auto& gamma : multi_indices(n, s)) {
    const int o = gamma[0] + gamma[1];
    const double tail = omega * C * std::pow(R, double(o) - double(s) - 1.0) / double(s + 1 - o);
    for (int cc = 0; cc < m; ++cc) {
      double mom = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.midpoint(i);
        double mono = 1.0;
        for (int a = 0; a < n; ++a) mono *= std::pow(x[std::size_t(a)] - c[std::size_t(a)], gamma[std::size_t(a)]);
        mom += Tf.at(i)[cc] * mono * g.cell_volume();
        scale += std::abs(Tf.at(i)[cc] * mono) * g.cell_volume();
      }
      if (scale == 0.0) continue;
      const double excess = (std::abs(mom) - 4.0 * tail - tol * scale) / scale;
      if (excess > mc.worst) {
        mc.worst = excess;
        mc.tail = tail;
      }
    }
  }
  if (!std::isfinite(mc.worst)) mc.worst = 0.0;
  mc.pass = mc.worst <= 0.0;
  return mc;
}

CzBench cz_bench(const CZOperator& T, const MatrixWeight& W, const ExponentProfile& p,
                 const std::vector<VectorField>& suite, const TestFunctionCatalog& cat, int s) {
  CzBench out;
  out.rows.resize(suite.size());
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const VectorField& f = suite[k];
    CzRow& row = out.rows[k];
    const double hf = hardy_norm(f, W, p, cat);
    if (hf == 0.0) continue;
    const VectorField Tf = apply(T, f);
    ScalarField wt(f.grid, 0.0);
    double y[3];
    for (std::size_t i = 0; i < f.size(); ++i) {
      mat_vec(W.W(i), Tf.at(i), y, f.m);
      wt[i] = euclid(y, f.m);
    }
    row.hl = vnorm(wt, p) / hf;
    const MomentCheck mc = moment_preservation(Tf, Point{0.0, 0.0}, s);
    row.moments_ok = mc.pass;
    row.moment_worst = mc.worst;
    if (mc.pass) row.hh = hardy_norm(Tf, W, p, cat) / hf;
    out.max_hl = std::max(out.max_hl, row.hl);
    out.max_hh = std::max(out.max_hh, row.hh);
  }
  return out;
}

double campanato_norm(const VectorField& g, const ExponentProfile& p, double q, int s, const std::vector<Cube>& cubes,
                      const std::vector<ReducingOperator>& ops) {
  const Grid& G = g.grid;
  const int m = g.m;
  double best = 0.0;
  for (std::size_t k = 0; k < cubes.size(); ++k) {
    const std::vector<std::size_t> cells = cells_in(G, cubes[k]);
    if (cells.empty()) continue;
    const PolyBasis B = poly_basis(G, cubes[k], cells, std::vector<double>(cells.size(), 1.0), s);
    std::vector<double> v(cells.size() * std::size_t(m));
    for (std::size_t r = 0; r < cells.size(); ++r)
      for (int c = 0; c < m; ++c) v[r * std::size_t(m) + std::size_t(c)] = g.at(cells[r])[c];
    const std::vector<double> P = project_local(B, v, m);
    const Mat Ainv = ops[k].A.inverse();
    double acc = 0.0, y[3], d[3];
    for (std::size_t r = 0; r < cells.size(); ++r) {
      for (int c = 0; c < m; ++c) d[c] = v[r * std::size_t(m) + std::size_t(c)] - P[r * std::size_t(m) + std::size_t(c)];
      mat_vec(Ainv.data(), d, y, m);
      acc += std::pow(euclid(y, m), q);
    }
    const double avg = std::pow(acc / double(cells.size()), 1.0 / q);
    const double vol = double(cells.size()) * G.cell_volume();
    best = std::max(best, vol / vnorm_indicator(p, cells) * avg);
  }
  return best;
}

double campanato_norm(const VectorField& g, const MatrixWeight& W, const ExponentProfile& p, double q, int s,
                      const std::vector<Cube>& cubes) {
  return campanato_norm(g, p, q, s, cubes, reducing_operators(W, p, cubes));
}

DualityReport duality_pairing_check(const std::vector<VectorField>& fs, const std::vector<VectorField>& gs,
                                    const MatrixWeight& W, const ExponentProfile& p, double q, int s,
                                    const TestFunctionCatalog& cat, const std::vector<Cube>& cubes) {
  DualityReport rep;
  const std::vector<ReducingOperator> ops = reducing_operators(W, p, cubes);
  std::vector<double> hf(fs.size()), cg(gs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) hf[i] = hardy_norm(fs[i], W, p, cat);
  for (std::size_t j = 0; j < gs.size(); ++j) cg[j] = campanato_norm(gs[j], p, q, s, cubes, ops);
  const std::size_t pairs = std::min(fs.size(), gs.size());
  for (std::size_t k = 0; k < pairs; ++k) {
    const double num = std::abs(pair(fs[k], gs[k]));
    const double den = cg[k] * hf[k];
    double ratio;
    if (den <= 1e-300) {
      if (num <= 1e-12) {
        ++rep.cancellations;
        ratio = 0.0;
      } else {
        ratio = std::numeric_limits<double>::infinity();
      }
    } else {
      ratio = num / den;
    }
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

}  // namespace hardylab
