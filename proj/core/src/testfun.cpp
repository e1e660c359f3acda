#include "hardylab/testfun.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "hardylab/rng.hpp"

namespace hardylab {

Jet Jet::constant(int n, int d, double v) {
  Jet j(n, d);
  j.at(0, 0) = v;
  return j;
}

Jet Jet::variable(int n, int d, int axis, double x0) {
  Jet j(n, d);
  j.at(0, 0) = x0;
  if (d >= 1) {
    if (axis == 0) j.at(1, 0) = 1.0;
    else j.at(0, 1) = 1.0;
  }
  return j;
}

double Jet::derivative(int a, int b) const {
  double f = 1.0;
  for (int i = 2; i <= a; ++i) f *= i;
  for (int i = 2; i <= b; ++i) f *= i;
  return f * at(a, b);
}

Jet Jet::operator+(const Jet& o) const {
  Jet r = *this;
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
  return r;
}

Jet Jet::operator-(const Jet& o) const {
  Jet r = *this;
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
  return r;
}

Jet Jet::operator*(double s) const {
  Jet r = *this;
  for (auto& v : r.c_) v *= s;
  return r;
}

Jet Jet::operator*(const Jet& o) const {
  Jet r(n_, d_);
  const int bmax = n_ == 1 ? 0 : d_;
  for (int a1 = 0; a1 <= d_; ++a1)
    for (int b1 = 0; b1 <= std::min(bmax, d_ - a1); ++b1) {
      const double x = at(a1, b1);
      if (x == 0.0) continue;
      for (int a2 = 0; a2 <= d_ - a1 - b1; ++a2)
        for (int b2 = 0; b2 <= std::min(bmax, d_ - a1 - b1 - a2); ++b2) r.at(a1 + a2, b1 + b2) += x * o.at(a2, b2);
    }
  return r;
}

Jet jet_exp(const Jet& h) {
  const double h0 = h.value();
  Jet out(h.n(), h.degree());
  if (h0 < -745.0) return out;
  Jet H = h - Jet::constant(h.n(), h.degree(), h0);
  Jet term = Jet::constant(h.n(), h.degree(), 1.0);
  out = term;
  for (int k = 1; k <= h.degree(); ++k) {
    term = term * H * (1.0 / k);
    out = out + term;
  }
  return out * std::exp(h0);
}

Jet jet_reciprocal(const Jet& u) {
  const double u0 = u.value();
  Jet V = (u - Jet::constant(u.n(), u.degree(), u0)) * (-1.0 / u0);
  Jet term = Jet::constant(u.n(), u.degree(), 1.0);
  Jet out = term;
  for (int k = 1; k <= u.degree(); ++k) {
    term = term * V;
    out = out + term;
  }
  return out * (1.0 / u0);
}

double bump_constant(int n) {
  static const double c1 = [] {
    const int K = 200000;
    double s = 0.0;
    for (int i = 1; i < K; ++i) {
      const double x = -1.0 + 2.0 * i / K;
      s += std::exp(-1.0 / (1.0 - x * x));
    }
    return 1.0 / (s * 2.0 / K);
  }();
  static const double c2 = [] {
    const int K = 200000;
    double s = 0.0;
    for (int i = 1; i < K; ++i) {
      const double r = double(i) / K;
      s += r * std::exp(-1.0 / (1.0 - r * r));
    }
    return 1.0 / (2.0 * M_PI * s / K);
  }();
  return n == 1 ? c1 : c2;
}

Jet bump_jet(int n, const Point& x0, int d) {
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += x0[std::size_t(i)] * x0[std::size_t(i)];
  if (r2 >= 1.0 || -1.0 / (1.0 - r2) < -745.0) return Jet(n, d);
  Jet sq(n, d);
  for (int i = 0; i < n; ++i) {
    Jet v = Jet::variable(n, d, i, x0[std::size_t(i)]);
    sq = sq + v * v;
  }
  Jet u = Jet::constant(n, d, 1.0) - sq;
  return jet_exp(jet_reciprocal(u) * -1.0);
}

Jet member_jet(int n, const std::array<int, 2>& beta, const Point& x0, int d) {
  Jet out = bump_jet(n, x0, d) * bump_constant(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < beta[std::size_t(i)]; ++k) out = out * Jet::variable(n, d, i, x0[std::size_t(i)]);
  return out;
}

std::vector<std::array<int, 2>> multi_indices(int n, int s) {
  std::vector<std::array<int, 2>> out;
  for (int t = 0; t <= s; ++t) {
    if (n == 1) {
      out.push_back({t, 0});
    } else {
      for (int a = t; a >= 0; --a) out.push_back({a, t - a});
    }
  }
  return out;
}

TestFunctionCatalog::TestFunctionCatalog(int n, int N, int reference_points)
    : n_(n), N_(N), ref_(reference_points > 0 ? reference_points : (n == 1 ? 2001 : 121)) {
  for (const auto& beta : multi_indices(n, N)) {
    TestMember mem;
    mem.beta = beta;
    mem.raw_seminorm = seminorm_of(beta, 1.0);
    mem.factor = 1.0 / mem.raw_seminorm;
    members_.push_back(mem);
  }
}

TestFunctionCatalog TestFunctionCatalog::truncated(std::size_t count) const {
  TestFunctionCatalog c = *this;
  c.members_.resize(std::min(count, members_.size()));
  return c;
}

double TestFunctionCatalog::seminorm_of(const std::array<int, 2>& beta, double factor) const {
  const int d = N_ + 1;
  const double power = N_ + n_ + 1;
  double sup = 0.0;
  auto visit = [&](const Point& x) {
    Jet j = member_jet(n_, beta, x, d);
    double r = 0.0;
    for (int i = 0; i < n_; ++i) r += x[std::size_t(i)] * x[std::size_t(i)];
    const double w = std::pow(1.0 + std::sqrt(r), power);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= (n_ == 1 ? 0 : d - a); ++b) sup = std::max(sup, w * std::abs(j.derivative(a, b)));
  };
  for (int i = 0; i < ref_; ++i) {
    const double x = -1.0 + 2.0 * (i + 0.5) / ref_;
    if (n_ == 1) {
      visit({x, 0.0});
    } else {
      for (int k = 0; k < ref_; ++k) visit({x, -1.0 + 2.0 * (k + 0.5) / ref_});
    }
  }
  return factor * sup;
}

double TestFunctionCatalog::seminorm(std::size_t k) const { return seminorm_of(members_[k].beta, members_[k].factor); }

double TestFunctionCatalog::value(std::size_t k, const Point& x) const {
  double r2 = 0.0;
  for (int i = 0; i < n_; ++i) r2 += x[std::size_t(i)] * x[std::size_t(i)];
  if (r2 >= 1.0) return 0.0;
  double v = members_[k].factor * bump_constant(n_) * std::exp(-1.0 / (1.0 - r2));
  for (int i = 0; i < n_; ++i) v *= std::pow(x[std::size_t(i)], members_[k].beta[std::size_t(i)]);
  return v;
}

ScalarField sample_member(const TestFunctionCatalog& cat, std::size_t k, const Grid& g, const Point& c, double t) {
  const double scale = std::pow(t, -double(g.n()));
  return sample_scalar(g, [&](const Point& x) {
    Point y{(x[0] - c[0]) / t, (x[1] - c[1]) / t};
    return scale * cat.value(k, y);
  });
}

std::vector<double> moments(const VectorField& f, int s, const Point& c) {
  const Grid& g = f.grid;
  const auto idx = multi_indices(g.n(), s);
  std::vector<double> out(idx.size() * std::size_t(f.m), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.midpoint(i);
    const double* v = f.at(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double mono = std::pow(x[0] - c[0], idx[k][0]);
      if (g.n() == 2) mono *= std::pow(x[1] - c[1], idx[k][1]);
      for (int j = 0; j < f.m; ++j) out[k * std::size_t(f.m) + std::size_t(j)] += mono * v[j];
    }
  }
  for (auto& v : out) v *= g.cell_volume();
  return out;
}

void remove_moments(VectorField& f, int s, const Point& c, double R) {
  const Grid& g = f.grid;
  const int n = g.n();
  const auto idx = multi_indices(n, s);
  const std::size_t M = idx.size();
  std::vector<std::size_t> cells;
  std::vector<double> w;
  std::vector<std::vector<double>> mono;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.midpoint(i);
    Point y{(x[0] - c[0]) / R, n == 2 ? (x[1] - c[1]) / R : 0.0};
    const double r2 = y[0] * y[0] + y[1] * y[1];
    if (r2 >= 1.0) continue;
    const double b = std::exp(-1.0 / (1.0 - r2));
    if (b == 0.0) continue;
    cells.push_back(i);
    w.push_back(b);
    std::vector<double> mv(M);
    for (std::size_t k = 0; k < M; ++k) mv[k] = std::pow(y[0], idx[k][0]) * std::pow(y[1], idx[k][1]);
    mono.push_back(std::move(mv));
  }
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "moment-removal window contains no midpoints");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(long(M), long(M));
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(long(M), f.m);
  for (std::size_t q = 0; q < cells.size(); ++q) {
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) G(long(a), long(b)) += mono[q][a] * mono[q][b] * w[q];
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.midpoint(i);
    const double y0 = (x[0] - c[0]) / R, y1 = n == 2 ? (x[1] - c[1]) / R : 0.0;
    for (std::size_t a = 0; a < M; ++a) {
      const double mv = std::pow(y0, idx[a][0]) * std::pow(y1, idx[a][1]);
      for (int j = 0; j < f.m; ++j) mu(long(a), j) += mv * f.at(i)[j];
    }
  }
  Eigen::MatrixXd q = G.colPivHouseholderQr().solve(mu);
  for (std::size_t t = 0; t < cells.size(); ++t) {
    for (int j = 0; j < f.m; ++j) {
      double corr = 0.0;
      for (std::size_t a = 0; a < M; ++a) corr += q(long(a), j) * mono[t][a];
      f.at(cells[t])[j] -= corr * w[t];
    }
  }
}

namespace {

struct BumpDraw {
  Point c{0.0, 0.0};
  double r = 1.0;
  int axis = 0;
  std::vector<double> v;
};

BumpDraw draw_bump(CounterRng& rng, const Grid& g, int m, double frac) {
  const double L = g.L_box();
  BumpDraw b;
  b.r = rng.uniform(L / 8.0, L / 3.0);
  const double reach = std::max(0.0, frac * L - b.r);
  if (g.n() == 1) {
    b.c[0] = rng.uniform(-reach, reach);
  } else {
    const double rad = reach * std::sqrt(rng.uniform());
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    b.c = {rad * std::cos(ang), rad * std::sin(ang)};
  }
  b.axis = g.n() == 2 && rng.uniform() < 0.5 ? 1 : 0;
  b.v.resize(std::size_t(m));
  for (auto& x : b.v) x = rng.normal();
  return b;
}

void normalize_l2(VectorField& f) {
  const double nrm = l2_norm(f);
  if (nrm > 0.0)
    for (auto& v : f.values) v /= nrm;
}

}  // namespace

std::vector<VectorField> moment_free_suite(const Grid& g, int m, const SuiteOptions& opt) {
  std::vector<VectorField> out;
  for (int t = 0; t < opt.count; ++t) {
    CounterRng rng(opt.seed, 0x4D46ULL * 1000003ULL + std::uint64_t(t));
    VectorField f(g, m);
    const int bumps = 1 + int(rng.next() % 3);
    BumpDraw first;
    for (int b = 0; b < bumps; ++b) {
      BumpDraw d = draw_bump(rng, g, m, opt.support_frac);
      if (b == 0) first = d;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.midpoint(i);
        Point y{(x[0] - d.c[0]) / d.r, (x[1] - d.c[1]) / d.r};
        Jet j = bump_jet(g.n(), y, opt.s + 1);
        const double val = d.axis == 0 ? j.derivative(opt.s + 1, 0) : j.derivative(0, opt.s + 1);
        if (val == 0.0) continue;
        for (int k = 0; k < m; ++k) f.at(i)[k] += d.v[std::size_t(k)] * val;
      }
    }
    remove_moments(f, opt.s, first.c, first.r);
    normalize_l2(f);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<VectorField> smooth_suite(const Grid& g, int m, const SuiteOptions& opt) {
  std::vector<VectorField> out;
  for (int t = 0; t < opt.count; ++t) {
    CounterRng rng(opt.seed, 0x534DULL * 1000003ULL + std::uint64_t(t));
    VectorField f(g, m);
    const int bumps = 1 + int(rng.next() % 3);
    for (int b = 0; b < bumps; ++b) {
      BumpDraw d = draw_bump(rng, g, m, opt.support_frac);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.midpoint(i);
        const double y0 = (x[0] - d.c[0]) / d.r, y1 = g.n() == 2 ? (x[1] - d.c[1]) / d.r : 0.0;
        const double r2 = y0 * y0 + y1 * y1;
        if (r2 >= 1.0) continue;
        const double val = std::exp(-1.0 / (1.0 - r2));
        for (int k = 0; k < m; ++k) f.at(i)[k] += d.v[std::size_t(k)] * val;
      }
    }
    normalize_l2(f);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace hardylab
