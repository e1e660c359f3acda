#include "hardylab/vexp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hardylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radius(const Point& x, int n) { return n == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]); }

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

ExponentSpec ExponentSpec::constant(double p) { return {"constant", {p}, false}; }
ExponentSpec ExponentSpec::constant_infinite() { return {"constant", {}, true}; }
ExponentSpec ExponentSpec::log_decay(double p_inf, double c) { return {"log_decay", {p_inf, c}, false}; }
ExponentSpec ExponentSpec::two_level(double a, double b, double split) { return {"two_level", {a, b, split}, false}; }
ExponentSpec ExponentSpec::smooth_step(double a, double b, double w) { return {"smooth_step", {a, b, w}, false}; }

void ExponentSpec::validate() const {
  auto need = [&](std::size_t k) {
    if (params.size() != k)
      throw Error(ErrorCode::ConfigInvalid, "exponent.params: preset " + preset + " expects " + std::to_string(k) + " values");
  };
  if (preset == "constant") {
    if (infinite) return;
    need(1);
    if (!(params[0] > 0.0)) throw Error(ErrorCode::ConfigInvalid, "exponent.params[0]: p must be > 0");
  } else if (preset == "log_decay") {
    need(2);
    if (!(params[0] > 0.0) || !(params[0] + std::min(0.0, params[1]) > 0.0))
      throw Error(ErrorCode::ConfigInvalid, "exponent.params: log_decay must stay > 0");
  } else if (preset == "two_level") {
    need(3);
    if (!(params[0] > 0.0) || !(params[1] > 0.0)) throw Error(ErrorCode::ConfigInvalid, "exponent.params: levels must be > 0");
  } else if (preset == "smooth_step") {
    need(3);
    if (!(params[0] > 0.0) || !(params[1] > 0.0)) throw Error(ErrorCode::ConfigInvalid, "exponent.params: levels must be > 0");
    if (!(params[2] > 0.0)) throw Error(ErrorCode::ConfigInvalid, "exponent.params[2]: width must be > 0");
  } else {
    throw Error(ErrorCode::ConfigInvalid, "exponent.preset: unknown preset '" + preset + "'");
  }
}

bool ExponentSpec::declared_lh() const { return preset != "two_level"; }

std::optional<double> ExponentSpec::analytic_p_inf() const {
  if (preset == "constant") return infinite ? std::optional<double>() : params[0];
  if (preset == "log_decay") return params[0];
  if (preset == "smooth_step") return params[1];
  return std::nullopt;
}

ExponentValue ExponentSpec::at(const Point& x, int n) const {
  if (preset == "constant") return infinite ? ExponentValue{0.0, true} : ExponentValue{params[0], false};
  if (preset == "log_decay") return {params[0] + params[1] / std::log(std::exp(1.0) + radius(x, n)), false};
  if (preset == "two_level") return {x[0] < params[2] ? params[0] : params[1], false};
  if (preset == "smooth_step") {
    const double r = radius(x, n) / params[2];
    return {params[0] + (params[1] - params[0]) * (1.0 - std::exp(-r * r)), false};
  }
  throw Error(ErrorCode::ConfigInvalid, "exponent.preset: unknown preset '" + preset + "'");
}

std::string ExponentSpec::label() const {
  std::string s = preset + "(";
  if (infinite) s += "inf";
  for (std::size_t i = 0; i < params.size(); ++i) s += (i ? "," : "") + fmt_num(params[i]);
  return s + ")";
}

ExponentProfile::ExponentProfile(const Grid& g, std::vector<double> p, std::vector<std::uint8_t> inf,
                                 std::optional<double> p_inf, bool declared_lh, std::string label)
    : grid_(g), p_(std::move(p)), inf_(std::move(inf)), p_inf_(p_inf), declared_lh_(declared_lh), label_(std::move(label)) {
  if (p_.size() != g.size() || inf_.size() != g.size())
    throw Error(ErrorCode::GridMismatch, "exponent sample count does not match grid");
  p_minus_ = kInf;
  p_plus_ = 0.0;
  bool any_finite = false;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (inf_[i]) {
      any_inf_ = true;
      continue;
    }
    if (!(p_[i] > 0.0) || !std::isfinite(p_[i])) throw Error(ErrorCode::ConfigInvalid, "exponent sample must be finite and > 0");
    any_finite = true;
    p_minus_ = std::min(p_minus_, p_[i]);
    p_plus_ = std::max(p_plus_, p_[i]);
  }
  if (!any_finite) p_plus_ = 0.0;
}

ExponentProfile ExponentProfile::realize(const ExponentSpec& spec, const Grid& g) {
  spec.validate();
  std::vector<double> p(g.size());
  std::vector<std::uint8_t> inf(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ExponentValue v = spec.at(g.midpoint(i), g.n());
    p[i] = v.infinite ? 0.0 : v.value;
    inf[i] = v.infinite ? 1 : 0;
  }
  return ExponentProfile(g, std::move(p), std::move(inf), spec.analytic_p_inf(), spec.declared_lh(), spec.label());
}

ExponentProfile ExponentProfile::constant(const Grid& g, double p) {
  return realize(ExponentSpec::constant(p), g);
}

ExponentProfile ExponentProfile::scaled(double factor) const {
  std::vector<double> p = p_;
  for (auto& v : p) v *= factor;
  std::optional<double> pi = p_inf_;
  if (pi) *pi *= factor;
  return ExponentProfile(grid_, std::move(p), inf_, pi, declared_lh_, fmt_num(factor) + "*" + label_);
}

LHConstants certify_lh(const ExponentProfile& p) {
  const Grid& g = p.grid();
  LHConstants out;
  if (p.p_inf()) {
    out.p_inf = *p.p_inf();
  } else {
    double s = 0.0;
    std::size_t c = 0;
    const long N = g.per_axis();
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto mi = g.multi_index(i);
      bool boundary = false;
      for (int a = 0; a < g.n(); ++a) boundary = boundary || mi[a] == 0 || mi[a] == N - 1;
      if (boundary && !p.is_infinite(i)) {
        s += p.value(i);
        ++c;
      }
    }
    out.p_inf = c ? s / double(c) : kInf;
  }

  auto diff = [&](std::size_t i, std::size_t j) -> double {
    const bool a = p.is_infinite(i), b = p.is_infinite(j);
    if (a && b) return 0.0;
    if (a || b) return kInf;
    return std::abs(p.value(i) - p.value(j));
  };

  const long N = g.per_axis();
  const long w = std::min(N - 1, long(std::ceil(0.5 / g.h())));
  double C0 = 0.0;
  if (g.n() == 1) {
    for (long i = 0; i < N; ++i) {
      for (long j = i + 1; j <= std::min(N - 1, i + w); ++j) {
        const double d = double(j - i) * g.h();
        if (d >= 0.5) break;
        const double v = diff(std::size_t(i), std::size_t(j));
        if (v > 0.0) C0 = std::max(C0, v * -std::log(d));
      }
    }
  } else {
    for (long i0 = 0; i0 < N; ++i0)
      for (long i1 = 0; i1 < N; ++i1) {
        const std::size_t a = g.flat(i0, i1);
        for (long d0 = 0; d0 <= w; ++d0)
          for (long d1 = -w; d1 <= w; ++d1) {
            if (d0 == 0 && d1 <= 0) continue;
            const long j0 = i0 + d0, j1 = i1 + d1;
            if (j0 >= N || j1 < 0 || j1 >= N) continue;
            const double d = g.h() * std::hypot(double(d0), double(d1));
            if (d >= 0.5) continue;
            const double v = diff(a, g.flat(j0, j1));
            if (v > 0.0) C0 = std::max(C0, v * -std::log(d));
          }
      }
  }
  out.C0 = C0;

  double Cinf = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p.is_infinite(i)) {
      if (std::isfinite(out.p_inf)) Cinf = kInf;
      continue;
    }
    const Point x = g.midpoint(i);
    const double r = g.n() == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    Cinf = std::max(Cinf, std::abs(p.value(i) - out.p_inf) * std::log(std::exp(1.0) + r));
  }
  out.Cinf = Cinf;
  return out;
}

LocalExponent restrict_exponent(const ExponentProfile& p, const std::vector<std::size_t>& cells) {
  LocalExponent ex;
  ex.cell_volume = p.grid().cell_volume();
  ex.p.resize(cells.size());
  ex.inf.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    ex.p[k] = p.value(cells[k]);
    ex.inf[k] = p.is_infinite(cells[k]) ? 1 : 0;
  }
  finalize_exponent(ex);
  return ex;
}

void finalize_exponent(LocalExponent& ex) {
  ex.any_inf = false;
  ex.all_inf = !ex.p.empty();
  bool same = !ex.p.empty();
  for (std::size_t k = 0; k < ex.size(); ++k) {
    if (ex.inf[k]) {
      ex.any_inf = true;
    } else {
      ex.all_inf = false;
    }
    if (ex.inf[k] || ex.p[k] != ex.p[0]) same = false;
  }
  ex.uniform_p = same ? ex.p[0] : 0.0;
}

double modular_local(const double* a, const LocalExponent& ex, double lambda) {
  double s = 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double v = std::abs(a[i]) / lambda;
    if (ex.inf[i]) {
      sup = std::max(sup, v);
    } else if (v > 0.0) {
      s += std::pow(v, ex.p[i]);
    }
  }
  return s * ex.cell_volume + sup;
}

double luxemburg(const double* a, const LocalExponent& ex) {
  if (ex.all_inf) {
    double m = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
  }
  if (ex.uniform_p > 0.0) {
    const double q = ex.uniform_p;
    double m = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) m = std::max(m, std::abs(a[i]));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    if (q == 1.0) {
      for (std::size_t i = 0; i < ex.size(); ++i) s += std::abs(a[i]);
      return s * ex.cell_volume;
    }
    if (q == 2.0) {
      for (std::size_t i = 0; i < ex.size(); ++i) s += (a[i] / m) * (a[i] / m);
      return m * std::sqrt(s * ex.cell_volume);
    }
    for (std::size_t i = 0; i < ex.size(); ++i) s += std::pow(std::abs(a[i]) / m, q);
    return m * std::pow(s * ex.cell_volume, 1.0 / q);
  }
  // Work in s = log(lambda): rho(s) = sum c_i exp(-p_i s) + M exp(-s) is log-convex and decreasing.
  std::vector<double> la;
  std::vector<double> pp;
  la.reserve(ex.size());
  pp.reserve(ex.size());
  double sup_all = 0.0;
  double sup_inf = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double v = std::abs(a[i]);
    sup_all = std::max(sup_all, v);
    if (v == 0.0) continue;
    if (ex.inf[i]) {
      sup_inf = std::max(sup_inf, v);
    } else {
      la.push_back(std::log(v));
      pp.push_back(ex.p[i]);
    }
  }
  if (sup_all == 0.0) return 0.0;
  const double logvol = std::log(ex.cell_volume);

  // Returns log rho and d(log rho)/ds.
  auto eval = [&](double s, double& dlog) {
    double rho = 0.0, drho = 0.0;
    for (std::size_t i = 0; i < la.size(); ++i) {
      const double t = std::exp(pp[i] * (la[i] - s) + logvol);
      rho += t;
      drho -= pp[i] * t;
    }
    if (sup_inf > 0.0) {
      const double t = sup_inf * std::exp(-s);
      rho += t;
      drho -= t;
    }
    dlog = (rho > 0.0 && std::isfinite(rho)) ? drho / rho : -1.0;
    return std::log(rho);
  };

  const double total = double(ex.size()) * ex.cell_volume;
  double dl = 0.0;
  double s_hi = std::log(std::max(1.0, sup_all) * (total + 1.0));
  while (eval(s_hi, dl) > 0.0) s_hi += std::log(2.0);
  double s_lo = s_hi - std::log(2.0);
  while (!(eval(s_lo, dl) > 0.0)) {
    s_hi = s_lo;
    s_lo -= std::log(2.0);
  }

  // Newton from the left end stays left of the root for a convex decreasing function.
  double s = s_lo;
  for (int it = 0; it < 200; ++it) {
    const double g = eval(s, dl);
    if (!(g > 0.0)) {
      if (g == 0.0) return std::exp(s);
      s_hi = s;
      s = 0.5 * (s_lo + s_hi);
      continue;
    }
    s_lo = s;
    double next = (std::isfinite(g) && dl < 0.0) ? s - g / dl : 0.5 * (s_lo + s_hi);
    if (!(next > s_lo) || !(next < s_hi)) next = 0.5 * (s_lo + s_hi);
    if (next - s <= 1e-15 * std::max(1.0, std::abs(s)) || s_hi - s_lo <= 1e-14 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  return std::exp(s);
}

double modular(const ScalarField& f, const ExponentProfile& p) {
  require_same_grid(f.grid, p.grid(), "modular: grids differ");
  double s = 0.0, sup = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::abs(f.values[i]);
    if (p.is_infinite(i)) sup = std::max(sup, v);
    else if (v > 0.0) s += std::pow(v, p.value(i));
  }
  return s * f.grid.cell_volume() + sup;
}

double vnorm(const ScalarField& f, const ExponentProfile& p) {
  require_same_grid(f.grid, p.grid(), "vnorm: grids differ");
  LocalExponent ex;
  ex.p = p.values();
  ex.inf = p.infinite_mask();
  ex.cell_volume = f.grid.cell_volume();
  finalize_exponent(ex);
  return luxemburg(f.values.data(), ex);
}

double vnorm_indicator(const ExponentProfile& p, const std::vector<std::size_t>& cells) {
  LocalExponent ex = restrict_exponent(p, cells);
  std::vector<double> ones(cells.size(), 1.0);
  return luxemburg(ones.data(), ex);
}

double vnorm_indicator(const ExponentProfile& p, const Cube& q) {
  auto cells = cells_in(p.grid(), q);
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "indicator norm over a cube without midpoints");
  return vnorm_indicator(p, cells);
}

ExponentValue p_harmonic(const ExponentProfile& p, const Cube& q) {
  auto cells = cells_in(p.grid(), q);
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "p_harmonic over a cube without midpoints");
  double s = 0.0;
  for (auto i : cells) s += p.is_infinite(i) ? 0.0 : 1.0 / p.value(i);
  s /= double(cells.size());
  if (s == 0.0) return {0.0, true};
  return {1.0 / s, false};
}

ExponentProfile conjugate(const ExponentProfile& p) {
  if (p.p_minus() < 1.0) throw Error(ErrorCode::NotInP, "conjugate requires p_minus >= 1 (got " + fmt_num(p.p_minus()) + ")");
  const Grid& g = p.grid();
  std::vector<double> v(g.size(), 0.0);
  std::vector<std::uint8_t> inf(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p.is_infinite(i)) {
      v[i] = 1.0;
    } else if (p.value(i) == 1.0) {
      inf[i] = 1;
    } else {
      v[i] = p.value(i) / (p.value(i) - 1.0);
    }
  }
  std::optional<double> pi;
  if (p.p_inf() && *p.p_inf() > 1.0) pi = *p.p_inf() / (*p.p_inf() - 1.0);
  return ExponentProfile(g, std::move(v), std::move(inf), pi, p.declared_lh(), "conj(" + p.label() + ")");
}

double est_q_ratio(const ExponentProfile& p, const Cube& q) {
  auto cells = cells_in(p.grid(), q);
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "est_q_ratio over a cube without midpoints");
  const double vol = double(cells.size()) * p.grid().cell_volume();
  ExponentValue pq = p_harmonic(p, q);
  const double denom = pq.infinite ? 1.0 : std::pow(vol, 1.0 / pq.value);
  return vnorm_indicator(p, cells) / denom;
}

}  // namespace hardylab
