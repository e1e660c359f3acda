#include "hardylab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hardylab/rng.hpp"

namespace hardylab {

namespace {

double radius(const Point& x, int n) { return n == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]); }

Mat rotation(double t) {
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::ConfigInvalid, "weight." + msg);
}

}  // namespace

WeightSpec WeightSpec::identity(int m) { return {"identity", {}, m}; }

WeightSpec WeightSpec::constant(const Mat& A) {
  WeightSpec s{"constant", std::vector<double>(A.data(), A.data() + A.size()), int(A.rows())};
  return s;
}

WeightSpec WeightSpec::scalar_power(int m, double a) { return {"scalar_power", {a}, m}; }
WeightSpec WeightSpec::diag_power(std::vector<double> a) {
  const int m = int(a.size());
  return {"diag_power", std::move(a), m};
}
WeightSpec WeightSpec::rotated_diag(double theta, double a1, double a2) { return {"rotated_diag", {theta, a1, a2}, 2}; }
WeightSpec WeightSpec::bump_conjugated(double theta0, double width, double d1, double d2) {
  return {"bump_conjugated", {theta0, width, d1, d2}, 2};
}

void WeightSpec::validate() const {
  require(m >= 1 && m <= 3, "m: must be 1, 2 or 3");
  for (double v : params) require(std::isfinite(v), "params: entries must be finite");
  if (preset == "identity") {
    require(params.empty(), "params: identity takes no parameters");
  } else if (preset == "constant") {
    require(params.size() == std::size_t(m * m), "params: constant needs m*m column-major entries");
    Mat A = Eigen::Map<const Mat>(params.data(), m, m);
    require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()),
            "params: constant matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    require(es.eigenvalues().minCoeff() > 0.0, "params: constant matrix must be positive definite");
  } else if (preset == "scalar_power") {
    require(params.size() == 1, "params: scalar_power takes [a]");
  } else if (preset == "diag_power") {
    require(params.size() == std::size_t(m), "params: diag_power takes m exponents");
  } else if (preset == "rotated_diag") {
    require(m == 2, "m: rotated_diag requires m = 2");
    require(params.size() == 3, "params: rotated_diag takes [theta, a1, a2]");
  } else if (preset == "bump_conjugated") {
    require(m == 2, "m: bump_conjugated requires m = 2");
    require(params.size() == 4, "params: bump_conjugated takes [theta0, width, d1, d2]");
    require(params[1] > 0.0 && params[2] > 0.0 && params[3] > 0.0, "params: width, d1, d2 must be positive");
  } else {
    require(false, "preset: unknown weight preset '" + preset + "'");
  }
}

Mat WeightSpec::at(const Point& x, int n) const {
  const double r = radius(x, n);
  if (preset == "identity") return Mat::Identity(m, m);
  if (preset == "constant") return Eigen::Map<const Mat>(params.data(), m, m);
  if (preset == "scalar_power") return std::pow(r, params[0]) * Mat::Identity(m, m);
  if (preset == "diag_power") {
    Mat D = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) D(i, i) = std::pow(r, params[std::size_t(i)]);
    return D;
  }
  if (preset == "rotated_diag") {
    Mat R = rotation(params[0]);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = std::pow(r, params[1]);
    D(1, 1) = std::pow(r, params[2]);
    return R * D * R.transpose();
  }
  if (preset == "bump_conjugated") {
    const double t = params[0] * std::exp(-(r * r) / (params[1] * params[1]));
    Mat R = rotation(t);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = params[2];
    D(1, 1) = params[3];
    return R * D * R.transpose();
  }
  throw Error(ErrorCode::ConfigInvalid, "weight.preset: unknown weight preset '" + preset + "'");
}

std::vector<double> WeightSpec::power_exponents() const {
  if (preset == "scalar_power" || preset == "diag_power") return params;
  if (preset == "rotated_diag") return {params[1], params[2]};
  return {};
}

bool WeightSpec::class_guard(int n, double p_minus) const {
  for (double a : power_exponents())
    if (!(std::abs(a) < double(n) / p_minus)) return false;
  return true;
}

std::string WeightSpec::label() const {
  std::ostringstream os;
  os << preset << "(";
  for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
  os << ")m" << m;
  return os.str();
}

MatrixWeight::MatrixWeight(const WeightSpec& spec, const Grid& g) : grid_(g), m_(spec.m) {
  spec.validate();
  spec_ = spec;
  has_spec_ = true;
  label_ = spec.label();
  const std::size_t mm = std::size_t(m_ * m_);
  w_.resize(g.size() * mm);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Mat A = spec.at(g.midpoint(i), g.n());
    std::copy(A.data(), A.data() + mm, w_.data() + i * mm);
  }
  finish();
  constant_ = spec.is_constant();
}

MatrixWeight MatrixWeight::from_samples(const Grid& g, int m, std::vector<double> samples, std::string label) {
  if (samples.size() != g.size() * std::size_t(m * m))
    throw Error(ErrorCode::GridMismatch, "weight samples do not match the grid");
  MatrixWeight W(g, m);
  W.w_ = std::move(samples);
  W.label_ = std::move(label);
  W.finish();
  W.constant_ = true;
  const std::size_t mm = std::size_t(m * m);
  for (std::size_t i = 1; i < g.size() && W.constant_; ++i)
    W.constant_ = std::equal(W.w_.begin(), W.w_.begin() + long(mm), W.w_.begin() + long(i * mm));
  return W;
}

void MatrixWeight::finish() {
  const std::size_t mm = std::size_t(m_ * m_);
  const std::size_t N = grid_.size();
  winv_.resize(N * mm);
  norm_.resize(N);
  inv_norm_.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::Map<const Mat> A(W(i), m_, m_);
    if (!A.allFinite()) throw Error(ErrorCode::SingularSample, "non-finite weight sample at cell " + std::to_string(i));
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw Error(ErrorCode::SingularSample, "weight sample not symmetric at cell " + std::to_string(i));
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo >= 1e12)
      throw Error(ErrorCode::SingularSample, "weight sample not positive definite or ill-conditioned at cell " +
                                                 std::to_string(i));
    Mat inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    inv = 0.5 * (inv + inv.transpose());
    std::copy(inv.data(), inv.data() + mm, winv_.data() + i * mm);
    norm_[i] = hi;
    inv_norm_[i] = 1.0 / lo;
  }
}

Mat MatrixWeight::matrix(std::size_t i) const { return Eigen::Map<const Mat>(W(i), m_, m_); }
Mat MatrixWeight::inverse_matrix(std::size_t i) const { return Eigen::Map<const Mat>(Winv(i), m_, m_); }

Mat MatrixWeight::at(const Point& x) const {
  if (has_spec_) {
    Mat A = spec_.at(x, grid_.n());
    return inverted_ ? sym_inverse(A) : A;
  }
  return matrix(cell_of(grid_, x));
}

MatrixWeight MatrixWeight::inverse() const {
  MatrixWeight out = *this;
  std::swap(out.w_, out.winv_);
  std::swap(out.norm_, out.inv_norm_);
  out.inverted_ = !inverted_;
  out.label_ = "inverse(" + label_ + ")";
  return out;
}

std::vector<Cube> characteristic_catalog(const Grid& g, std::uint64_t seed, int random_count, std::size_t max_cells) {
  const int n = g.n();
  const double L = g.L_box();
  const std::size_t min_cells = n == 1 ? 2 : 4;
  auto keep = [&](const Cube& q) {
    const std::size_t c = std::size_t(cell_range(g, q).count());
    return c >= min_cells && (max_cells == 0 || c <= max_cells);
  };
  std::vector<Cube> out;
  const int k_top = std::ilogb(2.0 * L);
  for (unsigned s = 0; s < unsigned(num_shifts(n)); ++s) {
    for (int k = k_top; k >= k_top - 4; --k) {
      const double e = std::ldexp(1.0, k);
      const long long lo = (long long)std::floor(-L / e) - 2;
      const long long hi = (long long)std::ceil(L / e) + 2;
      for (long long a = lo; a <= hi; ++a) {
        for (long long b = (n == 2 ? lo : 0); b <= (n == 2 ? hi : 0); ++b) {
          DyadicIndex idx{k, {a, b}, s};
          Cube q = Cube::dyadic(n, idx);
          bool inside = true;
          for (int ax = 0; ax < n; ++ax) inside = inside && q.lower(ax) >= -L && q.upper(ax) <= L;
          if (inside && keep(q)) out.push_back(q);
        }
      }
    }
  }
  CounterRng rng(seed, 0x43415441ULL);
  for (int t = 0; t < random_count; ++t) {
    const double e = rng.uniform(2.0 * L / 32.0, L);
    Point c{0.0, 0.0};
    for (int ax = 0; ax < n; ++ax) c[std::size_t(ax)] = rng.uniform(-L + 0.5 * e, L - 0.5 * e);
    Cube q(n, c, e);
    if (keep(q)) out.push_back(q);
  }
  return out;
}

std::vector<Cube> maximal_catalog(const Grid& g) {
  const int n = g.n();
  const double L = g.L_box();
  std::vector<Cube> out;
  const int k_top = std::ilogb(2.0 * L);
  const int k_bot = std::ilogb(g.h());
  for (unsigned s = 0; s < unsigned(num_shifts(n)); ++s) {
    for (int k = k_top; k >= k_bot; --k) {
      const double e = std::ldexp(1.0, k);
      const long long lo = (long long)std::floor(-L / e) - 2;
      const long long hi = (long long)std::ceil(L / e) + 2;
      for (long long a = lo; a <= hi; ++a) {
        for (long long b = (n == 2 ? lo : 0); b <= (n == 2 ? hi : 0); ++b) {
          Cube q = Cube::dyadic(n, DyadicIndex{k, {a, b}, s});
          if (cell_range(g, q).count() > 0) out.push_back(q);
        }
      }
    }
  }
  return out;
}

namespace {

// exp( avg_{y in Y} log( vnorm_{x in X}(||W(x) W^{-1}(y)||, p) / vnorm(1_X, p) ) )
double log_average_ratio(const MatrixWeight& W, const ExponentProfile& p, const std::vector<std::size_t>& X,
                         const std::vector<std::size_t>& Y) {
  const int m = W.m();
  LocalExponent ex = restrict_exponent(p, X);
  std::vector<double> ones(X.size(), 1.0);
  const double ind = luxemburg(ones.data(), ex);
  std::vector<double> vals(X.size());
  double prod[9];
  double acc = 0.0;
  for (auto y : Y) {
    for (std::size_t k = 0; k < X.size(); ++k) {
      if (m == 1) {
        vals[k] = W.W(X[k])[0] * W.Winv(y)[0];
      } else {
        mat_mul(W.W(X[k]), W.Winv(y), prod, m);
        vals[k] = spectral_norm(prod, m);
      }
    }
    acc += std::log(luxemburg(vals.data(), ex) / ind);
  }
  return std::exp(acc / double(Y.size()));
}

std::vector<std::size_t> nonempty_cells(const Grid& g, const Cube& q) {
  auto cells = cells_in(g, q);
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "cube without midpoints in weight characteristic");
  return cells;
}

double ap_cells(const MatrixWeight& W, const ExponentProfile& p, const ExponentProfile& pc,
                const std::vector<std::size_t>& cells) {
  const int m = W.m();
  LocalExponent ex = restrict_exponent(p, cells);
  LocalExponent exc = restrict_exponent(pc, cells);
  std::vector<double> vals(cells.size()), inner(cells.size());
  double prod[9];
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = 0; b < cells.size(); ++b) {
      if (m == 1) {
        vals[b] = W.W(cells[a])[0] * W.Winv(cells[b])[0];
      } else {
        mat_mul(W.W(cells[a]), W.Winv(cells[b]), prod, m);
        vals[b] = spectral_norm(prod, m);
      }
    }
    inner[a] = luxemburg(vals.data(), exc);
  }
  return luxemburg(inner.data(), ex) / (double(cells.size()) * W.grid().cell_volume());
}

}  // namespace

double ap_on_cube(const MatrixWeight& W, const ExponentProfile& p, const Cube& q) {
  require_same_grid(W.grid(), p.grid(), "ap characteristic");
  const ExponentProfile pc = conjugate(p);
  return ap_cells(W, p, pc, nonempty_cells(W.grid(), q));
}

double apinfty_on_cube(const MatrixWeight& W, const ExponentProfile& p, const Cube& q) {
  require_same_grid(W.grid(), p.grid(), "apinfty characteristic");
  auto cells = nonempty_cells(W.grid(), q);
  return log_average_ratio(W, p, cells, cells);
}

CatalogMax ap_characteristic(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog) {
  require_same_grid(W.grid(), p.grid(), "ap characteristic");
  const ExponentProfile pc = conjugate(p);
  CatalogMax best{0.0, 0};
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const double v = ap_cells(W, p, pc, nonempty_cells(W.grid(), catalog[k]));
    if (v > best.value) best = {v, k};
  }
  return best;
}

CatalogMax apinfty_characteristic(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog) {
  CatalogMax best{0.0, 0};
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const double v = apinfty_on_cube(W, p, catalog[k]);
    if (v > best.value) best = {v, k};
  }
  return best;
}

double reduced_norm(const MatrixWeight& W, const ExponentProfile& p, const std::vector<std::size_t>& cells,
                    const double* z) {
  const int m = W.m();
  LocalExponent ex = restrict_exponent(p, cells);
  std::vector<double> vals(cells.size());
  double y[3];
  for (std::size_t k = 0; k < cells.size(); ++k) {
    mat_vec(W.W(cells[k]), z, y, m);
    vals[k] = euclid(y, m);
  }
  std::vector<double> ones(cells.size(), 1.0);
  return luxemburg(vals.data(), ex) / luxemburg(ones.data(), ex);
}

ReducingOperator reducing_operator(const MatrixWeight& W, const ExponentProfile& p,
                                   const std::vector<std::size_t>& cells, int mesh_count) {
  if (cells.empty()) throw Error(ErrorCode::EmptyCube, "reducing operator over a cube without midpoints");
  const int m = W.m();
  LocalExponent ex = restrict_exponent(p, cells);
  std::vector<double> ones(cells.size(), 1.0);
  const double ind = luxemburg(ones.data(), ex);
  std::vector<Vec> mesh = probe_mesh(m, mesh_count);
  std::vector<double> norms(mesh.size());
  std::vector<double> vals(cells.size());
  double y[3];
  for (std::size_t d = 0; d < mesh.size(); ++d) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      mat_vec(W.W(cells[k]), mesh[d].data(), y, m);
      vals[k] = euclid(y, m);
    }
    norms[d] = luxemburg(vals.data(), ex) / ind;
  }
  return fit_norm_ellipsoid(mesh, norms);
}

ReducingOperator reducing_operator(const MatrixWeight& W, const ExponentProfile& p, const Cube& q, int mesh_count) {
  require_same_grid(W.grid(), p.grid(), "reducing operator");
  return reducing_operator(W, p, nonempty_cells(W.grid(), q), mesh_count);
}

std::vector<ReducingOperator> reducing_operators(const MatrixWeight& W, const ExponentProfile& p,
                                                 const std::vector<Cube>& cubes) {
  std::vector<ReducingOperator> out;
  out.reserve(cubes.size());
  for (const auto& q : cubes) out.push_back(reducing_operator(W, p, q));
  return out;
}

double reducing_matrix_norm_check(const Mat& A, const MatrixWeight& W, const ExponentProfile& p, const Cube& q,
                                  const Mat& M) {
  auto cells = nonempty_cells(W.grid(), q);
  const int m = W.m();
  LocalExponent ex = restrict_exponent(p, cells);
  std::vector<double> vals(cells.size()), ones(cells.size(), 1.0);
  double prod[9];
  for (std::size_t k = 0; k < cells.size(); ++k) {
    mat_mul(W.W(cells[k]), M.data(), prod, m);
    vals[k] = spectral_norm(prod, m);
  }
  const double rhs = luxemburg(vals.data(), ex) / luxemburg(ones.data(), ex);
  return spectral_norm(Mat(A * M)) / rhs;
}

Dimensions weight_dimensions(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                             const std::vector<double>& lambdas, double apinfty_char) {
  Dimensions d;
  for (const auto& q : catalog) {
    auto cq = nonempty_cells(W.grid(), q);
    for (double lam : lambdas) {
      if (lam <= 1.0) continue;
      auto cl = nonempty_cells(W.grid(), q.dilate(lam));
      const double lower = log_average_ratio(W, p, cq, cl);
      const double upper = log_average_ratio(W, p, cl, cq);
      d.d1 = std::max(d.d1, std::log(lower / apinfty_char) / std::log(lam));
      d.d2 = std::max(d.d2, std::log(upper / apinfty_char) / std::log(lam));
    }
  }
  return d;
}

double qp5_check(const MatrixWeight& W, const ExponentProfile& p, const std::vector<std::pair<Cube, Cube>>& pairs,
                 double d1, double d2) {
  double worst = 0.0;
  for (const auto& [Q, R] : pairs) {
    Mat AQ = reducing_operator(W, p, Q).A;
    Mat AR = reducing_operator(W, p, R).A;
    const double lhs = spectral_norm(Mat(AQ * sym_inverse(AR)));
    double dist = 0.0;
    for (int ax = 0; ax < Q.n(); ++ax) dist += std::pow(Q.center()[ax] - R.center()[ax], 2);
    dist = std::sqrt(dist);
    const double lmax = std::max(Q.edge(), R.edge());
    const double env = std::max(std::pow(R.edge() / Q.edge(), d1), std::pow(Q.edge() / R.edge(), d2)) *
                       std::pow(1.0 + dist / lmax, d1 + d2);
    worst = std::max(worst, lhs / env);
  }
  return worst;
}

double reverse_holder_ratio(const MatrixWeight& W, const ExponentProfile& p, double r, const std::vector<Cube>& catalog,
                            const std::vector<Mat>& M_list) {
  const ExponentProfile rp = p.scaled(r);
  const int m = W.m();
  double worst = 0.0;
  for (const auto& q : catalog) {
    auto cells = nonempty_cells(W.grid(), q);
    LocalExponent ex = restrict_exponent(p, cells);
    LocalExponent exr = restrict_exponent(rp, cells);
    std::vector<double> vals(cells.size()), ones(cells.size(), 1.0);
    const double ind = luxemburg(ones.data(), ex);
    const double indr = luxemburg(ones.data(), exr);
    double prod[9];
    for (const Mat& M : M_list) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        mat_mul(W.W(cells[k]), M.data(), prod, m);
        vals[k] = spectral_norm(prod, m);
      }
      const double ratio = (luxemburg(vals.data(), exr) / indr) / (luxemburg(vals.data(), ex) / ind);
      worst = std::max(worst, ratio);
    }
  }
  return worst;
}

ReverseHolderResult reverse_holder_check(const WeightSpec& ws, const ExponentSpec& ps, const Grid& g, double r,
                                         const std::vector<Cube>& catalog, const std::vector<Mat>& M_list) {
  ReverseHolderResult res;
  const Grid fine = g.refined();
  res.ratio = reverse_holder_ratio(MatrixWeight(ws, g), ExponentProfile::realize(ps, g), r, catalog, M_list);
  res.ratio_refined =
      reverse_holder_ratio(MatrixWeight(ws, fine), ExponentProfile::realize(ps, fine), r, catalog, M_list);
  res.pass = std::isfinite(res.ratio) && std::isfinite(res.ratio_refined) && res.ratio_refined <= 1.1 * res.ratio;
  return res;
}

AlphaU select_alpha_u(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                      const std::vector<ReducingOperator>& ops, double budget) {
  const int m = W.m();
  // Per cube: values ||W^{-1}(x) A_Q|| over its cells.
  std::vector<std::vector<double>> norms(catalog.size());
  double prod[9];
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    auto cells = nonempty_cells(W.grid(), catalog[k]);
    norms[k].resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      mat_mul(W.Winv(cells[i]), ops[k].A.data(), prod, m);
      norms[k][i] = spectral_norm(prod, m);
    }
  }
  for (double alpha = 1.0; alpha >= 1.0 / 64.0; alpha *= 0.5) {
    double sup = 0.0;
    for (const auto& v : norms) {
      double s = 0.0;
      for (double x : v) s += std::pow(x, 2.0 * alpha);
      sup = std::max(sup, s / double(v.size()));
    }
    if (sup <= budget) {
      AlphaU out;
      out.alpha = alpha;
      out.u = std::min(alpha / 2.0, p.p_minus() / 2.0) * (1.0 - 1e-6);
      out.sup_average = sup;
      return out;
    }
  }
  throw Error(ErrorCode::NoAlphaFound, "no convexification exponent down to 1/64 meets the budget for " + W.label());
}

AlphaU select_alpha_u(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                      double budget) {
  return select_alpha_u(W, p, catalog, reducing_operators(W, p, catalog), budget);
}

WeightCertificate certify_weight(const WeightSpec& ws, const ExponentSpec& ps, const Grid& g,
                                 const CertifyOptions& opt) {
  WeightCertificate c;
  const MatrixWeight W(ws, g);
  const ExponentProfile p = ExponentProfile::realize(ps, g);
  c.weight_label = W.label();
  c.exponent_label = p.label();
  c.class_guard = ws.class_guard(g.n(), p.p_minus());

  auto catalog = characteristic_catalog(g, opt.seed, opt.random_cubes, opt.max_cells);
  std::vector<Cube> dyadic_part;
  for (const auto& q : catalog)
    if (q.is_dyadic()) dyadic_part.push_back(q);
  c.catalog_size = catalog.size();

  if (p.p_minus() >= 1.0) c.ap_char = ap_characteristic(W, p, catalog).value;
  else c.ap_char = std::numeric_limits<double>::quiet_NaN();
  c.apinfty_char = apinfty_characteristic(W, p, catalog).value;
  Dimensions d = weight_dimensions(W, p, dyadic_part, opt.lambdas, c.apinfty_char);
  c.d1 = d.d1;
  c.d2 = d.d2;
  c.Delta = d.d1 + d.d2;

  auto ops = reducing_operators(W, p, catalog);
  for (const auto& op : ops) c.fit_max_ratio = std::max(c.fit_max_ratio, op.max_ratio / op.min_ratio);

  std::vector<Mat> M_list{Mat::Identity(ws.m, ws.m)};
  if (ws.m >= 2) {
    Mat P = Mat::Zero(ws.m, ws.m);
    P(0, 0) = 1.0;
    M_list.push_back(P);
    Mat Q = Mat::Zero(ws.m, ws.m);
    Q(ws.m - 1, ws.m - 1) = 1.0;
    M_list.push_back(Q);
  }
  c.r_W = 1.0;
  for (double r : opt.r_ladder) {
    if (reverse_holder_check(ws, ps, g, r, dyadic_part, M_list).pass) c.r_W = std::max(c.r_W, r);
  }

  AlphaU au = select_alpha_u(W, p, catalog, ops, opt.alpha_budget);
  c.alpha = au.alpha;
  c.u = au.u;
  return c;
}

}  // namespace hardylab
