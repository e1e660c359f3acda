#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

// Exponent value with an explicit infinity flag; `value` is ignored when infinite.
struct ExponentValue {
  double value = 0.0;
  bool infinite = false;
};

// Reproducible exponent families:
//   constant(p)                 p (or infinite)
//   log_decay(p_inf, c)         p_inf + c / log(e + |x|)
//   two_level(p_a, p_b, split)  p_a for x_1 < split, p_b otherwise (jump: not log-Hoelder)
//   smooth_step(p_a, p_b, w)    p_a + (p_b - p_a)(1 - exp(-|x|^2 / w^2))
struct ExponentSpec {
  std::string preset = "constant";
  std::vector<double> params{2.0};
  bool infinite = false;

  static ExponentSpec constant(double p);
  static ExponentSpec constant_infinite();
  static ExponentSpec log_decay(double p_inf, double c);
  static ExponentSpec two_level(double p_a, double p_b, double split);
  static ExponentSpec smooth_step(double p_a, double p_b, double width);

  void validate() const;  // throws ConfigInvalid
  bool declared_lh() const;
  std::optional<double> analytic_p_inf() const;
  ExponentValue at(const Point& x, int n) const;
  std::string label() const;
};

class ExponentProfile {
 public:
  ExponentProfile(const Grid& g, std::vector<double> p, std::vector<std::uint8_t> inf,
                  std::optional<double> p_inf, bool declared_lh, std::string label);

  static ExponentProfile realize(const ExponentSpec& spec, const Grid& g);
  static ExponentProfile constant(const Grid& g, double p);

  const Grid& grid() const { return grid_; }
  double value(std::size_t i) const { return p_[i]; }
  bool is_infinite(std::size_t i) const { return inf_[i] != 0; }
  ExponentValue at(std::size_t i) const { return {p_[i], inf_[i] != 0}; }
  const std::vector<double>& values() const { return p_; }
  const std::vector<std::uint8_t>& infinite_mask() const { return inf_; }
  bool has_infinite() const { return any_inf_; }

  // p_minus is +inf only if every sample is infinite; p_plus is over the finite part.
  double p_minus() const { return p_minus_; }
  double p_plus() const { return p_plus_; }
  std::optional<double> p_inf() const { return p_inf_; }
  double r() const { return p_minus_ < 1.0 ? p_minus_ : 1.0; }
  bool declared_lh() const { return declared_lh_; }
  const std::string& label() const { return label_; }

  ExponentProfile scaled(double factor) const;  // factor * p(.)

 private:
  Grid grid_;
  std::vector<double> p_;
  std::vector<std::uint8_t> inf_;
  std::optional<double> p_inf_;
  bool declared_lh_;
  std::string label_;
  double p_minus_ = 0.0;
  double p_plus_ = 0.0;
  bool any_inf_ = false;
};

struct LHConstants {
  double C0 = 0.0;
  double Cinf = 0.0;
  double p_inf = 0.0;
};
LHConstants certify_lh(const ExponentProfile& p);

// Exponent data gathered on a cell subset so nested norms avoid repeated gathers.
struct LocalExponent {
  std::vector<double> p;
  std::vector<std::uint8_t> inf;
  double cell_volume = 1.0;
  bool any_inf = false;
  bool all_inf = false;
  double uniform_p = 0.0;  // > 0 when every sample carries the same finite exponent
  std::size_t size() const { return p.size(); }
};
LocalExponent restrict_exponent(const ExponentProfile& p, const std::vector<std::size_t>& cells);
void finalize_exponent(LocalExponent& ex);  // recompute the any_inf / all_inf / uniform_p summaries

// Luxemburg norm of nonnegative values a (aligned with ex).
double luxemburg(const double* a, const LocalExponent& ex);
double modular_local(const double* a, const LocalExponent& ex, double lambda = 1.0);

double modular(const ScalarField& f, const ExponentProfile& p);
double vnorm(const ScalarField& f, const ExponentProfile& p);
double vnorm_indicator(const ExponentProfile& p, const Cube& q);
double vnorm_indicator(const ExponentProfile& p, const std::vector<std::size_t>& cells);

ExponentValue p_harmonic(const ExponentProfile& p, const Cube& q);
ExponentProfile conjugate(const ExponentProfile& p);

// vnorm(1_Q) / |Q|^{1/p_Q} on a cube.
double est_q_ratio(const ExponentProfile& p, const Cube& q);

}  // namespace hardylab
