#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/convexbody.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/testfun.hpp"
#include "hardylab/vexp.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

// Cube family for maximal operators, with cell ranges resolved once.
struct MaximalCatalog {
  Grid grid;
  std::vector<Cube> cubes;
  std::vector<CellRange> ranges;
  explicit MaximalCatalog(const Grid& g);
  MaximalCatalog(const Grid& g, std::vector<Cube> c);
  std::size_t size() const { return cubes.size(); }
  std::vector<std::size_t> cells(std::size_t k) const;
};

template <class F>
void for_each_cell(const Grid& g, const CellRange& r, F&& fn) {
  if (g.n() == 1) {
    for (long i = r.lo[0]; i < r.hi[0]; ++i) fn(std::size_t(i));
  } else {
    for (long i = r.lo[0]; i < r.hi[0]; ++i)
      for (long j = r.lo[1]; j < r.hi[1]; ++j) fn(g.flat(i, j));
  }
}

ScalarField abs_field(const VectorField& f);  // |f(x)|
ScalarField body_norms(const BodyField& F);   // |F(x)|

ScalarField hl_maximal(const ScalarField& f, double alpha, const MaximalCatalog& cat);
ScalarField hl_maximal(const ScalarField& f, double alpha = 1.0);
ScalarField variable_maximal(const ScalarField& f, const ExponentProfile& q, const MaximalCatalog& cat);
ScalarField christ_goldberg(const MatrixWeight& W, const BodyField& F, double alpha, const MaximalCatalog& cat);
ScalarField reducing_cg(const MatrixWeight& W, const BodyField& F, double u, const MaximalCatalog& cat,
                        const std::vector<ReducingOperator>& ops);
// Reducing operators of order p for every catalog cube.
std::vector<ReducingOperator> catalog_reducing_operators(const MatrixWeight& W, const ExponentProfile& p,
                                                         const MaximalCatalog& cat);

enum class MaximalKind { radial, grand_radial, nontangential, peetre, grand_peetre };
MaximalKind parse_maximal_kind(const std::string& s);  // throws ConfigInvalid
const char* maximal_kind_name(MaximalKind k);

struct MaximalParams {
  MaximalKind kind = MaximalKind::grand_radial;
  double a = 1.0;          // aperture of the non-tangential cone
  double l = 2.0;          // Peetre decay
  double max_scale = 0.0;  // 0: L_box in 1D, 16 h in 2D
  std::size_t cap = 1024;  // generator cap per sample
};

// Convolutions phi_t * f for every member and every scale t = 2^j h <= max_scale.
struct ConvolutionBank {
  std::vector<double> scales;
  std::size_t members = 0;
  std::vector<VectorField> conv;  // index member * scales.size() + j
  const VectorField& at(std::size_t member, std::size_t j) const { return conv[member * scales.size() + j]; }
};
std::vector<double> maximal_scales(const Grid& g, double max_scale);
ConvolutionBank convolve_bank(const VectorField& f, const TestFunctionCatalog& cat, std::size_t members,
                              double max_scale);

BodyField cb_maximal(const VectorField& f, const MaximalParams& params, const TestFunctionCatalog& cat);
// x -> |W(x) K(x)| for the body K(x) of the given kind, evaluated without materializing the hull.
ScalarField cb_maximal_weighted(const VectorField& f, const MaximalParams& params, const TestFunctionCatalog& cat,
                                const MatrixWeight& W);

double hardy_norm(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                  const TestFunctionCatalog& cat, double max_scale = 0.0);

struct EquivalenceRow {
  double radial = 0.0;
  double nontangential = 0.0;
  double peetre = 0.0;
  double grand = 0.0;
  double ratio_nt = 1.0;      // nontangential / radial
  double ratio_peetre = 1.0;  // peetre / radial
  double ratio_grand = 1.0;   // grand / radial
  double ordering_violation = 0.0;  // worst pointwise excess of the ordering chain (relative)
};
EquivalenceRow equivalence_row(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                               const TestFunctionCatalog& cat, const MaximalParams& params);
std::vector<EquivalenceRow> equivalence_report(const std::vector<VectorField>& suite, const MatrixWeight& W,
                                               const ExponentProfile& p, const TestFunctionCatalog& cat,
                                               const MaximalParams& params);

// |<f, phi>| / (seminorm(phi) hardy_norm(f)), phi = catalog member k at the origin, scale 1.
double embedding_pairing_check(const VectorField& f, const TestFunctionCatalog& cat, std::size_t k,
                               const MatrixWeight& W, const ExponentProfile& p);

// Random compactly supported body field: hull of two segment fields, piecewise constant on blocks of edge L_box/32.
BodyField random_body_field(const Grid& g, int m, std::uint64_t seed, int index);

}  // namespace hardylab
