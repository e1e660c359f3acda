#pragma once

#include <vector>

#include "hardylab/grid.hpp"
#include "hardylab/linalg.hpp"

namespace hardylab {

// Closed symmetric convex hull of a finite generator list in R^m.
class ConvexBody {
 public:
  ConvexBody() = default;
  explicit ConvexBody(int m) : m_(m) {}
  ConvexBody(int m, std::vector<double> flat_generators);

  static ConvexBody segment(const double* v, int m);
  static ConvexBody segment(const Vec& v);
  // eps-scaled probe directions: the ball augmentation generator set.
  static ConvexBody ball(int m, double eps);

  int dim() const { return m_; }
  std::size_t count() const { return m_ ? g_.size() / std::size_t(m_) : 0; }
  const double* generator(std::size_t k) const { return g_.data() + k * std::size_t(m_); }
  const std::vector<double>& flat() const { return g_; }

  double norm() const;                          // |K| = max |g|
  double support(const double* z) const;        // rho_K(z) = max |<z, g>|
  double support(const Vec& z) const { return support(z.data()); }
  double norm_after(const double* A) const;     // |A K| without materializing A K

  void add(const double* v);
  void scale(double c);

 private:
  int m_ = 0;
  std::vector<double> g_;
};

ConvexBody transform(const Mat& A, const ConvexBody& K);
ConvexBody transform(const double* A, const ConvexBody& K);

// Union hull with pruning. For m = 2 the exact symmetric hull vertices are kept, so rho is
// unchanged in every direction; for m = 1 the longest generator is kept; for m = 3 a generator
// is dropped when dominated on the probe mesh. `cap` bounds the surviving generator count.
ConvexBody hull_union(const std::vector<ConvexBody>& bodies, std::size_t cap = 256);
ConvexBody prune(const ConvexBody& K, std::size_t cap = 256);

struct BodyField {
  Grid grid;
  int m = 1;
  std::vector<ConvexBody> bodies;
  BodyField(const Grid& g, int m_) : grid(g), m(m_), bodies(g.size(), ConvexBody(m_)) {}
  std::size_t size() const { return bodies.size(); }
};


// Ellipsoid fit of z -> (avg_Q rho_{F(x)}(z)^u)^{1/u}.
EllipsoidFit cb_reducing_operator(const BodyField& F, const Cube& q, double u, int mesh_count = 64);
EllipsoidFit cb_reducing_operator(const BodyField& F, const std::vector<std::size_t>& cells, double u, int mesh_count = 64);

}  // namespace hardylab
