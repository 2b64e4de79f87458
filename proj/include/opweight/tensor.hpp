#pragma once

#include <utility>
#include <vector>

#include "opweight/cpmap.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/regular.hpp"
#include "opweight/report.hpp"

namespace opweight {

// Kronecker product of two maps over the product algebras: value at a basis
// element of the product is the kron of the factor values at its factor pair.
CpMap cp_tensor(const CpMap& m1, const CpMap& m2);

// Product of two weights with their construction data. The product weight
// lives over the Kronecker algebras, its triplet is closed from the seed
// spanned by the factor ideal products with the family T1 (x) T2, and the
// product net runs over the grid of factor net indices (first factor outer,
// so the last grid point pairs the two final elements). The report collects
// the triplet certification, the net certification, and the dimension law
// dim(E) = dim(E1) * dim(E2).
struct TensorWeight {
  Weight phi1;
  Weight phi2;
  KsgnsTriplet t1;
  KsgnsTriplet t2;
  TruncatingNet net1;
  TruncatingNet net2;
  Weight product;
  KsgnsTriplet t;
  TruncatingNet net;
  std::vector<std::pair<int, int>> grid;  // factor net indices per product index
  Report rep;
};

TensorWeight tensor_weight(const Weight& w1, const KsgnsTriplet& t1,
                           const TruncatingNet& net1, const Weight& w2,
                           const KsgnsTriplet& t2, const TruncatingNet& net2,
                           double tol = kDefaultTol);

// Factorization identities of the product: the weight value at a factor pair
// is the kron of the factor values, and the structure map at a factor pair
// of ideal elements is the kron of the factor structure maps.
Report check_factorization(const TensorWeight& tw, double tol = kDefaultTol);

// Transport of dominated operators: solving the product of two dominated
// maps against the product triplet recovers T1 (x) T2. Strict membership of
// the product is asserted when both factors are strict contractions.
Report check_T_transport(const TensorWeight& tw, const DominatedMap& om1,
                         const DominatedMap& om2, double tol = kDefaultTol);

// Convergence of the product family at a positive element c, compressed by
// d: every grid member stays dominated by the product weight, the final
// grid point attains it, and the residuals shrink along the diagonal
// subfamily that exhausts both factors.
Report check_product_convergence(const TensorWeight& tw, const Element& c,
                                 const Element& d, double tol = kDefaultTol);

}  // namespace opweight
