#pragma once

#include <Eigen/SparseCore>

#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"

namespace sensched {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Standard-form conic program
///
///   minimize    c' x
///   subject to  A x = b
///               G x + s = h,   s in K = K_1 x ... x K_m
///
/// Each K_j is either a nonnegative orthant or a PSD cone stored in svec
/// packing (lower triangle, column-major, off-diagonals scaled by sqrt(2)).
/// Matrix-valued variables are themselves stored in svec coordinates inside x.
struct ConicProgram {
  enum class ConeKind { NonNegative, PSD };

  struct Cone {
    ConeKind kind = ConeKind::NonNegative;
    int offset = 0;  // first row of G/h
    int dim = 0;     // number of rows
    int order = 0;   // matrix order for PSD, dim for NonNegative
    std::string label;
  };

  struct VariableBlock {
    std::string name;
    int time = 0;
    int offset = 0;
    int size = 0;
    int order = 0;  // matrix order when the block holds svec coordinates, 0 for plain vectors
  };

  int num_vars = 0;
  Vector c;
  SparseMatrix A;
  Vector b;
  SparseMatrix G;
  Vector h;
  std::vector<Cone> cones;
  std::vector<VariableBlock> variables;
  std::vector<std::string> equality_labels;  // one per group of equality rows, informative only

  int num_cone_rows() const { return static_cast<int>(h.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }

  /// Barrier degree of K: sum of cone orders.
  int degree() const {
    int d = 0;
    for (const auto& k : cones) d += k.order;
    return d;
  }

  const VariableBlock* find_variable(const std::string& name, int time) const {
    for (const auto& v : variables)
      if (v.name == name && v.time == time) return &v;
    return nullptr;
  }

  /// Throws ParameterError unless variable blocks partition [0, num_vars) and
  /// cones partition the rows of G.
  void validate() const {
    std::vector<int> cover(static_cast<std::size_t>(num_vars), 0);
    for (const auto& v : variables) {
      if (v.offset < 0 || v.offset + v.size > num_vars)
        throw ParameterError("conic program: variable block out of range: " + v.name);
      if (v.order > 0 && svec_dim(v.order) != v.size)
        throw ParameterError("conic program: svec size mismatch for " + v.name);
      for (int i = v.offset; i < v.offset + v.size; ++i) ++cover[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < num_vars; ++i)
      if (cover[static_cast<std::size_t>(i)] != 1)
        throw ParameterError("conic program: variable index " + std::to_string(i) +
                             " covered " + std::to_string(cover[static_cast<std::size_t>(i)]) +
                             " times");
    int row = 0;
    for (const auto& k : cones) {
      if (k.offset != row) throw ParameterError("conic program: cones not contiguous");
      const int expect = k.kind == ConeKind::PSD ? svec_dim(k.order) : k.order;
      if (k.dim != expect) throw ParameterError("conic program: cone dim mismatch: " + k.label);
      row += k.dim;
    }
    if (row != num_cone_rows()) throw ParameterError("conic program: cones do not cover G");
    if (c.size() != num_vars || G.cols() != num_vars || A.cols() != num_vars ||
        G.rows() != h.size() || A.rows() != b.size())
      throw ParameterError("conic program: inconsistent dimensions");
  }
};

/// Writes the program as a sparse text document: a header with variable and
/// cone metadata followed by one triplet per nonzero.
///
///   conic-program 1
///   vars <num_vars> eqs <rows of A> cone_rows <rows of G>
///   var <name> <time> <offset> <size> <order>        (per variable block)
///   cone <psd|nonneg> <offset> <dim> <order> <label> (per cone)
///   c <col> <value>
///   A <row> <col> <value>
///   b <row> <value>
///   G <row> <col> <value>
///   h <row> <value>
inline void dump_program(const ConicProgram& p, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "conic-program 1\n";
  os << "vars " << p.num_vars << " eqs " << p.num_equalities() << " cone_rows "
     << p.num_cone_rows() << "\n";
  for (const auto& v : p.variables)
    os << "var " << v.name << ' ' << v.time << ' ' << v.offset << ' ' << v.size << ' ' << v.order
       << "\n";
  for (const auto& k : p.cones)
    os << "cone " << (k.kind == ConicProgram::ConeKind::PSD ? "psd" : "nonneg") << ' ' << k.offset
       << ' ' << k.dim << ' ' << k.order << ' ' << (k.label.empty() ? "-" : k.label) << "\n";
  for (int i = 0; i < p.c.size(); ++i)
    if (p.c(i) != 0.0) os << "c " << i << ' ' << p.c(i) << "\n";
  auto triplets = [&os](const char* tag, const SparseMatrix& m) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        os << tag << ' ' << it.row() << ' ' << it.col() << ' ' << it.value() << "\n";
  };
  triplets("A", p.A);
  for (int i = 0; i < p.b.size(); ++i)
    if (p.b(i) != 0.0) os << "b " << i << ' ' << p.b(i) << "\n";
  triplets("G", p.G);
  for (int i = 0; i < p.h.size(); ++i)
    if (p.h(i) != 0.0) os << "h " << i << ' ' << p.h(i) << "\n";
}

}  // namespace sensched
