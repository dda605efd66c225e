#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <filesystem>
#include <iosfwd>

#include "mhmap/linear_system.hpp"
#include "mhmap/mesh.hpp"

namespace mhmap::fem {

/// Boundary data and time step for dc/dt = lambda * laplacian(c) with
/// c = gamma on the Dirichlet boundary and zero flux elsewhere.
struct BoundarySpec {
  double dirichlet_value = 30.0;  // gamma, g/m^2
  double diffusivity = 0.01;      // lambda, m^2/s
  double dt = 1.0;                // s
  void validate() const;
};

/// Galerkin P1 matrices over free vertices:
/// M x' + S x + S_D gamma = 0.
struct FemMatrices {
  SparseMatrix M;    // n x n
  SparseMatrix S;    // n x n
  SparseMatrix S_D;  // n x (n_phi - n)
};

using ElementMatrix = Eigen::Matrix3d;

/// Exact P1 mass matrix: (area/12) [[2,1,1],[1,2,1],[1,1,2]].
ElementMatrix element_mass(double area);
/// lambda * area * grad(phi_i) . grad(phi_j). Throws AssemblyError for a
/// zero-area triangle.
ElementMatrix element_stiffness(const std::array<Point, 3>& tri, double diffusivity);

FemMatrices assemble(const Mesh& mesh, const BoundarySpec& spec);

/// Implicit-Euler model with u = -S_D * gamma * 1.
LinearSystem discretize(const FemMatrices& fm, const BoundarySpec& spec,
                        const VectorXd& prior_mean, const Weight& prior_weight,
                        const Weight& process_weight);

/// Pointwise observation of the P1 field: c(p) = row . x + offset, where
/// the Dirichlet vertices contribute dirichlet_row . psi.
struct ObservationRow {
  VectorXd row;            // over free vertices, length n
  VectorXd dirichlet_row;  // over Dirichlet vertices, length n_phi - n
  PointStencil stencil;

  double offset(double gamma) const { return gamma * dirichlet_row.sum(); }
  double evaluate(const VectorXd& x, double gamma) const { return row.dot(x) + offset(gamma); }
};

ObservationRow observation_row(const Mesh& mesh, const Point& p);

/// Field value at a located point using only the stencil's three vertices.
double evaluate(const Mesh& mesh, const PointStencil& stencil, const VectorXd& x, double gamma);

/// Coordinate-format dump: header "rows cols nnz", then "i j value" lines.
void write_coo(std::ostream& out, const SparseMatrix& m);
void save_coo(const std::filesystem::path& path, const SparseMatrix& m);

}  // namespace mhmap::fem
