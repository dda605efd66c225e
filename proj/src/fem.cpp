#include "mhmap/fem.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "mhmap/errors.hpp"

namespace mhmap::fem {

void BoundarySpec::validate() const {
  if (!(diffusivity > 0.0) || !std::isfinite(diffusivity))
    throw ConfigError("diffusivity must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be > 0");
  if (!std::isfinite(dirichlet_value)) throw ConfigError("Dirichlet value must be finite");
}

ElementMatrix element_mass(double area) {
  ElementMatrix m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / 12.0);
}

ElementMatrix element_stiffness(const std::array<Point, 3>& tri, double diffusivity) {
  const double area = signed_area(tri[0], tri[1], tri[2]);
  if (!(std::abs(area) > 0.0)) throw AssemblyError("zero-area triangle");
  // grad(phi_i) = (eta_j - eta_k, xi_k - xi_j) / (2 area), (i, j, k) cyclic.
  Eigen::Matrix<double, 2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point& pj = tri[(i + 1) % 3];
    const Point& pk = tri[(i + 2) % 3];
    g(0, i) = (pj.eta - pk.eta) / (2.0 * area);
    g(1, i) = (pk.xi - pj.xi) / (2.0 * area);
  }
  return diffusivity * std::abs(area) * (g.transpose() * g);
}

FemMatrices assemble(const Mesh& mesh, const BoundarySpec& spec) {
  spec.validate();
  const int n = mesh.num_free();
  const int nd = mesh.num_dirichlet();
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> tm, ts, tsd;
  tm.reserve(9 * mesh.num_elements());
  ts.reserve(9 * mesh.num_elements());

  const double scale = [&] {
    auto [lo, hi] = mesh.bounds();
    return std::max(hi.xi - lo.xi, hi.eta - lo.eta);
  }();

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& t = mesh.element(e);
    const double area = mesh.element_area(e);
    if (!(area > 1e-14 * scale * scale))
      throw AssemblyError("degenerate element " + std::to_string(e) + " (area " +
                              std::to_string(area) + ")",
                          e);
    const std::array<Point, 3> tri{mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2])};
    const ElementMatrix me = element_mass(area);
    const ElementMatrix ke = element_stiffness(tri, spec.diffusivity);
    for (int a = 0; a < 3; ++a) {
      const int j = t[a];  // test function row
      if (mesh.is_dirichlet(j)) continue;
      for (int b = 0; b < 3; ++b) {
        const int i = t[b];
        if (mesh.is_dirichlet(i)) {
          tsd.emplace_back(j, i - n, ke(a, b));
        } else {
          tm.emplace_back(j, i, me(a, b));
          ts.emplace_back(j, i, ke(a, b));
        }
      }
    }
  }

  FemMatrices fm;
  fm.M.resize(n, n);
  fm.S.resize(n, n);
  fm.S_D.resize(n, nd);
  fm.M.setFromTriplets(tm.begin(), tm.end());
  fm.S.setFromTriplets(ts.begin(), ts.end());
  fm.S_D.setFromTriplets(tsd.begin(), tsd.end());
  return fm;
}

LinearSystem discretize(const FemMatrices& fm, const BoundarySpec& spec,
                        const VectorXd& prior_mean, const Weight& prior_weight,
                        const Weight& process_weight) {
  spec.validate();
  const VectorXd gamma = VectorXd::Constant(fm.S_D.cols(), spec.dirichlet_value);
  VectorXd u = -(fm.S_D * gamma);
  try {
    return LinearSystem::implicit_euler(fm.M, fm.S, spec.dt, std::move(u), process_weight,
                                        prior_mean, prior_weight);
  } catch (const NumericError& e) {
    throw NumericError(std::string("discretize: ") + e.what());
  }
}

ObservationRow observation_row(const Mesh& mesh, const Point& p) {
  ObservationRow r;
  r.stencil = locate(mesh, p);
  r.row = VectorXd::Zero(mesh.num_free());
  r.dirichlet_row = VectorXd::Zero(mesh.num_dirichlet());
  for (int k = 0; k < 3; ++k) {
    const int v = r.stencil.vertices[k];
    if (mesh.is_dirichlet(v))
      r.dirichlet_row[v - mesh.num_free()] += r.stencil.weights[k];
    else
      r.row[v] += r.stencil.weights[k];
  }
  return r;
}

double evaluate(const Mesh& mesh, const PointStencil& stencil, const VectorXd& x, double gamma) {
  double c = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int v = stencil.vertices[k];
    c += stencil.weights[k] * (mesh.is_dirichlet(v) ? gamma : x[v]);
  }
  return c;
}

void write_coo(std::ostream& out, const SparseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n' << std::setprecision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

void save_coo(const std::filesystem::path& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  write_coo(out, m);
}

}  // namespace mhmap::fem
