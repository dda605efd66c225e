#include "mhmap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "mhmap/errors.hpp"

namespace mhmap::fem {

namespace {

constexpr double kInsideTol = 1e-12;

bool is_free(VertexTag t) { return t != VertexTag::dirichlet; }

}  // namespace

Edge parse_edge(std::string_view name) {
  if (name == "bottom") return Edge::bottom;
  if (name == "top") return Edge::top;
  if (name == "left") return Edge::left;
  if (name == "right") return Edge::right;
  throw ConfigError("unknown edge '" + std::string(name) +
                    "' (expected bottom, top, left or right)");
}

std::string_view edge_name(Edge e) {
  switch (e) {
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
    case Edge::left: return "left";
    case Edge::right: return "right";
  }
  return "bottom";
}

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.xi - a.xi) * (c.eta - a.eta) - (c.xi - a.xi) * (b.eta - a.eta));
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> elements,
           std::vector<VertexTag> tags) {
  const int nv = static_cast<int>(vertices.size());
  if (tags.size() != vertices.size())
    throw ConfigError("mesh: tag count does not match vertex count");
  for (const auto& p : vertices)
    if (!std::isfinite(p.xi) || !std::isfinite(p.eta))
      throw ConfigError("mesh: non-finite vertex coordinate");

  // Free vertices first, Dirichlet last, stable within each group.
  std::vector<int> new_index(nv);
  int next = 0;
  for (int i = 0; i < nv; ++i)
    if (is_free(tags[i])) new_index[i] = next++;
  num_free_ = next;
  for (int i = 0; i < nv; ++i)
    if (!is_free(tags[i])) new_index[i] = next++;

  vertices_.resize(nv);
  tags_.resize(nv);
  for (int i = 0; i < nv; ++i) {
    vertices_[new_index[i]] = vertices[i];
    tags_[new_index[i]] = tags[i];
  }

  elements_.reserve(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    Triangle t = elements[e];
    for (int& v : t) {
      if (v < 0 || v >= nv)
        throw ConfigError("mesh: element " + std::to_string(e) +
                          " references vertex out of range");
      v = new_index[v];
    }
    if (signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]) < 0.0)
      std::swap(t[1], t[2]);
    elements_.push_back(t);
  }
}

double Mesh::element_area(int e) const {
  const Triangle& t = element(e);
  return signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int e = 0; e < num_elements(); ++e) sum += element_area(e);
  return sum;
}

std::array<Point, 2> Mesh::bounds() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point lo{inf, inf}, hi{-inf, -inf};
  for (const auto& p : vertices_) {
    lo.xi = std::min(lo.xi, p.xi);
    lo.eta = std::min(lo.eta, p.eta);
    hi.xi = std::max(hi.xi, p.xi);
    hi.eta = std::max(hi.eta, p.eta);
  }
  return {lo, hi};
}

Mesh generate_structured_mesh(double width, double height, int nx, int ny,
                              Edge dirichlet_edge) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) ||
      !std::isfinite(height))
    throw ConfigError("structured mesh: width and height must be positive");
  if (nx < 1 || ny < 1)
    throw ConfigError("structured mesh: nx and ny must be >= 1");

  std::vector<Point> pts;
  std::vector<VertexTag> tags;
  pts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      pts.push_back({width * i / nx, height * j / ny});
      const bool on_edge[] = {j == 0, j == ny, i == 0, i == nx};
      VertexTag tag = VertexTag::interior;
      if (on_edge[0] || on_edge[1] || on_edge[2] || on_edge[3]) tag = VertexTag::neumann;
      if (on_edge[static_cast<int>(dirichlet_edge)]) tag = VertexTag::dirichlet;
      tags.push_back(tag);
    }
  }

  std::vector<Triangle> tris;
  tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(pts), std::move(tris), std::move(tags));
}

Mesh read_mesh(std::istream& in) {
  std::string kw_v, kw_e;
  long nv = -1, ne = -1;
  if (!(in >> kw_v >> nv >> kw_e >> ne) || kw_v != "vertices" || kw_e != "elements" ||
      nv < 0 || ne < 0)
    throw IoError("mesh file: expected header 'vertices <count> elements <count>'");

  std::vector<Point> pts(nv);
  std::vector<VertexTag> tags(nv);
  for (long i = 0; i < nv; ++i) {
    int tag = -1;
    if (!(in >> pts[i].xi >> pts[i].eta >> tag))
      throw IoError("mesh file: truncated vertex list at vertex " + std::to_string(i));
    if (tag < 0 || tag > 2)
      throw IoError("mesh file: invalid tag " + std::to_string(tag) + " at vertex " +
                    std::to_string(i));
    tags[i] = static_cast<VertexTag>(tag);
  }
  std::vector<Triangle> tris(ne);
  for (long e = 0; e < ne; ++e) {
    if (!(in >> tris[e][0] >> tris[e][1] >> tris[e][2]))
      throw IoError("mesh file: truncated element list at element " + std::to_string(e));
  }
  return Mesh(std::move(pts), std::move(tris), std::move(tags));
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "vertices " << mesh.num_vertices() << " elements " << mesh.num_elements() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Point& p = mesh.vertex(i);
    out << p.xi << ' ' << p.eta << ' ' << static_cast<int>(mesh.tag(i)) << '\n';
  }
  for (const auto& t : mesh.elements()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

PointStencil locate(const Mesh& mesh, const Point& p) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& t = mesh.element(e);
    const Point& a = mesh.vertex(t[0]);
    const Point& b = mesh.vertex(t[1]);
    const Point& c = mesh.vertex(t[2]);
    const double area = signed_area(a, b, c);
    if (!(area > 0.0)) continue;
    const double w0 = signed_area(p, b, c) / area;
    const double w1 = signed_area(a, p, c) / area;
    const double w2 = 1.0 - w0 - w1;
    if (w0 >= -kInsideTol && w1 >= -kInsideTol && w2 >= -kInsideTol) {
      PointStencil s;
      s.element = e;
      s.vertices = t;
      // Clip roundoff so weights stay a partition of unity in [0, 1].
      std::array<double, 3> w{std::max(w0, 0.0), std::max(w1, 0.0), std::max(w2, 0.0)};
      const double sum = w[0] + w[1] + w[2];
      for (int k = 0; k < 3; ++k) s.weights[k] = w[k] / sum;
      return s;
    }
  }
  std::ostringstream msg;
  msg << std::setprecision(10) << "point (" << p.xi << ", " << p.eta
      << ") lies outside the mesh";
  throw PlacementError(msg.str());
}

bool contains(const Mesh& mesh, const Point& p) {
  try {
    locate(mesh, p);
    return true;
  } catch (const PlacementError&) {
    return false;
  }
}

}  // namespace mhmap::fem
