#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace mhmap::fem {

struct Point {
  double xi = 0.0;
  double eta = 0.0;
};

enum class VertexTag : std::uint8_t { interior = 0, neumann = 1, dirichlet = 2 };

enum class Edge { bottom, top, left, right };

Edge parse_edge(std::string_view name);
std::string_view edge_name(Edge e);

using Triangle = std::array<int, 3>;

/// 2D P1 triangulation. Vertices are stored with the free (interior and
/// Neumann) vertices first, Dirichlet vertices last; the constructor
/// renumbers its input accordingly (stable order within each group) and
/// flips clockwise elements to counter-clockwise.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<Triangle> elements,
       std::vector<VertexTag> tags);

  int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  int num_elements() const noexcept { return static_cast<int>(elements_.size()); }
  /// n: number of free vertices (the state dimension).
  int num_free() const noexcept { return num_free_; }
  int num_dirichlet() const noexcept { return num_vertices() - num_free_; }

  const Point& vertex(int i) const { return vertices_.at(i); }
  const Triangle& element(int e) const { return elements_.at(e); }
  VertexTag tag(int i) const { return tags_.at(i); }
  bool is_dirichlet(int i) const { return i >= num_free_; }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& elements() const noexcept { return elements_; }
  const std::vector<VertexTag>& tags() const noexcept { return tags_; }

  /// Signed area (positive after construction unless degenerate).
  double element_area(int e) const;
  double total_area() const;

  /// Axis-aligned bounding box (min, max).
  std::array<Point, 2> bounds() const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> elements_;
  std::vector<VertexTag> tags_;
  int num_free_ = 0;
};

double signed_area(const Point& a, const Point& b, const Point& c);

/// Right-triangulated nx-by-ny grid on [0,width]x[0,height]. Vertices on
/// `dirichlet_edge` are tagged dirichlet, other boundary vertices neumann.
Mesh generate_structured_mesh(double width, double height, int nx, int ny,
                              Edge dirichlet_edge);

// Text format:
//   vertices <count> elements <count>
//   <xi> <eta> <tag>        (tag 0=interior, 1=neumann, 2=dirichlet)
//   <i> <j> <k>             (0-based vertex indices)
Mesh read_mesh(std::istream& in);
Mesh load_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const Mesh& mesh);
void save_mesh(const std::filesystem::path& path, const Mesh& mesh);

/// Containing element of a point and the barycentric weights of its
/// three vertices.
struct PointStencil {
  int element = -1;
  Triangle vertices{};
  std::array<double, 3> weights{};
};

/// Lowest-index element whose barycentric coordinates are all >= -1e-12.
/// Throws PlacementError when no element contains the point.
PointStencil locate(const Mesh& mesh, const Point& p);
bool contains(const Mesh& mesh, const Point& p);

}  // namespace mhmap::fem
