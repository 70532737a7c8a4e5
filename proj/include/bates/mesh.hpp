#ifndef BATES_MESH_HPP
#define BATES_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bates {

enum class BoundaryTag { interior, left, right, bottom, top };

const char* tag_name(BoundaryTag tag);
BoundaryTag tag_from_name(const std::string& name);

/// Where to put points that fall outside the mesh when locating.
enum class LocatePolicy { clamp, strict };

struct PointLocation {
    int triangle = -1;
    std::array<double, 3> bary{};  // weights sum to 1, each >= -1e-12
};

/// Triangulation of the localized rectangle [x_min,x_max] x [0,y_max] with
/// P1 connectivity. Immutable after construction; locate/interpolate are
/// read-only and thread-safe.
class Mesh {
public:
    /// Structured split-cell triangulation: (nx+1)(ny+1) nodes, 2*nx*ny
    /// positively oriented triangles, boundary tags set with bottom/top
    /// taking precedence at corners.
    static Mesh rectangle(double x_min, double x_max, double y_max, int nx, int ny);

    /// Same connectivity as rectangle(), with sinh-stretched node lines:
    /// x lines cluster around x_focus with strength x_strength, y lines
    /// cluster toward y = 0 with strength y_strength (a strength of 0 keeps
    /// that direction uniform). Used to resolve the payoff kink and the
    /// low-variance region without raising the node count.
    static Mesh rectangle_graded(double x_min, double x_max, double y_max, int nx,
                                 int ny, double x_focus, double x_strength,
                                 double y_strength);

    /// Unstructured import from the plain-text format (see save/load).
    static Mesh from_arrays(std::vector<Eigen::Vector2d> nodes,
                            std::vector<std::array<int, 3>> triangles,
                            std::vector<BoundaryTag> tags);

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }

    const Eigen::Vector2d& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::array<int, 3>& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
    BoundaryTag tag(int i) const { return tags_[static_cast<std::size_t>(i)]; }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double y_max() const { return y_max_; }

    double triangle_area(int t) const;
    double total_area() const;

    /// Locate a point: clamp projects exterior points onto the domain
    /// rectangle first, strict throws NumericError for exterior points.
    PointLocation locate(const Eigen::Vector2d& p,
                         LocatePolicy policy = LocatePolicy::clamp) const;

    /// P1 interpolation of a nodal field at p.
    double interpolate(const Eigen::VectorXd& nodal_values, const Eigen::Vector2d& p,
                       LocatePolicy policy = LocatePolicy::clamp) const;

    void save(std::ostream& out) const;
    static Mesh load(std::istream& in);
    void save_file(const std::string& path) const;
    static Mesh load_file(const std::string& path);

private:
    Mesh() = default;
    static Mesh tensor_grid(const std::vector<double>& xs, const std::vector<double>& ys);
    void finalize();  // bounding box, bins, orientation check

    std::vector<Eigen::Vector2d> nodes_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryTag> tags_;

    double x_min_ = 0.0, x_max_ = 0.0, y_max_ = 0.0;

    // uniform-bin acceleration for point location
    int bins_x_ = 0, bins_y_ = 0;
    std::vector<std::vector<int>> bins_;
};

}  // namespace bates

#endif
