#include "bates/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bates/errors.hpp"

namespace bates {

const char* tag_name(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::interior: return "interior";
        case BoundaryTag::left: return "left";
        case BoundaryTag::right: return "right";
        case BoundaryTag::bottom: return "bottom";
        case BoundaryTag::top: return "top";
    }
    return "interior";
}

BoundaryTag tag_from_name(const std::string& name) {
    if (name == "interior") return BoundaryTag::interior;
    if (name == "left") return BoundaryTag::left;
    if (name == "right") return BoundaryTag::right;
    if (name == "bottom") return BoundaryTag::bottom;
    if (name == "top") return BoundaryTag::top;
    throw IoError("unknown boundary tag '" + name + "'");
}

namespace {

double signed_area2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                    const Eigen::Vector2d& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
}

}  // namespace

Mesh Mesh::rectangle(double x_min, double x_max, double y_max, int nx, int ny) {
    return rectangle_graded(x_min, x_max, y_max, nx, ny, 0.0, 0.0, 0.0);
}

Mesh Mesh::rectangle_graded(double x_min, double x_max, double y_max, int nx, int ny,
                            double x_focus, double x_strength, double y_strength) {
    if (!(x_min < x_max) || !(y_max > 0.0))
        throw ConfigError("mesh extents degenerate: need x_min < x_max and y_max > 0");
    if (nx < 1 || ny < 1) throw ConfigError("mesh resolution must be at least 1x1");
    if (x_strength < 0.0 || y_strength < 0.0)
        throw ConfigError("mesh grading strengths must be nonnegative");

    std::vector<double> xs(static_cast<std::size_t>(nx) + 1);
    std::vector<double> ys(static_cast<std::size_t>(ny) + 1);
    if (x_strength > 0.0) {
        const double xf = std::clamp(x_focus, x_min, x_max);
        const double c1 = std::asinh(x_strength * (x_min - xf));
        const double c2 = std::asinh(x_strength * (x_max - xf));
        for (int i = 1; i < nx; ++i)
            xs[static_cast<std::size_t>(i)] =
                xf + std::sinh(c1 + (c2 - c1) * i / nx) / x_strength;
    } else {
        for (int i = 1; i < nx; ++i)
            xs[static_cast<std::size_t>(i)] = x_min + (x_max - x_min) * i / nx;
    }
    xs.front() = x_min;
    xs.back() = x_max;
    if (y_strength > 0.0) {
        const double c = std::asinh(y_strength * y_max);
        for (int j = 1; j < ny; ++j)
            ys[static_cast<std::size_t>(j)] = std::sinh(c * j / ny) / y_strength;
    } else {
        for (int j = 1; j < ny; ++j) ys[static_cast<std::size_t>(j)] = y_max * j / ny;
    }
    ys.front() = 0.0;
    ys.back() = y_max;
    return tensor_grid(xs, ys);
}

Mesh Mesh::tensor_grid(const std::vector<double>& xs, const std::vector<double>& ys) {
    const int nx = static_cast<int>(xs.size()) - 1;
    const int ny = static_cast<int>(ys.size()) - 1;
    Mesh m;
    m.nodes_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    m.tags_.reserve(m.nodes_.capacity());
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            m.nodes_.emplace_back(xs[static_cast<std::size_t>(i)],
                                  ys[static_cast<std::size_t>(j)]);
            BoundaryTag tag = BoundaryTag::interior;
            if (i == 0) tag = BoundaryTag::left;
            if (i == nx) tag = BoundaryTag::right;
            if (j == 0) tag = BoundaryTag::bottom;  // bottom/top win at corners
            if (j == ny) tag = BoundaryTag::top;
            m.tags_.push_back(tag);
        }
    }
    m.triangles_.reserve(static_cast<std::size_t>(2 * nx * ny));
    auto node_id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int n00 = node_id(i, j), n10 = node_id(i + 1, j);
            const int n01 = node_id(i, j + 1), n11 = node_id(i + 1, j + 1);
            m.triangles_.push_back({n00, n10, n11});
            m.triangles_.push_back({n00, n11, n01});
        }
    }
    m.finalize();
    return m;
}

Mesh Mesh::from_arrays(std::vector<Eigen::Vector2d> nodes,
                       std::vector<std::array<int, 3>> triangles,
                       std::vector<BoundaryTag> tags) {
    if (nodes.size() != tags.size())
        throw ConfigError("mesh: node and tag counts differ");
    Mesh m;
    m.nodes_ = std::move(nodes);
    m.triangles_ = std::move(triangles);
    m.tags_ = std::move(tags);
    m.finalize();
    return m;
}

void Mesh::finalize() {
    if (nodes_.empty() || triangles_.empty()) throw ConfigError("mesh is empty");
    x_min_ = x_max_ = nodes_[0].x();
    double ymin = nodes_[0].y();
    y_max_ = nodes_[0].y();
    for (const auto& p : nodes_) {
        x_min_ = std::min(x_min_, p.x());
        x_max_ = std::max(x_max_, p.x());
        ymin = std::min(ymin, p.y());
        y_max_ = std::max(y_max_, p.y());
    }
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (int v : tri)
            if (v < 0 || v >= num_nodes()) throw ConfigError("mesh: triangle index out of range");
        if (signed_area2(nodes_[static_cast<std::size_t>(tri[0])],
                         nodes_[static_cast<std::size_t>(tri[1])],
                         nodes_[static_cast<std::size_t>(tri[2])]) <= 0.0)
            throw ConfigError("mesh: triangle " + std::to_string(t) +
                              " is degenerate or negatively oriented");
    }

    // uniform bins sized so each holds a handful of triangles
    const int target = std::max(1, static_cast<int>(std::sqrt(triangles_.size() / 2.0)));
    bins_x_ = target;
    bins_y_ = target;
    bins_.assign(static_cast<std::size_t>(bins_x_ * bins_y_), {});
    const double wx = (x_max_ - x_min_) / bins_x_;
    const double wy = y_max_ / bins_y_;
    for (int t = 0; t < num_triangles(); ++t) {
        double tx0 = 1e300, tx1 = -1e300, ty0 = 1e300, ty1 = -1e300;
        for (int v : triangles_[static_cast<std::size_t>(t)]) {
            const auto& p = nodes_[static_cast<std::size_t>(v)];
            tx0 = std::min(tx0, p.x());
            tx1 = std::max(tx1, p.x());
            ty0 = std::min(ty0, p.y());
            ty1 = std::max(ty1, p.y());
        }
        const int i0 = std::clamp(static_cast<int>((tx0 - x_min_) / wx), 0, bins_x_ - 1);
        const int i1 = std::clamp(static_cast<int>((tx1 - x_min_) / wx), 0, bins_x_ - 1);
        const int j0 = std::clamp(static_cast<int>(ty0 / wy), 0, bins_y_ - 1);
        const int j1 = std::clamp(static_cast<int>(ty1 / wy), 0, bins_y_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                bins_[static_cast<std::size_t>(j * bins_x_ + i)].push_back(t);
    }
}

double Mesh::triangle_area(int t) const {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    return 0.5 * signed_area2(nodes_[static_cast<std::size_t>(tri[0])],
                              nodes_[static_cast<std::size_t>(tri[1])],
                              nodes_[static_cast<std::size_t>(tri[2])]);
}

double Mesh::total_area() const {
    double a = 0.0;
    for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
    return a;
}

PointLocation Mesh::locate(const Eigen::Vector2d& p, LocatePolicy policy) const {
    Eigen::Vector2d q = p;
    const double diam = std::hypot(x_max_ - x_min_, y_max_);
    const double tol = 1e-12 * diam;
    const bool outside = q.x() < x_min_ - tol || q.x() > x_max_ + tol ||
                         q.y() < -tol || q.y() > y_max_ + tol;
    if (outside && policy == LocatePolicy::strict) {
        std::ostringstream os;
        os << "point (" << q.x() << ", " << q.y() << ") lies outside the mesh";
        throw NumericError(os.str());
    }
    q.x() = std::clamp(q.x(), x_min_, x_max_);
    q.y() = std::clamp(q.y(), 0.0, y_max_);

    auto bary_of = [&](int t, std::array<double, 3>& w) {
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        const auto& a = nodes_[static_cast<std::size_t>(tri[0])];
        const auto& b = nodes_[static_cast<std::size_t>(tri[1])];
        const auto& c = nodes_[static_cast<std::size_t>(tri[2])];
        const double det = signed_area2(a, b, c);
        w[0] = signed_area2(q, b, c) / det;
        w[1] = signed_area2(a, q, c) / det;
        w[2] = 1.0 - w[0] - w[1];
        return std::min({w[0], w[1], w[2]});
    };

    const double wx = (x_max_ - x_min_) / bins_x_;
    const double wy = y_max_ / bins_y_;
    const int bi = std::clamp(static_cast<int>((q.x() - x_min_) / wx), 0, bins_x_ - 1);
    const int bj = std::clamp(static_cast<int>(q.y() / wy), 0, bins_y_ - 1);

    PointLocation best;
    double best_min = -1e300;
    std::array<double, 3> w;
    for (int t : bins_[static_cast<std::size_t>(bj * bins_x_ + bi)]) {
        const double mn = bary_of(t, w);
        if (mn > best_min) {
            best_min = mn;
            best.triangle = t;
            best.bary = w;
        }
        if (mn >= -1e-13) break;  // inside, done
    }
    if (best_min < -1e-9) {
        // bin missed (roundoff near bin edges): fall back to a global scan
        for (int t = 0; t < num_triangles(); ++t) {
            const double mn = bary_of(t, w);
            if (mn > best_min) {
                best_min = mn;
                best.triangle = t;
                best.bary = w;
            }
            if (mn >= -1e-13) break;
        }
    }
    if (best.triangle < 0) throw NumericError("point location failed");
    for (double& wk : best.bary) wk = std::max(wk, 0.0);
    const double s = best.bary[0] + best.bary[1] + best.bary[2];
    for (double& wk : best.bary) wk /= s;
    return best;
}

double Mesh::interpolate(const Eigen::VectorXd& nodal_values, const Eigen::Vector2d& p,
                         LocatePolicy policy) const {
    if (nodal_values.size() != num_nodes())
        throw ConfigError("interpolate: nodal value count does not match mesh");
    const PointLocation loc = locate(p, policy);
    const auto& tri = triangles_[static_cast<std::size_t>(loc.triangle)];
    return loc.bary[0] * nodal_values[tri[0]] + loc.bary[1] * nodal_values[tri[1]] +
           loc.bary[2] * nodal_values[tri[2]];
}

void Mesh::save(std::ostream& out) const {
    out << "nodes " << num_nodes() << " triangles " << num_triangles() << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < num_nodes(); ++i) {
        const auto& p = nodes_[static_cast<std::size_t>(i)];
        out << p.x() << " " << p.y() << " " << tag_name(tags_[static_cast<std::size_t>(i)])
            << "\n";
    }
    for (const auto& tri : triangles_) out << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
}

Mesh Mesh::load(std::istream& in) {
    std::string word;
    int nn = 0, nt = 0;
    in >> word;
    if (word != "nodes") throw IoError("mesh format: expected 'nodes'");
    in >> nn >> word;
    if (word != "triangles") throw IoError("mesh format: expected 'triangles'");
    in >> nt;
    if (!in || nn <= 0 || nt <= 0) throw IoError("mesh format: bad header counts");

    std::vector<Eigen::Vector2d> nodes;
    std::vector<BoundaryTag> tags;
    nodes.reserve(static_cast<std::size_t>(nn));
    tags.reserve(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
        double x, y;
        std::string tag;
        in >> x >> y >> tag;
        if (!in) throw IoError("mesh format: truncated node list");
        nodes.emplace_back(x, y);
        tags.push_back(tag_from_name(tag));
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        int a, b, c;
        in >> a >> b >> c;
        if (!in) throw IoError("mesh format: truncated triangle list");
        tris.push_back({a, b, c});
    }
    return from_arrays(std::move(nodes), std::move(tris), std::move(tags));
}

void Mesh::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    save(out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

Mesh Mesh::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return load(in);
}

}  // namespace bates
