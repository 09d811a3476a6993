#include <lbbp/shapes.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace lbbp::shapes {

namespace {

struct Icosahedron
{
    std::vector<Eigen::Vector3d> points;
    std::vector<std::array<int, 3>> faces;
};

Icosahedron icosahedron()
{
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    Icosahedron ico;
    const double raw[12][3] = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
        {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (const auto& p : raw) ico.points.push_back(Eigen::Vector3d(p[0], p[1], p[2]).normalized());
    ico.faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
        {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    return ico;
}

TriangleMesh from_lists(const std::vector<Eigen::Vector3d>& points, const std::vector<std::array<int, 3>>& faces,
                        MeshOptions options = {})
{
    Vertices V(points.size(), 3);
    for (std::size_t i = 0; i < points.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    Faces F(faces.size(), 3);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        F.row(static_cast<Eigen::Index>(f)) << faces[f][0], faces[f][1], faces[f][2];
    }
    return TriangleMesh(std::move(V), std::move(F), options);
}

} // namespace

TriangleMesh unit_right_triangle()
{
    return from_lists({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, MeshOptions{.allow_boundary = true});
}

TriangleMesh regular_tetrahedron(double edge_length)
{
    const double s = edge_length / (2.0 * std::sqrt(2.0));
    return from_lists(
        {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}},
        {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}});
}

TriangleMesh icosphere(int frequency)
{
    const Icosahedron ico = icosahedron();
    const int f = std::max(1, frequency);

    // Lattice points are keyed by their integer barycentric weights on the
    // icosahedron corners so that points on shared edges are merged.
    std::map<std::vector<std::pair<int, int>>, int> index_of;
    std::vector<Eigen::Vector3d> points;
    auto lattice_point = [&](const std::array<int, 3>& corners, int i, int j) {
        const int weights[3] = {f - i - j, i, j};
        std::vector<std::pair<int, int>> key;
        for (int c = 0; c < 3; ++c) {
            if (weights[c] > 0) key.emplace_back(corners[c], weights[c]);
        }
        std::sort(key.begin(), key.end());
        auto [it, inserted] = index_of.try_emplace(key, static_cast<int>(points.size()));
        if (inserted) {
            Eigen::Vector3d p = Eigen::Vector3d::Zero();
            for (int c = 0; c < 3; ++c) p += weights[c] * ico.points[corners[c]];
            points.push_back(p.normalized());
        }
        return it->second;
    };

    std::vector<std::array<int, 3>> faces;
    for (const auto& corners : ico.faces) {
        for (int i = 0; i < f; ++i) {
            for (int j = 0; i + j < f; ++j) {
                const int a = lattice_point(corners, i, j);
                const int b = lattice_point(corners, i + 1, j);
                const int c = lattice_point(corners, i, j + 1);
                faces.push_back({a, b, c});
                if (i + j + 1 < f) {
                    const int d = lattice_point(corners, i + 1, j + 1);
                    faces.push_back({b, d, c});
                }
            }
        }
    }
    return from_lists(points, faces);
}

TriangleMesh icosphere_subdivided(int subdivisions)
{
    const Icosahedron ico = icosahedron();
    std::vector<Eigen::Vector3d> points = ico.points;
    std::vector<std::array<int, 3>> faces = ico.faces;
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto [it, inserted] = midpoint.try_emplace(key, static_cast<int>(points.size()));
            if (inserted) points.push_back((points[a] + points[b]).normalized());
            return it->second;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& t : faces) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    return from_lists(points, faces);
}

TriangleMesh flat_grid(int nx, int ny, double width, double height)
{
    std::vector<Eigen::Vector3d> points;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            points.emplace_back(width * i / (nx - 1), height * j / (ny - 1), 0.0);
        }
    }
    std::vector<std::array<int, 3>> faces;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i;
            faces.push_back({a, a + 1, a + nx + 1});
            faces.push_back({a, a + nx + 1, a + nx});
        }
    }
    return from_lists(points, faces, MeshOptions{.allow_boundary = true});
}

TriangleMesh radial_deform(const TriangleMesh& mesh, const std::function<double(const Eigen::Vector3d&)>& radius)
{
    Vertices V = mesh.vertices();
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const Eigen::Vector3d p = V.row(i).transpose();
        V.row(i) = (radius(p) * p.normalized()).transpose();
    }
    return TriangleMesh(std::move(V), mesh.faces(), mesh.options());
}

} // namespace lbbp::shapes
