#pragma once

// Procedural test geometry and independent oracles shared by the suites.

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "revmap/mesh.hpp"
#include "revmap/precise_map.hpp"

namespace testing {

// Unit icosphere; successive subdivisions keep earlier vertices in place.
inline revmap::TriangleMesh icosphere(int subdivisions, double radius = 1.0) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::RowVector3d> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
        {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (auto& v : verts) v.normalize();

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::RowVector3d m = (verts[static_cast<size_t>(a)] + verts[static_cast<size_t>(b)]).normalized();
            verts.push_back(m);
            int id = static_cast<int>(verts.size()) - 1;
            midpoint[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }

    Eigen::MatrixXd V(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = radius * verts[i];
    Eigen::MatrixXi F(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i)
        F.row(static_cast<Eigen::Index>(i)) << faces[i][0], faces[i][1], faces[i][2];
    return revmap::make_mesh(std::move(V), std::move(F));
}

// Rectangle [0, sx] x [0, sy] as an (nx x ny)-cell grid; alternating
// diagonals keep the triangulation direction-balanced.
inline revmap::TriangleMesh grid_rectangle(int nx, int ny, double sx = 1.0, double sy = 1.0,
                                           bool alternate = true) {
    Eigen::MatrixXd V((nx + 1) * (ny + 1), 3);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            V.row(j * (nx + 1) + i) << sx * i / nx, sy * j / ny, 0.0;
    Eigen::MatrixXi F(2 * nx * ny, 3);
    int f = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int a = j * (nx + 1) + i, b = a + 1, c = a + (nx + 1), d = c + 1;
            if (!alternate || (i + j) % 2 == 0) {
                F.row(f++) << a, b, d;
                F.row(f++) << a, d, c;
            } else {
                F.row(f++) << a, b, c;
                F.row(f++) << b, d, c;
            }
        }
    return revmap::make_mesh(std::move(V), std::move(F));
}

// Parameter-space disk: center plus rings of 6i points, near-equilateral
// bands. Returns the 2D parameter positions alongside the mesh arrays.
inline void param_disk(int rings, Eigen::MatrixXd& UV, Eigen::MatrixXi& F) {
    std::vector<Eigen::RowVector2d> uv = {{0.0, 0.0}};
    std::vector<int> ring_start = {0};
    for (int i = 1; i <= rings; ++i) {
        ring_start.push_back(static_cast<int>(uv.size()));
        const int count = 6 * i;
        const double r = static_cast<double>(i) / rings;
        for (int k = 0; k < count; ++k) {
            double theta = 2.0 * M_PI * k / count;
            uv.push_back({r * std::cos(theta), r * std::sin(theta)});
        }
    }
    std::vector<std::array<int, 3>> faces;
    for (int k = 0; k < 6; ++k) faces.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % 6});
    for (int i = 1; i < rings; ++i) {
        const int ni = 6 * i, no = 6 * (i + 1);
        const int ii = ring_start[static_cast<size_t>(i)], oo = ring_start[static_cast<size_t>(i + 1)];
        int p = 0, q = 0;
        while (p < ni || q < no) {
            double next_inner = p < ni ? static_cast<double>(p + 1) / ni : 2.0;
            double next_outer = q < no ? static_cast<double>(q + 1) / no : 2.0;
            if (next_inner <= next_outer) {
                faces.push_back({ii + p % ni, oo + q % no, ii + (p + 1) % ni});
                ++p;
            } else {
                faces.push_back({ii + p % ni, oo + q % no, oo + (q + 1) % no});
                ++q;
            }
        }
    }
    UV.resize(static_cast<Eigen::Index>(uv.size()), 2);
    for (size_t i = 0; i < uv.size(); ++i) UV.row(static_cast<Eigen::Index>(i)) = uv[i];
    F.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i)
        F.row(static_cast<Eigen::Index>(i)) << faces[i][0], faces[i][1], faces[i][2];
}

inline revmap::TriangleMesh disk_mesh(int rings, double radius = 1.0) {
    Eigen::MatrixXd UV;
    Eigen::MatrixXi F;
    param_disk(rings, UV, F);
    Eigen::MatrixXd V(UV.rows(), 3);
    V << radius * UV, Eigen::VectorXd::Zero(UV.rows());
    return revmap::make_mesh(std::move(V), std::move(F));
}

// Saddle-shaped immersion over the same parameter disk; negatively curved,
// embedded for rho <= sqrt(3).
inline revmap::TriangleMesh enneper_mesh(int rings, double rho = 1.0) {
    Eigen::MatrixXd UV;
    Eigen::MatrixXi F;
    param_disk(rings, UV, F);
    Eigen::MatrixXd V(UV.rows(), 3);
    for (int i = 0; i < UV.rows(); ++i) {
        double u = rho * UV(i, 0), v = rho * UV(i, 1);
        V(i, 0) = u - u * u * u / 3.0 + u * v * v;
        V(i, 1) = v - v * v * v / 3.0 + v * u * u;
        V(i, 2) = u * u - v * v;
    }
    return revmap::make_mesh(std::move(V), std::move(F));
}

inline Eigen::Vector3d random_simplex_weights(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double a = uni(rng), b = uni(rng);
    if (a > b) std::swap(a, b);
    return {a, b - a, 1.0 - b};
}

inline revmap::PreciseMap random_feasible_map(int n_source, const revmap::TriangleMesh& target,
                                              std::mt19937_64& rng) {
    revmap::PreciseMap map = revmap::make_precise_map(n_source, target);
    std::uniform_int_distribution<int> face(0, target.num_faces() - 1);
    for (int i = 0; i < n_source; ++i) {
        map.face(i) = face(rng);
        map.w.row(i) = random_simplex_weights(rng).transpose();
    }
    return map;
}

// Dense active-set oracle for the point-to-triangle problem: tries the
// unconstrained minimizer, the three edges and the three corners.
inline double closest_point_oracle(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& c, Eigen::Vector3d& weights) {
    const Eigen::VectorXd ab = b - a, ac = c - a;
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double s, double t) {
        if (s < 0.0 || t < 0.0 || s + t > 1.0) return;
        double d = (a + s * ab + t * ac - p).squaredNorm();
        if (d < best) {
            best = d;
            weights = Eigen::Vector3d(1.0 - s - t, s, t);
        }
    };
    Eigen::Matrix2d G;
    G << ab.squaredNorm(), ab.dot(ac), ab.dot(ac), ac.squaredNorm();
    Eigen::Vector2d rhs(ab.dot(p - a), ac.dot(p - a));
    if (std::abs(G.determinant()) > 1e-30) {
        Eigen::Vector2d st = G.inverse() * rhs;
        consider(st(0), st(1));
    }
    auto edge = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y, int which) {
        double len = (y - x).squaredNorm();
        double t = len > 0.0 ? std::clamp((p - x).dot(y - x) / len, 0.0, 1.0) : 0.0;
        if (which == 0) consider(t, 0.0);        // along ab
        else if (which == 1) consider(0.0, t);   // along ac
        else consider(1.0 - t, t);               // along bc
    };
    edge(a, b, 0);
    edge(a, c, 1);
    edge(b, c, 2);
    consider(0.0, 0.0);
    consider(1.0, 0.0);
    consider(0.0, 1.0);
    return best;
}

} // namespace testing
