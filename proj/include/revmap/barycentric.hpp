#pragma once

#include <Eigen/Core>

#include "revmap/mesh.hpp"

namespace revmap {

// A point on a mesh surface: convex weights over the corners of one face.
struct BarycentricPoint {
    int face = -1;
    Eigen::Vector3d w = Eigen::Vector3d(1.0, 0.0, 0.0);

    // Corner index whose weight is 1 within tol, or -1 if the point is not a
    // vertex hit.
    int vertex_corner(double tol = 1e-12) const {
        for (int k = 0; k < 3; ++k)
            if (std::abs(w(k) - 1.0) <= tol) return k;
        return -1;
    }
};

// Validates and normalizes: weights must be >= -1e-9 before clamping and sum
// to something positive; after normalization they are >= 0 and sum to 1.
BarycentricPoint make_barycentric(int face, const Eigen::Vector3d& weights, int num_faces);

// Canonical representation of a mesh vertex: weight 1 on the lowest incident
// face. Unique, so maps constructed by different routes compare equal.
BarycentricPoint vertex_point(const TriangleMesh& mesh, int v);

// Vertex id hit by the point, or -1. Uses the mesh to resolve the corner.
int hit_vertex(const TriangleMesh& mesh, const BarycentricPoint& p, double tol = 1e-12);

// Interpolates rows of coords (one row per mesh vertex, any column count).
Eigen::RowVectorXd barycentric_position(const Eigen::MatrixXd& coords, const TriangleMesh& mesh,
                                        const BarycentricPoint& p);

} // namespace revmap
