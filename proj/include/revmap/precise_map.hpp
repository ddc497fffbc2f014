#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "revmap/barycentric.hpp"
#include "revmap/projection.hpp"

namespace revmap {

// Precise map: one barycentric point on the target mesh per source vertex.
// Equivalent to the sparse row-stochastic matrix with at most three nonzeros
// per row, all within one target face. Immutable in practice: rows are set at
// construction and replaced wholesale by the solver.
struct PreciseMap {
    Eigen::VectorXi face;  // n_source target face ids
    Eigen::MatrixXd w;     // n_source x 3 convex weights
    int target_faces = 0;  // face count of the target mesh, for validation

    int rows() const { return static_cast<int>(face.size()); }

    BarycentricPoint row(int i) const {
        BarycentricPoint p;
        p.face = face(i);
        p.w = w.row(i).transpose();
        return p;
    }
    void set_row(int i, const BarycentricPoint& p) {
        face(i) = p.face;
        w.row(i) = p.w.transpose();
    }
};

PreciseMap make_precise_map(int n_source, const TriangleMesh& target);

// Identity map of a mesh onto itself: canonical vertex hits.
PreciseMap identity_map(const TriangleMesh& mesh);

// True when every row is a valid convex combination on a valid face.
bool is_feasible(const PreciseMap& map, double tol = 1e-9);

// columns has one row per target vertex; the result blends the three rows of
// each hit face. Linear in columns; convex weights reproduce constants.
Eigen::MatrixXd apply_map(const PreciseMap& map, const TriangleMesh& target, const Eigen::MatrixXd& columns);

// Sparse matrix view of the map (n_source x n_target).
Eigen::SparseMatrix<double> map_matrix(const PreciseMap& map, const TriangleMesh& target);

// Piecewise-linear extension of the map to an arbitrary surface point of the
// source mesh: interpolates the images of the three source corners in the
// coordinates of `surface` and reprojects onto it. The surface must be built
// over the target mesh connectivity.
BarycentricPoint eval_map_at_point(const PreciseMap& map, const TriangleMesh& source, const TriangleMesh& target,
                                   const EmbeddedSurface& surface, const BarycentricPoint& p);

// Nearest-source-vertex inverse: target vertex -> source vertex whose image
// is closest in R^3 (lowest index on ties), written as a canonical vertex
// hit. brute toggles the O(n^2) reference scan.
PreciseMap invert_pointwise(const PreciseMap& p12, const TriangleMesh& source, const TriangleMesh& target,
                            bool brute = false);

// Text format: header "n_source n_target_faces", then one row per source
// vertex: 1-based face id and three weights.
void save_map(const PreciseMap& map, const std::string& path);
PreciseMap load_map(const std::string& path, const TriangleMesh& target);

} // namespace revmap
