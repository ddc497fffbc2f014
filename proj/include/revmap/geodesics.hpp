#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "revmap/barycentric.hpp"
#include "revmap/mesh.hpp"

namespace revmap {

// Approximate single-source geodesic distances on a triangle mesh.
//
// The default method is a fast-marching eikonal solver with a virtual-source
// triangle update; updates that fail the wavefront-crossing test fall back to
// edge relaxation, so the solver degrades toward Dijkstra on badly shaped
// triangles instead of producing invalid values. A plain Dijkstra mode is kept
// as an independent fallback. Unreachable vertices report +infinity.
//
// Solves are const and thread-safe against one immutable mesh.
class GeodesicSolver {
  public:
    enum class Method { FastMarching, Dijkstra };

    explicit GeodesicSolver(const TriangleMesh& mesh, Method method = Method::FastMarching);

    const TriangleMesh& mesh() const { return *mesh_; }
    Method method() const { return method_; }

    Eigen::VectorXd single_source(int v) const;

    // Propagation from arbitrary seed values (vertex id, initial distance).
    // Seeds must be upper bounds of the true distance; the solver may lower
    // them through a shorter route.
    Eigen::VectorXd multi_source(const std::vector<std::pair<int, double>>& seeds) const;

    // Field from a surface point: the corners of its face are seeded with the
    // exact in-face distances. Vertex hits delegate to single_source.
    Eigen::VectorXd point_source(const BarycentricPoint& p) const;

  private:
    const TriangleMesh* mesh_;
    Method method_;
    Eigen::MatrixXd face_lengths_; // f x 3, entry k = length of edge opposite corner k
};

// Nearest-center assignment by geodesic distance; ties go to the lowest
// center index. Returns one center index per vertex.
std::vector<int> geodesic_voronoi(const GeodesicSolver& solver, const std::vector<int>& centers);

// Point-to-point geodesic distances built on GeodesicSolver fields.
//
// Two accuracy grades:
//  - distance(): table-backed. Exact within a face, unfolds across a shared
//    edge, pivots through a shared vertex, otherwise bilinear interpolation
//    of the all-pairs vertex table. Cheap enough for per-iteration traces;
//    requires build_all_pairs().
//  - distance_accurate(): one point-source solve per query, interpolated at
//    the far end. Used by the evaluation metrics.
class GeodesicEvaluator {
  public:
    GeodesicEvaluator(const TriangleMesh& mesh, GeodesicSolver::Method method = GeodesicSolver::Method::FastMarching);

    const GeodesicSolver& solver() const { return solver_; }
    const TriangleMesh& mesh() const { return solver_.mesh(); }

    void build_all_pairs();
    bool has_all_pairs() const { return all_pairs_.size() > 0; }
    double table_distance(int u, int v) const { return all_pairs_(u, v); }

    double distance(const BarycentricPoint& p, const BarycentricPoint& q) const;
    double distance_accurate(const BarycentricPoint& p, const BarycentricPoint& q) const;

  private:
    double local_distance(const BarycentricPoint& p, const BarycentricPoint& q, bool& ok) const;

    GeodesicSolver solver_;
    Eigen::MatrixXf all_pairs_; // empty until build_all_pairs()
};

} // namespace revmap
