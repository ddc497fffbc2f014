#pragma once

#include <vector>

#include <Eigen/Core>

#include "revmap/barycentric.hpp"

namespace revmap {

// Row-major storage so that per-vertex coordinate rows are contiguous.
using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Projection {
    int face = -1;
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    double distance = 0.0;
};

// Closest point of the solid triangle (a, b, c) to p, all in R^dim given as
// contiguous arrays. Writes convex weights and returns the squared distance.
// Exact solution of the simplex-constrained quadratic; degenerate triangles
// fall back to their edges.
double closest_point_on_triangle(const double* p, const double* a, const double* b, const double* c, int dim,
                                 Eigen::Vector3d& w);

// Piecewise-linear surface embedded in R^m: mesh connectivity with arbitrary
// vertex coordinates (positions, metric embeddings, or stacked systems).
// Queries return the globally nearest face; ties within 1e-12 of the minimum
// distance resolve to the lowest face id, identically for the accelerated and
// brute-force paths. Immutable and safe for concurrent queries.
class EmbeddedSurface {
  public:
    // brute_force_threshold: face counts below it skip BVH construction.
    EmbeddedSurface(Eigen::MatrixXd coords, Eigen::MatrixXi faces, int brute_force_threshold = 500);

    int dim() const { return static_cast<int>(X_.cols()); }
    int num_faces() const { return static_cast<int>(F_.rows()); }
    const RowMajorMatrixXd& coords() const { return X_; }
    const Eigen::MatrixXi& faces() const { return F_; }

    Projection project(const Eigen::VectorXd& point) const;
    Projection project_brute(const Eigen::VectorXd& point) const; // exhaustive scan, kept for parity checks

    // Parallel row-wise projection of a q x m point matrix.
    std::vector<Projection> project_points(const Eigen::MatrixXd& points) const;

  private:
    struct Node {
        int left = -1, right = -1; // children, or -1 at leaves
        int begin = 0, end = 0;    // face range for leaves
    };

    int build(int begin, int end, const std::vector<Eigen::VectorXd>& centroids);
    double node_min_sq(int node, const double* p) const;
    void scan_faces(int begin, int end, bool via_order, const double* p, double& best, int& best_face,
                    Eigen::Vector3d& best_w, std::vector<Projection>& near_ties) const;

    RowMajorMatrixXd X_;
    Eigen::MatrixXi F_;
    bool use_bvh_ = false;
    std::vector<Node> nodes_;
    std::vector<int> order_; // face ids permuted by the build
    std::vector<Eigen::VectorXd> box_lo_, box_hi_;
    int root_ = -1;
};

// Nearest-neighbor index over a point set in R^d; exact ties resolve to the
// lowest point index, matching a linear scan.
class PointIndex {
  public:
    explicit PointIndex(Eigen::MatrixXd points, int leaf_size = 8);

    int nearest(const Eigen::VectorXd& query) const;
    int nearest_brute(const Eigen::VectorXd& query) const;

  private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end);
    void search(int node, const double* q, double& best, int& best_idx) const;

    Eigen::MatrixXd P_;
    int leaf_size_ = 8;
    std::vector<Node> nodes_;
    std::vector<int> order_;
    std::vector<Eigen::VectorXd> box_lo_, box_hi_;
    int root_ = -1;
};

} // namespace revmap
