#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "revmap/geodesics.hpp"
#include "revmap/mesh.hpp"

namespace revmap {

struct EmbeddingOptions {
    int dim = 8;                  // target dimension m
    int landmark_count = 1000;    // geodesic farthest-point samples
    int full_mds_threshold = 2000; // below this, every vertex is a landmark
    int refine_iterations = 200;  // stress-majorization sweeps after classical scaling
    std::uint64_t seed = 0;
    GeodesicSolver::Method method = GeodesicSolver::Method::FastMarching;
};

// Per-vertex coordinates in R^m whose Euclidean distances approximate
// on-surface geodesic distances. Columns are centered; everything downstream
// is invariant to orthogonal transforms of the rows.
struct MetricEmbedding {
    Eigen::MatrixXd X; // n x m
    int dim = 0;
    double stress_median = 0.0; // relative distance error over sampled pairs
    double stress_p95 = 0.0;
    std::vector<int> landmarks;
};

// Classical MDS on a geodesic farthest-point landmark set, extended to the
// remaining vertices by distance-based triangulation. Deterministic for a
// fixed seed.
MetricEmbedding mds_embed(const TriangleMesh& mesh, const EmbeddingOptions& options = {});

// Compares edge lengths in the embedding against R^3 edge lengths; the
// cotangent weights are reused across spaces, which is sound only while the
// two stay close.
struct EdgeLengthReport {
    double median_rel = 0.0;
    double max_rel = 0.0;
    std::vector<int> flagged; // edge ids whose discrepancy exceeds the threshold
};
EdgeLengthReport embedding_weights_check(const TriangleMesh& mesh, const Eigen::MatrixXd& X,
                                         double flag_threshold = 0.10);

// Binary sidecar cache keyed by mesh content hash and dimension.
void save_embedding_cache(const std::string& path, std::uint64_t mesh_hash, const Eigen::MatrixXd& X);
std::optional<Eigen::MatrixXd> load_embedding_cache(const std::string& path, std::uint64_t mesh_hash, int dim);

// Deterministic largest eigenpairs of a symmetric matrix by blocked subspace
// iteration; eigenvalues descending, eigenvector signs canonicalized.
void largest_eigenpairs(const Eigen::MatrixXd& B, int count, std::uint64_t seed, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors);

} // namespace revmap
