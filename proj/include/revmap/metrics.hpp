#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "revmap/geodesics.hpp"
#include "revmap/mesh.hpp"
#include "revmap/precise_map.hpp"

namespace revmap {

// Fraction of items at or below each threshold. Thresholds span zero to the
// 99th percentile; a final entry at the largest finite value closes the
// curve, and `overflow` carries the weight of non-finite items.
struct CumulativeCurve {
    std::vector<double> thresholds;
    std::vector<double> fractions;
    double overflow = 0.0;
};

CumulativeCurve make_cumulative_curve(const std::vector<double>& values, const std::vector<double>& weights = {},
                                      int resolution = 200);
void write_curve_csv(const CumulativeCurve& curve, const std::string& path);

// Per-face conformal distortion of the mapped source triangles, shifted so 0
// means angle-preserving. Collapsed image triangles report +infinity and land
// in the overflow bucket.
struct ConformalResult {
    Eigen::VectorXd per_face;
    CumulativeCurve curve;
};
ConformalResult conformal_distortion(const PreciseMap& p12, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                     bool area_weighted = false);

// Geodesic distance of each mapped vertex from its ground-truth location,
// relative to sqrt of the target's total area. Ground truth rows with a
// negative vertex id are excluded and counted.
struct GroundTruthResult {
    CumulativeCurve curve;
    Eigen::VectorXd per_vertex;
    int missing = 0;
};
GroundTruthResult ground_truth_error(const PreciseMap& p12, const PreciseMap& gt, const TriangleMesh& mesh1,
                                     const TriangleMesh& mesh2, const MeshOperators& ops2,
                                     const GeodesicEvaluator& eval2);
GroundTruthResult ground_truth_error(const PreciseMap& p12, const std::vector<int>& gt_vertices,
                                     const TriangleMesh& mesh1, const TriangleMesh& mesh2, const MeshOperators& ops2,
                                     const GeodesicEvaluator& eval2);

// Distance between the two ways around the symmetry square: map then apply
// the target symmetry, versus apply the source symmetry then map. Symmetries
// are inputs, given as self-maps of each mesh.
CumulativeCurve symmetry_compatibility(const PreciseMap& p12, const PreciseMap& s1, const PreciseMap& s2,
                                       const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                       const GeodesicEvaluator& eval2);

// Relative vertex area mapped into a face of the same segment. seg1 labels
// source vertices, seg2 labels target faces; negative labels mean unlabeled
// and are excluded and counted.
struct SegmentationResult {
    double score = 0.0;
    int unlabeled = 0;
};
SegmentationResult segmentation_compatibility(const PreciseMap& p12, const std::vector<int>& seg1,
                                              const std::vector<int>& seg2, const TriangleMesh& mesh1,
                                              const TriangleMesh& mesh2, const MeshOperators& ops1);

// Majority label per face from per-vertex labels; ties take the lowest label.
std::vector<int> face_labels_from_vertex_labels(const TriangleMesh& mesh, const std::vector<int>& vertex_labels);

// One integer per line; negative values mean unlabeled.
std::vector<int> load_labels(const std::string& path, int expected_count);

} // namespace revmap
