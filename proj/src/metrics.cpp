#include "revmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Geometry>

#include "revmap/common.hpp"

namespace revmap {

CumulativeCurve make_cumulative_curve(const std::vector<double>& values, const std::vector<double>& weights,
                                      int resolution) {
    if (!weights.empty() && weights.size() != values.size())
        throw InputError("curve weights must match values");
    CumulativeCurve curve;
    const size_t n = values.size();
    if (n == 0) return curve;

    double total = 0.0;
    std::vector<std::pair<double, double>> finite; // (value, weight)
    double overflow_weight = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double wgt = weights.empty() ? 1.0 : weights[i];
        total += wgt;
        if (std::isfinite(values[i]))
            finite.emplace_back(values[i], wgt);
        else
            overflow_weight += wgt;
    }
    if (total <= 0.0) throw InputError("curve weights sum to zero");
    curve.overflow = overflow_weight / total;
    if (finite.empty()) {
        curve.thresholds = {0.0};
        curve.fractions = {0.0};
        return curve;
    }
    std::sort(finite.begin(), finite.end());
    std::vector<double> prefix(finite.size());
    double acc = 0.0;
    for (size_t i = 0; i < finite.size(); ++i) {
        acc += finite[i].second;
        prefix[i] = acc;
    }
    auto fraction_at = [&](double t) {
        // weight of values <= t
        size_t hi = static_cast<size_t>(std::upper_bound(finite.begin(), finite.end(),
                                                         std::make_pair(t, std::numeric_limits<double>::infinity())) -
                                        finite.begin());
        return hi == 0 ? 0.0 : prefix[hi - 1] / total;
    };

    const double max_finite = finite.back().first;
    double p99 = max_finite;
    {
        double want = 0.99 * acc;
        auto it = std::lower_bound(prefix.begin(), prefix.end(), want);
        if (it != prefix.end()) p99 = finite[static_cast<size_t>(it - prefix.begin())].first;
    }
    for (int i = 0; i < resolution; ++i) {
        double t = p99 * static_cast<double>(i) / static_cast<double>(resolution - 1);
        curve.thresholds.push_back(t);
        curve.fractions.push_back(fraction_at(t));
    }
    curve.thresholds.push_back(max_finite);
    curve.fractions.push_back(fraction_at(max_finite));
    // drop duplicate thresholds, keeping the last (largest) fraction
    std::vector<double> ts, fs;
    for (size_t i = 0; i < curve.thresholds.size(); ++i) {
        if (!ts.empty() && curve.thresholds[i] == ts.back())
            fs.back() = curve.fractions[i];
        else {
            ts.push_back(curve.thresholds[i]);
            fs.push_back(curve.fractions[i]);
        }
    }
    curve.thresholds = std::move(ts);
    curve.fractions = std::move(fs);
    return curve;
}

void write_curve_csv(const CumulativeCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write curve file '" + path + "'");
    out.precision(17);
    out << "threshold,fraction\n";
    for (size_t i = 0; i < curve.thresholds.size(); ++i) out << curve.thresholds[i] << "," << curve.fractions[i] << "\n";
    if (!out) throw InputError("failed while writing '" + path + "'");
}

ConformalResult conformal_distortion(const PreciseMap& p12, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                     bool area_weighted) {
    if (p12.rows() != mesh1.num_vertices()) throw InputError("map rows must match source vertices");
    const Eigen::MatrixXd images = apply_map(p12, mesh2, mesh2.V);
    ConformalResult result;
    result.per_face.resize(mesh1.num_faces());
    std::vector<double> values(static_cast<size_t>(mesh1.num_faces()));
    std::vector<double> weights;
    parallel_for(0, mesh1.num_faces(), [&](int f) {
        Eigen::MatrixXd img(3, 3);
        for (int k = 0; k < 3; ++k) img.row(k) = images.row(mesh1.F(f, k));
        SingularPair sv = face_differential(mesh1, f, img);
        double kappa;
        if (sv.s2 <= 1e-12 * std::max(1.0, sv.s1))
            kappa = std::numeric_limits<double>::infinity();
        else
            kappa = sv.s1 / sv.s2 + sv.s2 / sv.s1 - 2.0;
        result.per_face(f) = kappa;
        values[static_cast<size_t>(f)] = kappa;
    });
    if (area_weighted) {
        weights.resize(static_cast<size_t>(mesh1.num_faces()));
        for (int f = 0; f < mesh1.num_faces(); ++f) {
            Eigen::RowVector3d a = mesh1.V.row(mesh1.F(f, 0));
            Eigen::RowVector3d b = mesh1.V.row(mesh1.F(f, 1));
            Eigen::RowVector3d c = mesh1.V.row(mesh1.F(f, 2));
            weights[static_cast<size_t>(f)] = 0.5 * (b - a).cross(c - a).norm();
        }
    }
    result.curve = make_cumulative_curve(values, weights);
    return result;
}

GroundTruthResult ground_truth_error(const PreciseMap& p12, const PreciseMap& gt, const TriangleMesh& mesh1,
                                     const TriangleMesh& mesh2, const MeshOperators& ops2,
                                     const GeodesicEvaluator& eval2) {
    if (gt.rows() != p12.rows()) throw InputError("ground truth rows must match the map");
    const double norm = std::sqrt(ops2.s);
    GroundTruthResult result;
    result.per_vertex.resize(p12.rows());
    std::vector<double> values(static_cast<size_t>(p12.rows()));
    parallel_for(0, p12.rows(), [&](int v) {
        double d = eval2.distance_accurate(p12.row(v), gt.row(v)) / norm;
        result.per_vertex(v) = d;
        values[static_cast<size_t>(v)] = d;
    }, 8);
    result.curve = make_cumulative_curve(values);
    return result;
}

GroundTruthResult ground_truth_error(const PreciseMap& p12, const std::vector<int>& gt_vertices,
                                     const TriangleMesh& mesh1, const TriangleMesh& mesh2, const MeshOperators& ops2,
                                     const GeodesicEvaluator& eval2) {
    if (static_cast<int>(gt_vertices.size()) != p12.rows())
        throw InputError("ground truth entries must match the map rows");
    const double norm = std::sqrt(ops2.s);
    std::vector<int> kept;
    for (int v = 0; v < p12.rows(); ++v)
        if (gt_vertices[static_cast<size_t>(v)] >= 0) kept.push_back(v);

    GroundTruthResult result;
    result.missing = p12.rows() - static_cast<int>(kept.size());
    result.per_vertex = Eigen::VectorXd::Constant(p12.rows(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> values(kept.size());
    parallel_for(0, static_cast<int>(kept.size()), [&](int i) {
        int v = kept[static_cast<size_t>(i)];
        int g = gt_vertices[static_cast<size_t>(v)];
        if (g >= mesh2.num_vertices()) throw InputError("ground truth vertex id out of range");
        double d = eval2.distance_accurate(p12.row(v), vertex_point(mesh2, g)) / norm;
        result.per_vertex(v) = d;
        values[static_cast<size_t>(i)] = d;
    }, 8);
    result.curve = make_cumulative_curve(values);
    return result;
}

CumulativeCurve symmetry_compatibility(const PreciseMap& p12, const PreciseMap& s1, const PreciseMap& s2,
                                       const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                       const GeodesicEvaluator& eval2) {
    if (s1.rows() != mesh1.num_vertices() || s2.rows() != mesh2.num_vertices())
        throw InputError("symmetry maps must be self-maps of the meshes");
    EmbeddedSurface surface1(mesh1.V, mesh1.F);
    EmbeddedSurface surface2(mesh2.V, mesh2.F);
    std::vector<double> values(static_cast<size_t>(mesh1.num_vertices()));
    parallel_for(0, mesh1.num_vertices(), [&](int v) {
        // S2(phi12(v)) against phi12(S1(v))
        BarycentricPoint a = eval_map_at_point(s2, mesh2, mesh2, surface2, p12.row(v));
        BarycentricPoint b = eval_map_at_point(p12, mesh1, mesh2, surface2, s1.row(v));
        values[static_cast<size_t>(v)] = eval2.distance_accurate(a, b);
    }, 8);
    return make_cumulative_curve(values);
}

SegmentationResult segmentation_compatibility(const PreciseMap& p12, const std::vector<int>& seg1,
                                              const std::vector<int>& seg2, const TriangleMesh& mesh1,
                                              const TriangleMesh& mesh2, const MeshOperators& ops1) {
    if (static_cast<int>(seg1.size()) != mesh1.num_vertices())
        throw InputError("source segmentation must label every vertex");
    if (static_cast<int>(seg2.size()) != mesh2.num_faces())
        throw InputError("target segmentation must label every face");
    SegmentationResult result;
    double hit = 0.0, labeled = 0.0;
    for (int v = 0; v < mesh1.num_vertices(); ++v) {
        int lv = seg1[static_cast<size_t>(v)];
        int lf = seg2[static_cast<size_t>(p12.face(v))];
        if (lv < 0 || lf < 0) {
            ++result.unlabeled;
            continue;
        }
        labeled += ops1.A(v);
        if (lv == lf) hit += ops1.A(v);
    }
    result.score = labeled > 0.0 ? hit / labeled : 0.0;
    return result;
}

std::vector<int> face_labels_from_vertex_labels(const TriangleMesh& mesh, const std::vector<int>& vertex_labels) {
    if (static_cast<int>(vertex_labels.size()) != mesh.num_vertices())
        throw InputError("vertex labels must cover every vertex");
    std::vector<int> labels(static_cast<size_t>(mesh.num_faces()), -1);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        int l0 = vertex_labels[static_cast<size_t>(mesh.F(f, 0))];
        int l1 = vertex_labels[static_cast<size_t>(mesh.F(f, 1))];
        int l2 = vertex_labels[static_cast<size_t>(mesh.F(f, 2))];
        // majority, ties to the lowest label
        if (l1 == l2 && l1 == l0) labels[static_cast<size_t>(f)] = l0;
        else if (l0 == l1 || l0 == l2) labels[static_cast<size_t>(f)] = l0;
        else if (l1 == l2) labels[static_cast<size_t>(f)] = l1;
        else labels[static_cast<size_t>(f)] = std::min({l0, l1, l2});
    }
    return labels;
}

std::vector<int> load_labels(const std::string& path, int expected_count) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label file '" + path + "'");
    std::vector<int> labels;
    int value = 0;
    while (in >> value) labels.push_back(value);
    if (static_cast<int>(labels.size()) != expected_count)
        throw InputError(path + ": expected " + std::to_string(expected_count) + " labels, found " +
                         std::to_string(labels.size()));
    return labels;
}

} // namespace revmap
