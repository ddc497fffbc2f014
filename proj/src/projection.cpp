#include "revmap/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "revmap/common.hpp"

namespace revmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-12; // on distances, not squared distances

struct TriDots {
    double ab_ab, ab_ac, ac_ac, ab_ap, ac_ap, ap_ap;
};

TriDots accumulate_dots(const double* p, const double* a, const double* b, const double* c, int dim) {
    TriDots d{0, 0, 0, 0, 0, 0};
    for (int i = 0; i < dim; ++i) {
        const double ab = b[i] - a[i];
        const double ac = c[i] - a[i];
        const double ap = p[i] - a[i];
        d.ab_ab += ab * ab;
        d.ab_ac += ab * ac;
        d.ac_ac += ac * ac;
        d.ab_ap += ab * ap;
        d.ac_ap += ac * ap;
        d.ap_ap += ap * ap;
    }
    return d;
}

// Distances are reconstructed from the weights rather than expanded from the
// accumulated dot products; the expansion cancels catastrophically near zero
// and would break the tie rule.
double reconstructed_sq(const double* p, const double* a, const double* b, const double* c, int dim,
                        const Eigen::Vector3d& w) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        double diff = p[i] - (w(0) * a[i] + w(1) * b[i] + w(2) * c[i]);
        acc += diff * diff;
    }
    return acc;
}

} // namespace

double closest_point_on_triangle(const double* p, const double* a, const double* b, const double* c, int dim,
                                 Eigen::Vector3d& w) {
    const TriDots d = accumulate_dots(p, a, b, c, dim);
    const double d1 = d.ab_ap;
    const double d2 = d.ac_ap;
    const double d3 = d1 - d.ab_ab; // ab . bp
    const double d4 = d2 - d.ab_ac; // ac . bp
    const double d5 = d1 - d.ab_ac; // ab . cp
    const double d6 = d2 - d.ac_ac; // ac . cp

    const double gram = d.ab_ab * d.ac_ac - d.ab_ac * d.ab_ac;
    if (!(gram > 1e-28 * std::max(1.0, d.ab_ab * d.ac_ac))) {
        // degenerate triangle: closest point over its three edges
        double best = kInf;
        auto consider = [&](double edge_sq, double proj, double base_sq, int e) {
            double t = edge_sq > 0.0 ? std::clamp(proj / edge_sq, 0.0, 1.0) : 0.0;
            double val = std::max(0.0, base_sq - 2.0 * t * proj + t * t * edge_sq);
            if (val < best) {
                best = val;
                if (e == 0) w = Eigen::Vector3d(1.0 - t, t, 0.0);
                if (e == 1) w = Eigen::Vector3d(1.0 - t, 0.0, t);
                if (e == 2) w = Eigen::Vector3d(0.0, 1.0 - t, t);
            }
        };
        consider(d.ab_ab, d1, d.ap_ap, 0);
        consider(d.ac_ac, d2, d.ap_ap, 1);
        const double bc_bc = d.ab_ab - 2.0 * d.ab_ac + d.ac_ac;
        const double bc_bp = d4 - d3;
        const double bp_bp = std::max(0.0, d.ap_ap - 2.0 * d1 + d.ab_ab);
        consider(bc_bc, bc_bp, bp_bp, 2);
        return reconstructed_sq(p, a, b, c, dim, w);
    }

    if (d1 <= 0.0 && d2 <= 0.0) { // vertex a
        w = Eigen::Vector3d(1.0, 0.0, 0.0);
    } else if (d3 >= 0.0 && d4 <= d3) { // vertex b
        w = Eigen::Vector3d(0.0, 1.0, 0.0);
    } else if (d6 >= 0.0 && d5 <= d6) { // vertex c
        w = Eigen::Vector3d(0.0, 0.0, 1.0);
    } else {
        const double vc = d1 * d4 - d3 * d2;
        const double vb = d5 * d2 - d1 * d6;
        const double va = d3 * d6 - d5 * d4;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) { // edge ab
            double v = d1 / (d1 - d3);
            w = Eigen::Vector3d(1.0 - v, v, 0.0);
        } else if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) { // edge ac
            double t = d2 / (d2 - d6);
            w = Eigen::Vector3d(1.0 - t, 0.0, t);
        } else if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) { // edge bc
            double u = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            w = Eigen::Vector3d(0.0, 1.0 - u, u);
        } else {
            const double denom = 1.0 / (va + vb + vc);
            const double v = vb * denom;
            const double t = vc * denom;
            w = Eigen::Vector3d(1.0 - v - t, v, t);
        }
    }
    return reconstructed_sq(p, a, b, c, dim, w);
}

EmbeddedSurface::EmbeddedSurface(Eigen::MatrixXd coords, Eigen::MatrixXi faces, int brute_force_threshold)
    : X_(std::move(coords)), F_(std::move(faces)) {
    if (F_.rows() == 0) throw InputError("embedded surface has no faces");
    if (F_.cols() != 3) throw InputError("embedded surface faces must be triangles");
    if (F_.maxCoeff() >= X_.rows() || F_.minCoeff() < 0) throw InputError("face index out of range");
    use_bvh_ = num_faces() >= brute_force_threshold;
    if (!use_bvh_) return;

    const int nf = num_faces();
    order_.resize(static_cast<size_t>(nf));
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Eigen::VectorXd> centroids(static_cast<size_t>(nf));
    for (int f = 0; f < nf; ++f)
        centroids[static_cast<size_t>(f)] =
            (X_.row(F_(f, 0)) + X_.row(F_(f, 1)) + X_.row(F_(f, 2))).transpose() / 3.0;
    nodes_.reserve(static_cast<size_t>(2 * nf));
    box_lo_.reserve(static_cast<size_t>(2 * nf));
    box_hi_.reserve(static_cast<size_t>(2 * nf));
    root_ = build(0, nf, centroids);
}

int EmbeddedSurface::build(int begin, int end, const std::vector<Eigen::VectorXd>& centroids) {
    const int m = dim();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, -kInf);
    for (int i = begin; i < end; ++i) {
        int f = order_[static_cast<size_t>(i)];
        for (int k = 0; k < 3; ++k) {
            lo = lo.cwiseMin(X_.row(F_(f, k)).transpose());
            hi = hi.cwiseMax(X_.row(F_(f, k)).transpose());
        }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    box_lo_.push_back(lo);
    box_hi_.push_back(hi);

    constexpr int kLeafSize = 4;
    if (end - begin <= kLeafSize) {
        nodes_[static_cast<size_t>(id)].begin = begin;
        nodes_[static_cast<size_t>(id)].end = end;
        return id;
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int fa, int fb) {
                         double ca = centroids[static_cast<size_t>(fa)](axis);
                         double cb = centroids[static_cast<size_t>(fb)](axis);
                         return ca < cb || (ca == cb && fa < fb);
                     });
    int left = build(begin, mid, centroids);
    int right = build(mid, end, centroids);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
}

double EmbeddedSurface::node_min_sq(int node, const double* p) const {
    double acc = 0.0;
    const int m = dim();
    const double* lo = box_lo_[static_cast<size_t>(node)].data();
    const double* hi = box_hi_[static_cast<size_t>(node)].data();
    for (int i = 0; i < m; ++i) {
        double d = p[i] < lo[i] ? lo[i] - p[i] : (p[i] > hi[i] ? p[i] - hi[i] : 0.0);
        acc += d * d;
    }
    return acc;
}

void EmbeddedSurface::scan_faces(int begin, int end, bool via_order, const double* p, double& best, int& best_face,
                                 Eigen::Vector3d& best_w, std::vector<Projection>& near_ties) const {
    for (int i = begin; i < end; ++i) {
        const int f = via_order ? order_[static_cast<size_t>(i)] : i;
        Eigen::Vector3d w;
        double sq = closest_point_on_triangle(p, X_.row(F_(f, 0)).data(), X_.row(F_(f, 1)).data(),
                                              X_.row(F_(f, 2)).data(), dim(), w);
        double dist = std::sqrt(sq);
        if (best_face < 0 || dist < best || (dist == best && f < best_face)) {
            if (best_face >= 0 && best <= dist + kTieEps) near_ties.push_back({best_face, best_w, best});
            best = dist;
            best_face = f;
            best_w = w;
        } else if (dist <= best + kTieEps) {
            near_ties.push_back({f, w, dist});
        }
    }
}

Projection EmbeddedSurface::project(const Eigen::VectorXd& point) const {
    if (point.size() != dim()) throw InputError("projection query dimension mismatch");
    const double* p = point.data();
    double best = kInf;
    int best_face = -1;
    Eigen::Vector3d best_w = Eigen::Vector3d::Zero();
    std::vector<Projection> near_ties;

    if (!use_bvh_) {
        scan_faces(0, num_faces(), false, p, best, best_face, best_w, near_ties);
    } else {
        using Entry = std::pair<double, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
        heap.emplace(node_min_sq(root_, p), root_);
        while (!heap.empty()) {
            auto [min_sq, id] = heap.top();
            heap.pop();
            if (std::sqrt(min_sq) > best + kTieEps) break;
            const Node& node = nodes_[static_cast<size_t>(id)];
            if (node.left < 0) {
                scan_faces(node.begin, node.end, true, p, best, best_face, best_w, near_ties);
            } else {
                heap.emplace(node_min_sq(node.left, p), node.left);
                heap.emplace(node_min_sq(node.right, p), node.right);
            }
        }
    }

    // resolve near-ties against the final minimum: lowest face id wins
    Projection result{best_face, best_w, best};
    for (const Projection& cand : near_ties)
        if (cand.distance <= best + kTieEps && cand.face < result.face) result = cand;
    return result;
}

Projection EmbeddedSurface::project_brute(const Eigen::VectorXd& point) const {
    if (point.size() != dim()) throw InputError("projection query dimension mismatch");
    const double* p = point.data();
    double best = kInf;
    int best_face = -1;
    Eigen::Vector3d best_w = Eigen::Vector3d::Zero();
    std::vector<Projection> near_ties;
    scan_faces(0, num_faces(), false, p, best, best_face, best_w, near_ties);
    Projection result{best_face, best_w, best};
    for (const Projection& cand : near_ties)
        if (cand.distance <= best + kTieEps && cand.face < result.face) result = cand;
    return result;
}

std::vector<Projection> EmbeddedSurface::project_points(const Eigen::MatrixXd& points) const {
    if (points.cols() != dim()) throw InputError("projection query dimension mismatch");
    std::vector<Projection> out(static_cast<size_t>(points.rows()));
    parallel_for(0, static_cast<int>(points.rows()),
                 [&](int i) { out[static_cast<size_t>(i)] = project(points.row(i).transpose()); });
    return out;
}

PointIndex::PointIndex(Eigen::MatrixXd points, int leaf_size) : P_(std::move(points)) {
    if (P_.rows() == 0) throw InputError("point index needs at least one point");
    const int n = static_cast<int>(P_.rows());
    order_.resize(static_cast<size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    leaf_size_ = std::max(1, leaf_size);
    nodes_.reserve(static_cast<size_t>(2 * n));
    box_lo_.reserve(static_cast<size_t>(2 * n));
    box_hi_.reserve(static_cast<size_t>(2 * n));
    root_ = build(0, n);
}

int PointIndex::build(int begin, int end) {
    const int m = static_cast<int>(P_.cols());
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, -kInf);
    for (int i = begin; i < end; ++i) {
        lo = lo.cwiseMin(P_.row(order_[static_cast<size_t>(i)]).transpose());
        hi = hi.cwiseMax(P_.row(order_[static_cast<size_t>(i)]).transpose());
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    box_lo_.push_back(lo);
    box_hi_.push_back(hi);
    if (end - begin <= leaf_size_) {
        nodes_[static_cast<size_t>(id)].begin = begin;
        nodes_[static_cast<size_t>(id)].end = end;
        return id;
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
        return P_(a, axis) < P_(b, axis) || (P_(a, axis) == P_(b, axis) && a < b);
    });
    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
}

void PointIndex::search(int id, const double* q, double& best, int& best_idx) const {
    const int m = static_cast<int>(P_.cols());
    const double* lo = box_lo_[static_cast<size_t>(id)].data();
    const double* hi = box_hi_[static_cast<size_t>(id)].data();
    double box_sq = 0.0;
    for (int i = 0; i < m; ++i) {
        double d = q[i] < lo[i] ? lo[i] - q[i] : (q[i] > hi[i] ? q[i] - hi[i] : 0.0);
        box_sq += d * d;
    }
    if (box_sq > best) return; // keep equal-distance subtrees so ties stay exact
    const Node& node = nodes_[static_cast<size_t>(id)];
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            int idx = order_[static_cast<size_t>(i)];
            double sq = 0.0;
            for (int k = 0; k < m; ++k) {
                double diff = q[k] - P_(idx, k);
                sq += diff * diff;
            }
            if (sq < best || (sq == best && idx < best_idx)) {
                best = sq;
                best_idx = idx;
            }
        }
        return;
    }
    search(node.left, q, best, best_idx);
    search(node.right, q, best, best_idx);
}

int PointIndex::nearest(const Eigen::VectorXd& query) const {
    if (query.size() != P_.cols()) throw InputError("point index query dimension mismatch");
    double best = kInf;
    int best_idx = std::numeric_limits<int>::max();
    search(root_, query.data(), best, best_idx);
    return best_idx;
}

int PointIndex::nearest_brute(const Eigen::VectorXd& query) const {
    double best = kInf;
    int best_idx = std::numeric_limits<int>::max();
    for (int i = 0; i < P_.rows(); ++i) {
        double sq = (P_.row(i).transpose() - query).squaredNorm();
        if (sq < best || (sq == best && i < best_idx)) {
            best = sq;
            best_idx = i;
        }
    }
    return best_idx;
}

} // namespace revmap
