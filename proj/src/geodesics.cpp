#include "revmap/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "revmap/common.hpp"

namespace revmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Wavefront update at corner C supported by A and B (distances dA, dB, edge
// lengths c = |AB|, b = |AC|, a = |BC|). Reconstructs the planar virtual
// source consistent with dA and dB; the update is valid only when the
// straight ray from the source to C crosses the segment AB. Returns +inf for
// invalid configurations, in which case the caller relaxes along edges.
double triangle_update(double dA, double dB, double c, double b, double a) {
    if (!std::isfinite(dA) || !std::isfinite(dB) || c <= 0.0) return kInf;
    if (dB < dA) {
        std::swap(dA, dB);
        std::swap(a, b);
    }
    const double sx = (dA * dA + c * c - dB * dB) / (2.0 * c);
    const double sy2 = dA * dA - sx * sx;
    if (sy2 < 0.0) return kInf;
    const double sy = -std::sqrt(sy2);
    const double cx = (b * b + c * c - a * a) / (2.0 * c);
    const double cy2 = b * b - cx * cx;
    if (cy2 <= 0.0) return kInf;
    const double cy = std::sqrt(cy2);
    const double d = std::hypot(cx - sx, cy - sy);
    if (d + 1e-12 * (1.0 + c) < dB) return kInf; // acausal
    const double t = -sy / (cy - sy);
    const double x_cross = sx + (cx - sx) * t;
    const double tol = 1e-12 * (1.0 + c);
    if (x_cross < -tol || x_cross > c + tol) return kInf;
    return d;
}

} // namespace

GeodesicSolver::GeodesicSolver(const TriangleMesh& mesh, Method method) : mesh_(&mesh), method_(method) {
    const int nf = mesh.num_faces();
    face_lengths_.resize(nf, 3);
    for (int f = 0; f < nf; ++f) {
        Eigen::RowVector3d p0 = mesh.V.row(mesh.F(f, 0));
        Eigen::RowVector3d p1 = mesh.V.row(mesh.F(f, 1));
        Eigen::RowVector3d p2 = mesh.V.row(mesh.F(f, 2));
        face_lengths_(f, 0) = (p1 - p2).norm();
        face_lengths_(f, 1) = (p2 - p0).norm();
        face_lengths_(f, 2) = (p0 - p1).norm();
    }
}

Eigen::VectorXd GeodesicSolver::single_source(int v) const {
    if (v < 0 || v >= mesh_->num_vertices()) throw InputError("source vertex out of range");
    return multi_source({{v, 0.0}});
}

Eigen::VectorXd GeodesicSolver::multi_source(const std::vector<std::pair<int, double>>& seeds) const {
    const TriangleMesh& mesh = *mesh_;
    const int n = mesh.num_vertices();
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
    std::vector<char> frozen(static_cast<size_t>(n), 0);

    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    for (const auto& [v, d0] : seeds) {
        if (v < 0 || v >= n) throw InputError("seed vertex out of range");
        if (d0 < dist(v)) {
            dist(v) = d0;
            heap.emplace(d0, v);
        }
    }

    auto corner_of = [&mesh](int f, int v) {
        for (int k = 0; k < 3; ++k)
            if (mesh.F(f, k) == v) return k;
        return -1;
    };

    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (frozen[static_cast<size_t>(u)] || du > dist(u)) continue;
        frozen[static_cast<size_t>(u)] = 1;

        for (int f : mesh.vertex_faces[static_cast<size_t>(u)]) {
            const int ku = corner_of(f, u);
            for (int offset = 1; offset <= 2; ++offset) {
                const int kc = (ku + offset) % 3;
                const int c = mesh.F(f, kc);
                if (frozen[static_cast<size_t>(c)]) continue;
                const int ka = 3 - ku - kc;
                const int a = mesh.F(f, ka);

                double cand = dist(u) + face_lengths_(f, ka); // edge (u, c)
                if (frozen[static_cast<size_t>(a)]) {
                    cand = std::min(cand, dist(a) + face_lengths_(f, ku)); // edge (a, c)
                    if (method_ == Method::FastMarching)
                        cand = std::min(cand, triangle_update(dist(u), dist(a), face_lengths_(f, kc),
                                                              face_lengths_(f, ka), face_lengths_(f, ku)));
                }
                if (cand < dist(c)) {
                    dist(c) = cand;
                    heap.emplace(cand, c);
                }
            }
        }
    }
    return dist;
}

namespace {

// Distance from an interior point of face f to the far vertex of the
// edge-adjacent face g, measured through the unfolded face pair; falls back
// to pivoting around the shared corners when the straight path leaves the
// shared edge.
double across_edge_distance(const TriangleMesh& m, const Eigen::RowVector3d& pos, int f, int g, int far_vertex) {
    int shared[2];
    int count = 0;
    for (int i = 0; i < 3 && count < 2; ++i) {
        int vf = m.F(f, i);
        for (int j = 0; j < 3; ++j)
            if (vf == m.F(g, j) && vf != far_vertex) {
                shared[count++] = vf;
                break;
            }
    }
    Eigen::RowVector3d pu = m.V.row(shared[0]), pv = m.V.row(shared[1]);
    Eigen::RowVector3d pw = m.V.row(far_vertex);
    const double len = (pv - pu).norm();
    const double pivot = std::min((pos - pu).norm() + (pu - pw).norm(), (pos - pv).norm() + (pv - pw).norm());
    if (len <= 0.0) return pivot;

    auto plane_coords = [&](const Eigen::RowVector3d& x, double side, bool& ok) {
        double du = (x - pu).norm(), dv = (x - pv).norm();
        double cx = (du * du + len * len - dv * dv) / (2.0 * len);
        double cy2 = du * du - cx * cx;
        if (cy2 <= 0.0) ok = false;
        return Eigen::Vector2d(cx, side * std::sqrt(std::max(0.0, cy2)));
    };
    bool ok = true;
    // p in face f lies on one side, the far vertex unfolds to the other
    Eigen::Vector2d p2 = plane_coords(pos, +1.0, ok);
    Eigen::Vector2d w2 = plane_coords(pw, -1.0, ok);
    if (!ok || p2.y() - w2.y() <= 0.0) return pivot;
    double t = p2.y() / (p2.y() - w2.y());
    double x_cross = p2.x() + (w2.x() - p2.x()) * t;
    if (x_cross < 0.0 || x_cross > len) return pivot;
    return (p2 - w2).norm();
}

} // namespace

Eigen::VectorXd GeodesicSolver::point_source(const BarycentricPoint& p) const {
    const TriangleMesh& mesh = *mesh_;
    int v = hit_vertex(mesh, p);
    if (v >= 0) return single_source(v);
    Eigen::RowVector3d pos = barycentric_position(mesh.V, mesh, p);
    std::vector<std::pair<int, double>> seeds;
    for (int k = 0; k < 3; ++k) {
        int corner = mesh.F(p.face, k);
        seeds.emplace_back(corner, (mesh.V.row(corner) - pos).norm());
    }
    // seed the far vertices of edge-adjacent faces through unfolding, so the
    // first wavefront ring starts from exact (two-face) distances
    for (int k = 0; k < 3; ++k) {
        const int a = mesh.F(p.face, k), b = mesh.F(p.face, (k + 1) % 3);
        for (int g : mesh.vertex_faces[static_cast<size_t>(a)]) {
            if (g == p.face) continue;
            int far = -1;
            bool has_b = false;
            for (int j = 0; j < 3; ++j) {
                if (mesh.F(g, j) == b) has_b = true;
                if (mesh.F(g, j) != a && mesh.F(g, j) != b) far = mesh.F(g, j);
            }
            if (has_b && far >= 0) seeds.emplace_back(far, across_edge_distance(mesh, pos, p.face, g, far));
        }
    }
    return multi_source(seeds);
}

std::vector<int> geodesic_voronoi(const GeodesicSolver& solver, const std::vector<int>& centers) {
    if (centers.empty()) throw InputError("geodesic Voronoi needs at least one center");
    const int n = solver.mesh().num_vertices();
    const int r = static_cast<int>(centers.size());
    std::vector<Eigen::VectorXd> fields(static_cast<size_t>(r));
    parallel_for(0, r, [&](int i) { fields[static_cast<size_t>(i)] = solver.single_source(centers[static_cast<size_t>(i)]); }, 1);

    std::vector<int> assignment(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        double best = fields[0](v);
        int arg = 0;
        for (int i = 1; i < r; ++i) {
            if (fields[static_cast<size_t>(i)](v) < best) {
                best = fields[static_cast<size_t>(i)](v);
                arg = i;
            }
        }
        assignment[static_cast<size_t>(v)] = arg;
    }
    return assignment;
}

GeodesicEvaluator::GeodesicEvaluator(const TriangleMesh& mesh, GeodesicSolver::Method method)
    : solver_(mesh, method) {}

void GeodesicEvaluator::build_all_pairs() {
    const int n = mesh().num_vertices();
    all_pairs_.resize(n, n);
    parallel_for(0, n, [&](int v) { all_pairs_.col(v) = solver_.single_source(v).cast<float>(); }, 1);
    // solves are not exactly symmetric; averaging restores symmetry and
    // cancels part of the discretization error
    all_pairs_ = 0.5f * (all_pairs_ + all_pairs_.transpose()).eval();
}

// Exact/unfolded distance for points on the same or edge-adjacent faces.
double GeodesicEvaluator::local_distance(const BarycentricPoint& p, const BarycentricPoint& q, bool& ok) const {
    const TriangleMesh& m = mesh();
    ok = true;
    if (p.face == q.face) {
        // faces are planar, so the chord is the intrinsic distance
        return (barycentric_position(m.V, m, p) - barycentric_position(m.V, m, q)).norm();
    }
    int shared[2];
    int count = 0;
    for (int i = 0; i < 3 && count < 2; ++i)
        for (int j = 0; j < 3; ++j)
            if (m.F(p.face, i) == m.F(q.face, j)) {
                shared[count++] = m.F(p.face, i);
                break;
            }
    if (count == 2) {
        // unfold the two faces across the shared edge into a common plane
        const int u = shared[0], v = shared[1];
        Eigen::RowVector3d pu = m.V.row(u), pv = m.V.row(v);
        const double len = (pv - pu).norm();
        if (len > 0.0) {
            auto layout = [&](const BarycentricPoint& bp, double side, bool& flat_ok) -> Eigen::Vector2d {
                int kw = -1;
                for (int k = 0; k < 3; ++k)
                    if (m.F(bp.face, k) != u && m.F(bp.face, k) != v) kw = k;
                Eigen::RowVector3d pw = m.V.row(m.F(bp.face, kw));
                double du = (pw - pu).norm(), dv = (pw - pv).norm();
                double x = (du * du + len * len - dv * dv) / (2.0 * len);
                double y2 = du * du - x * x;
                if (y2 <= 1e-24 * len * len) {
                    flat_ok = false;
                    return Eigen::Vector2d::Zero();
                }
                double y = side * std::sqrt(y2);
                Eigen::Vector2d c = Eigen::Vector2d::Zero();
                for (int k = 0; k < 3; ++k) {
                    int vid = m.F(bp.face, k);
                    Eigen::Vector2d corner = vid == u   ? Eigen::Vector2d(0.0, 0.0)
                                             : vid == v ? Eigen::Vector2d(len, 0.0)
                                                        : Eigen::Vector2d(x, y);
                    c += bp.w(k) * corner;
                }
                return c;
            };
            bool flat_ok = true;
            Eigen::Vector2d p2 = layout(p, +1.0, flat_ok);
            Eigen::Vector2d q2 = layout(q, -1.0, flat_ok);
            if (flat_ok && p2.y() >= 0.0 && q2.y() <= 0.0 && p2.y() - q2.y() > 0.0) {
                double t = p2.y() / (p2.y() - q2.y());
                double x_cross = p2.x() + (q2.x() - p2.x()) * t;
                if (x_cross >= 0.0 && x_cross <= len) return (p2 - q2).norm();
            }
        }
    }
    if (count >= 1) {
        // pivot through a shared vertex: both legs are in-face chords
        Eigen::RowVector3d pp = barycentric_position(m.V, m, p);
        Eigen::RowVector3d pq = barycentric_position(m.V, m, q);
        double best = kInf;
        for (int i = 0; i < count; ++i) {
            Eigen::RowVector3d pivot = m.V.row(shared[i]);
            best = std::min(best, (pp - pivot).norm() + (pivot - pq).norm());
        }
        return best;
    }
    ok = false;
    return 0.0;
}

double GeodesicEvaluator::distance(const BarycentricPoint& p, const BarycentricPoint& q) const {
    bool ok = false;
    double local = local_distance(p, q, ok);
    if (ok && p.face == q.face) return local;
    if (!has_all_pairs()) throw NumericalError("geodesic table not built; call build_all_pairs() first");
    const TriangleMesh& m = mesh();
    double bilinear = 0.0;
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            bilinear += p.w(k) * q.w(l) * static_cast<double>(all_pairs_(m.F(p.face, k), m.F(q.face, l)));
    return ok ? std::min(local, bilinear) : bilinear;
}

double GeodesicEvaluator::distance_accurate(const BarycentricPoint& p, const BarycentricPoint& q) const {
    const TriangleMesh& m = mesh();
    if (p.face == q.face) {
        bool ok = true;
        return local_distance(p, q, ok);
    }
    Eigen::VectorXd field = solver_.point_source(p);
    double d = 0.0;
    for (int l = 0; l < 3; ++l) d += q.w(l) * field(m.F(q.face, l));
    return d;
}

} // namespace revmap
