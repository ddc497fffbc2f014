#include "revmap/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "revmap/common.hpp"

namespace revmap {

namespace {

// Stress majorization with weights 1/d^2, so the minimized objective is the
// total squared relative deviation of distances, the statistic the embedding
// reports. One Guttman sweep per iteration; rows update in parallel from the
// previous iterate.
void smacof_refine(const Eigen::MatrixXd& D, Eigen::MatrixXd& X, int iterations) {
    const int k = static_cast<int>(D.rows());
    const int m = static_cast<int>(X.cols());
    Eigen::MatrixXd W(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) W(i, j) = (i == j || D(i, j) < 1e-300) ? 0.0 : 1.0 / (D(i, j) * D(i, j));
    Eigen::MatrixXd Z(k, m);
    double prev_stress = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iterations; ++it) {
        parallel_for(0, k, [&](int i) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m);
            double wsum = 0.0;
            for (int j = 0; j < k; ++j) {
                const double w = W(i, j);
                if (w == 0.0) continue;
                wsum += w;
                double delta = (X.row(i) - X.row(j)).norm();
                if (delta > 1e-300)
                    acc += w * (X.row(j) + D(i, j) / delta * (X.row(i) - X.row(j)));
                else
                    acc += w * X.row(j);
            }
            Z.row(i) = wsum > 0.0 ? (acc / wsum).eval() : X.row(i).eval();
        }, 16);
        X.swap(Z);
        if (it % 10 == 9) {
            double stress = 0.0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < i; ++j) {
                    if (W(i, j) == 0.0) continue;
                    double r = (X.row(i) - X.row(j)).norm() - D(i, j);
                    stress += W(i, j) * r * r;
                }
            if (stress >= prev_stress * (1.0 - 1e-10)) break;
            prev_stress = stress;
        }
    }
}

// Per-vertex counterpart for out-of-sample points: positions the point
// against the fixed landmark configuration.
void smacof_point(const Eigen::MatrixXd& landmarks, const Eigen::VectorXd& dists, Eigen::RowVectorXd& x,
                  int iterations) {
    const int k = static_cast<int>(landmarks.rows());
    for (int it = 0; it < iterations; ++it) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
        double wsum = 0.0;
        for (int i = 0; i < k; ++i) {
            if (dists(i) < 1e-300) continue;
            const double w = 1.0 / (dists(i) * dists(i));
            wsum += w;
            double delta = (x - landmarks.row(i)).norm();
            if (delta > 1e-300)
                acc += w * (landmarks.row(i) + dists(i) / delta * (x - landmarks.row(i)));
            else
                acc += w * landmarks.row(i);
        }
        if (wsum > 0.0) x = acc / wsum;
    }
}

// Geodesic farthest-point sampling from vertex 0; returns the sampled ids and
// their distance fields (the rows of the landmark distance matrix).
void farthest_point_sample(const GeodesicSolver& solver, int count, std::vector<int>& landmarks,
                           std::vector<Eigen::VectorXd>& fields) {
    const int n = solver.mesh().num_vertices();
    landmarks.clear();
    fields.clear();
    Eigen::VectorXd min_dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    int next = 0;
    for (int i = 0; i < count; ++i) {
        landmarks.push_back(next);
        fields.push_back(solver.single_source(next));
        const Eigen::VectorXd& f = fields.back();
        if (!f.allFinite()) throw InputError("mesh is disconnected; embedding requires a connected mesh");
        min_dist = min_dist.cwiseMin(f);
        double best = -1.0;
        next = 0;
        for (int v = 0; v < n; ++v) {
            if (min_dist(v) > best) {
                best = min_dist(v);
                next = v;
            }
        }
        if (best <= 0.0) { // point set saturated the mesh
            count = static_cast<int>(landmarks.size());
            break;
        }
    }
}

} // namespace

void largest_eigenpairs(const Eigen::MatrixXd& B, int count, std::uint64_t seed, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors) {
    const int k = static_cast<int>(B.rows());
    count = std::min(count, k);
    const int q = std::min(k, count + 8);

    // power iteration targets the largest magnitudes; shifting by a Gershgorin
    // bound makes the algebraically largest eigenvalues dominate even when
    // the spectrum has strong negative tails
    const double shift = B.cwiseAbs().rowwise().sum().maxCoeff();
    auto apply = [&](const Eigen::MatrixXd& Q) { return (B * Q + shift * Q).eval(); };

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd Q(k, q);
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < k; ++i) Q(i, j) = gauss(rng);
    Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() * Eigen::MatrixXd::Identity(k, q);

    Eigen::VectorXd prev = Eigen::VectorXd::Zero(count);
    for (int iter = 0; iter < 300; ++iter) {
        Eigen::MatrixXd Z = apply(Q);
        Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Z).householderQ() * Eigen::MatrixXd::Identity(k, q);
        if (iter % 8 == 7 || iter == 299) {
            Eigen::MatrixXd T = Q.transpose() * B * Q;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            Eigen::VectorXd lam = es.eigenvalues().tail(count).reverse();
            double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
            if ((lam - prev).cwiseAbs().maxCoeff() < 1e-12 * scale) {
                prev = lam;
                break;
            }
            prev = lam;
        }
    }
    Eigen::MatrixXd T = Q.transpose() * B * Q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw NumericalError("subspace eigensolver failed");
    values = es.eigenvalues().tail(count).reverse();
    vectors.resize(k, count);
    for (int j = 0; j < count; ++j) {
        vectors.col(j) = Q * es.eigenvectors().col(q - 1 - j);
        int arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }
}

MetricEmbedding mds_embed(const TriangleMesh& mesh, const EmbeddingOptions& options) {
    const int n = mesh.num_vertices();
    const int m = options.dim;
    if (m < 2) throw InputError("embedding dimension must be at least 2");
    if (m > n) throw InputError("embedding dimension exceeds vertex count");

    GeodesicSolver solver(mesh, options.method);
    std::vector<int> landmarks;
    std::vector<Eigen::VectorXd> fields;
    if (n <= options.full_mds_threshold) {
        landmarks.resize(static_cast<size_t>(n));
        for (int v = 0; v < n; ++v) landmarks[static_cast<size_t>(v)] = v;
        fields.resize(static_cast<size_t>(n));
        parallel_for(0, n, [&](int v) { fields[static_cast<size_t>(v)] = solver.single_source(v); }, 1);
        for (const auto& f : fields)
            if (!f.allFinite()) throw InputError("mesh is disconnected; embedding requires a connected mesh");
    } else {
        farthest_point_sample(solver, std::min(n, options.landmark_count), landmarks, fields);
    }
    const int k = static_cast<int>(landmarks.size());
    if (k < m) throw InputError("not enough landmarks for the requested dimension");

    // squared landmark-landmark distances, double-centered
    Eigen::MatrixXd sq(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double d = fields[static_cast<size_t>(i)](landmarks[static_cast<size_t>(j)]);
            sq(i, j) = d * d;
        }
    sq = 0.5 * (sq + sq.transpose()).eval();
    Eigen::VectorXd row_mean = sq.rowwise().mean();
    double total_mean = row_mean.mean();
    Eigen::MatrixXd B = -0.5 * (sq.colwise() - row_mean);
    B = (B.rowwise() - (-0.5 * row_mean).transpose()).eval();
    B.array() += -0.5 * total_mean;
    // B = -1/2 (sq - r 1^T - 1 r^T + mean)

    Eigen::VectorXd lam;
    Eigen::MatrixXd U;
    largest_eigenpairs(B, m, options.seed, lam, U);
    const double lam_floor = std::max(1e-12, 1e-12 * std::abs(lam(0)));

    // classical scaling initializes; stress majorization does the real work,
    // since the spectral solution optimizes Gram residuals, not distances
    Eigen::MatrixXd Xl(k, m);
    for (int j = 0; j < m; ++j) Xl.col(j) = U.col(j) * std::sqrt(std::max(lam(j), 0.0));
    {
        Eigen::MatrixXd Dk(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                Dk(i, j) = 0.5 * (fields[static_cast<size_t>(i)](landmarks[static_cast<size_t>(j)]) +
                                  fields[static_cast<size_t>(j)](landmarks[static_cast<size_t>(i)]));
        smacof_refine(Dk, Xl, options.refine_iterations);
    }

    MetricEmbedding emb;
    emb.dim = m;
    emb.landmarks = landmarks;
    emb.X.resize(n, m);

    std::vector<int> landmark_of(static_cast<size_t>(n), -1);
    for (int i = 0; i < k; ++i) landmark_of[static_cast<size_t>(landmarks[static_cast<size_t>(i)])] = i;

    // distance-based triangulation for non-landmark vertices, refined against
    // the landmark configuration
    Eigen::MatrixXd pinv(m, k); // Lambda^-1/2 U^T
    for (int j = 0; j < m; ++j)
        pinv.row(j) = lam(j) > lam_floor ? (U.col(j) / std::sqrt(lam(j))).transpose().eval()
                                         : Eigen::RowVectorXd::Zero(k).eval();
    parallel_for(0, n, [&](int v) {
        int li = landmark_of[static_cast<size_t>(v)];
        if (li >= 0) {
            emb.X.row(v) = Xl.row(li);
            return;
        }
        Eigen::VectorXd delta(k);
        Eigen::VectorXd dv(k);
        for (int i = 0; i < k; ++i) {
            double d = fields[static_cast<size_t>(i)](v);
            dv(i) = d;
            delta(i) = d * d;
        }
        Eigen::RowVectorXd x = (-0.5 * (pinv * (delta - row_mean))).transpose();
        smacof_point(Xl, dv, x, 30);
        emb.X.row(v) = x;
    });

    emb.X.rowwise() -= emb.X.colwise().mean(); // canonical gauge: centered columns

    // relative distance error over sampled (landmark, vertex) pairs
    std::mt19937_64 rng(options.seed ^ 0x2545f4914f6cdd1dull);
    const std::int64_t available = static_cast<std::int64_t>(k) * n;
    const int samples = static_cast<int>(std::min<std::int64_t>(200000, available));
    std::vector<double> errors;
    errors.reserve(static_cast<size_t>(samples));
    const double scale = sq.maxCoeff() > 0.0 ? std::sqrt(sq.maxCoeff()) : 1.0;
    for (int t = 0; t < samples; ++t) {
        int i = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
        int v = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        double d = fields[static_cast<size_t>(i)](v);
        if (d < 1e-9 * scale) continue;
        double de = (emb.X.row(landmarks[static_cast<size_t>(i)]) - emb.X.row(v)).norm();
        errors.push_back(std::abs(de - d) / d);
    }
    if (!errors.empty()) {
        auto mid = errors.begin() + static_cast<std::ptrdiff_t>(errors.size() / 2);
        std::nth_element(errors.begin(), mid, errors.end());
        emb.stress_median = *mid;
        auto p95 = errors.begin() + static_cast<std::ptrdiff_t>(95 * errors.size() / 100);
        if (p95 >= errors.end()) p95 = errors.end() - 1;
        std::nth_element(errors.begin(), p95, errors.end());
        emb.stress_p95 = *p95;
    }
    return emb;
}

EdgeLengthReport embedding_weights_check(const TriangleMesh& mesh, const Eigen::MatrixXd& X,
                                         double flag_threshold) {
    EdgeLengthReport report;
    std::vector<double> rels;
    rels.reserve(static_cast<size_t>(mesh.num_edges()));
    for (int e = 0; e < mesh.num_edges(); ++e) {
        int u = mesh.E(e, 0), v = mesh.E(e, 1);
        double l3 = (mesh.V.row(u) - mesh.V.row(v)).norm();
        double lm = (X.row(u) - X.row(v)).norm();
        double rel = l3 > 0.0 ? std::abs(lm - l3) / l3 : 0.0;
        rels.push_back(rel);
        report.max_rel = std::max(report.max_rel, rel);
        if (rel > flag_threshold) report.flagged.push_back(e);
    }
    if (!rels.empty()) {
        auto mid = rels.begin() + static_cast<std::ptrdiff_t>(rels.size() / 2);
        std::nth_element(rels.begin(), mid, rels.end());
        report.median_rel = *mid;
    }
    return report;
}

namespace {
constexpr char kCacheMagic[8] = {'R', 'V', 'M', 'E', 'M', 'B', '1', '\0'};
}

void save_embedding_cache(const std::string& path, std::uint64_t mesh_hash, const Eigen::MatrixXd& X) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write embedding cache '" + path + "'");
    std::int32_t n = static_cast<std::int32_t>(X.rows());
    std::int32_t m = static_cast<std::int32_t>(X.cols());
    out.write(kCacheMagic, sizeof(kCacheMagic));
    out.write(reinterpret_cast<const char*>(&mesh_hash), sizeof(mesh_hash));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&m), sizeof(m));
    // row-major payload
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double v = X(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    if (!out) throw InputError("failed while writing '" + path + "'");
}

std::optional<Eigen::MatrixXd> load_embedding_cache(const std::string& path, std::uint64_t mesh_hash, int dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    std::uint64_t hash = 0;
    std::int32_t n = 0, m = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&hash), sizeof(hash));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&m), sizeof(m));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0 || hash != mesh_hash || m != dim)
        return std::nullopt;
    Eigen::MatrixXd X(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            X(i, j) = v;
        }
    if (!in) return std::nullopt;
    return X;
}

} // namespace revmap
