#include "revmap/precise_map.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "revmap/common.hpp"

namespace revmap {

PreciseMap make_precise_map(int n_source, const TriangleMesh& target) {
    PreciseMap map;
    map.face = Eigen::VectorXi::Zero(n_source);
    map.w.resize(n_source, 3);
    map.w.col(0).setOnes();
    map.w.col(1).setZero();
    map.w.col(2).setZero();
    map.target_faces = target.num_faces();
    return map;
}

PreciseMap identity_map(const TriangleMesh& mesh) {
    PreciseMap map = make_precise_map(mesh.num_vertices(), mesh);
    for (int v = 0; v < mesh.num_vertices(); ++v) map.set_row(v, vertex_point(mesh, v));
    return map;
}

bool is_feasible(const PreciseMap& map, double tol) {
    for (int i = 0; i < map.rows(); ++i) {
        if (map.face(i) < 0 || map.face(i) >= map.target_faces) return false;
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            double v = map.w(i, k);
            if (!(v >= -tol && v <= 1.0 + tol)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

Eigen::MatrixXd apply_map(const PreciseMap& map, const TriangleMesh& target, const Eigen::MatrixXd& columns) {
    if (columns.rows() != target.num_vertices()) throw InputError("apply_map: column rows must match target vertices");
    if (map.target_faces != target.num_faces()) throw InputError("apply_map: map was built for a different target");
    Eigen::MatrixXd out(map.rows(), columns.cols());
    for (int i = 0; i < map.rows(); ++i) {
        const int f = map.face(i);
        out.row(i) = map.w(i, 0) * columns.row(target.F(f, 0)) + map.w(i, 1) * columns.row(target.F(f, 1)) +
                     map.w(i, 2) * columns.row(target.F(f, 2));
    }
    return out;
}

Eigen::SparseMatrix<double> map_matrix(const PreciseMap& map, const TriangleMesh& target) {
    if (map.target_faces != target.num_faces()) throw InputError("map_matrix: map was built for a different target");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(map.rows()) * 3);
    for (int i = 0; i < map.rows(); ++i) {
        const int f = map.face(i);
        for (int k = 0; k < 3; ++k) trip.emplace_back(i, target.F(f, k), map.w(i, k));
    }
    Eigen::SparseMatrix<double> P(map.rows(), target.num_vertices());
    P.setFromTriplets(trip.begin(), trip.end());
    return P;
}

BarycentricPoint eval_map_at_point(const PreciseMap& map, const TriangleMesh& source, const TriangleMesh& target,
                                   const EmbeddedSurface& surface, const BarycentricPoint& p) {
    if (map.rows() != source.num_vertices()) throw InputError("eval_map_at_point: map rows must match source vertices");
    if (p.face < 0 || p.face >= source.num_faces()) throw InputError("eval_map_at_point: point not on source mesh");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(surface.dim());
    for (int k = 0; k < 3; ++k) {
        const BarycentricPoint img = map.row(source.F(p.face, k));
        for (int l = 0; l < 3; ++l)
            z += p.w(k) * img.w(l) * surface.coords().row(target.F(img.face, l)).transpose();
    }
    Projection proj = surface.project(z);
    return make_barycentric(proj.face, proj.w, target.num_faces());
}

PreciseMap invert_pointwise(const PreciseMap& p12, const TriangleMesh& source, const TriangleMesh& target,
                            bool brute) {
    if (p12.rows() != source.num_vertices()) throw InputError("invert_pointwise: map rows must match source vertices");
    const Eigen::MatrixXd images = apply_map(p12, target, target.V);
    PreciseMap p21 = make_precise_map(target.num_vertices(), source);
    p21.target_faces = source.num_faces();
    if (brute) {
        PointIndex index(images); // only used for its brute path
        for (int v2 = 0; v2 < target.num_vertices(); ++v2) {
            int v1 = index.nearest_brute(target.V.row(v2).transpose());
            p21.set_row(v2, vertex_point(source, v1));
        }
        return p21;
    }
    PointIndex index(images);
    parallel_for(0, target.num_vertices(), [&](int v2) {
        int v1 = index.nearest(target.V.row(v2).transpose());
        p21.set_row(v2, vertex_point(source, v1));
    });
    return p21;
}

void save_map(const PreciseMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write map file '" + path + "'");
    out.precision(17);
    out << map.rows() << " " << map.target_faces << "\n";
    for (int i = 0; i < map.rows(); ++i)
        out << map.face(i) + 1 << " " << map.w(i, 0) << " " << map.w(i, 1) << " " << map.w(i, 2) << "\n";
    if (!out) throw InputError("failed while writing '" + path + "'");
}

PreciseMap load_map(const std::string& path, const TriangleMesh& target) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open map file '" + path + "'");
    int rows = 0, faces = 0;
    if (!(in >> rows >> faces)) throw InputError(path + ": missing map header");
    if (faces != target.num_faces())
        throw InputError(path + ": map targets a mesh with " + std::to_string(faces) + " faces, got " +
                         std::to_string(target.num_faces()));
    PreciseMap map = make_precise_map(rows, target);
    for (int i = 0; i < rows; ++i) {
        int f = 0;
        Eigen::Vector3d w;
        if (!(in >> f >> w(0) >> w(1) >> w(2)))
            throw InputError(path + ": truncated at row " + std::to_string(i + 1));
        BarycentricPoint p;
        try {
            p = make_barycentric(f - 1, w, target.num_faces());
        } catch (const InputError& e) {
            throw InputError(path + ": row " + std::to_string(i + 1) + ": " + e.what());
        }
        map.set_row(i, p);
    }
    return map;
}

} // namespace revmap
