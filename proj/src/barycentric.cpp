#include "revmap/barycentric.hpp"

namespace revmap {

BarycentricPoint make_barycentric(int face, const Eigen::Vector3d& weights, int num_faces) {
    if (face < 0 || face >= num_faces)
        throw InputError("face id " + std::to_string(face + 1) + " out of range [1, " + std::to_string(num_faces) + "]");
    Eigen::Vector3d w = weights;
    for (int k = 0; k < 3; ++k) {
        if (w(k) < -1e-9 || w(k) > 1.0 + 1e-9)
            throw InputError("barycentric weight " + std::to_string(w(k)) + " outside [0, 1]");
        if (w(k) < 0.0) w(k) = 0.0;
    }
    double sum = w.sum();
    if (!(sum > 0.0) || !w.allFinite()) throw InputError("barycentric weights do not sum to a positive value");
    BarycentricPoint p;
    p.face = face;
    // skipping the division at unit sum keeps normalization idempotent
    p.w = std::abs(sum - 1.0) <= 1e-12 ? w : (w / sum).eval();
    return p;
}

BarycentricPoint vertex_point(const TriangleMesh& mesh, int v) {
    if (v < 0 || v >= mesh.num_vertices()) throw InputError("vertex id " + std::to_string(v + 1) + " out of range");
    int f = mesh.lowest_incident_face(v);
    BarycentricPoint p;
    p.face = f;
    p.w.setZero();
    for (int k = 0; k < 3; ++k)
        if (mesh.F(f, k) == v) p.w(k) = 1.0;
    return p;
}

int hit_vertex(const TriangleMesh& mesh, const BarycentricPoint& p, double tol) {
    int corner = p.vertex_corner(tol);
    return corner < 0 ? -1 : mesh.F(p.face, corner);
}

Eigen::RowVectorXd barycentric_position(const Eigen::MatrixXd& coords, const TriangleMesh& mesh,
                                        const BarycentricPoint& p) {
    if (p.face < 0 || p.face >= mesh.num_faces()) throw InputError("barycentric point has invalid face");
    return p.w(0) * coords.row(mesh.F(p.face, 0)) + p.w(1) * coords.row(mesh.F(p.face, 1)) +
           p.w(2) * coords.row(mesh.F(p.face, 2));
}

} // namespace revmap
