#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "revmap/common.hpp"

namespace revmap {

// Triangle mesh with optional texture coordinates. Immutable after
// construction; vertex order is preserved from the source file since indices
// are the contract with landmark and map files.
struct TriangleMesh {
    Eigen::MatrixXd V;  // n x 3 vertex positions
    Eigen::MatrixXi F;  // f x 3 vertex indices, 0-based

    Eigen::MatrixXd VT; // t x 2 texture coordinates, may be empty
    Eigen::MatrixXi FT; // f x 3 indices into VT, -1 where absent
    Eigen::MatrixXd VN; // optional normals, preserved for round-trips
    Eigen::MatrixXi FN;

    Eigen::MatrixX2i E; // unique undirected edges (lo, hi), lexicographic
    std::vector<std::vector<int>> vertex_faces; // ascending face ids

    int num_vertices() const { return static_cast<int>(V.rows()); }
    int num_faces() const { return static_cast<int>(F.rows()); }
    int num_edges() const { return static_cast<int>(E.rows()); }
    bool has_uv() const { return VT.rows() > 0 && FT.rows() == F.rows(); }

    // Lowest face id incident to v; the canonical face for vertex hits.
    int lowest_incident_face(int v) const {
        const auto& faces = vertex_faces.at(static_cast<size_t>(v));
        if (faces.empty()) throw InputError("vertex " + std::to_string(v) + " has no incident face");
        return faces.front();
    }
};

// Discrete operators shared by every energy evaluation. W is the cotangent
// Laplacian assembled so that g^T W g = sum_{(u,v) in E} w_uv (g_u - g_v)^2
// with w_uv the half-sum of the cotangents opposite the edge. A is the
// barycentric lumped mass (one third of incident face areas per vertex).
struct MeshOperators {
    Eigen::SparseMatrix<double> W; // n x n, symmetric PSD
    Eigen::VectorXd A;             // n lumped vertex areas, strictly positive
    double s = 0.0;                // total area = sum of face areas
    Eigen::VectorXd face_areas;    // per face
    Eigen::VectorXd edge_weights;  // w_uv per row of mesh.E
};

// Builds a validated mesh from raw arrays: checks index ranges, degenerate
// faces (repeated vertex index) and that each edge borders at most two faces.
TriangleMesh make_mesh(Eigen::MatrixXd V, Eigen::MatrixXi F);

// OBJ reader. Accepts v / vt / vn / f records and # comments; faces must be
// triangles. vt and vn are preserved when present.
TriangleMesh load_mesh(const std::string& path);
void save_mesh(const TriangleMesh& mesh, const std::string& path);

// clamp_negative zeroes obtuse (negative) cotangent edge weights; off by
// default to stay faithful to the energy definition.
MeshOperators compute_operators(const TriangleMesh& mesh, bool clamp_negative = false);

// Singular values sigma1 >= sigma2 >= 0 of the linear map taking the source
// triangle (rows of src, in R^3) onto the image triangle (rows of img, in
// R^d). Invariant to rigid motions of either triangle.
struct SingularPair {
    double s1 = 0.0;
    double s2 = 0.0;
};
SingularPair triangle_map_singular_values(const Eigen::Matrix3d& src, const Eigen::MatrixXd& img);

// Same, for face f of the mesh mapped to the given 3 x d image points.
SingularPair face_differential(const TriangleMesh& mesh, int f, const Eigen::MatrixXd& image_pts);

// 64-bit FNV-1a over the raw vertex and face payload; keys embedding caches.
std::uint64_t mesh_content_hash(const TriangleMesh& mesh);

} // namespace revmap
