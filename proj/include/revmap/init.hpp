#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "revmap/embedding.hpp"
#include "revmap/geodesics.hpp"
#include "revmap/mesh.hpp"
#include "revmap/precise_map.hpp"

namespace revmap {

// Matched vertex pairs (p on mesh 1, q on mesh 2). Duplicate targets are
// allowed; two features may map to one.
using LandmarkSet = std::vector<std::pair<int, int>>;

// Functional correspondence in reduced bases: C12 maps coefficients of
// functions on mesh 2 to mesh 1 and C21 the reverse.
struct FunctionalMap {
    Eigen::MatrixXd C12; // k1 x k2
    Eigen::MatrixXd C21; // k2 x k1
};

// Full variable set consumed by the solver. p_valid is false for functional
// map initialization, where the maps are produced by the first projection
// step and the placeholders are never read.
struct InitialState {
    PreciseMap P12, P21;
    Eigen::MatrixXd X12, X21;
    bool p_valid = true;
};

// Text file of 1-based vertex id pairs, one per line; '#' comments.
LandmarkSet load_landmarks(const std::string& path, int n1, int n2);

// Each geodesic Voronoi cell of the source landmarks maps to its paired
// target landmark, and symmetrically for the backward map. Highly degenerate
// by construction, which is fine as a starting point.
InitialState init_from_landmarks(const LandmarkSet& landmarks, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                 const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                                 GeodesicSolver::Method method = GeodesicSolver::Method::FastMarching);

// Backward map by nearest image vertex, auxiliaries by applying the maps to
// the embeddings.
InitialState init_from_pointwise(const PreciseMap& p12, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                 const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2);

// First k generalized eigenfunctions of (W, A): A-orthonormal columns,
// ascending eigenvalue, constant first mode.
Eigen::MatrixXd lb_basis(const TriangleMesh& mesh, const MeshOperators& ops, int k, std::uint64_t seed = 0,
                         Eigen::VectorXd* eigenvalues = nullptr);

// X_ij = Psi_i C_ij Psi_j^+ X_j with the mass-weighted pseudoinverse
// Psi^+ = Psi^T A. The maps start unset; the solver's first sub-step is a
// projection, which needs no map initialization.
InitialState init_from_functional_map(const FunctionalMap& fmap, const TriangleMesh& mesh1,
                                      const TriangleMesh& mesh2, const MeshOperators& ops1,
                                      const MeshOperators& ops2, const Eigen::MatrixXd& X1,
                                      const Eigen::MatrixXd& X2, std::uint64_t seed = 0);

// Text format: "k1 k2" header, row-major payload, then the same for C21.
FunctionalMap load_functional_map(const std::string& path);
void save_functional_map(const FunctionalMap& fmap, const std::string& path);

} // namespace revmap
