#include "revmap/init.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "revmap/common.hpp"

namespace revmap {

LandmarkSet load_landmarks(const std::string& path, int n1, int n2) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open landmark file '" + path + "'");
    LandmarkSet pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first) || first[0] == '#') continue;
        int p = 0, q = 0;
        try {
            p = std::stoi(first);
        } catch (const std::exception&) {
            throw InputError(path + ":" + std::to_string(line_no) + ": expected a vertex id");
        }
        if (!(ss >> q)) throw InputError(path + ":" + std::to_string(line_no) + ": expected a vertex id pair");
        if (p < 1 || p > n1 || q < 1 || q > n2)
            throw InputError(path + ":" + std::to_string(line_no) + ": landmark ids out of range");
        pairs.emplace_back(p - 1, q - 1);
    }
    if (pairs.empty()) throw InputError(path + ": no landmark pairs found");
    return pairs;
}

InitialState init_from_landmarks(const LandmarkSet& landmarks, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                 const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                                 GeodesicSolver::Method method) {
    if (landmarks.empty()) throw InputError("landmark initialization needs at least one pair");
    for (const auto& [p, q] : landmarks) {
        if (p < 0 || p >= mesh1.num_vertices() || q < 0 || q >= mesh2.num_vertices())
            throw InputError("landmark vertex id out of range");
    }
    std::vector<int> centers1, centers2;
    centers1.reserve(landmarks.size());
    centers2.reserve(landmarks.size());
    for (const auto& [p, q] : landmarks) {
        centers1.push_back(p);
        centers2.push_back(q);
    }
    GeodesicSolver solver1(mesh1, method), solver2(mesh2, method);
    std::vector<int> cell1 = geodesic_voronoi(solver1, centers1);
    std::vector<int> cell2 = geodesic_voronoi(solver2, centers2);

    InitialState st;
    st.P12 = make_precise_map(mesh1.num_vertices(), mesh2);
    st.P21 = make_precise_map(mesh2.num_vertices(), mesh1);
    for (int v = 0; v < mesh1.num_vertices(); ++v)
        st.P12.set_row(v, vertex_point(mesh2, landmarks[static_cast<size_t>(cell1[static_cast<size_t>(v)])].second));
    for (int v = 0; v < mesh2.num_vertices(); ++v)
        st.P21.set_row(v, vertex_point(mesh1, landmarks[static_cast<size_t>(cell2[static_cast<size_t>(v)])].first));
    st.X12 = apply_map(st.P12, mesh2, X2);
    st.X21 = apply_map(st.P21, mesh1, X1);
    return st;
}

InitialState init_from_pointwise(const PreciseMap& p12, const TriangleMesh& mesh1, const TriangleMesh& mesh2,
                                 const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2) {
    if (!is_feasible(p12)) throw InputError("initial map is not feasible");
    InitialState st;
    st.P12 = p12;
    st.P21 = invert_pointwise(p12, mesh1, mesh2);
    st.X12 = apply_map(st.P12, mesh2, X2);
    st.X21 = apply_map(st.P21, mesh1, X1);
    return st;
}

namespace {

// A-orthonormalization by modified Gram-Schmidt.
void mass_orthonormalize(Eigen::MatrixXd& Q, const Eigen::VectorXd& A) {
    for (int j = 0; j < Q.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < j; ++i) {
                double c = Q.col(i).dot(A.cwiseProduct(Q.col(j)));
                Q.col(j) -= c * Q.col(i);
            }
        double norm = std::sqrt(Q.col(j).dot(A.cwiseProduct(Q.col(j))));
        if (!(norm > 1e-300)) throw NumericalError("eigensolver basis collapsed");
        Q.col(j) /= norm;
    }
}

} // namespace

Eigen::MatrixXd lb_basis(const TriangleMesh& mesh, const MeshOperators& ops, int k, std::uint64_t seed,
                         Eigen::VectorXd* eigenvalues) {
    const int n = mesh.num_vertices();
    if (k < 1) throw InputError("basis size must be positive");
    if (k > n) throw InputError("basis size exceeds vertex count");
    const int q = std::min(n, k + std::min(8, std::max(2, k / 4)));

    // shift-invert toward the low end of the spectrum; W + sigma A is SPD
    const double sigma = 1e-8 * std::max(1.0, ops.W.coeffs().cwiseAbs().sum() / n);
    Eigen::SparseMatrix<double> K = ops.W;
    for (int v = 0; v < n; ++v) K.coeffRef(v, v) += sigma * ops.A(v);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(K);
    if (chol.info() != Eigen::Success) throw NumericalError("factorization of the shifted Laplacian failed");

    std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ull);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd Q(n, q);
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < n; ++i) Q(i, j) = gauss(rng);
    Q.col(0).setOnes(); // seed the constant mode explicitly
    mass_orthonormalize(Q, ops.A);

    Eigen::VectorXd prev = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::MatrixXd Z = chol.solve(ops.A.asDiagonal() * Q);
        if (chol.info() != Eigen::Success) throw NumericalError("inverse iteration solve failed");
        mass_orthonormalize(Z, ops.A);
        Q = Z;
        Eigen::MatrixXd Tw = Q.transpose() * (ops.W * Q).eval();
        Eigen::MatrixXd Ta = Q.transpose() * (ops.A.asDiagonal() * Q);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Tw, Ta, Eigen::Ax_lBx | Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolver failed");
        values = es.eigenvalues().head(k);
        vectors = Q * es.eigenvectors();
        Q = vectors; // B-orthonormal by construction
        double scale = std::max(1e-30, values.cwiseAbs().maxCoeff());
        if ((values - prev).cwiseAbs().maxCoeff() < 1e-11 * scale) break;
        prev = values;
    }

    Eigen::MatrixXd psi = vectors.leftCols(k);
    for (int j = 0; j < k; ++j) {
        int arg = 0;
        psi.col(j).cwiseAbs().maxCoeff(&arg);
        if (psi(arg, j) < 0.0) psi.col(j) = -psi.col(j);
    }
    if (eigenvalues) *eigenvalues = values;
    return psi;
}

InitialState init_from_functional_map(const FunctionalMap& fmap, const TriangleMesh& mesh1,
                                      const TriangleMesh& mesh2, const MeshOperators& ops1,
                                      const MeshOperators& ops2, const Eigen::MatrixXd& X1,
                                      const Eigen::MatrixXd& X2, std::uint64_t seed) {
    const int k1 = static_cast<int>(fmap.C12.rows());
    const int k2 = static_cast<int>(fmap.C12.cols());
    if (fmap.C21.rows() != k2 || fmap.C21.cols() != k1)
        throw InputError("functional map blocks have inconsistent dimensions");
    Eigen::MatrixXd psi1 = lb_basis(mesh1, ops1, k1, seed);
    Eigen::MatrixXd psi2 = lb_basis(mesh2, ops2, k2, seed);

    InitialState st;
    st.p_valid = false;
    st.P12 = make_precise_map(mesh1.num_vertices(), mesh2);
    st.P21 = make_precise_map(mesh2.num_vertices(), mesh1);
    st.X12 = psi1 * (fmap.C12 * (psi2.transpose() * (ops2.A.asDiagonal() * X2)));
    st.X21 = psi2 * (fmap.C21 * (psi1.transpose() * (ops1.A.asDiagonal() * X1)));
    return st;
}

FunctionalMap load_functional_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open functional map file '" + path + "'");
    auto read_block = [&](Eigen::MatrixXd& M) {
        int r = 0, c = 0;
        if (!(in >> r >> c) || r < 1 || c < 1) throw InputError(path + ": bad functional map header");
        M.resize(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                if (!(in >> M(i, j))) throw InputError(path + ": truncated functional map payload");
        if (!M.allFinite()) throw InputError(path + ": functional map has non-finite entries");
    };
    FunctionalMap fmap;
    read_block(fmap.C12);
    read_block(fmap.C21);
    if (fmap.C21.rows() != fmap.C12.cols() || fmap.C21.cols() != fmap.C12.rows())
        throw InputError(path + ": functional map blocks have inconsistent dimensions");
    return fmap;
}

void save_functional_map(const FunctionalMap& fmap, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write functional map file '" + path + "'");
    out.precision(17);
    auto write_block = [&](const Eigen::MatrixXd& M) {
        out << M.rows() << " " << M.cols() << "\n";
        for (int i = 0; i < M.rows(); ++i) {
            for (int j = 0; j < M.cols(); ++j) out << M(i, j) << (j + 1 == M.cols() ? "" : " ");
            out << "\n";
        }
    };
    write_block(fmap.C12);
    write_block(fmap.C21);
    if (!out) throw InputError("failed while writing '" + path + "'");
}

} // namespace revmap
