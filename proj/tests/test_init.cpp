#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "revmap/embedding.hpp"
#include "revmap/init.hpp"

using namespace revmap;

namespace {

Eigen::MatrixXd padded_positions(const TriangleMesh& mesh, int dim) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(mesh.num_vertices(), dim);
    X.leftCols(3) = mesh.V;
    return X;
}

} // namespace

TEST_CASE("init_from_landmarks: identity cover, single pair, antipodal cells") {
    TriangleMesh sphere = testing::icosphere(2);
    Eigen::MatrixXd X = padded_positions(sphere, 4);

    SUBCASE("landmarks covering all vertices give the identity map") {
        LandmarkSet all;
        for (int v = 0; v < sphere.num_vertices(); ++v) all.emplace_back(v, v);
        InitialState st = init_from_landmarks(all, sphere, sphere, X, X);
        PreciseMap id = identity_map(sphere);
        CHECK((st.P12.face - id.face).cwiseAbs().maxCoeff() == 0);
        CHECK((st.P12.w - id.w).cwiseAbs().maxCoeff() == 0.0);
        CHECK((st.X12 - X).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("a single landmark collapses everything onto it") {
        InitialState st = init_from_landmarks({{3, 17}}, sphere, sphere, X, X);
        CHECK(is_feasible(st.P12));
        for (int v = 0; v < sphere.num_vertices(); ++v) CHECK(hit_vertex(sphere, st.P12.row(v)) == 17);
        for (int v = 0; v < sphere.num_vertices(); ++v) CHECK(hit_vertex(sphere, st.P21.row(v)) == 3);
    }
    SUBCASE("antipodal landmarks split into two hemispheres") {
        int antipode = -1;
        for (int v = 0; v < sphere.num_vertices(); ++v)
            if ((sphere.V.row(v) + sphere.V.row(0)).norm() < 1e-9) antipode = v;
        REQUIRE(antipode >= 0);
        InitialState st = init_from_landmarks({{0, 0}, {antipode, antipode}}, sphere, sphere, X, X);
        int to_first = 0;
        for (int v = 0; v < sphere.num_vertices(); ++v) {
            int hit = hit_vertex(sphere, st.P12.row(v));
            CHECK((hit == 0 || hit == antipode));
            if (hit == 0) ++to_first;
        }
        // cells are balanced up to the equator ring
        CHECK(to_first > sphere.num_vertices() / 2 - 40);
        CHECK(to_first < sphere.num_vertices() / 2 + 40);
    }
    SUBCASE("landmark order only matters at exact ties") {
        LandmarkSet lms = {{0, 5}, {100, 60}, {50, 7}};
        LandmarkSet shuffled = {{50, 7}, {0, 5}, {100, 60}};
        InitialState a = init_from_landmarks(lms, sphere, sphere, X, X);
        InitialState b = init_from_landmarks(shuffled, sphere, sphere, X, X);
        GeodesicSolver solver(sphere);
        std::vector<Eigen::VectorXd> fields = {solver.single_source(0), solver.single_source(100),
                                               solver.single_source(50)};
        for (int v = 0; v < sphere.num_vertices(); ++v) {
            std::array<double, 3> d = {fields[0](v), fields[1](v), fields[2](v)};
            std::sort(d.begin(), d.end());
            if (d[1] - d[0] > 1e-9) { // not a tie, must agree
                CHECK(a.P12.face(v) == b.P12.face(v));
            }
        }
    }
}

TEST_CASE("init_from_pointwise: ground-truth identity and feasibility") {
    TriangleMesh sphere = testing::icosphere(2);
    Eigen::MatrixXd X = padded_positions(sphere, 4);
    InitialState st = init_from_pointwise(identity_map(sphere), sphere, sphere, X, X);
    CHECK((st.X12 - X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.X21 - X).cwiseAbs().maxCoeff() == 0.0);
    CHECK(is_feasible(st.P21));

    // a collapsed input map is a valid, solvable state
    PreciseMap collapsed = make_precise_map(sphere.num_vertices(), sphere);
    for (int v = 0; v < sphere.num_vertices(); ++v) collapsed.set_row(v, vertex_point(sphere, 9));
    InitialState degenerate = init_from_pointwise(collapsed, sphere, sphere, X, X);
    CHECK(is_feasible(degenerate.P12));
    CHECK(is_feasible(degenerate.P21));
    CHECK(degenerate.X12.allFinite());

    PreciseMap infeasible = identity_map(sphere);
    infeasible.w(0, 0) = 2.0;
    CHECK_THROWS_AS(init_from_pointwise(infeasible, sphere, sphere, X, X), InputError);
}

TEST_CASE("lb_basis: constant mode, mass orthonormality, flat spectrum ordering") {
    TriangleMesh square = testing::grid_rectangle(20, 20);
    MeshOperators ops = compute_operators(square);
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd psi = lb_basis(square, ops, 8, 0, &eigenvalues);

    // first eigenfunction is constant with eigenvalue ~0
    CHECK(std::abs(eigenvalues(0)) <= 1e-8 * std::abs(eigenvalues(1)));
    double spread = (psi.col(0).array() - psi.col(0).mean()).abs().maxCoeff();
    CHECK(spread <= 1e-6 * std::abs(psi.col(0).mean()));

    // Psi^T A Psi = I
    Eigen::MatrixXd gram = psi.transpose() * ops.A.asDiagonal() * psi;
    CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);

    // free-boundary flat square spectrum: pi^2 (i^2 + j^2) ordering, so the
    // second and third eigenvalues coincide and the fourth doubles them
    CHECK(eigenvalues(1) == doctest::Approx(eigenvalues(2)).epsilon(0.05));
    CHECK(eigenvalues(3) == doctest::Approx(2.0 * eigenvalues(1)).epsilon(0.10));
    CHECK(eigenvalues(4) == doctest::Approx(4.0 * eigenvalues(1)).epsilon(0.15));
    for (int i = 0; i + 1 < 8; ++i) CHECK(eigenvalues(i) <= eigenvalues(i + 1) + 1e-12);
}

TEST_CASE("init_from_functional_map: identity recovery, constant basis, truncation") {
    TriangleMesh sphere = testing::icosphere(1); // 42 vertices
    MeshOperators ops = compute_operators(sphere);
    Eigen::MatrixXd X = padded_positions(sphere, 4);
    const int n = sphere.num_vertices();

    SUBCASE("full-basis identity functional map reproduces the embedding") {
        FunctionalMap fm;
        fm.C12 = Eigen::MatrixXd::Identity(n, n);
        fm.C21 = Eigen::MatrixXd::Identity(n, n);
        InitialState st = init_from_functional_map(fm, sphere, sphere, ops, ops, X, X);
        CHECK_FALSE(st.p_valid);
        CHECK((st.X12 - X).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((st.X21 - X).cwiseAbs().maxCoeff() <= 1e-6);
    }
    SUBCASE("constant-only basis collapses to the weighted mean") {
        FunctionalMap fm;
        fm.C12 = Eigen::MatrixXd::Identity(1, 1) * 2.5;
        fm.C21 = Eigen::MatrixXd::Identity(1, 1);
        InitialState st = init_from_functional_map(fm, sphere, sphere, ops, ops, X, X);
        // Psi1 C Psi2^T A2 X2 with constant psi = 1/sqrt(s): rows all equal
        // 2.5 * (A-weighted mean of X) in exact arithmetic
        Eigen::RowVectorXd expected = 2.5 * (ops.A.transpose() * X) / ops.s;
        for (int v = 0; v < n; ++v) CHECK((st.X12.row(v) - expected).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("reconstruction error decreases monotonically with basis size") {
        double prev = std::numeric_limits<double>::infinity();
        for (int k : {1, 5, 12, 30, 42}) {
            Eigen::MatrixXd psi = lb_basis(sphere, ops, k);
            Eigen::MatrixXd recon = psi * (psi.transpose() * (ops.A.asDiagonal() * X));
            double err = (recon - X).norm();
            CHECK(err <= prev + 1e-9);
            prev = err;
        }
    }
    SUBCASE("dimension mismatches are rejected") {
        FunctionalMap fm;
        fm.C12 = Eigen::MatrixXd::Identity(4, 5);
        fm.C21 = Eigen::MatrixXd::Identity(4, 5);
        CHECK_THROWS_AS(init_from_functional_map(fm, sphere, sphere, ops, ops, X, X), InputError);
    }
}

TEST_CASE("landmark and functional map files round-trip") {
    auto dir = std::filesystem::temp_directory_path();

    std::string lm_path = (dir / "landmarks.txt").string();
    {
        std::ofstream out(lm_path);
        out << "# pairs\n1 5\n10 3\n";
    }
    LandmarkSet lms = load_landmarks(lm_path, 20, 20);
    REQUIRE(lms.size() == 2);
    CHECK(lms[0] == std::make_pair(0, 4));
    CHECK(lms[1] == std::make_pair(9, 2));
    CHECK_THROWS_AS(load_landmarks(lm_path, 5, 20), InputError); // id out of range

    FunctionalMap fm;
    fm.C12 = Eigen::MatrixXd::Random(3, 4);
    fm.C21 = Eigen::MatrixXd::Random(4, 3);
    std::string fm_path = (dir / "fmap.txt").string();
    save_functional_map(fm, fm_path);
    FunctionalMap back = load_functional_map(fm_path);
    CHECK((back.C12 - fm.C12).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.C21 - fm.C21).cwiseAbs().maxCoeff() == 0.0);
}
