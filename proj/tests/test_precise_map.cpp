#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "revmap/precise_map.hpp"

using namespace revmap;

TEST_CASE("apply_map: identity, vertex hits, constants, linearity") {
    TriangleMesh sphere = testing::icosphere(2);
    PreciseMap id = identity_map(sphere);
    CHECK(is_feasible(id));
    Eigen::MatrixXd out = apply_map(id, sphere, sphere.V);
    CHECK((out - sphere.V).cwiseAbs().maxCoeff() <= 1e-15);

    PreciseMap single = make_precise_map(1, sphere);
    single.set_row(0, vertex_point(sphere, 7));
    Eigen::MatrixXd row = apply_map(single, sphere, sphere.V);
    CHECK((row.row(0) - sphere.V.row(7)).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(3);
    PreciseMap random = testing::random_feasible_map(40, sphere, rng);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(sphere.num_vertices(), 1);
    CHECK((apply_map(random, sphere, ones).array() - 1.0).abs().maxCoeff() <= 1e-12);

    // linear in the column argument
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(sphere.num_vertices(), 2);
    Eigen::MatrixXd B = Eigen::MatrixXd::Random(sphere.num_vertices(), 2);
    Eigen::MatrixXd lhs = apply_map(random, sphere, (2.0 * A + 3.0 * B).eval());
    Eigen::MatrixXd rhs = 2.0 * apply_map(random, sphere, A) + 3.0 * apply_map(random, sphere, B);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

    // the sparse view agrees with the row-wise application
    Eigen::MatrixXd via_matrix = map_matrix(random, sphere) * sphere.V;
    CHECK((via_matrix - apply_map(random, sphere, sphere.V)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("eval_map_at_point: vertices, identity, midpoint interpolation") {
    TriangleMesh sphere = testing::icosphere(2);
    PreciseMap id = identity_map(sphere);
    EmbeddedSurface surface(sphere.V, sphere.F);

    SUBCASE("vertex points return that vertex's image row") {
        BarycentricPoint p = vertex_point(sphere, 11);
        BarycentricPoint img = eval_map_at_point(id, sphere, sphere, surface, p);
        CHECK(hit_vertex(sphere, img) == 11);
    }
    SUBCASE("identity map fixes interior points up to projection tolerance") {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> face(0, sphere.num_faces() - 1);
        for (int t = 0; t < 25; ++t) {
            BarycentricPoint p = make_barycentric(face(rng), testing::random_simplex_weights(rng), sphere.num_faces());
            BarycentricPoint img = eval_map_at_point(id, sphere, sphere, surface, p);
            Eigen::RowVectorXd a = barycentric_position(sphere.V, sphere, p);
            Eigen::RowVectorXd b = barycentric_position(sphere.V, sphere, img);
            CHECK((a - b).norm() <= 1e-10);
        }
    }
    SUBCASE("edge midpoint with both endpoint images inside one face") {
        // map two adjacent vertices into face 0 and check direct interpolation
        TriangleMesh square = testing::grid_rectangle(4, 4);
        PreciseMap map = identity_map(square);
        int u = square.E(0, 0), v = square.E(0, 1);
        BarycentricPoint iu = make_barycentric(0, Eigen::Vector3d(0.6, 0.2, 0.2), square.num_faces());
        BarycentricPoint iv = make_barycentric(0, Eigen::Vector3d(0.2, 0.6, 0.2), square.num_faces());
        map.set_row(u, iu);
        map.set_row(v, iv);
        // a point midway along the edge (u, v)
        int shared_face = -1;
        for (int f : square.vertex_faces[static_cast<size_t>(u)])
            for (int k = 0; k < 3; ++k)
                if (square.F(f, k) == v && shared_face < 0) shared_face = f;
        REQUIRE(shared_face >= 0);
        Eigen::Vector3d w = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k)
            if (square.F(shared_face, k) == u || square.F(shared_face, k) == v) w(k) = 0.5;
        BarycentricPoint mid = make_barycentric(shared_face, w, square.num_faces());
        EmbeddedSurface sq_surface(square.V, square.F);
        BarycentricPoint img = eval_map_at_point(map, square, square, sq_surface, mid);
        CHECK(img.face == 0);
        CHECK((img.w - Eigen::Vector3d(0.4, 0.4, 0.2)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("invert_pointwise: identity, collapse, oracle agreement") {
    TriangleMesh sphere = testing::icosphere(2);

    SUBCASE("identity inverts to identity") {
        PreciseMap id = identity_map(sphere);
        PreciseMap inv = invert_pointwise(id, sphere, sphere);
        for (int v = 0; v < sphere.num_vertices(); ++v) {
            CHECK(inv.face(v) == id.face(v));
            CHECK((inv.w.row(v) - id.w.row(v)).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("collapsed map inverts to the lowest source index") {
        PreciseMap collapsed = make_precise_map(sphere.num_vertices(), sphere);
        for (int v = 0; v < sphere.num_vertices(); ++v) collapsed.set_row(v, vertex_point(sphere, 42));
        PreciseMap inv = invert_pointwise(collapsed, sphere, sphere);
        BarycentricPoint expected = vertex_point(sphere, 0);
        for (int v = 0; v < sphere.num_vertices(); ++v) {
            CHECK(inv.face(v) == expected.face);
            CHECK(hit_vertex(sphere, inv.row(v)) == 0);
        }
    }
    SUBCASE("accelerated search agrees with the O(n^2) scan on 200 random maps") {
        TriangleMesh small = testing::icosphere(1);
        std::mt19937_64 rng(7);
        for (int t = 0; t < 200; ++t) {
            PreciseMap p12 = testing::random_feasible_map(small.num_vertices(), small, rng);
            PreciseMap fast = invert_pointwise(p12, small, small, false);
            PreciseMap brute = invert_pointwise(p12, small, small, true);
            CHECK((fast.face - brute.face).cwiseAbs().maxCoeff() == 0);
            CHECK((fast.w - brute.w).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("save_map / load_map: round-trip and validation") {
    TriangleMesh sphere = testing::icosphere(1);
    auto dir = std::filesystem::temp_directory_path();

    SUBCASE("identity round-trips bitwise") {
        PreciseMap id = identity_map(sphere);
        std::string path = (dir / "id.map").string();
        save_map(id, path);
        PreciseMap back = load_map(path, sphere);
        CHECK((back.face - id.face).cwiseAbs().maxCoeff() == 0);
        CHECK((back.w - id.w).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("random map round-trips bitwise after one normalization") {
        std::mt19937_64 rng(11);
        PreciseMap map = testing::random_feasible_map(50, sphere, rng);
        std::string path = (dir / "rand.map").string();
        save_map(map, path);
        PreciseMap once = load_map(path, sphere); // loader normalizes rows
        std::string path2 = (dir / "rand2.map").string();
        save_map(once, path2);
        PreciseMap twice = load_map(path2, sphere);
        CHECK((twice.face - once.face).cwiseAbs().maxCoeff() == 0);
        CHECK((twice.w - once.w).cwiseAbs().maxCoeff() == 0.0);
        CHECK((once.w - map.w).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("specific row is reproduced exactly") {
        std::string path = (dir / "row.map").string();
        std::ofstream out(path);
        out << "1 " << sphere.num_faces() << "\n7 0.2 0.3 0.5\n";
        out.close();
        PreciseMap map = load_map(path, sphere);
        CHECK(map.face(0) == 6);
        CHECK(map.w(0, 0) == 0.2);
        CHECK(map.w(0, 1) == 0.3);
        CHECK(map.w(0, 2) == 0.5);
    }
    SUBCASE("negative weights and bad face ids are rejected") {
        std::string neg = (dir / "neg.map").string();
        {
            std::ofstream out(neg);
            out << "1 " << sphere.num_faces() << "\n3 -0.5 0.75 0.75\n";
        }
        CHECK_THROWS_AS(load_map(neg, sphere), InputError);
        std::string oob = (dir / "oob.map").string();
        {
            std::ofstream out(oob);
            out << "1 " << sphere.num_faces() << "\n" << sphere.num_faces() + 1 << " 0.5 0.25 0.25\n";
        }
        CHECK_THROWS_AS(load_map(oob, sphere), InputError);
        std::string mismatch = (dir / "mismatch.map").string();
        {
            std::ofstream out(mismatch);
            out << "1 999\n1 1 0 0\n";
        }
        CHECK_THROWS_AS(load_map(mismatch, sphere), InputError);
    }
}

TEST_CASE("barycentric normalization and feasibility checks") {
    TriangleMesh sphere = testing::icosphere(1);
    BarycentricPoint p = make_barycentric(4, Eigen::Vector3d(0.5, 0.25, 0.25 + 5e-10), sphere.num_faces());
    CHECK(p.w.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_barycentric(4, Eigen::Vector3d(-0.1, 0.6, 0.5), sphere.num_faces()), InputError);
    CHECK_THROWS_AS(make_barycentric(sphere.num_faces(), Eigen::Vector3d(1, 0, 0), sphere.num_faces()), InputError);

    PreciseMap map = identity_map(sphere);
    map.w(3, 0) = 2.0; // break a row
    CHECK_FALSE(is_feasible(map));
}
