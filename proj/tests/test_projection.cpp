#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "revmap/projection.hpp"

using namespace revmap;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    return M;
}

} // namespace

TEST_CASE("closest_point_on_triangle: vertex hit and centroid offset") {
    std::mt19937_64 rng(1);
    for (int dim : {3, 8}) {
        Eigen::VectorXd a = random_matrix(dim, 1, rng), b = random_matrix(dim, 1, rng), c = random_matrix(dim, 1, rng);
        Eigen::Vector3d w;
        double sq = closest_point_on_triangle(a.data(), a.data(), b.data(), c.data(), dim, w);
        CHECK(sq == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(w(0) == doctest::Approx(1.0));

        // orthogonal offset above the centroid leaves symmetric weights
        Eigen::VectorXd centroid = (a + b + c) / 3.0;
        Eigen::VectorXd e1 = b - a;
        Eigen::VectorXd e2 = c - a;
        Eigen::VectorXd n = random_matrix(dim, 1, rng);
        n -= e1 * (e1.dot(n) / e1.squaredNorm());
        e2 -= e1 * (e1.dot(e2) / e1.squaredNorm());
        n -= e2 * (e2.dot(n) / e2.squaredNorm());
        n.normalize();
        double offset = 0.37;
        Eigen::VectorXd p = centroid + offset * n;
        sq = closest_point_on_triangle(p.data(), a.data(), b.data(), c.data(), dim, w);
        CHECK(std::sqrt(sq) == doctest::Approx(offset).epsilon(1e-9));
        for (int k = 0; k < 3; ++k) CHECK(w(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
    }
}

TEST_CASE("closest_point_on_triangle matches the active-set oracle on 10^4 cases in R^8") {
    std::mt19937_64 rng(42);
    const int dim = 8;
    for (int t = 0; t < 10000; ++t) {
        Eigen::VectorXd a = random_matrix(dim, 1, rng), b = random_matrix(dim, 1, rng), c = random_matrix(dim, 1, rng);
        Eigen::VectorXd p = random_matrix(dim, 1, rng);
        Eigen::Vector3d w, w_oracle;
        double sq = closest_point_on_triangle(p.data(), a.data(), b.data(), c.data(), dim, w);
        double sq_oracle = testing::closest_point_oracle(p, a, b, c, w_oracle);
        CHECK(std::abs(std::sqrt(sq) - std::sqrt(sq_oracle)) <= 1e-9);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(w.minCoeff() >= -1e-12);
    }
}

TEST_CASE("closest_point_on_triangle: degenerate triangles fall back to edges") {
    std::mt19937_64 rng(5);
    const int dim = 4;
    Eigen::VectorXd a = random_matrix(dim, 1, rng);
    Eigen::VectorXd dir = random_matrix(dim, 1, rng);
    Eigen::VectorXd b = a + dir;
    Eigen::VectorXd c = a + 2.0 * dir; // collinear
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd p = random_matrix(dim, 1, rng);
        Eigen::Vector3d w, w_oracle;
        double sq = closest_point_on_triangle(p.data(), a.data(), b.data(), c.data(), dim, w);
        double sq_oracle = testing::closest_point_oracle(p, a, b, c, w_oracle);
        CHECK(std::abs(std::sqrt(sq) - std::sqrt(sq_oracle)) <= 1e-9);
    }
}

TEST_CASE("EmbeddedSurface: vertex queries hit the lowest incident face at distance zero") {
    TriangleMesh sphere = testing::icosphere(2);
    EmbeddedSurface surface(sphere.V, sphere.F);
    for (int v = 0; v < sphere.num_vertices(); v += 7) {
        Projection proj = surface.project(sphere.V.row(v).transpose());
        CHECK(proj.distance <= 1e-12);
        CHECK(proj.face == sphere.lowest_incident_face(v));
    }
}

TEST_CASE("EmbeddedSurface: accelerated and brute-force paths agree bitwise") {
    std::mt19937_64 rng(9);
    TriangleMesh sphere = testing::icosphere(3); // 1280 faces, above the BVH threshold
    // stretch into R^8 with zero padding plus noise columns to exercise high dim
    Eigen::MatrixXd X(sphere.num_vertices(), 8);
    X.leftCols(3) = sphere.V;
    X.rightCols(5) = 0.1 * random_matrix(sphere.num_vertices(), 5, rng);
    EmbeddedSurface surface(X, sphere.F);
    for (int t = 0; t < 500; ++t) {
        Eigen::VectorXd p = random_matrix(8, 1, rng);
        Projection a = surface.project(p);
        Projection b = surface.project_brute(p);
        CHECK(a.face == b.face);
        CHECK(a.distance == b.distance);
        CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("EmbeddedSurface: projection is idempotent and deterministic") {
    std::mt19937_64 rng(13);
    TriangleMesh sphere = testing::icosphere(2);
    EmbeddedSurface surface(sphere.V, sphere.F);
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd p = 2.0 * random_matrix(3, 1, rng);
        Projection proj = surface.project(p);
        Eigen::VectorXd on_surface = Eigen::VectorXd::Zero(3);
        for (int k = 0; k < 3; ++k) on_surface += proj.w(k) * surface.coords().row(surface.faces()(proj.face, k)).transpose();
        Projection again = surface.project(on_surface);
        CHECK(again.distance <= 1e-10);
    }
    Eigen::MatrixXd same_points(6, 3);
    Eigen::RowVector3d p = random_matrix(1, 3, rng);
    for (int i = 0; i < 6; ++i) same_points.row(i) = p;
    auto rows = surface.project_points(same_points);
    for (const auto& r : rows) {
        CHECK(r.face == rows[0].face);
        CHECK((r.w - rows[0].w).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("PointIndex: nearest neighbor with lowest-index ties matches the scan") {
    std::mt19937_64 rng(17);
    Eigen::MatrixXd pts = random_matrix(400, 3, rng);
    // inject exact duplicates to force ties
    for (int i = 0; i < 50; ++i) pts.row(350 + i) = pts.row(i);
    PointIndex index(pts);
    for (int t = 0; t < 300; ++t) {
        Eigen::VectorXd q = random_matrix(3, 1, rng);
        CHECK(index.nearest(q) == index.nearest_brute(q));
    }
    for (int i = 0; i < 50; ++i) {
        // querying a duplicated location must return the first copy
        CHECK(index.nearest(pts.row(i).transpose()) == i);
    }
}
