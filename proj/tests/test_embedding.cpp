#include <doctest.h>

#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "revmap/embedding.hpp"

using namespace revmap;

TEST_CASE("mds_embed: flat square in the plane reproduces geodesics") {
    TriangleMesh square = testing::grid_rectangle(24, 24);
    EmbeddingOptions options;
    options.dim = 2;
    MetricEmbedding emb = mds_embed(square, options);
    CHECK(emb.stress_median < 0.01);
    CHECK(emb.X.colwise().mean().cwiseAbs().maxCoeff() <= 1e-9);

    // pairwise distances in the embedding match the plane
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, square.num_vertices() - 1);
    for (int t = 0; t < 200; ++t) {
        int u = pick(rng), v = pick(rng);
        double exact = (square.V.row(u) - square.V.row(v)).norm();
        if (exact < 0.2) continue;
        double de = (emb.X.row(u) - emb.X.row(v)).norm();
        CHECK(std::abs(de - exact) <= 0.02 * exact);
    }
}

TEST_CASE("mds_embed: icosphere at the default dimension") {
    EmbeddingOptions options;
    CHECK(options.dim == 8); // default dimension
    TriangleMesh sphere = testing::icosphere(3);
    MetricEmbedding emb = mds_embed(sphere, options);
    CHECK(emb.dim == 8);
    CHECK(emb.stress_median < 0.09);

    EmbeddingOptions low = options;
    low.dim = 2;
    MetricEmbedding emb2 = mds_embed(sphere, low);
    CHECK(emb.stress_median <= emb2.stress_median); // more dimensions cannot hurt
}

TEST_CASE("mds_embed: landmark path approximates the full solve") {
    TriangleMesh sphere = testing::icosphere(3); // 642 vertices
    EmbeddingOptions options;
    options.full_mds_threshold = 100; // force the landmark path
    options.landmark_count = 120;
    MetricEmbedding emb = mds_embed(sphere, options);
    CHECK(static_cast<int>(emb.landmarks.size()) == 120);
    CHECK(emb.stress_median < 0.09);
    CHECK(emb.X.rows() == sphere.num_vertices());
    CHECK(emb.X.allFinite());
}

TEST_CASE("mds_embed: determinism and error cases") {
    TriangleMesh sphere = testing::icosphere(2);
    EmbeddingOptions options;
    MetricEmbedding a = mds_embed(sphere, options);
    MetricEmbedding b = mds_embed(sphere, options);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);

    options.dim = sphere.num_vertices() + 1;
    CHECK_THROWS_AS(mds_embed(sphere, options), InputError);
    options.dim = 1;
    CHECK_THROWS_AS(mds_embed(sphere, options), InputError);

    // disconnected mesh
    Eigen::MatrixXd V(6, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0, 5, 5, 0, 6, 5, 0, 5, 6, 0;
    Eigen::MatrixXi F(2, 3);
    F << 0, 1, 2, 3, 4, 5;
    TriangleMesh split = make_mesh(V, F);
    EmbeddingOptions opt2;
    opt2.dim = 2;
    CHECK_THROWS_AS(mds_embed(split, opt2), InputError);
}

TEST_CASE("embedding_weights_check: flat embeddings keep edge lengths") {
    TriangleMesh square = testing::grid_rectangle(12, 12);

    SUBCASE("positions padded with zero columns are exact") {
        Eigen::MatrixXd X(square.num_vertices(), 5);
        X.setZero();
        X.leftCols(3) = square.V;
        EdgeLengthReport report = embedding_weights_check(square, X);
        CHECK(report.max_rel <= 1e-12);
        CHECK(report.flagged.empty());
    }
    SUBCASE("computed m=2 embedding stays within tolerance") {
        EmbeddingOptions options;
        options.dim = 2;
        MetricEmbedding emb = mds_embed(square, options);
        EdgeLengthReport report = embedding_weights_check(square, emb.X, 0.05);
        CHECK(report.median_rel < 0.02);
    }
    SUBCASE("a stretched embedding gets flagged") {
        Eigen::MatrixXd X(square.num_vertices(), 3);
        X = 2.0 * square.V;
        EdgeLengthReport report = embedding_weights_check(square, X, 0.5);
        CHECK(report.flagged.size() == static_cast<size_t>(square.num_edges()));
    }
}

TEST_CASE("embedding cache round-trips and validates its key") {
    TriangleMesh sphere = testing::icosphere(1);
    EmbeddingOptions options;
    options.dim = 4;
    MetricEmbedding emb = mds_embed(sphere, options);
    auto path = (std::filesystem::temp_directory_path() / "emb.bin").string();
    const std::uint64_t hash = mesh_content_hash(sphere);
    save_embedding_cache(path, hash, emb.X);

    auto loaded = load_embedding_cache(path, hash, 4);
    REQUIRE(loaded.has_value());
    CHECK((*loaded - emb.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(load_embedding_cache(path, hash + 1, 4).has_value());
    CHECK_FALSE(load_embedding_cache(path, hash, 8).has_value());
    CHECK_FALSE(load_embedding_cache(path + ".nope", hash, 4).has_value());
}

TEST_CASE("largest_eigenpairs matches a dense eigensolver") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss;
    const int n = 60;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
    Eigen::MatrixXd B = M + M.transpose();
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    largest_eigenpairs(B, 5, 0, values, vectors);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(B);
    for (int k = 0; k < 5; ++k) {
        CHECK(values(k) == doctest::Approx(dense.eigenvalues()(n - 1 - k)).epsilon(1e-9));
        double align = std::abs(vectors.col(k).dot(dense.eigenvectors().col(n - 1 - k)));
        CHECK(align == doctest::Approx(1.0).epsilon(1e-7));
    }
}
