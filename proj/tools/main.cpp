// Command-line pipeline: map computation between two triangle meshes,
// map-quality evaluation, and texture / connectivity transfer.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include <CLI11.hpp>
#include <json.hpp>

#include "revmap/common.hpp"
#include "revmap/embedding.hpp"
#include "revmap/init.hpp"
#include "revmap/metrics.hpp"
#include "revmap/precise_map.hpp"
#include "revmap/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace revmap;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct MapArgs {
    std::string source, target, out_dir = ".";
    std::string landmarks, init_map, fmap, replay;
    double alpha = 5e-4;
    double beta_slope = 5e-3;
    int beta_cap_iter = 100;
    double gamma = 0.0;
    int iters = 200;
    double tol = 1e-9;
    bool rel_tol = false;
    int dim = 8;
    int basis_k = 60;
    unsigned long long seed = 0;
    int threads = 0;
    std::string trace_path;
    bool cache_embedding = false;
    bool no_geo_trace = false;
    bool clamp_weights = false;
};

MetricEmbedding embed_with_cache(const TriangleMesh& mesh, const std::string& mesh_path, const MapArgs& args) {
    EmbeddingOptions options;
    options.dim = args.dim;
    options.seed = args.seed;
    const std::uint64_t hash = mesh_content_hash(mesh);
    const std::string cache_path = mesh_path + ".m" + std::to_string(args.dim) + ".emb";
    if (args.cache_embedding) {
        if (auto cached = load_embedding_cache(cache_path, hash, args.dim)) {
            MetricEmbedding emb;
            emb.X = std::move(*cached);
            emb.dim = args.dim;
            return emb;
        }
    }
    MetricEmbedding emb = mds_embed(mesh, options);
    if (args.cache_embedding) save_embedding_cache(cache_path, hash, emb.X);
    return emb;
}

json config_json(const MapArgs& args) {
    return json{{"alpha", args.alpha},
                {"beta_slope", args.beta_slope},
                {"beta_cap_iter", args.beta_cap_iter},
                {"gamma", args.gamma},
                {"iters", args.iters},
                {"tol", args.tol},
                {"rel_tol", args.rel_tol},
                {"dim", args.dim},
                {"basis_k", args.basis_k},
                {"seed", args.seed},
                {"threads", args.threads},
                {"cache_embedding", args.cache_embedding},
                {"no_geo_trace", args.no_geo_trace},
                {"clamp_weights", args.clamp_weights}};
}

void args_from_manifest(const json& manifest, MapArgs& args) {
    const json& in = manifest.at("inputs");
    args.source = in.at("source").get<std::string>();
    args.target = in.at("target").get<std::string>();
    args.landmarks = in.value("landmarks", std::string());
    args.init_map = in.value("init_map", std::string());
    args.fmap = in.value("fmap", std::string());
    const json& cfg = manifest.at("config");
    args.alpha = cfg.at("alpha").get<double>();
    args.beta_slope = cfg.at("beta_slope").get<double>();
    args.beta_cap_iter = cfg.at("beta_cap_iter").get<int>();
    args.gamma = cfg.at("gamma").get<double>();
    args.iters = cfg.at("iters").get<int>();
    args.tol = cfg.at("tol").get<double>();
    args.rel_tol = cfg.at("rel_tol").get<bool>();
    args.dim = cfg.at("dim").get<int>();
    args.basis_k = cfg.at("basis_k").get<int>();
    args.seed = cfg.at("seed").get<unsigned long long>();
    args.threads = cfg.at("threads").get<int>();
    args.cache_embedding = cfg.at("cache_embedding").get<bool>();
    args.no_geo_trace = cfg.at("no_geo_trace").get<bool>();
    args.clamp_weights = cfg.at("clamp_weights").get<bool>();
    args.out_dir = manifest.at("outputs").at("dir").get<std::string>();
}

int run_map(MapArgs args) {
    if (!args.replay.empty()) {
        std::ifstream in(args.replay);
        if (!in) throw InputError("cannot open manifest '" + args.replay + "'");
        json manifest = json::parse(in);
        args_from_manifest(manifest, args);
    }
    const int init_kinds = (!args.landmarks.empty() && args.init_map.empty() && args.fmap.empty() ? 1 : 0) +
                           (!args.init_map.empty() ? 1 : 0) + (!args.fmap.empty() ? 1 : 0);
    if (init_kinds != 1)
        throw InputError("choose exactly one initialization: --landmarks, --init-map or --fmap");
    if (args.gamma > 0.0 && args.landmarks.empty())
        throw InputError("--gamma needs --landmarks for the weak constraint anchors");

    set_thread_count(args.threads);
    const auto t0 = std::chrono::steady_clock::now();

    TriangleMesh mesh1 = load_mesh(args.source);
    TriangleMesh mesh2 = load_mesh(args.target);
    MeshOperators ops1 = compute_operators(mesh1, args.clamp_weights);
    MeshOperators ops2 = compute_operators(mesh2, args.clamp_weights);

    const auto t_embed = std::chrono::steady_clock::now();
    MetricEmbedding emb1 = embed_with_cache(mesh1, args.source, args);
    MetricEmbedding emb2 = embed_with_cache(mesh2, args.target, args);
    const double embed_s = seconds_since(t_embed);

    LandmarkSet landmarks;
    if (!args.landmarks.empty())
        landmarks = load_landmarks(args.landmarks, mesh1.num_vertices(), mesh2.num_vertices());

    InitialState init;
    if (!args.init_map.empty()) {
        init = init_from_pointwise(load_map(args.init_map, mesh2), mesh1, mesh2, emb1.X, emb2.X);
    } else if (!args.fmap.empty()) {
        FunctionalMap fm = load_functional_map(args.fmap);
        init = init_from_functional_map(fm, mesh1, mesh2, ops1, ops2, emb1.X, emb2.X, args.seed);
    } else {
        init = init_from_landmarks(landmarks, mesh1, mesh2, emb1.X, emb2.X);
    }

    SolverConfig config;
    config.alpha = args.alpha;
    config.beta_slope = args.beta_slope;
    config.beta_cap_iter = args.beta_cap_iter;
    config.gamma = args.gamma;
    config.max_iterations = args.iters;
    config.tol = args.tol;
    config.relative_tol = args.rel_tol;
    config.trace_geodesic = !args.no_geo_trace;

    const auto t_solve = std::chrono::steady_clock::now();
    MapSolver solver(mesh1, mesh2, ops1, ops2, emb1.X, emb2.X, config, args.gamma > 0.0 ? landmarks : LandmarkSet{});
    SolveResult result = solver.run(init);
    const double solve_s = seconds_since(t_solve);

    fs::create_directories(args.out_dir);
    const std::string p12_path = (fs::path(args.out_dir) / "P12.map").string();
    const std::string p21_path = (fs::path(args.out_dir) / "P21.map").string();
    const std::string trace_path =
        args.trace_path.empty() ? (fs::path(args.out_dir) / "trace.csv").string() : args.trace_path;
    save_map(result.state.P12, p12_path);
    save_map(result.state.P21, p21_path);
    write_trace_csv(result.trace, trace_path);

    json manifest;
    manifest["command"] = "map";
    manifest["inputs"] = {{"source", args.source}, {"target", args.target}};
    if (!args.landmarks.empty()) manifest["inputs"]["landmarks"] = args.landmarks;
    if (!args.init_map.empty()) manifest["inputs"]["init_map"] = args.init_map;
    if (!args.fmap.empty()) manifest["inputs"]["fmap"] = args.fmap;
    manifest["config"] = config_json(args);
    manifest["outputs"] = {{"dir", args.out_dir}, {"p12", p12_path}, {"p21", p21_path}, {"trace", trace_path}};
    manifest["timings"] = {{"embedding_s", embed_s}, {"solve_s", solve_s}, {"total_s", seconds_since(t0)}};
    manifest["iterations"] = result.iterations;
    manifest["termination"] = result.termination;
    manifest["embedding_stress_median"] = {emb1.stress_median, emb2.stress_median};
    std::ofstream mout(fs::path(args.out_dir) / "manifest.json");
    mout << manifest.dump(2) << "\n";
    if (!mout) throw InputError("failed writing manifest");

    std::cout << "wrote " << p12_path << ", " << p21_path << " (" << result.termination << " after "
              << result.iterations << " iterations)\n";
    return 0;
}

struct EvalArgs {
    std::string map_path, source, target, out_dir = ".";
    std::string gt, sym1, sym2, seg1, seg2;
    bool area_weighted = false;
    int threads = 0;
};

int run_eval(const EvalArgs& args) {
    set_thread_count(args.threads);
    TriangleMesh mesh1 = load_mesh(args.source);
    TriangleMesh mesh2 = load_mesh(args.target);
    MeshOperators ops1 = compute_operators(mesh1);
    MeshOperators ops2 = compute_operators(mesh2);
    PreciseMap p12 = load_map(args.map_path, mesh2);
    if (p12.rows() != mesh1.num_vertices()) throw InputError("map rows do not match the source mesh");
    fs::create_directories(args.out_dir);

    ConformalResult conformal = conformal_distortion(p12, mesh1, mesh2, args.area_weighted);
    write_curve_csv(conformal.curve, (fs::path(args.out_dir) / "conformal.csv").string());
    std::cout << "conformal overflow fraction: " << conformal.curve.overflow << "\n";

    if (!args.gt.empty()) {
        GeodesicEvaluator eval2(mesh2);
        GroundTruthResult gt_result = [&]() {
            try {
                PreciseMap gt = load_map(args.gt, mesh2);
                return ground_truth_error(p12, gt, mesh1, mesh2, ops2, eval2);
            } catch (const InputError&) {
                // fall back to a plain vertex list (1-based ids, 0 = missing)
                std::ifstream in(args.gt);
                if (!in) throw InputError("cannot open ground truth file '" + args.gt + "'");
                std::vector<int> ids;
                int v = 0;
                while (in >> v) ids.push_back(v - 1);
                if (static_cast<int>(ids.size()) != mesh1.num_vertices())
                    throw InputError("ground truth must cover every source vertex");
                return ground_truth_error(p12, ids, mesh1, mesh2, ops2, eval2);
            }
        }();
        write_curve_csv(gt_result.curve, (fs::path(args.out_dir) / "ground_truth.csv").string());
        if (gt_result.missing > 0) std::cout << "ground truth: " << gt_result.missing << " entries missing\n";
    }
    if (!args.sym1.empty() || !args.sym2.empty()) {
        if (args.sym1.empty() || args.sym2.empty())
            throw InputError("--symmetry and --symmetry-target must be given together");
        GeodesicEvaluator eval2(mesh2);
        PreciseMap s1 = load_map(args.sym1, mesh1);
        PreciseMap s2 = load_map(args.sym2, mesh2);
        CumulativeCurve curve = symmetry_compatibility(p12, s1, s2, mesh1, mesh2, eval2);
        write_curve_csv(curve, (fs::path(args.out_dir) / "symmetry.csv").string());
    }
    if (!args.seg1.empty() || !args.seg2.empty()) {
        if (args.seg1.empty() || args.seg2.empty())
            throw InputError("--segmentation and --segmentation-target must be given together");
        std::vector<int> seg1 = load_labels(args.seg1, mesh1.num_vertices());
        // target labels may come per face or per vertex
        std::vector<int> seg2;
        try {
            seg2 = load_labels(args.seg2, mesh2.num_faces());
        } catch (const InputError&) {
            seg2 = face_labels_from_vertex_labels(mesh2, load_labels(args.seg2, mesh2.num_vertices()));
        }
        SegmentationResult seg = segmentation_compatibility(p12, seg1, seg2, mesh1, mesh2, ops1);
        std::ofstream out(fs::path(args.out_dir) / "segmentation.txt");
        out << seg.score << "\n";
        std::cout << "segmentation compatibility: " << seg.score << " (" << seg.unlabeled << " unlabeled)\n";
    }
    return 0;
}

struct TransferArgs {
    std::string map_path, source, target, out = "out.obj";
    bool texture = false;
    bool connectivity = false;
    int threads = 0;
};

int run_transfer(const TransferArgs& args) {
    if (args.texture == args.connectivity) throw InputError("choose exactly one of --texture or --connectivity");
    set_thread_count(args.threads);
    TriangleMesh mesh1 = load_mesh(args.source);
    TriangleMesh mesh2 = load_mesh(args.target);
    PreciseMap p12 = load_map(args.map_path, mesh2);
    if (p12.rows() != mesh1.num_vertices()) throw InputError("map rows do not match the source mesh");

    if (args.texture) {
        if (!mesh2.has_uv()) throw InputError("texture transfer needs texture coordinates on the target mesh");
        TriangleMesh out = mesh1;
        out.VT.resize(mesh1.num_vertices(), 2);
        for (int v = 0; v < mesh1.num_vertices(); ++v) {
            const int f = p12.face(v);
            Eigen::RowVector2d uv = Eigen::RowVector2d::Zero();
            for (int k = 0; k < 3; ++k) {
                const int t = mesh2.FT(f, k);
                if (t < 0) throw InputError("target face " + std::to_string(f + 1) + " lacks texture coordinates");
                uv += p12.w(v, k) * mesh2.VT.row(t);
            }
            out.VT.row(v) = uv;
        }
        out.FT = out.F; // one texture coordinate per vertex, same indexing as positions
        save_mesh(out, args.out);
        std::cout << "wrote " << args.out << "\n";
        return 0;
    }

    // connectivity transfer: remesh the target with the source connectivity
    MeshOperators ops2 = compute_operators(mesh2);
    Eigen::MatrixXd V = apply_map(p12, mesh2, mesh2.V);
    const double area_floor = 1e-12 * ops2.s;
    auto face_area = [&](int f) {
        Eigen::RowVector3d a = V.row(mesh1.F(f, 0));
        Eigen::RowVector3d b = V.row(mesh1.F(f, 1));
        Eigen::RowVector3d c = V.row(mesh1.F(f, 2));
        return 0.5 * (b - a).cross(c - a).norm();
    };
    // vertex neighborhoods of the source connectivity
    std::vector<std::vector<int>> ring(static_cast<size_t>(mesh1.num_vertices()));
    for (int e = 0; e < mesh1.num_edges(); ++e) {
        ring[static_cast<size_t>(mesh1.E(e, 0))].push_back(mesh1.E(e, 1));
        ring[static_cast<size_t>(mesh1.E(e, 1))].push_back(mesh1.E(e, 0));
    }
    int remaining = 0;
    for (int pass = 0; pass < 100; ++pass) {
        std::vector<int> bad_vertices;
        remaining = 0;
        for (int f = 0; f < mesh1.num_faces(); ++f) {
            if (face_area(f) < area_floor) {
                ++remaining;
                for (int k = 0; k < 3; ++k) bad_vertices.push_back(mesh1.F(f, k));
            }
        }
        if (remaining == 0) break;
        std::sort(bad_vertices.begin(), bad_vertices.end());
        bad_vertices.erase(std::unique(bad_vertices.begin(), bad_vertices.end()), bad_vertices.end());
        Eigen::MatrixXd V_new = V;
        for (int v : bad_vertices) {
            const auto& nb = ring[static_cast<size_t>(v)];
            if (nb.empty()) continue;
            Eigen::RowVector3d avg = Eigen::RowVector3d::Zero();
            for (int u : nb) avg += V.row(u);
            V_new.row(v) = avg / static_cast<double>(nb.size());
        }
        V = std::move(V_new);
    }
    if (remaining > 0)
        std::cerr << "warning: " << remaining << " degenerate faces remain after 100 repair passes\n";

    TriangleMesh out;
    out.V = V;
    out.F = mesh1.F;
    out.vertex_faces = mesh1.vertex_faces;
    out.E = mesh1.E;
    save_mesh(out, args.out);
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"smooth reversible surface-to-surface maps"};
    app.require_subcommand(1);

    MapArgs margs;
    CLI::App* cmd_map = app.add_subcommand("map", "compute a map pair between two meshes");
    cmd_map->add_option("source", margs.source, "source mesh (OBJ)");
    cmd_map->add_option("target", margs.target, "target mesh (OBJ)");
    cmd_map->add_option("--out-dir", margs.out_dir, "output directory");
    cmd_map->add_option("--landmarks", margs.landmarks, "landmark pair file");
    cmd_map->add_option("--init-map", margs.init_map, "initial precise map file");
    cmd_map->add_option("--fmap", margs.fmap, "functional map file");
    cmd_map->add_option("--replay", margs.replay, "re-run from a manifest");
    cmd_map->add_option("--alpha", margs.alpha, "smoothness/reversibility trade-off");
    cmd_map->add_option("--beta-slope", margs.beta_slope, "coupling weight growth per iteration");
    cmd_map->add_option("--beta-cap-iter", margs.beta_cap_iter, "iteration at which the coupling weight freezes");
    cmd_map->add_option("--gamma", margs.gamma, "weak landmark weight");
    cmd_map->add_option("--iters", margs.iters, "maximum iterations");
    cmd_map->add_option("--tol", margs.tol, "energy-change stopping threshold");
    cmd_map->add_flag("--rel-tol", margs.rel_tol, "interpret --tol as relative change");
    cmd_map->add_option("--dim", margs.dim, "embedding dimension");
    cmd_map->add_option("--basis-k", margs.basis_k, "basis size for functional map initialization");
    cmd_map->add_option("--seed", margs.seed, "random seed");
    cmd_map->add_option("--threads", margs.threads, "worker threads (0 = all cores)");
    cmd_map->add_option("--trace", margs.trace_path, "trace CSV path");
    cmd_map->add_flag("--cache-embedding", margs.cache_embedding, "reuse embedding sidecar caches");
    cmd_map->add_flag("--no-geo-trace", margs.no_geo_trace, "skip the geodesic energy trace column");
    cmd_map->add_flag("--clamp-weights", margs.clamp_weights, "clamp negative cotangent weights to zero");

    EvalArgs eargs;
    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate map quality");
    cmd_eval->add_option("map", eargs.map_path, "precise map file")->required();
    cmd_eval->add_option("source", eargs.source, "source mesh (OBJ)")->required();
    cmd_eval->add_option("target", eargs.target, "target mesh (OBJ)")->required();
    cmd_eval->add_option("--out-dir", eargs.out_dir, "output directory");
    cmd_eval->add_option("--gt", eargs.gt, "ground truth map or vertex list");
    cmd_eval->add_option("--symmetry", eargs.sym1, "source symmetry map");
    cmd_eval->add_option("--symmetry-target", eargs.sym2, "target symmetry map");
    cmd_eval->add_option("--segmentation", eargs.seg1, "source segment labels (per vertex)");
    cmd_eval->add_option("--segmentation-target", eargs.seg2, "target segment labels (per face or per vertex)");
    cmd_eval->add_flag("--area-weighted", eargs.area_weighted, "weight the conformal curve by face area");
    cmd_eval->add_option("--threads", eargs.threads, "worker threads (0 = all cores)");

    TransferArgs targs;
    CLI::App* cmd_transfer = app.add_subcommand("transfer", "apply a map to transfer data");
    cmd_transfer->add_option("map", targs.map_path, "precise map file")->required();
    cmd_transfer->add_option("source", targs.source, "source mesh (OBJ)")->required();
    cmd_transfer->add_option("target", targs.target, "target mesh (OBJ)")->required();
    cmd_transfer->add_option("--out", targs.out, "output OBJ path");
    cmd_transfer->add_flag("--texture", targs.texture, "pull target texture coordinates to the source");
    cmd_transfer->add_flag("--connectivity", targs.connectivity, "remesh the target with the source connectivity");
    cmd_transfer->add_option("--threads", targs.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
        if (cmd_map->parsed()) {
            if (margs.replay.empty() && (margs.source.empty() || margs.target.empty()))
                throw InputError("map needs source and target meshes (or --replay)");
            return run_map(margs);
        }
        if (cmd_eval->parsed()) return run_eval(eargs);
        if (cmd_transfer->parsed()) return run_transfer(targs);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
