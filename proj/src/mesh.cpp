#include "revmap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Geometry>

namespace revmap {

namespace {

struct Corner {
    int v = 0;
    int vt = -1;
    int vn = -1;
};

// Parses one face corner token: "i", "i/t", "i/t/n" or "i//n" (1-based).
Corner parse_corner(const std::string& token, const std::string& path, int line_no) {
    Corner c;
    int fields[3] = {0, -1, -1};
    size_t start = 0;
    for (int k = 0; k < 3; ++k) {
        size_t slash = token.find('/', start);
        std::string part = token.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        if (!part.empty()) {
            try {
                fields[k] = std::stoi(part);
            } catch (const std::exception&) {
                throw InputError(path + ":" + std::to_string(line_no) + ": bad face corner '" + token + "'");
            }
        } else if (k == 0) {
            throw InputError(path + ":" + std::to_string(line_no) + ": bad face corner '" + token + "'");
        }
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    if (fields[0] <= 0)
        throw InputError(path + ":" + std::to_string(line_no) + ": face indices must be positive, got '" + token + "'");
    c.v = fields[0] - 1;
    c.vt = fields[1] > 0 ? fields[1] - 1 : -1;
    c.vn = fields[2] > 0 ? fields[2] - 1 : -1;
    return c;
}

void build_connectivity(TriangleMesh& mesh) {
    const int n = mesh.num_vertices();
    const int nf = mesh.num_faces();

    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) {
            int v = mesh.F(f, k);
            if (v < 0 || v >= n)
                throw InputError("face " + std::to_string(f + 1) + " references vertex " +
                                 std::to_string(v + 1) + " out of range [1, " + std::to_string(n) + "]");
        }
        if (mesh.F(f, 0) == mesh.F(f, 1) || mesh.F(f, 1) == mesh.F(f, 2) || mesh.F(f, 0) == mesh.F(f, 2))
            throw InputError("face " + std::to_string(f + 1) + " is degenerate (repeated vertex index)");
    }

    mesh.vertex_faces.assign(static_cast<size_t>(n), {});
    for (int f = 0; f < nf; ++f)
        for (int k = 0; k < 3; ++k) mesh.vertex_faces[static_cast<size_t>(mesh.F(f, k))].push_back(f);
    // face loop order already yields ascending ids per vertex

    std::map<std::pair<int, int>, int> edge_count;
    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) {
            int a = mesh.F(f, k), b = mesh.F(f, (k + 1) % 3);
            auto key = std::minmax(a, b);
            if (++edge_count[key] > 2)
                throw InputError("edge (" + std::to_string(key.first + 1) + ", " + std::to_string(key.second + 1) +
                                 ") borders more than two faces (face " + std::to_string(f + 1) + ")");
        }
    }
    mesh.E.resize(static_cast<Eigen::Index>(edge_count.size()), 2);
    int e = 0;
    for (const auto& [key, count] : edge_count) {
        mesh.E(e, 0) = key.first;
        mesh.E(e, 1) = key.second;
        ++e;
    }
}

} // namespace

TriangleMesh make_mesh(Eigen::MatrixXd V, Eigen::MatrixXi F) {
    if (V.cols() != 3) throw InputError("vertex array must be n x 3");
    if (F.size() > 0 && F.cols() != 3) throw InputError("face array must be f x 3");
    TriangleMesh mesh;
    mesh.V = std::move(V);
    mesh.F = std::move(F);
    build_connectivity(mesh);
    return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mesh file '" + path + "'");

    std::vector<Eigen::RowVector3d> verts;
    std::vector<Eigen::RowVector2d> texcoords;
    std::vector<Eigen::RowVector3d> normals;
    std::vector<std::array<Corner, 3>> faces;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Eigen::RowVector3d p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw InputError(path + ":" + std::to_string(line_no) + ": vertex needs 3 coordinates");
            verts.push_back(p);
        } else if (tag == "vt") {
            Eigen::RowVector2d t;
            if (!(ss >> t.x() >> t.y()))
                throw InputError(path + ":" + std::to_string(line_no) + ": texture coordinate needs 2 values");
            texcoords.push_back(t);
        } else if (tag == "vn") {
            Eigen::RowVector3d nrm;
            if (!(ss >> nrm.x() >> nrm.y() >> nrm.z()))
                throw InputError(path + ":" + std::to_string(line_no) + ": normal needs 3 coordinates");
            normals.push_back(nrm);
        } else if (tag == "f") {
            std::vector<std::string> tokens;
            std::string t;
            while (ss >> t) tokens.push_back(t);
            if (tokens.size() != 3)
                throw InputError(path + ":" + std::to_string(line_no) + ": face " + std::to_string(faces.size() + 1) +
                                 " has " + std::to_string(tokens.size()) + " corners, only triangles are supported");
            std::array<Corner, 3> fc;
            for (int k = 0; k < 3; ++k) fc[static_cast<size_t>(k)] = parse_corner(tokens[static_cast<size_t>(k)], path, line_no);
            faces.push_back(fc);
        }
        // other records (s, o, g, usemtl, ...) are ignored
    }

    TriangleMesh mesh;
    mesh.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.V.row(static_cast<Eigen::Index>(i)) = verts[i];
    mesh.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
    bool any_vt = false, any_vn = false;
    for (const auto& fc : faces) {
        for (const auto& c : fc) {
            any_vt |= c.vt >= 0;
            any_vn |= c.vn >= 0;
        }
    }
    if (any_vt) mesh.FT = Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(faces.size()), 3, -1);
    if (any_vn) mesh.FN = Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(faces.size()), 3, -1);
    for (size_t f = 0; f < faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const Corner& c = faces[f][static_cast<size_t>(k)];
            mesh.F(static_cast<Eigen::Index>(f), k) = c.v;
            if (c.vt >= 0) {
                if (c.vt >= static_cast<int>(texcoords.size()))
                    throw InputError(path + ": face " + std::to_string(f + 1) + " texture index out of range");
                mesh.FT(static_cast<Eigen::Index>(f), k) = c.vt;
            }
            if (c.vn >= 0) {
                if (c.vn >= static_cast<int>(normals.size()))
                    throw InputError(path + ": face " + std::to_string(f + 1) + " normal index out of range");
                mesh.FN(static_cast<Eigen::Index>(f), k) = c.vn;
            }
        }
    }
    mesh.VT.resize(static_cast<Eigen::Index>(texcoords.size()), 2);
    for (size_t i = 0; i < texcoords.size(); ++i) mesh.VT.row(static_cast<Eigen::Index>(i)) = texcoords[i];
    mesh.VN.resize(static_cast<Eigen::Index>(normals.size()), 3);
    for (size_t i = 0; i < normals.size(); ++i) mesh.VN.row(static_cast<Eigen::Index>(i)) = normals[i];

    build_connectivity(mesh);
    return mesh;
}

void save_mesh(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write mesh file '" + path + "'");
    out.precision(17);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << "v " << mesh.V(v, 0) << " " << mesh.V(v, 1) << " " << mesh.V(v, 2) << "\n";
    for (int t = 0; t < mesh.VT.rows(); ++t) out << "vt " << mesh.VT(t, 0) << " " << mesh.VT(t, 1) << "\n";
    for (int i = 0; i < mesh.VN.rows(); ++i)
        out << "vn " << mesh.VN(i, 0) << " " << mesh.VN(i, 1) << " " << mesh.VN(i, 2) << "\n";
    const bool has_ft = mesh.FT.rows() == mesh.F.rows();
    const bool has_fn = mesh.FN.rows() == mesh.F.rows();
    for (int f = 0; f < mesh.num_faces(); ++f) {
        out << "f";
        for (int k = 0; k < 3; ++k) {
            out << " " << mesh.F(f, k) + 1;
            int vt = has_ft ? mesh.FT(f, k) : -1;
            int vn = has_fn ? mesh.FN(f, k) : -1;
            if (vt >= 0 && vn >= 0)
                out << "/" << vt + 1 << "/" << vn + 1;
            else if (vt >= 0)
                out << "/" << vt + 1;
            else if (vn >= 0)
                out << "//" << vn + 1;
        }
        out << "\n";
    }
    if (!out) throw InputError("failed while writing '" + path + "'");
}

MeshOperators compute_operators(const TriangleMesh& mesh, bool clamp_negative) {
    const int n = mesh.num_vertices();
    const int nf = mesh.num_faces();
    if (!mesh.V.allFinite()) throw NumericalError("mesh has non-finite vertex coordinates");

    MeshOperators ops;
    ops.face_areas.resize(nf);
    ops.A = Eigen::VectorXd::Zero(n);

    // per-edge accumulated half-cotangents, keyed like mesh.E
    std::map<std::pair<int, int>, double> w;
    std::vector<int> zero_area_faces;

    for (int f = 0; f < nf; ++f) {
        Eigen::RowVector3d p0 = mesh.V.row(mesh.F(f, 0));
        Eigen::RowVector3d p1 = mesh.V.row(mesh.F(f, 1));
        Eigen::RowVector3d p2 = mesh.V.row(mesh.F(f, 2));
        double l0 = (p2 - p1).squaredNorm(); // edge opposite corner 0
        double l1 = (p0 - p2).squaredNorm();
        double l2 = (p1 - p0).squaredNorm();
        double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        ops.face_areas(f) = area;
        double scale = std::max({l0, l1, l2});
        if (!(area > 1e-14 * scale) || scale == 0.0) {
            zero_area_faces.push_back(f);
            continue;
        }
        // cot(angle at corner k) = (sum of adjacent squared lengths - opposite) / (4 area)
        double cot0 = (l1 + l2 - l0) / (4.0 * area);
        double cot1 = (l2 + l0 - l1) / (4.0 * area);
        double cot2 = (l0 + l1 - l2) / (4.0 * area);
        auto add = [&](int a, int b, double half_cot) { w[std::minmax(a, b)] += 0.5 * half_cot; };
        add(mesh.F(f, 1), mesh.F(f, 2), cot0);
        add(mesh.F(f, 2), mesh.F(f, 0), cot1);
        add(mesh.F(f, 0), mesh.F(f, 1), cot2);
        for (int k = 0; k < 3; ++k) ops.A(mesh.F(f, k)) += area / 3.0;
    }
    if (!zero_area_faces.empty()) {
        std::string ids;
        for (size_t i = 0; i < zero_area_faces.size() && i < 16; ++i)
            ids += (i ? ", " : "") + std::to_string(zero_area_faces[i] + 1);
        if (zero_area_faces.size() > 16) ids += ", ...";
        throw NumericalError("zero-area faces: " + ids);
    }

    ops.s = ops.face_areas.sum();
    ops.edge_weights.resize(mesh.num_edges());
    for (int e = 0; e < mesh.num_edges(); ++e) {
        auto it = w.find({mesh.E(e, 0), mesh.E(e, 1)});
        double we = it == w.end() ? 0.0 : it->second;
        if (clamp_negative && we < 0.0) we = 0.0;
        ops.edge_weights(e) = we;
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.num_edges()) * 4);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        int a = mesh.E(e, 0), b = mesh.E(e, 1);
        double we = ops.edge_weights(e);
        trip.emplace_back(a, b, -we);
        trip.emplace_back(b, a, -we);
        trip.emplace_back(a, a, we);
        trip.emplace_back(b, b, we);
    }
    ops.W.resize(n, n);
    ops.W.setFromTriplets(trip.begin(), trip.end());
    return ops;
}

SingularPair triangle_map_singular_values(const Eigen::Matrix3d& src, const Eigen::MatrixXd& img) {
    if (img.rows() != 3) throw InputError("image triangle must have 3 rows");
    Eigen::RowVector3d e1 = src.row(1) - src.row(0);
    Eigen::RowVector3d e2 = src.row(2) - src.row(0);
    double a = e1.norm();
    if (a == 0.0) throw NumericalError("degenerate source triangle");
    double bx = e1.dot(e2) / a;
    double by2 = e2.squaredNorm() - bx * bx;
    if (!(by2 > 0.0)) throw NumericalError("degenerate source triangle");
    double by = std::sqrt(by2);
    // source edges in a local orthonormal frame: S = [[a, bx], [0, by]]
    // image edges need no frame: G = S^-T (T^T T) S^-1 has the squared
    // singular values of the map as eigenvalues.
    Eigen::MatrixXd t1 = img.row(1) - img.row(0);
    Eigen::MatrixXd t2 = img.row(2) - img.row(0);
    double t11 = t1.squaredNorm();
    double t12 = (t1.array() * t2.array()).sum();
    double t22 = t2.squaredNorm();
    // columns of M = T S^-1: m1 = t1 / a, m2 = (t2 - bx/a t1) / by
    double g11 = t11 / (a * a);
    double g12 = (t12 - bx / a * t11) / (a * by);
    double g22 = (t22 - 2.0 * bx / a * t12 + (bx * bx) / (a * a) * t11) / (by * by);
    double tr = g11 + g22;
    double det = g11 * g22 - g12 * g12;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double lam1 = std::max(0.0, tr / 2.0 + disc);
    double lam2 = std::max(0.0, tr / 2.0 - disc);
    return {std::sqrt(lam1), std::sqrt(lam2)};
}

SingularPair face_differential(const TriangleMesh& mesh, int f, const Eigen::MatrixXd& image_pts) {
    if (f < 0 || f >= mesh.num_faces()) throw InputError("face id out of range");
    Eigen::Matrix3d src;
    for (int k = 0; k < 3; ++k) src.row(k) = mesh.V.row(mesh.F(f, k));
    return triangle_map_singular_values(src, image_pts);
}

std::uint64_t mesh_content_hash(const TriangleMesh& mesh) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const char* data, size_t len) {
        for (size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ull;
        }
    };
    mix(reinterpret_cast<const char*>(mesh.V.data()), sizeof(double) * static_cast<size_t>(mesh.V.size()));
    mix(reinterpret_cast<const char*>(mesh.F.data()), sizeof(int) * static_cast<size_t>(mesh.F.size()));
    return h;
}

} // namespace revmap
