#include "revmap/solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/SparseCholesky>

#include <Eigen/Geometry>

#include "revmap/common.hpp"

namespace revmap {

namespace {

double mass_weighted_sq(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mass) {
    return (rows.array().square().rowwise().sum() * mass.array()).sum();
}

double triangle_area(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b, const Eigen::RowVector3d& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

} // namespace

double total_energy(const EnergyBreakdown& e, double alpha, double beta) {
    return alpha * (e.D12 + e.D21) + (1.0 - alpha) * (e.R12 + e.R21) + beta * (e.Q12 + e.Q21) + e.L;
}

double geodesic_dirichlet_energy(const PreciseMap& map, const TriangleMesh& source, const MeshOperators& source_ops,
                                 const GeodesicEvaluator& target_eval) {
    double energy = 0.0;
    std::vector<double> partial(static_cast<size_t>(source.num_edges()), 0.0);
    parallel_for(0, source.num_edges(), [&](int e) {
        const double w = source_ops.edge_weights(e);
        if (w == 0.0) return;
        const double d = target_eval.distance(map.row(source.E(e, 0)), map.row(source.E(e, 1)));
        partial[static_cast<size_t>(e)] = w * d * d;
    });
    for (double p : partial) energy += p;
    return energy;
}

MapSolver::MapSolver(const TriangleMesh& mesh1, const TriangleMesh& mesh2, const MeshOperators& ops1,
                     const MeshOperators& ops2, const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                     SolverConfig config, LandmarkSet weak_landmarks)
    : mesh1_(mesh1), mesh2_(mesh2), ops1_(ops1), ops2_(ops2), X1_(X1), X2_(X2), config_(config),
      weak_landmarks_(std::move(weak_landmarks)) {
    if (config_.alpha < 0.0 || config_.alpha > 1.0) throw InputError("alpha must be in [0, 1]");
    if (config_.gamma < 0.0) throw InputError("gamma must be nonnegative");
    if (X1_.cols() != X2_.cols()) throw InputError("embeddings must share one dimension");
    if (X1_.rows() != mesh1_.num_vertices() || X2_.rows() != mesh2_.num_vertices())
        throw InputError("embedding rows must match mesh vertices");
    for (const auto& [p, q] : weak_landmarks_)
        if (p < 0 || p >= mesh1_.num_vertices() || q < 0 || q >= mesh2_.num_vertices())
            throw InputError("weak landmark vertex id out of range");
}

double MapSolver::beta_at(int iteration) const {
    return config_.beta_slope * std::min(iteration, config_.beta_cap_iter);
}

EnergyBreakdown MapSolver::energy_terms(const InitialState& state) const {
    EnergyBreakdown e;
    const double s1 = ops1_.s, s2 = ops2_.s;
    e.D12 = (state.X12.transpose() * (ops1_.W * state.X12)).trace() / s1;
    e.D21 = (state.X21.transpose() * (ops2_.W * state.X21)).trace() / s2;
    if (state.p_valid) {
        e.R12 = mass_weighted_sq(apply_map(state.P12, mesh2_, state.X21) - X1_, ops1_.A) / (s1 * s1);
        e.R21 = mass_weighted_sq(apply_map(state.P21, mesh1_, state.X12) - X2_, ops2_.A) / (s2 * s2);
        e.Q12 = mass_weighted_sq(state.X12 - apply_map(state.P12, mesh2_, X2_), ops1_.A) / (s1 * s2);
        e.Q21 = mass_weighted_sq(state.X21 - apply_map(state.P21, mesh1_, X1_), ops2_.A) / (s1 * s2);
    }
    if (config_.gamma > 0.0) {
        for (const auto& [p, q] : weak_landmarks_) {
            e.L += config_.gamma * ops1_.A(p) * (state.X12.row(p) - X2_.row(q)).squaredNorm();
            e.L += config_.gamma * ops2_.A(q) * (state.X21.row(q) - X1_.row(p)).squaredNorm();
        }
    }
    return e;
}

Eigen::MatrixXd MapSolver::stacked_surface(int direction, double beta, const InitialState& state) const {
    const double s1 = ops1_.s, s2 = ops2_.s;
    const double si = direction == 1 ? s1 : s2;
    const double c_r = std::sqrt(1.0 - config_.alpha) / si;
    const double c_q = std::sqrt(beta / (s1 * s2));
    const Eigen::MatrixXd& aux = direction == 1 ? state.X21 : state.X12; // images on the target, source side
    const Eigen::MatrixXd& emb = direction == 1 ? X2_ : X1_;
    Eigen::MatrixXd Y(emb.rows(), aux.cols() + emb.cols());
    Y << c_r * aux, c_q * emb;
    return Y;
}

Eigen::MatrixXd MapSolver::stacked_targets(int direction, double beta, const InitialState& state) const {
    const double s1 = ops1_.s, s2 = ops2_.s;
    const double si = direction == 1 ? s1 : s2;
    const double c_r = std::sqrt(1.0 - config_.alpha) / si;
    const double c_q = std::sqrt(beta / (s1 * s2));
    const Eigen::MatrixXd& own = direction == 1 ? X1_ : X2_;
    const Eigen::MatrixXd& aux = direction == 1 ? state.X12 : state.X21;
    Eigen::MatrixXd T(own.rows(), own.cols() + aux.cols());
    T << c_r * own, c_q * aux;
    return T;
}

void MapSolver::p_step(int direction, double beta, InitialState& state) const {
    if (1.0 - config_.alpha <= 0.0 && beta <= 0.0)
        throw NumericalError("projection step is undefined with alpha = 1 and beta = 0");
    const TriangleMesh& target = direction == 1 ? mesh2_ : mesh1_;
    Eigen::MatrixXd Y = stacked_surface(direction, beta, state);
    Eigen::MatrixXd T = stacked_targets(direction, beta, state);
    EmbeddedSurface surface(std::move(Y), target.F);
    std::vector<Projection> rows = surface.project_points(T);
    PreciseMap& P = direction == 1 ? state.P12 : state.P21;
    for (int i = 0; i < static_cast<int>(rows.size()); ++i)
        P.set_row(i, make_barycentric(rows[static_cast<size_t>(i)].face, rows[static_cast<size_t>(i)].w,
                                      target.num_faces()));
    state.p_valid = true;
}

void MapSolver::x_step(int direction, double beta, InitialState& state) const {
    const double s1 = ops1_.s, s2 = ops2_.s;
    const TriangleMesh& source = direction == 1 ? mesh1_ : mesh2_;   // mesh the auxiliary lives on
    const TriangleMesh& other = direction == 1 ? mesh2_ : mesh1_;
    const MeshOperators& ops_i = direction == 1 ? ops1_ : ops2_;
    const MeshOperators& ops_j = direction == 1 ? ops2_ : ops1_;
    const double si = direction == 1 ? s1 : s2;
    const double sj = direction == 1 ? s2 : s1;
    const PreciseMap& P_ij = direction == 1 ? state.P12 : state.P21;
    const PreciseMap& P_ji = direction == 1 ? state.P21 : state.P12;
    const Eigen::MatrixXd& X_j = direction == 1 ? X2_ : X1_;

    const double c_d = config_.alpha / si;
    const double c_r = (1.0 - config_.alpha) / (sj * sj);
    const double c_q = beta / (si * sj);

    Eigen::SparseMatrix<double> Pji = map_matrix(P_ji, source); // n_j x n_i
    Eigen::SparseMatrix<double> H = c_d * ops_i.W;
    H += c_r * (Pji.transpose() * ops_j.A.asDiagonal() * Pji).eval();
    Eigen::SparseMatrix<double> diag(source.num_vertices(), source.num_vertices());
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int v = 0; v < source.num_vertices(); ++v) trip.emplace_back(v, v, c_q * ops_i.A(v));
        if (config_.gamma > 0.0) {
            for (const auto& [p, q] : weak_landmarks_) {
                int v = direction == 1 ? p : q;
                trip.emplace_back(v, v, config_.gamma * ops_i.A(v));
            }
        }
        diag.setFromTriplets(trip.begin(), trip.end());
    }
    H += diag;

    Eigen::MatrixXd rhs = c_r * (Pji.transpose() * (ops_j.A.asDiagonal() * X_j)) +
                          c_q * (ops_i.A.asDiagonal() * apply_map(P_ij, other, X_j));
    if (config_.gamma > 0.0) {
        for (const auto& [p, q] : weak_landmarks_) {
            int v = direction == 1 ? p : q;
            const Eigen::MatrixXd& X_other = direction == 1 ? X2_ : X1_;
            int anchor = direction == 1 ? q : p;
            rhs.row(v) += config_.gamma * ops_i.A(v) * X_other.row(anchor);
        }
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(H);
    if (chol.info() != Eigen::Success) throw NumericalError("auxiliary solve factorization failed");
    Eigen::MatrixXd X = chol.solve(rhs);
    if (chol.info() != Eigen::Success) throw NumericalError("auxiliary solve failed");
    const double residual = (H * X - rhs).norm();
    if (residual > 1e-8 * std::max(1.0, rhs.norm()))
        throw NumericalError("auxiliary solve residual too large: " + std::to_string(residual));
    if (direction == 1)
        state.X12 = std::move(X);
    else
        state.X21 = std::move(X);
}

double MapSolver::image_area(int direction, const InitialState& state) const {
    const TriangleMesh& source = direction == 1 ? mesh1_ : mesh2_;
    const TriangleMesh& target = direction == 1 ? mesh2_ : mesh1_;
    const PreciseMap& P = direction == 1 ? state.P12 : state.P21;
    Eigen::MatrixXd img = apply_map(P, target, target.V);
    double area = 0.0;
    for (int f = 0; f < source.num_faces(); ++f)
        area += triangle_area(img.row(source.F(f, 0)), img.row(source.F(f, 1)), img.row(source.F(f, 2)));
    return area;
}

double MapSolver::geodesic_trace_value(const InitialState& state) const {
    if (!eval1_ || !eval2_) return std::numeric_limits<double>::quiet_NaN();
    double e12 = geodesic_dirichlet_energy(state.P12, mesh1_, ops1_, *eval2_);
    double e21 = geodesic_dirichlet_energy(state.P21, mesh2_, ops2_, *eval1_);
    return e12 / ops1_.s + e21 / ops2_.s;
}

SolveResult MapSolver::run(const InitialState& init, const Observer& observer) {
    if (config_.trace_geodesic && std::max(mesh1_.num_vertices(), mesh2_.num_vertices()) <= config_.geodesic_cache_cap) {
        if (!eval1_) {
            eval1_ = std::make_unique<GeodesicEvaluator>(mesh1_);
            eval1_->build_all_pairs();
        }
        if (!eval2_) {
            eval2_ = std::make_unique<GeodesicEvaluator>(mesh2_);
            eval2_->build_all_pairs();
        }
    }

    SolveResult result;
    result.state = init;
    InitialState& state = result.state;
    double geo_scale = std::numeric_limits<double>::quiet_NaN();

    auto record = [&](int iteration, double beta) {
        EnergyBreakdown e = energy_terms(state);
        TraceRow row;
        row.iteration = iteration;
        row.e_total = total_energy(e, config_.alpha, beta);
        row.e_d12 = e.D12;
        row.e_d21 = e.D21;
        row.e_r12 = e.R12;
        row.e_r21 = e.R21;
        row.e_q12 = e.Q12;
        row.e_q21 = e.Q21;
        double geo = state.p_valid ? geodesic_trace_value(state) : std::numeric_limits<double>::quiet_NaN();
        if (std::isnan(geo_scale) && std::isfinite(geo) && geo > 0.0) geo_scale = geo;
        row.e_geodesic = std::isnan(geo_scale) ? geo : geo / geo_scale;
        row.image_area12 = state.p_valid ? image_area(1, state) : 0.0;
        row.image_area21 = state.p_valid ? image_area(2, state) : 0.0;
        row.beta = beta;
        result.trace.push_back(row);
    };

    if (state.p_valid) record(0, beta_at(1));

    InitialState previous = state;
    bool have_previous = state.p_valid;
    result.termination = "max_iterations";

    for (int k = 1; k <= config_.max_iterations; ++k) {
        const double beta = beta_at(k);
        auto notify = [&](int index, const char* name) {
            if (observer) observer({k, index, name, beta, energy_terms(state)});
        };
        notify(-1, "start");
        p_step(1, beta, state);
        notify(0, "P12");
        x_step(1, beta, state);
        notify(1, "X12");
        p_step(2, beta, state);
        notify(2, "P21");
        x_step(2, beta, state);
        notify(3, "X21");

        record(k, beta);
        result.iterations = k;

        if (have_previous) {
            const double e_prev = total_energy(energy_terms(previous), config_.alpha, beta);
            const double e_cur = total_energy(energy_terms(state), config_.alpha, beta);
            double change = std::abs(e_prev - e_cur);
            if (config_.relative_tol) change /= std::max(std::abs(e_prev), 1e-300);
            if (change < config_.tol) {
                result.termination = "converged";
                break;
            }
        }
        previous = state;
        have_previous = true;
    }
    return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write trace file '" + path + "'");
    out.precision(17);
    out << "iteration,E_total,E_D12,E_D21,E_R12,E_R21,E_Q12,E_Q21,E_geodesic,imageArea12,imageArea21,beta\n";
    for (const TraceRow& r : trace) {
        out << r.iteration << "," << r.e_total << "," << r.e_d12 << "," << r.e_d21 << "," << r.e_r12 << ","
            << r.e_r21 << "," << r.e_q12 << "," << r.e_q21 << "," << r.e_geodesic << "," << r.image_area12 << ","
            << r.image_area21 << "," << r.beta << "\n";
    }
    if (!out) throw InputError("failed while writing '" + path + "'");
}

} // namespace revmap
