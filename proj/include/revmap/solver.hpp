#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "revmap/geodesics.hpp"
#include "revmap/init.hpp"
#include "revmap/mesh.hpp"
#include "revmap/precise_map.hpp"

namespace revmap {

struct SolverConfig {
    double alpha = 5e-4;     // smoothness vs reversibility trade-off, in [0, 1]
    double beta_slope = 5e-3; // coupling weight grows linearly per iteration
    int beta_cap_iter = 100;  // then stays constant until convergence
    double gamma = 0.0;       // weak landmark weight
    int max_iterations = 200;
    double tol = 1e-9;         // energy-change stopping threshold
    bool relative_tol = false; // absolute change by default; see run()
    bool trace_geodesic = true;
    int geodesic_cache_cap = 20000; // vertex count above which the trace column is skipped
};

// Split energy pieces, before the alpha/beta weighting.
struct EnergyBreakdown {
    double D12 = 0, D21 = 0; // smoothness of the auxiliaries
    double R12 = 0, R21 = 0; // round-trip residuals
    double Q12 = 0, Q21 = 0; // auxiliary coupling
    double L = 0;            // weak landmark term, gamma included
};

double total_energy(const EnergyBreakdown& e, double alpha, double beta);

struct TraceRow {
    int iteration = 0;
    double e_total = 0;
    double e_d12 = 0, e_d21 = 0, e_r12 = 0, e_r21 = 0, e_q12 = 0, e_q21 = 0;
    double e_geodesic = 0; // bidirectional edge-based geodesic energy, normalized to its first value
    double image_area12 = 0, image_area21 = 0;
    double beta = 0;
};

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

struct SolveResult {
    InitialState state;
    std::vector<TraceRow> trace;
    int iterations = 0;
    std::string termination; // "converged" or "max_iterations"
};

struct SubStepEvent {
    int iteration = 0;
    int index = 0; // -1 iteration start, then 0..3 for P12, X12, P21, X21
    const char* name = "";
    double beta = 0;
    EnergyBreakdown energy;
};

// Edge-based geodesic smoothness of one map direction: cotangent edge weights
// of the source against squared geodesic distances between image points on
// the target. The evaluator must have its all-pairs table built.
double geodesic_dirichlet_energy(const PreciseMap& map, const TriangleMesh& source, const MeshOperators& source_ops,
                                 const GeodesicEvaluator& target_eval);

// Block coordinate descent on the split energy over (P12, X12, P21, X21).
// Every sub-problem is solved globally: projections are row-wise optimal and
// the quadratic steps are solved by sparse Cholesky, so the energy cannot
// increase at fixed beta. Referenced inputs must outlive the solver.
class MapSolver {
  public:
    MapSolver(const TriangleMesh& mesh1, const TriangleMesh& mesh2, const MeshOperators& ops1,
              const MeshOperators& ops2, const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
              SolverConfig config = {}, LandmarkSet weak_landmarks = {});

    const SolverConfig& config() const { return config_; }
    double beta_at(int iteration) const;

    EnergyBreakdown energy_terms(const InitialState& state) const;

    // direction is 1 for the forward blocks (P12 / X12), 2 for the backward.
    void p_step(int direction, double beta, InitialState& state) const;
    void x_step(int direction, double beta, InitialState& state) const;

    // Area of the mapped source triangles, measured in R^3 on the target.
    double image_area(int direction, const InitialState& state) const;

    using Observer = std::function<void(const SubStepEvent&)>;
    SolveResult run(const InitialState& init, const Observer& observer = {});

  private:
    Eigen::MatrixXd stacked_surface(int direction, double beta, const InitialState& state) const;
    Eigen::MatrixXd stacked_targets(int direction, double beta, const InitialState& state) const;
    double geodesic_trace_value(const InitialState& state) const;

    const TriangleMesh& mesh1_;
    const TriangleMesh& mesh2_;
    const MeshOperators& ops1_;
    const MeshOperators& ops2_;
    const Eigen::MatrixXd& X1_;
    const Eigen::MatrixXd& X2_;
    SolverConfig config_;
    LandmarkSet weak_landmarks_;
    std::unique_ptr<GeodesicEvaluator> eval1_, eval2_; // built lazily for the trace
};

} // namespace revmap
