#pragma once

// Multiple-target localization on a grid of cells from RSS fingerprints.
//
// Training places a target in each cell in turn and records the RSS at every
// sensor, giving an m x n dictionary. Occupied cells are then recovered as a
// binary sparse signal after row whitening of the dictionary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fvsr/baselines.hpp"
#include "fvsr/csv_io.hpp"
#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"
#include "fvsr/rng.hpp"
#include "fvsr/solver.hpp"

namespace fvsr::loc {

using Point = std::array<double, 2>;

struct Grid {
    double side = 20.0;
    int cells_per_side = 10;

    double cell_size() const { return side / cells_per_side; }
    int size() const { return cells_per_side * cells_per_side; }

    // Cell index r * cells_per_side + c has center ((r + 1/2) s, (c + 1/2) s).
    Point center(int cell) const {
        if (cell < 0 || cell >= size()) throw InvalidArgument("cell index out of range");
        const int r = cell / cells_per_side, c = cell % cells_per_side;
        return {(r + 0.5) * cell_size(), (c + 0.5) * cell_size()};
    }
};

struct SensorLayout {
    std::vector<Point> sensors;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(sensors.size()); }
};

// Uniform positions on [0, side]^2.
inline SensorLayout random_layout(const Grid& grid, int m, rng::Stream& stream, std::uint64_t seed = 0) {
    if (m < 1) throw InvalidArgument("need at least one sensor");
    SensorLayout layout;
    layout.seed = seed;
    for (int i = 0; i < m; ++i) {
        const double a = stream.uniform(0, grid.side);
        const double b = stream.uniform(0, grid.side);
        layout.sensors.push_back({a, b});
    }
    return layout;
}

/// Two-slope path loss: PL = near_const + near_slope log10(dist) up to the
/// breakpoint, far_const + far_slope log10(dist / breakpoint) beyond it.
struct RssParams {
    double tx_power_dbm = 0.0;
    double near_const = 40.2;
    double near_slope = 20.0;
    double far_const = 58.5;
    double far_slope = 33.0;
    double breakpoint_m = 8.0;
    double min_distance_m = 0.1;
};

inline double path_loss(double distance_m, const RssParams& p = {}) {
    if (std::isnan(distance_m)) throw InvalidArgument("distance is NaN");
    const double dist = std::max(distance_m, p.min_distance_m);
    if (!(dist > 0)) throw InvalidArgument("distance floor must be positive");
    return dist <= p.breakpoint_m ? p.near_const + p.near_slope * std::log10(dist)
                                  : p.far_const + p.far_slope * std::log10(dist / p.breakpoint_m);
}

// Received power in dBm.
inline double rss_model(double distance_m, const RssParams& p = {}) { return p.tx_power_dbm - path_loss(distance_m, p); }

inline double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

inline Matrix clean_dictionary(const Grid& grid, const SensorLayout& layout, const RssParams& params = {}) {
    Matrix A(layout.size(), grid.size());
    for (int s = 0; s < layout.size(); ++s)
        for (int c = 0; c < grid.size(); ++c) A(s, c) = rss_model(distance(layout.sensors[s], grid.center(c)), params);
    return A;
}

/// Clean dictionary plus training noise at train_snr_db over all entries.
inline Matrix build_dictionary(const Grid& grid, const SensorLayout& layout, const RssParams& params,
                               double train_snr_db, rng::Stream& stream) {
    const Matrix clean = clean_dictionary(grid, layout, params);
    const Eigen::Map<const Vector> flat(clean.data(), clean.size());
    const auto noisy = add_measurement_noise(flat, train_snr_db, stream);
    return Eigen::Map<const Matrix>(noisy.y.data(), clean.rows(), clean.cols());
}

struct Whitened {
    Matrix A;
    Vector y;
    Matrix M;
};

/// A' = M A, y' = M y with M = (A A^T)^{-1/2}.
inline Whitened orthogonalize(const Matrix& A, const Vector& y) {
    if (y.size() != A.rows()) throw InvalidArgument("orthogonalize: y length does not match rows");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A * A.transpose());
    const Vector& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 1.0)))
        throw InvalidProblem("orthogonalize: A A^T is rank deficient");
    const Matrix& V = eig.eigenvectors();
    const Matrix M = V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    return {M * A, M * y, M};
}

/// Indices of the k largest |x_i|, ties to the lower index.
inline std::vector<int> top_k(const Vector& x, int k) {
    if (k < 1 || k > x.size()) throw InvalidArgument("top_k: k must lie in [1, n]");
    std::vector<int> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(x[a]) > std::abs(x[b]); });
    idx.resize(k);
    return idx;
}

enum class LocSolver { madmm, lasso };

struct LocConfig {
    double lambda = 1e-3;
    double alpha = 1.0;
    double iterate_tol = 1e-8;
    std::int64_t max_iters = 20000;
};

struct LocResult {
    std::vector<int> cells;
    std::vector<Point> positions;
    Vector estimate;
    std::int64_t iterations = 0;
    bool converged = false;
};

/// Binary recovery with d = 1 (ternary MADMM machinery or Lasso), then the
/// k largest magnitudes.
inline LocResult localize_targets(const Grid& grid, const Matrix& A, const Vector& y, int k, LocSolver solver,
                                  const LocConfig& config = {}) {
    const Problem problem(A, y);
    const Alphabet alphabet = Alphabet::ternary(1.0);
    RecoveryResult r;
    if (solver == LocSolver::madmm) {
        SolverConfig sc;
        sc.lambda = config.lambda;
        sc.alpha = config.alpha;
        sc.iterate_tol = config.iterate_tol;
        sc.max_iters = config.max_iters;
        r = solve_madmm(problem, alphabet, sc);
    } else {
        BaselineConfig bc;
        bc.lambda = config.lambda;
        bc.alpha = config.alpha;
        bc.iterate_tol = config.iterate_tol;
        bc.max_iters = config.max_iters;
        bc.quantize_output = false;
        r = solve_lasso_admm(problem, alphabet, bc);
    }
    LocResult out;
    out.estimate = r.raw;
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.cells = top_k(r.raw, k);
    for (int c : out.cells) out.positions.push_back(grid.center(c));
    return out;
}

/// min over bijections of the mean Euclidean distance between the lists.
inline double localization_error(const std::vector<Point>& truth, const std::vector<Point>& estimate) {
    if (truth.size() != estimate.size()) throw InvalidArgument("localization_error: position counts differ");
    if (truth.empty()) return 0.0;
    if (truth.size() > 10) throw InvalidArgument("localization_error: more than 10 targets");
    std::vector<int> perm(truth.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += distance(truth[i], estimate[perm[i]]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(truth.size());
}

struct LocExperiment {
    Grid grid;
    RssParams rss;
    std::vector<int> m_values{20, 30, 40, 50};
    int k = 4;
    int trials = 100;
    std::uint64_t seed = 1;
    double train_snr_db = 25.0;
    double meas_noise_std = 0.0;  // additive N(0, eta^2) on y, in dB units
    LocConfig config;
    std::vector<LocSolver> solvers{LocSolver::madmm, LocSolver::lasso};
};

struct LocRecord {
    int m = 0;
    std::uint64_t seed = 0;
    int trial = 0;
    std::string solver;
    double loc_error_m = 0;
    std::int64_t iterations = 0;
};

inline std::string loc_solver_name(LocSolver s) { return s == LocSolver::madmm ? "madmm" : "lasso"; }

inline LocSolver parse_loc_solver(const std::string& s) {
    if (s == "madmm") return LocSolver::madmm;
    if (s == "lasso") return LocSolver::lasso;
    throw InvalidArgument("unknown localization solver '" + s + "' (expected madmm or lasso)");
}

/// Distinct target cells, uniform without replacement.
inline std::vector<int> random_targets(const Grid& grid, int k, rng::Stream& stream) {
    if (k < 1 || k > grid.size()) throw InvalidArgument("target count out of range");
    std::vector<int> idx(grid.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) std::swap(idx[i], idx[i + stream.below(grid.size() - i)]);
    idx.resize(k);
    return idx;
}

/// One trial: layout, trained dictionary, targets, y = A x (+ eta),
/// whitening, then each solver.
inline std::vector<LocRecord> run_loc_trial(const LocExperiment& ex, int m, int trial) {
    const std::uint64_t key = rng::derive_key(ex.seed, {static_cast<std::uint64_t>(m)});
    auto s_layout = rng::Stream::for_trial(key, trial, rng::Substream::sensors);
    auto s_dict = rng::Stream::for_trial(key, trial, rng::Substream::dictionary_noise);
    auto s_targets = rng::Stream::for_trial(key, trial, rng::Substream::targets);
    auto s_noise = rng::Stream::for_trial(key, trial, rng::Substream::measurement_noise);

    const SensorLayout layout = random_layout(ex.grid, m, s_layout, ex.seed);
    const Matrix A = build_dictionary(ex.grid, layout, ex.rss, ex.train_snr_db, s_dict);
    const std::vector<int> targets = random_targets(ex.grid, ex.k, s_targets);
    Vector x = Vector::Zero(ex.grid.size());
    for (int c : targets) x[c] = 1.0;
    Vector y = A * x;
    if (ex.meas_noise_std > 0)
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += ex.meas_noise_std * s_noise.gaussian();
    const Whitened w = orthogonalize(A, y);

    std::vector<Point> truth;
    for (int c : targets) truth.push_back(ex.grid.center(c));
    std::vector<LocRecord> out;
    for (LocSolver s : ex.solvers) {
        const auto r = localize_targets(ex.grid, w.A, w.y, ex.k, s, ex.config);
        out.push_back({m, ex.seed, trial, loc_solver_name(s), localization_error(truth, r.positions), r.iterations});
    }
    return out;
}

inline std::vector<LocRecord> run_localization(const LocExperiment& ex) {
    if (ex.trials < 1) throw ConfigError("trials must be >= 1");
    std::vector<LocRecord> out;
    for (int m : ex.m_values)
        for (int t = 0; t < ex.trials; ++t)
            for (auto& r : run_loc_trial(ex, m, t)) out.push_back(std::move(r));
    return out;
}

inline void write_loc_records(std::ostream& out, const std::vector<LocRecord>& records) {
    out << "m,seed,solver,loc_error_m,iterations\n";
    for (const auto& r : records)
        out << r.m << ',' << r.seed << ',' << r.solver << ',' << csv::format_double(r.loc_error_m) << ','
            << r.iterations << '\n';
}

inline void write_layout(std::ostream& out, const SensorLayout& layout) {
    out << "x_m,y_m\n";
    for (const auto& p : layout.sensors) out << csv::format_double(p[0]) << ',' << csv::format_double(p[1]) << '\n';
}

}  // namespace fvsr::loc
