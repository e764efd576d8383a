#pragma once

// MADMM: ADMM on the split problem
//
//   min_{x,z} 1/2 ||y - A x||^2 - lambda/2 ||x||^2 + lambda sum_i w_i |z_i|
//   s.t. z = x, x in [-w, w]
//
// with augmented Lagrangian
//
//   L(x, z, mu) = 1/2 ||y - A x||^2 - lambda/2 ||x||^2 + lambda sum_i w_i |z_i|
//                 + mu^T (x - z) + alpha/2 ||x - z||^2.
//
// For the ternary alphabet the weights are fixed at w = d. For a generic
// alphabet the weights start at q d and are re-quantized from z, which
// shrinks the feasible box monotonically. Re-quantizing after every z-step
// freezes the box around the first, heavily shrunk iterates, so by default
// the weights are refreshed only once the successive-iterate step drops
// below beta_refresh_tol; an infinite value refreshes every step.
//
// Two x-steps are available. XStep::projected clamps the unconstrained
// minimizer of L(., z) onto the box; this equals the box-constrained argmin
// only when A^T A is diagonal, and its fixed points can violate the KKT
// conditions of the objective once a box constraint is active.
// XStep::exact (the default) leaves x unconstrained and enforces the box in
// the z-step, where the problem is separable and clamping is exact; since
// z = x at convergence, both place the estimate in the box.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"
#include "fvsr/penalty.hpp"
#include "fvsr/rng.hpp"

namespace fvsr {

enum class XStep {
    exact,      // unconstrained x-minimizer; box enforced by the z-step
    projected,  // clamp the unconstrained minimizer onto the box
};

struct SolverConfig {
    double lambda = 1e-2;
    double alpha = 1.0;
    std::int64_t max_iters = 20000;
    double iterate_tol = 1e-12;
    double exact_tol = 1e-4;
    int max_reshuffles = 50;
    std::uint64_t seed = 0;
    XStep x_step = XStep::exact;
    double beta_refresh_tol = 1e-6;

    // alpha > lambda keeps the x-subproblem strongly convex.
    void validate() const {
        if (!(lambda > 0)) throw ConfigError("lambda must be positive");
        if (!(alpha > 0)) throw ConfigError("alpha must be positive");
        if (!(alpha > lambda)) throw ConfigError("alpha must exceed lambda for the x-update to be well posed");
        if (max_iters < 1) throw ConfigError("max_iters must be positive");
        if (!(iterate_tol > 0)) throw ConfigError("iterate_tol must be positive");
        if (!(exact_tol > 0)) throw ConfigError("exact_tol must be positive");
        if (max_reshuffles < 0) throw ConfigError("max_reshuffles must be nonnegative");
        if (!(beta_refresh_tol > 0)) throw ConfigError("beta_refresh_tol must be positive");
    }
};

struct SolverState {
    Vector x;
    Vector z;
    Vector mu;
    Vector beta;  // per-component weight and box half-width
    std::int64_t t = 0;

    // z0 = mu0 = 0, beta0 = q d. x0 is set to z0 so the first step's
    // successive difference is measured from the starting point.
    static SolverState initial(Eigen::Index n, const Alphabet& alphabet) {
        return from_z(Vector::Zero(n), alphabet);
    }

    static SolverState from_z(Vector z0, const Alphabet& alphabet) {
        SolverState s;
        const auto n = z0.size();
        s.x = z0;
        s.z = std::move(z0);
        s.mu = Vector::Zero(n);
        s.beta = Vector::Constant(n, alphabet.bound());
        return s;
    }
};

struct RecoveryResult {
    Vector estimate;
    Vector raw;  // before any output quantization (equals estimate for MADMM)
    std::int64_t iterations = 0;
    int reshuffles = 0;
    bool converged = false;
    bool exact = false;
    double stationarity_residual = 0;
    double objective = 0;
    double exactness_distance = 0;
    double last_step = 0;  // successive-iterate distance at termination
};

/// Cholesky factor of A^T A + shift I, computed once per solve.
class FactorCache {
public:
    FactorCache(const Matrix& A, const Vector& y, double shift) : Aty_(A.transpose() * y) {
        Matrix K = A.transpose() * A;
        K.diagonal().array() += shift;
        llt_.compute(K);
        if (llt_.info() != Eigen::Success) throw ConfigError("x-update system is not positive definite");
    }

    Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
    const Vector& Aty() const noexcept { return Aty_; }

private:
    Eigen::LLT<Matrix> llt_;
    Vector Aty_;
};

// ---------------------------------------------------------------------------
// Primitives

inline double soft_threshold(double v, double a) {
    if (a < 0) throw InvalidArgument("soft_threshold: negative threshold");
    if (std::abs(v) <= a) return 0.0;
    return v > 0 ? v - a : v + a;
}

inline Vector soft_threshold(const Vector& v, const Vector& thresholds) {
    if (v.size() != thresholds.size()) throw InvalidArgument("soft_threshold: length mismatch");
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (thresholds[i] < 0) throw InvalidArgument("soft_threshold: negative threshold");
        out[i] = soft_threshold(v[i], thresholds[i]);
    }
    return out;
}

inline Vector project_box(const Vector& v, const Vector& lower, const Vector& upper) {
    if (v.size() != lower.size() || v.size() != upper.size()) throw InvalidArgument("project_box: length mismatch");
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (lower[i] > upper[i]) throw InvalidArgument("project_box: lower bound exceeds upper bound");
        out[i] = std::clamp(v[i], lower[i], upper[i]);
    }
    return out;
}

// Projection onto the symmetric box [-half_width, half_width].
inline Vector project_box(const Vector& v, const Vector& half_width) { return project_box(v, -half_width, half_width); }

/// u = [A^T A + (alpha - lambda) I]^{-1} (A^T y + alpha z_{t-1} - mu_{t-1});
/// returns u for XStep::exact and P_box(u), box = [-beta_{t-1}, beta_{t-1}],
/// for XStep::projected.
inline Vector x_update(const SolverState& state, const FactorCache& cache, const SolverConfig& config) {
    Vector u = cache.solve(cache.Aty() + config.alpha * state.z - state.mu);
    if (config.x_step == XStep::projected) return project_box(u, state.beta);
    return u;
}

/// z_t = P_box(S_{lambda beta_{t-1} / alpha}(x_t + mu_{t-1} / alpha)).
inline Vector z_update(const SolverState& state, const Vector& x_t, const SolverConfig& config) {
    const Vector v = x_t + state.mu / config.alpha;
    Vector z(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double b = state.beta[i];
        z[i] = std::clamp(soft_threshold(v[i], config.lambda * b / config.alpha), -b, b);
    }
    return z;
}

/// beta_{t,i} = d j for |z_{t,i}| in (d(j-1), d j]; 0 when z_{t,i} = 0.
inline Vector beta_update(const Vector& z, const Alphabet& alphabet) {
    const double d = alphabet.d();
    Vector beta(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double a = std::abs(z[i]);
        if (a == 0.0) {
            beta[i] = 0.0;
            continue;
        }
        double j = std::ceil(a / d);
        if (j > 1 && (j - 1) * d >= a) j -= 1;
        beta[i] = std::min(j, static_cast<double>(alphabet.q())) * d;
    }
    return beta;
}

inline Vector dual_update(const Vector& mu, const Vector& x, const Vector& z, double alpha) {
    return mu + alpha * (x - z);
}

// ---------------------------------------------------------------------------
// Diagnostics

/// ||x - Q(x)||^2 / max(||Q(x)||^2, d^2), Q = nearest-symbol quantization.
/// The d^2 floor (energy of a single symbol) keeps the ratio finite when
/// Q(x) = 0.
inline double exactness_distance(const Vector& x, const Alphabet& alphabet) {
    const Vector qx = alphabet.quantize(x);
    const double floor = alphabet.d() * alphabet.d();
    return (x - qx).squaredNorm() / std::max(qx.squaredNorm(), floor);
}

inline constexpr double kZeroTol = 1e-9;

/// Stationarity violation of the box-constrained weighted problem.
///
/// With mu := lambda x - A^T (A x - y) and weights w (which are also the box
/// half-widths), component i contributes
///   x_i = 0              : max(0, |mu_i| - lambda w_i)
///   0 < |x_i| < w_i      : |mu_i - lambda w_i sign(x_i)|
///   |x_i| = w_i          : max(0, lambda w_i - sign(x_i) mu_i)   (box is active)
/// and components with w_i = 0 are pinned to zero and contribute nothing.
inline double stationarity_residual(const Vector& x, const Problem& problem, double lambda, const Vector& weights) {
    if (x.size() != problem.n() || weights.size() != problem.n())
        throw InvalidArgument("stationarity_residual: length mismatch");
    const Vector mu = lambda * x - problem.A.transpose() * (problem.A * x - problem.y);
    double worst = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double a = std::abs(x[i]);
        double r;
        if (a <= kZeroTol) {
            r = std::max(0.0, std::abs(mu[i]) - lambda * w);
        } else {
            const double s = x[i] > 0 ? 1.0 : -1.0;
            if (a >= w - kZeroTol)
                r = std::max(0.0, lambda * w - s * mu[i]);
            else
                r = std::abs(mu[i] - lambda * w * s);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

/// Weights w = d for a ternary alphabet; w_i = beta_i(x_i) otherwise.
inline double stationarity_residual(const Vector& x, const Problem& problem, double lambda, const Alphabet& alphabet) {
    Vector w(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        w[i] = alphabet.is_ternary() ? alphabet.d() : beta_weight(x[i], alphabet);
    return stationarity_residual(x, problem, lambda, w);
}

inline double augmented_lagrangian(const SolverState& s, const Problem& problem, const SolverConfig& config) {
    const Vector r = s.x - s.z;
    return 0.5 * (problem.y - problem.A * s.x).squaredNorm() - 0.5 * config.lambda * s.x.squaredNorm() +
           config.lambda * s.beta.cwiseProduct(s.z.cwiseAbs()).sum() + s.mu.dot(r) +
           0.5 * config.alpha * r.squaredNorm();
}

/// Sufficient condition for MADMM convergence on the split problem:
/// C = ||A^T A - lambda I||_2 is the gradient Lipschitz constant,
/// gamma the strong convexity modulus of the x-subproblem
/// (smallest eigenvalue of A^T A + (alpha - lambda) I);
/// the condition is alpha gamma > 2 C^2 and alpha >= C.
struct ConvergenceAssumption {
    double lipschitz = 0;
    double strong_convexity = 0;
    bool holds = false;
};

inline ConvergenceAssumption check_convergence_assumption(const Matrix& A, double lambda, double alpha) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A.transpose() * A, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();
    ConvergenceAssumption out;
    out.lipschitz = std::max(std::abs(ev.maxCoeff() - lambda), std::abs(ev.minCoeff() - lambda));
    out.strong_convexity = ev.minCoeff() + alpha - lambda;
    out.holds = out.strong_convexity > 0 && alpha * out.strong_convexity > 2 * out.lipschitz * out.lipschitz &&
                alpha >= out.lipschitz;
    return out;
}

// ---------------------------------------------------------------------------
// Iteration

enum class Weighting {
    fixed,     // ternary: beta stays at d
    adaptive,  // generic: beta re-quantized from z
};

using IterationObserver = std::function<void(const SolverState&)>;

struct IterationOutcome {
    SolverState state;
    bool converged = false;
    double last_step = 0;
};

namespace detail {

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

/// Runs the x / z / (beta) / mu cycle from `state` until
/// max(||x_t - x_{t-1}||, ||z_t - z_{t-1}||) < iterate_tol with beta
/// unchanged, or max_iters.
inline IterationOutcome madmm_iterate(const FactorCache& cache, const Alphabet& alphabet, const SolverConfig& config,
                                      SolverState state, Weighting weighting,
                                      const IterationObserver& observer = {}) {
    IterationOutcome out;
    for (std::int64_t it = 0; it < config.max_iters; ++it) {
        Vector x = x_update(state, cache, config);
        Vector z = z_update(state, x, config);
        Vector mu = dual_update(state.mu, x, z, config.alpha);
        if (!detail::all_finite(x) || !detail::all_finite(z) || !detail::all_finite(mu))
            throw NumericalFailure("MADMM produced a non-finite iterate at step " + std::to_string(state.t + 1),
                                   state.x, state.z, state.mu, state.t);
        const double step = std::max((x - state.x).norm(), (z - state.z).norm());
        bool beta_settled = true;
        if (weighting == Weighting::adaptive && step < config.beta_refresh_tol) {
            Vector beta = beta_update(z, alphabet);
            beta_settled = beta == state.beta;
            state.beta = std::move(beta);
        }
        state.x = std::move(x);
        state.z = std::move(z);
        state.mu = std::move(mu);
        ++state.t;
        out.last_step = step;
        if (observer) observer(state);
        if (step < config.iterate_tol && beta_settled) {
            out.converged = true;
            break;
        }
    }
    out.state = std::move(state);
    return out;
}

namespace detail {

inline Weighting weighting_for(const Alphabet& alphabet) {
    return alphabet.is_ternary() ? Weighting::fixed : Weighting::adaptive;
}

inline RecoveryResult finish(const IterationOutcome& run, const Problem& problem, const Alphabet& alphabet,
                             const SolverConfig& config) {
    RecoveryResult r;
    // z_T lies in the box exactly; x_T agrees with it to the stopping tolerance.
    r.estimate = config.x_step == XStep::exact ? run.state.z : run.state.x;
    r.raw = r.estimate;
    r.iterations = run.state.t;
    r.converged = run.converged;
    r.last_step = run.last_step;
    r.exactness_distance = exactness_distance(r.estimate, alphabet);
    r.exact = r.exactness_distance < config.exact_tol;
    r.objective = objective(r.estimate, problem, ObjectiveParams(config.lambda, alphabet));
    r.stationarity_residual = alphabet.is_ternary()
                                  ? stationarity_residual(r.estimate, problem, config.lambda, alphabet)
                                  : stationarity_residual(r.estimate, problem, config.lambda, run.state.beta);
    return r;
}

inline void check_inputs(const Problem& problem, const SolverConfig& config) {
    config.validate();
    if (!problem.A.allFinite() || !problem.y.allFinite()) throw InvalidProblem("problem data contains non-finite values");
}

}  // namespace detail

/// One MADMM run from an explicit starting state. The state's beta must
/// match the weighting (d for fixed, q d or smaller for adaptive).
inline RecoveryResult solve_madmm_from(const Problem& problem, const Alphabet& alphabet, const SolverConfig& config,
                                       SolverState start, Weighting weighting,
                                       const IterationObserver& observer = {}) {
    detail::check_inputs(problem, config);
    const FactorCache cache(problem.A, problem.y, config.alpha - config.lambda);
    const auto run = madmm_iterate(cache, alphabet, config, std::move(start), weighting, observer);
    return detail::finish(run, problem, alphabet, config);
}

/// Algorithm for F (fixed weights d, box [-d, d]^n). Requires q = 1.
inline RecoveryResult solve_madmm_ternary(const Problem& problem, const Alphabet& alphabet, const SolverConfig& config,
                                          const IterationObserver& observer = {}) {
    if (!alphabet.is_ternary()) throw InvalidArgument("solve_madmm_ternary requires q = 1");
    return solve_madmm_from(problem, alphabet, config, SolverState::initial(problem.n(), alphabet), Weighting::fixed,
                            observer);
}

/// Algorithm for H (adaptive weights, beta0 = q d). Valid for any q.
inline RecoveryResult solve_madmm_generic(const Problem& problem, const Alphabet& alphabet, const SolverConfig& config,
                                          const IterationObserver& observer = {}) {
    return solve_madmm_from(problem, alphabet, config, SolverState::initial(problem.n(), alphabet),
                            Weighting::adaptive, observer);
}

inline RecoveryResult solve_madmm(const Problem& problem, const Alphabet& alphabet, const SolverConfig& config,
                                  const IterationObserver& observer = {}) {
    return alphabet.is_ternary() ? solve_madmm_ternary(problem, alphabet, config, observer)
                                 : solve_madmm_generic(problem, alphabet, config, observer);
}

/// MADMM with random restarts: while the estimate is farther than exact_tol
/// from the alphabet lattice, restart from z uniform on the hull box with
/// mu = 0 and beta = q d. Returns the first exact run, otherwise the run
/// with the lowest objective. Restart draws come from config.seed.
inline RecoveryResult solve_madmm_r(const Problem& problem, const Alphabet& alphabet, const SolverConfig& config) {
    detail::check_inputs(problem, config);
    const FactorCache cache(problem.A, problem.y, config.alpha - config.lambda);
    const Weighting weighting = detail::weighting_for(alphabet);
    const auto n = problem.n();

    auto run = madmm_iterate(cache, alphabet, config, SolverState::initial(n, alphabet), weighting);
    RecoveryResult best = detail::finish(run, problem, alphabet, config);
    std::int64_t total_iters = best.iterations;
    int reshuffles = 0;

    rng::Stream stream(rng::derive_key(config.seed, {static_cast<std::uint64_t>(rng::Substream::reshuffle)}));
    const double bound = alphabet.bound();
    while (!best.exact && reshuffles < config.max_reshuffles) {
        ++reshuffles;
        Vector z0(n);
        for (Eigen::Index i = 0; i < n; ++i) z0[i] = stream.uniform(-bound, bound);
        run = madmm_iterate(cache, alphabet, config, SolverState::from_z(std::move(z0), alphabet), weighting);
        RecoveryResult candidate = detail::finish(run, problem, alphabet, config);
        total_iters += candidate.iterations;
        if (candidate.exact || candidate.objective < best.objective) best = std::move(candidate);
    }
    best.iterations = total_iters;
    best.reshuffles = reshuffles;
    return best;
}

}  // namespace fvsr
