#pragma once

// Convex comparison methods, both solved by ADMM with the same stopping rule
// as MADMM so iteration counts are comparable:
//
//   Lasso: min 1/2 ||y - A x||^2 + lambda ||x||_1
//   BP:    min ||x||_1  s.t.  A x = y
//
// Outputs are optionally projected onto the alphabet lattice afterwards.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"
#include "fvsr/solver.hpp"

namespace fvsr {

struct BaselineConfig {
    double lambda = 1e-2;  // Lasso only
    double alpha = 1.0;
    std::int64_t max_iters = 20000;
    double iterate_tol = 1e-12;
    bool quantize_output = true;

    void validate(bool needs_lambda) const {
        if (needs_lambda && !(lambda > 0)) throw ConfigError("lambda must be positive");
        if (!(alpha > 0)) throw ConfigError("alpha must be positive");
        if (max_iters < 1) throw ConfigError("max_iters must be positive");
        if (!(iterate_tol > 0)) throw ConfigError("iterate_tol must be positive");
    }
};

using BaselineObserver = std::function<void(const Vector& x, const Vector& z, std::int64_t t)>;

namespace detail {

inline RecoveryResult baseline_result(Vector x, std::int64_t iters, bool converged, double last_step,
                                      const Alphabet& alphabet, const BaselineConfig& config) {
    RecoveryResult r;
    r.raw = std::move(x);
    r.estimate = config.quantize_output ? alphabet.quantize(r.raw) : r.raw;
    r.iterations = iters;
    r.converged = converged;
    r.last_step = last_step;
    r.exactness_distance = exactness_distance(r.estimate, alphabet);
    r.exact = r.exactness_distance == 0.0;
    return r;
}

inline void check_step(const Vector& x, const Vector& z, const Vector& mu, const Vector& px, const Vector& pz,
                       const Vector& pmu, std::int64_t t, const char* who) {
    if (!x.allFinite() || !z.allFinite() || !mu.allFinite())
        throw NumericalFailure(std::string(who) + " produced a non-finite iterate at step " + std::to_string(t), px, pz,
                               pmu, t - 1);
}

}  // namespace detail

/// Lasso by ADMM:
///   x <- (A^T A + alpha I)^{-1} (A^T y + alpha z - mu)
///   z <- S_{lambda/alpha}(x + mu/alpha)
///   mu <- mu + alpha (x - z)
inline RecoveryResult solve_lasso_admm(const Problem& problem, const Alphabet& alphabet, const BaselineConfig& config,
                                       const std::optional<Vector>& initial_z = std::nullopt,
                                       const BaselineObserver& observer = {}) {
    config.validate(true);
    const auto n = problem.n();
    const FactorCache cache(problem.A, problem.y, config.alpha);
    Vector z = initial_z ? *initial_z : Vector::Zero(n);
    if (z.size() != n) throw InvalidArgument("initial z length mismatch");
    Vector x = z;
    Vector mu = Vector::Zero(n);
    const double thr = config.lambda / config.alpha;

    bool converged = false;
    double step = 0;
    std::int64_t t = 0;
    while (t < config.max_iters) {
        Vector xn = cache.solve(cache.Aty() + config.alpha * z - mu);
        Vector v = xn + mu / config.alpha;
        Vector zn = v.unaryExpr([thr](double e) { return soft_threshold(e, thr); });
        Vector mun = dual_update(mu, xn, zn, config.alpha);
        ++t;
        detail::check_step(xn, zn, mun, x, z, mu, t, "Lasso-ADMM");
        step = std::max((xn - x).norm(), (zn - z).norm());
        x = std::move(xn);
        z = std::move(zn);
        mu = std::move(mun);
        if (observer) observer(x, z, t);
        if (step < config.iterate_tol) {
            converged = true;
            break;
        }
    }
    auto r = detail::baseline_result(std::move(x), t, converged, step, alphabet, config);
    r.objective = 0.5 * (problem.y - problem.A * r.raw).squaredNorm() + config.lambda * r.raw.lpNorm<1>();
    return r;
}

/// Projection onto {x : A x = y}: v - A^T (A A^T)^{-1} (A v - y).
class AffineProjector {
public:
    AffineProjector(const Matrix& A, const Vector& y) : A_(A), y_(y) {
        const Matrix G = A * A.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
        const double top = eig.eigenvalues().maxCoeff();
        if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1.0)))
            throw InvalidProblem("A A^T is rank deficient; basis pursuit needs full row rank");
        llt_.compute(G);
    }

    Vector operator()(const Vector& v) const { return v - A_.transpose() * llt_.solve(A_ * v - y_); }

private:
    const Matrix& A_;
    const Vector& y_;
    Eigen::LLT<Matrix> llt_;
};

/// Basis pursuit by ADMM:
///   x <- Pi_{Ax=y}(z - mu/alpha)
///   z <- S_{1/alpha}(x + mu/alpha)
///   mu <- mu + alpha (x - z)
inline RecoveryResult solve_bp_admm(const Problem& problem, const Alphabet& alphabet, const BaselineConfig& config,
                                    const BaselineObserver& observer = {}) {
    config.validate(false);
    const auto n = problem.n();
    const AffineProjector project(problem.A, problem.y);
    Vector z = Vector::Zero(n);
    Vector x = z;
    Vector mu = Vector::Zero(n);
    const double thr = 1.0 / config.alpha;

    bool converged = false;
    double step = 0;
    std::int64_t t = 0;
    while (t < config.max_iters) {
        Vector xn = project(z - mu / config.alpha);
        Vector v = xn + mu / config.alpha;
        Vector zn = v.unaryExpr([thr](double e) { return soft_threshold(e, thr); });
        Vector mun = dual_update(mu, xn, zn, config.alpha);
        ++t;
        detail::check_step(xn, zn, mun, x, z, mu, t, "BP-ADMM");
        step = std::max((xn - x).norm(), (zn - z).norm());
        x = std::move(xn);
        z = std::move(zn);
        mu = std::move(mun);
        if (observer) observer(x, z, t);
        if (step < config.iterate_tol) {
            converged = true;
            break;
        }
    }
    auto r = detail::baseline_result(std::move(x), t, converged, step, alphabet, config);
    r.objective = r.raw.lpNorm<1>();
    return r;
}

}  // namespace fvsr
