#pragma once

// MCP penalty and the MCP-Lasso objectives.
//
//   F(x) = 1/2 ||y - A x||^2 + lambda d ||x||_1 - lambda/2 ||x||^2,  x in [-d, d]^n   (ternary)
//   H(x) = 1/2 ||y - A x||^2 + lambda sum_i beta_i(x_i) |x_i| - lambda/2 ||x||^2,
//          x in [-q d, q d]^n, beta_i(x_i) = smallest symbol >= |x_i|                (generic)

#include <algorithm>
#include <cmath>
#include <string>

#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"

namespace fvsr {

// Points this close outside the box are clamped instead of rejected.
inline constexpr double kBoxSlack = 1e-12;

struct ObjectiveParams {
    double lambda;
    Alphabet alphabet;

    ObjectiveParams(double lambda_, Alphabet alphabet_) : lambda(lambda_), alphabet(alphabet_) {
        if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    }
};

namespace detail {

inline double clamp_to_box(double v, double bound, const char* what) {
    if (std::isnan(v)) throw DomainError(std::string(what) + ": NaN input");
    if (std::abs(v) > bound + kBoxSlack)
        throw DomainError(std::string(what) + ": value outside [-" + std::to_string(bound) + ", " +
                          std::to_string(bound) + "]");
    return std::clamp(v, -bound, bound);
}

}  // namespace detail

/// Minimax concave penalty: d|z| - z^2/2 on [-d, d], d^2/2 outside.
inline double mcp_g(double z, double d) {
    const double a = std::abs(z);
    return a <= d ? d * a - 0.5 * z * z : 0.5 * d * d;
}

/// G(x) = d ||x||_1 - 1/2 ||x||_2^2 on the box [-d, d]^n.
inline double concave_G(const Vector& x, double d) {
    double l1 = 0, l2 = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = detail::clamp_to_box(x[i], d, "concave_G");
        l1 += std::abs(v);
        l2 += v * v;
    }
    return d * l1 - 0.5 * l2;
}

/// Smallest nonnegative symbol >= |x_i| (inclusive at symbols).
inline double beta_weight(double xi, const Alphabet& alphabet) {
    const double a = std::abs(detail::clamp_to_box(xi, alphabet.bound(), "beta_weight"));
    if (a == 0.0) return 0.0;
    const double d = alphabet.d();
    double j = std::ceil(a / d);
    // a / d can land one ulp above an integer for exact symbols.
    if (j > 1 && (j - 1) * d >= a) j -= 1;
    return std::min(j, static_cast<double>(alphabet.q())) * d;
}

inline double data_fit(const Vector& x, const Problem& problem) {
    if (x.size() != problem.n()) throw InvalidArgument("estimate length does not match matrix columns");
    return 0.5 * (problem.y - problem.A * x).squaredNorm();
}

inline double objective_F(const Vector& x, const Problem& problem, const ObjectiveParams& params) {
    if (!params.alphabet.is_ternary()) throw InvalidArgument("objective_F requires a ternary alphabet (q = 1)");
    const double d = params.alphabet.d();
    Vector xc(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) xc[i] = detail::clamp_to_box(x[i], d, "objective_F");
    return data_fit(xc, problem) + params.lambda * concave_G(xc, d);
}

inline double objective_H(const Vector& x, const Problem& problem, const ObjectiveParams& params) {
    const double bound = params.alphabet.bound();
    Vector xc(x.size());
    double penalty = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xc[i] = detail::clamp_to_box(x[i], bound, "objective_H");
        penalty += beta_weight(xc[i], params.alphabet) * std::abs(xc[i]) - 0.5 * xc[i] * xc[i];
    }
    return data_fit(xc, problem) + params.lambda * penalty;
}

// F for ternary alphabets, H otherwise.
inline double objective(const Vector& x, const Problem& problem, const ObjectiveParams& params) {
    return params.alphabet.is_ternary() ? objective_F(x, problem, params) : objective_H(x, problem, params);
}

}  // namespace fvsr
