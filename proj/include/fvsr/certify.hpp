#pragma once

// Recoverability certificates and exhaustive oracles for tiny instances.
//
//   ternary:  min eig of lambda^{-1} A^T A + d I_{S^c} - I_S
//   generic:  min eig of lambda^{-1} A^T A + I_{S^c} - q I_S
//
// A support passes when its minimum eigenvalue exceeds kEigTol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fvsr/csv_io.hpp"
#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"
#include "fvsr/penalty.hpp"

namespace fvsr {

inline constexpr double kEigTol = 1e-10;
inline constexpr double kDefaultSupportBudget = 1e6;
inline constexpr int kDefaultKernelMaxN = 14;
inline constexpr double kDefaultEnumerationBudget = 1e7;

namespace detail {

inline void check_support(const std::vector<int>& S, Eigen::Index n) {
    for (int i : S)
        if (i < 0 || i >= n) throw InvalidArgument("support index " + std::to_string(i) + " out of range");
}

inline double min_eig_with_diag(const Matrix& gram, double lambda, const Vector& diag) {
    Matrix M = gram / lambda;
    M.diagonal() += diag;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

inline Vector support_diag(Eigen::Index n, const std::vector<int>& S, double off, double on) {
    Vector diag = Vector::Constant(n, off);
    for (int i : S) diag[i] = on;
    return diag;
}

}  // namespace detail

inline double certificate_ternary(const Matrix& A, double lambda, double d, const std::vector<int>& S) {
    if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    detail::check_support(S, A.cols());
    return detail::min_eig_with_diag(A.transpose() * A, lambda, detail::support_diag(A.cols(), S, d, -1.0));
}

inline double certificate_generic(const Matrix& A, double lambda, int q, const std::vector<int>& S) {
    if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    if (q < 1) throw InvalidArgument("q must be >= 1");
    detail::check_support(S, A.cols());
    return detail::min_eig_with_diag(A.transpose() * A, lambda,
                                     detail::support_diag(A.cols(), S, 1.0, -static_cast<double>(q)));
}

struct SupportCertificate {
    std::vector<int> support;
    double min_eig;
};

struct CertificateReport {
    std::vector<SupportCertificate> supports;  // enumeration order
    std::vector<int> worst_support;
    double worst_min_eig = std::numeric_limits<double>::infinity();
    bool pass = true;
    double lambda = 0;
    Alphabet alphabet = Alphabet::ternary();
    int k = 0;
};

// sum_{j <= k} C(n, j), saturating at +inf.
inline double count_supports(Eigen::Index n, int k) {
    double total = 0, term = 1;
    for (int j = 0; j <= k; ++j) {
        total += term;
        term = term * static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    return total;
}

/// Every support of size 0..k, in order of size then lexicographically.
inline CertificateReport certify_all_supports(const Matrix& A, double lambda, const Alphabet& alphabet, int k,
                                              double budget = kDefaultSupportBudget) {
    if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    const auto n = A.cols();
    if (k < 0 || k > n) throw InvalidArgument("k must lie in [0, n]");
    const double count = count_supports(n, k);
    if (count > budget)
        throw BudgetExceeded("certify_all_supports: " + std::to_string(static_cast<long double>(count)) +
                                 " supports exceed the budget of " + std::to_string(static_cast<long double>(budget)),
                             count, budget);

    CertificateReport report;
    report.lambda = lambda;
    report.alphabet = alphabet;
    report.k = k;
    const Matrix gram = A.transpose() * A;
    const double off = alphabet.is_ternary() ? alphabet.d() : 1.0;
    const double on = alphabet.is_ternary() ? -1.0 : -static_cast<double>(alphabet.q());

    std::vector<int> S;
    for (int size = 0; size <= k; ++size) {
        S.resize(size);
        for (int i = 0; i < size; ++i) S[i] = i;
        while (true) {
            const double e = detail::min_eig_with_diag(gram, lambda, detail::support_diag(n, S, off, on));
            report.supports.push_back({S, e});
            if (e < report.worst_min_eig) {
                report.worst_min_eig = e;
                report.worst_support = S;
            }
            // next combination
            int i = size - 1;
            while (i >= 0 && S[i] == static_cast<int>(n) - size + i) --i;
            if (i < 0) break;
            ++S[i];
            for (int j = i + 1; j < size; ++j) S[j] = S[j - 1] + 1;
        }
    }
    report.pass = report.worst_min_eig > kEigTol;
    return report;
}

/// CSV lines: support,min_eig,pass with support indices joined by ';'.
inline void write_certificate_csv(std::ostream& out, const CertificateReport& report) {
    out << "support,min_eig,pass\n";
    for (const auto& s : report.supports) {
        for (std::size_t i = 0; i < s.support.size(); ++i) out << (i ? ";" : "") << s.support[i];
        out << ',' << csv::format_double(s.min_eig) << ',' << (s.min_eig > kEigTol ? 1 : 0) << '\n';
    }
}

/// True iff no nonzero h in d {0, +-1, +-2}^n has A_S^T A h = 0 (to a
/// relative tolerance). Meet in the middle over the two halves of h.
inline bool kernel_general_position_check(const Matrix& A, const std::vector<int>& S, double d,
                                          int max_n = kDefaultKernelMaxN) {
    const auto n = static_cast<int>(A.cols());
    if (!(d > 0)) throw InvalidArgument("d must be positive");
    if (n > max_n)
        throw BudgetExceeded("kernel_general_position_check: n = " + std::to_string(n) + " exceeds " +
                                 std::to_string(max_n),
                             n, max_n);
    detail::check_support(S, n);
    if (S.empty()) return false;

    Matrix B(S.size(), n);
    for (std::size_t r = 0; r < S.size(); ++r) B.row(r) = A.col(S[r]).transpose() * A;
    const double tol = 1e-9 * std::max(1.0, B.cwiseAbs().maxCoeff()) * d * n;
    const int rows = static_cast<int>(S.size());

    // All 5^len combinations of columns [first, first + len).
    auto half = [&](int first, int len) {
        std::size_t total = 1;
        for (int i = 0; i < len; ++i) total *= 5;
        Matrix out(rows, static_cast<Eigen::Index>(total));
        std::vector<int> digit(len, 0);
        for (std::size_t c = 0; c < total; ++c) {
            Vector v = Vector::Zero(rows);
            for (int i = 0; i < len; ++i) v += (digit[i] - 2) * d * B.col(first + i);
            out.col(static_cast<Eigen::Index>(c)) = v;
            for (int i = 0; i < len && ++digit[i] == 5; ++i) digit[i] = 0;
        }
        return out;
    };
    const int n1 = n / 2;
    const Matrix L = half(0, n1);
    const Matrix R = half(n1, n - n1);

    // The all-zero combination of each half has index (5^len - 1) / 2.
    const Eigen::Index zero_l = (L.cols() - 1) / 2;
    const Eigen::Index zero_r = (R.cols() - 1) / 2;

    std::vector<Eigen::Index> order(R.cols());
    for (Eigen::Index j = 0; j < R.cols(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return R(0, a) < R(0, b); });
    std::vector<double> keys(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) keys[j] = R(0, order[j]);

    for (Eigen::Index a = 0; a < L.cols(); ++a) {
        const double target = -L(0, a);
        auto it = std::lower_bound(keys.begin(), keys.end(), target - tol);
        for (; it != keys.end() && *it <= target + tol; ++it) {
            const Eigen::Index b = order[it - keys.begin()];
            if (a == zero_l && b == zero_r) continue;
            if ((L.col(a) + R.col(b)).cwiseAbs().maxCoeff() <= tol) return false;
        }
    }
    return true;
}

enum class SearchMode { alphabet, grid };

/// Exhaustive argmin of F (q = 1) or H over A^n or a uniform grid of the
/// hull with grid_points per axis. Enumeration runs in lexicographic order
/// and ties keep the first point.
inline Vector brute_force_minimizer(const Problem& problem, const Alphabet& alphabet, double lambda, SearchMode mode,
                                    int grid_points = 0, double budget = kDefaultEnumerationBudget) {
    std::vector<double> axis;
    if (mode == SearchMode::alphabet) {
        axis = alphabet.symbols();
    } else {
        if (grid_points < 2) throw InvalidArgument("grid mode needs at least 2 points per axis");
        const double b = alphabet.bound();
        for (int i = 0; i < grid_points; ++i) axis.push_back(-b + 2.0 * b * i / (grid_points - 1));
    }
    const auto n = static_cast<int>(problem.n());
    const double count = std::pow(static_cast<double>(axis.size()), n);
    if (count > budget)
        throw BudgetExceeded("brute_force_minimizer: " + std::to_string(static_cast<long double>(count)) +
                                 " points exceed the budget of " + std::to_string(static_cast<long double>(budget)),
                             count, budget);

    const ObjectiveParams params(lambda, alphabet);
    const int base = static_cast<int>(axis.size());
    std::vector<int> digit(n, 0);  // digit[0] most significant
    Vector x(n), best(n);
    double best_val = std::numeric_limits<double>::infinity();
    while (true) {
        for (int i = 0; i < n; ++i) x[i] = axis[digit[i]];
        const double v = objective(x, problem, params);
        if (v < best_val) {
            best_val = v;
            best = x;
        }
        int i = n - 1;
        while (i >= 0 && ++digit[i] == base) digit[i--] = 0;
        if (i < 0) break;
    }
    return best;
}

}  // namespace fvsr
