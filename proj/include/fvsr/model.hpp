#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fvsr/errors.hpp"
#include "fvsr/rng.hpp"

namespace fvsr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sentinel for "no noise" wherever an SNR in dB is expected.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

inline bool is_noise_free(double snr_db) { return std::isinf(snr_db) && snr_db > 0; }

/// Symmetric equispaced alphabet d * {0, +-1, ..., +-q}.
///
/// The convex hull of the alphabet is [-q d, q d]; q == 1 is the ternary case.
class Alphabet {
public:
    Alphabet(double d, int q) : d_(d), q_(q) {
        if (!(d > 0) || !std::isfinite(d)) throw InvalidArgument("alphabet spacing d must be positive");
        if (q < 1) throw InvalidArgument("alphabet level q must be >= 1");
    }

    static Alphabet ternary(double d = 1.0) { return Alphabet(d, 1); }

    double d() const noexcept { return d_; }
    int q() const noexcept { return q_; }
    bool is_ternary() const noexcept { return q_ == 1; }
    double bound() const noexcept { return q_ * d_; }
    int size() const noexcept { return 2 * q_ + 1; }

    // Ascending list of all symbols.
    std::vector<double> symbols() const {
        std::vector<double> out;
        out.reserve(size());
        for (int j = -q_; j <= q_; ++j) out.push_back(j * d_);
        return out;
    }

    // Nearest symbol; midpoints go to the smaller magnitude. Values beyond
    // the hull snap to the outermost symbol.
    double quantize(double v) const noexcept {
        const double a = std::abs(v) / d_;
        double level = std::ceil(a - 0.5);  // ties round down
        level = std::clamp(level, 0.0, static_cast<double>(q_));
        return std::copysign(level * d_, v) + 0.0;
    }

    Vector quantize(const Vector& v) const {
        return v.unaryExpr([this](double e) { return quantize(e); });
    }

    bool contains(double v, double tol = 0.0) const noexcept {
        return std::abs(v - quantize(v)) <= tol && std::abs(v) <= bound() + tol;
    }

    bool operator==(const Alphabet&) const = default;

private:
    double d_;
    int q_;
};

/// A k-sparse vector whose nonzeros are alphabet symbols.
class SparseSignal {
public:
    SparseSignal(Vector values, const Alphabet& alphabet) : values_(std::move(values)) {
        for (Eigen::Index i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (v == 0.0) continue;
            if (!alphabet.contains(v) || alphabet.quantize(v) != v)
                throw InvalidArgument("signal entry " + std::to_string(i) + " is not an alphabet symbol");
            support_.push_back(static_cast<int>(i));
        }
    }

    const Vector& values() const noexcept { return values_; }
    const std::vector<int>& support() const noexcept { return support_; }
    int sparsity() const noexcept { return static_cast<int>(support_.size()); }
    Eigen::Index size() const noexcept { return values_.size(); }

private:
    Vector values_;
    std::vector<int> support_;
};

/// Linear sensing problem y = A (x + delta) + eps.
struct Problem {
    Matrix A;
    Vector y;
    std::optional<SparseSignal> truth;
    std::optional<Vector> signal_noise;
    std::optional<Vector> meas_noise;

    Problem(Matrix a, Vector y_) : A(std::move(a)), y(std::move(y_)) { check(); }

    Problem(Matrix a, Vector y_, std::optional<SparseSignal> truth_,
            std::optional<Vector> delta = std::nullopt, std::optional<Vector> eps = std::nullopt)
        : A(std::move(a)),
          y(std::move(y_)),
          truth(std::move(truth_)),
          signal_noise(std::move(delta)),
          meas_noise(std::move(eps)) {
        check();
    }

    // Builds y from the ground truth and optional noise records.
    static Problem from_truth(Matrix a, SparseSignal truth, std::optional<Vector> delta = std::nullopt,
                              std::optional<Vector> eps = std::nullopt) {
        if (truth.size() != a.cols()) throw InvalidArgument("signal length does not match matrix columns");
        Vector x = truth.values();
        if (delta) {
            if (delta->size() != a.cols()) throw InvalidArgument("signal noise length mismatch");
            x += *delta;
        }
        Vector y = a * x;
        if (eps) {
            if (eps->size() != a.rows()) throw InvalidArgument("measurement noise length mismatch");
            y += *eps;
        }
        return Problem(std::move(a), std::move(y), std::move(truth), std::move(delta), std::move(eps));
    }

    Eigen::Index m() const noexcept { return A.rows(); }
    Eigen::Index n() const noexcept { return A.cols(); }

private:
    void check() const {
        if (A.rows() < 1 || A.cols() < 1) throw InvalidArgument("sensing matrix must be non-empty");
        if (y.size() != A.rows())
            throw InvalidArgument("measurement length " + std::to_string(y.size()) + " does not match " +
                                  std::to_string(A.rows()) + " matrix rows");
        if (truth && truth->size() != A.cols()) throw InvalidArgument("truth length does not match matrix columns");
    }
};

/// i.i.d. N(0, 1/m) entries, drawn row-major from the stream.
inline Matrix gen_gaussian_matrix(int m, int n, rng::Stream& stream) {
    if (m < 1 || n < 1) throw InvalidArgument("matrix dimensions must be positive");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    Matrix A(m, n);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) A(r, c) = scale * stream.gaussian();
    return A;
}

inline Matrix gen_gaussian_matrix(int m, int n, std::uint64_t seed) {
    auto stream = rng::Stream::from_seed(seed);
    return gen_gaussian_matrix(m, n, stream);
}

/// Uniform random k-subset support (partial Fisher-Yates) with nonzeros
/// uniform over the 2q nonzero symbols.
inline SparseSignal gen_signal(int n, int k, const Alphabet& alphabet, rng::Stream& stream) {
    if (n < 1) throw InvalidArgument("signal length must be positive");
    if (k < 0 || k > n) throw InvalidArgument("sparsity k must lie in [0, n]");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(stream.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    Vector x = Vector::Zero(n);
    const auto q = static_cast<std::uint64_t>(alphabet.q());
    for (int i = 0; i < k; ++i) {
        const auto s = stream.below(2 * q);  // 0..2q-1
        const double level = static_cast<double>(s % q + 1);
        x[idx[i]] = (s < q ? 1.0 : -1.0) * level * alphabet.d();
    }
    return SparseSignal(std::move(x), alphabet);
}

inline SparseSignal gen_signal(int n, int k, const Alphabet& alphabet, std::uint64_t seed) {
    auto stream = rng::Stream::from_seed(seed);
    return gen_signal(n, k, alphabet, stream);
}

struct NoisyMeasurement {
    Vector y;
    Vector noise;
};

// Per-component noise std for a target SNR on vector `clean`:
// sigma = ||clean||_2 / (sqrt(len) * 10^(snr/20)).
inline double noise_sigma(const Vector& clean, double snr_db) {
    return clean.norm() / (std::sqrt(static_cast<double>(clean.size())) * std::pow(10.0, snr_db / 20.0));
}

inline NoisyMeasurement add_measurement_noise(const Vector& y_clean, double snr_db, rng::Stream& stream) {
    if (is_noise_free(snr_db)) return {y_clean, Vector::Zero(y_clean.size())};
    if (!(y_clean.norm() > 0)) throw InvalidArgument("cannot set an SNR on a zero-norm measurement");
    if (!std::isfinite(snr_db)) throw InvalidArgument("snr_db must be finite or the no-noise sentinel");
    const double sigma = noise_sigma(y_clean, snr_db);
    Vector eps(y_clean.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = sigma * stream.gaussian();
    return {y_clean + eps, std::move(eps)};
}

inline NoisyMeasurement add_measurement_noise(const Vector& y_clean, double snr_db, std::uint64_t seed) {
    auto stream = rng::Stream::from_seed(seed);
    return add_measurement_noise(y_clean, snr_db, stream);
}

}  // namespace fvsr
