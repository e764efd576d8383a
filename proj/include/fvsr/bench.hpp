#pragma once

// Monte Carlo sweeps over (m, k, snr) with per-trial derived streams, so
// every record depends only on (seed, grid point, trial) and never on the
// number of workers.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fvsr/baselines.hpp"
#include "fvsr/csv_io.hpp"
#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"
#include "fvsr/rng.hpp"
#include "fvsr/solver.hpp"

namespace fvsr {

enum class Method { madmm, madmm_r, lasso, bp };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::madmm: return "madmm";
        case Method::madmm_r: return "madmm_r";
        case Method::lasso: return "lasso";
        case Method::bp: return "bp";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    if (s == "madmm") return Method::madmm;
    if (s == "madmm_r") return Method::madmm_r;
    if (s == "lasso") return Method::lasso;
    if (s == "bp") return Method::bp;
    throw InvalidArgument("unknown solver '" + s + "' (expected madmm, madmm_r, lasso or bp)");
}

inline double rse(const Vector& estimate, const Vector& truth) {
    if (estimate.size() != truth.size()) throw InvalidArgument("rse: length mismatch");
    const double denom = truth.squaredNorm();
    if (!(denom > 0)) throw InvalidArgument("rse: truth has zero norm");
    return (truth - estimate).squaredNorm() / denom;
}

inline constexpr double kExactTol = 1e-6;

inline bool exact_recovery(const Vector& estimate, const Vector& truth, double tol = kExactTol) {
    if (estimate.size() != truth.size()) throw InvalidArgument("exact_recovery: length mismatch");
    return estimate.size() == 0 || (estimate - truth).cwiseAbs().maxCoeff() <= tol;
}

struct ExperimentSpec {
    int n = 100;
    std::vector<int> k_values{10};
    std::vector<int> m_values{40};
    Alphabet alphabet = Alphabet::ternary();
    std::vector<double> snr_values{kNoNoise};
    int trials = 100;
    std::uint64_t seed = 1;
    std::vector<Method> solvers{Method::madmm, Method::lasso};
    SolverConfig solver;
    BaselineConfig baseline;
    int workers = 1;
    bool record_timing = true;

    void validate() const {
        if (n < 1) throw ConfigError("n must be positive");
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (workers < 1) throw ConfigError("workers must be >= 1");
        if (k_values.empty() || m_values.empty() || snr_values.empty() || solvers.empty())
            throw ConfigError("sweep ranges and solver list must be nonempty");
        for (int k : k_values)
            if (k < 1 || k > n) throw ConfigError("k must lie in [1, n]");
        for (int m : m_values)
            if (m < 1) throw ConfigError("m must be positive");
        for (double s : snr_values)
            if (!is_noise_free(s) && !std::isfinite(s)) throw ConfigError("snr_db must be finite or inf");
        const bool noisy = std::any_of(snr_values.begin(), snr_values.end(), [](double s) { return !is_noise_free(s); });
        if (noisy && std::find(solvers.begin(), solvers.end(), Method::bp) != solvers.end())
            throw ConfigError("bp is only defined for noise-free sweeps");
        solver.validate();
        baseline.validate(true);
    }
};

struct TrialRecord {
    std::string solver;
    int m = 0, n = 0, k = 0, q = 1;
    double d = 1;
    double snr_db = kNoNoise;
    std::uint64_t seed = 0;
    int trial = 0;
    double rse = 0;
    int exact = 0;
    std::int64_t iterations = 0;
    int reshuffles = 0;
    double runtime_s = 0;
    std::string status = "ok";

    bool operator==(const TrialRecord&) const = default;
};

/// The instance of one trial. Matrix and signal depend on (seed, m, k,
/// trial); the noise draw is shared across SNR levels and only rescaled.
struct TrialInstance {
    Problem problem;
    SparseSignal truth;
};

inline TrialInstance make_instance(std::uint64_t seed, int n, int m, int k, const Alphabet& alphabet, double snr_db,
                                   int trial) {
    const std::uint64_t key = rng::derive_key(seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)});
    auto sm = rng::Stream::for_trial(key, trial, rng::Substream::matrix);
    auto ss = rng::Stream::for_trial(key, trial, rng::Substream::signal);
    auto sn = rng::Stream::for_trial(key, trial, rng::Substream::noise);
    Matrix A = gen_gaussian_matrix(m, n, sm);
    SparseSignal x = gen_signal(n, k, alphabet, ss);
    auto noisy = add_measurement_noise(A * x.values(), snr_db, sn);
    Problem p(std::move(A), std::move(noisy.y), x, std::nullopt,
              is_noise_free(snr_db) ? std::nullopt : std::optional<Vector>(std::move(noisy.noise)));
    return {std::move(p), std::move(x)};
}

inline RecoveryResult run_method(Method method, const Problem& problem, const Alphabet& alphabet,
                                 const SolverConfig& solver, const BaselineConfig& baseline) {
    switch (method) {
        case Method::madmm: return solve_madmm(problem, alphabet, solver);
        case Method::madmm_r: return solve_madmm_r(problem, alphabet, solver);
        case Method::lasso: return solve_lasso_admm(problem, alphabet, baseline);
        case Method::bp: return solve_bp_admm(problem, alphabet, baseline);
    }
    throw InvalidArgument("unknown method");
}

namespace detail {

struct SweepJob {
    int m, k;
    double snr;
    int trial;
    std::size_t order;
};

inline std::vector<TrialRecord> run_job(const ExperimentSpec& spec, const SweepJob& job) {
    const auto inst = make_instance(spec.seed, spec.n, job.m, job.k, spec.alphabet, job.snr, job.trial);
    std::vector<TrialRecord> out;
    for (Method method : spec.solvers) {
        TrialRecord rec;
        rec.solver = method_name(method);
        rec.m = job.m;
        rec.n = spec.n;
        rec.k = job.k;
        rec.q = spec.alphabet.q();
        rec.d = spec.alphabet.d();
        rec.snr_db = job.snr;
        rec.seed = spec.seed;
        rec.trial = job.trial;
        SolverConfig sc = spec.solver;
        // Restart draws differ per trial but stay reproducible.
        sc.seed = rng::derive_key(spec.seed, {static_cast<std::uint64_t>(job.m), static_cast<std::uint64_t>(job.k),
                                              static_cast<std::uint64_t>(job.trial)});
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto r = run_method(method, inst.problem, spec.alphabet, sc, spec.baseline);
            rec.rse = rse(r.estimate, inst.truth.values());
            rec.exact = exact_recovery(spec.alphabet.quantize(r.estimate), inst.truth.values()) ? 1 : 0;
            rec.iterations = r.iterations;
            rec.reshuffles = r.reshuffles;
        } catch (const NumericalFailure& e) {
            rec.rse = std::nan("");
            rec.iterations = e.iteration();
            rec.status = "numerical_failure";
        } catch (const InvalidProblem&) {
            rec.rse = std::nan("");
            rec.status = "invalid_problem";
        }
        if (spec.record_timing)
            rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace detail

/// Runs every (snr, m, k, trial) point; records come back in that nesting
/// order with solvers in spec order, whatever the worker count.
inline std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<detail::SweepJob> jobs;
    for (double snr : spec.snr_values)
        for (int m : spec.m_values)
            for (int k : spec.k_values)
                for (int t = 0; t < spec.trials; ++t) jobs.push_back({m, k, snr, t, jobs.size()});

    std::vector<std::vector<TrialRecord>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) results[i] = detail::run_job(spec, jobs[i]);
    };
    const int nw = std::min<int>(spec.workers, static_cast<int>(jobs.size()));
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    }

    std::vector<TrialRecord> out;
    out.reserve(jobs.size() * spec.solvers.size());
    for (auto& r : results)
        for (auto& rec : r) out.push_back(std::move(rec));
    return out;
}

inline const char* kRecordHeader =
    "solver,m,n,k,q,d,snr_db,seed,trial,rse,exact,iterations,reshuffles,runtime_s,status";

inline void write_records(std::ostream& out, const std::vector<TrialRecord>& records) {
    using csv::format_double;
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.solver << ',' << r.m << ',' << r.n << ',' << r.k << ',' << r.q << ',' << format_double(r.d) << ','
            << format_double(r.snr_db) << ',' << r.seed << ',' << r.trial << ',' << format_double(r.rse) << ','
            << r.exact << ',' << r.iterations << ',' << r.reshuffles << ',' << format_double(r.runtime_s) << ','
            << r.status << '\n';
    }
}

inline std::vector<TrialRecord> read_records(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument(name + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordHeader) throw InvalidArgument(name + ":1: unexpected header");
    std::vector<TrialRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto f = csv::split(line);
        if (f.size() != 15) throw InvalidArgument(where + ": expected 15 fields, found " + std::to_string(f.size()));
        auto num = [&](int i) { return csv::parse_double(f[i], where); };
        auto integer = [&](int i) {
            const double v = num(i);
            if (v != std::floor(v)) throw InvalidArgument(where + ": field " + std::to_string(i + 1) + " is not an integer");
            return v;
        };
        TrialRecord r;
        r.solver = std::string(f[0]);
        r.m = static_cast<int>(integer(1));
        r.n = static_cast<int>(integer(2));
        r.k = static_cast<int>(integer(3));
        r.q = static_cast<int>(integer(4));
        r.d = num(5);
        r.snr_db = num(6);
        r.seed = std::stoull(std::string(f[7]));
        r.trial = static_cast<int>(integer(8));
        r.rse = num(9);
        r.exact = static_cast<int>(integer(10));
        r.iterations = static_cast<std::int64_t>(integer(11));
        r.reshuffles = static_cast<int>(integer(12));
        r.runtime_s = num(13);
        r.status = std::string(f[14]);
        out.push_back(std::move(r));
    }
    return out;
}

struct SummaryRow {
    std::string solver;
    int m = 0, n = 0, k = 0, q = 1;
    double d = 1, snr_db = kNoNoise;
    int count = 0;     // successful trials
    int failures = 0;  // status != ok
    double mean_rse = 0, se_rse = 0;
    double exact_rate = 0, se_exact = 0;
    double mean_iterations = 0, se_iterations = 0;
    double mean_reshuffles = 0;
    double mean_runtime_s = 0;
};

namespace detail {

// Mean and standard error of the mean (sample std / sqrt(count)).
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

}  // namespace detail

/// Per (solver, m, n, k, q, d, snr) summaries, in first-appearance order.
inline std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw InvalidArgument("aggregate: no records");
    using Key = std::tuple<std::string, int, int, int, int, double, double>;
    std::map<Key, std::size_t> index;
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> rse_v, exact_v, it_v, resh_v, time_v;
    for (const auto& r : records) {
        const Key key{r.solver, r.m, r.n, r.k, r.q, r.d, r.snr_db};
        auto [it, inserted] = index.emplace(key, rows.size());
        if (inserted) {
            SummaryRow row;
            row.solver = r.solver;
            row.m = r.m;
            row.n = r.n;
            row.k = r.k;
            row.q = r.q;
            row.d = r.d;
            row.snr_db = r.snr_db;
            rows.push_back(row);
            for (auto* v : {&rse_v, &exact_v, &it_v, &resh_v, &time_v}) v->emplace_back();
        }
        const std::size_t g = it->second;
        if (r.status != "ok") {
            ++rows[g].failures;
            continue;
        }
        rse_v[g].push_back(r.rse);
        exact_v[g].push_back(r.exact);
        it_v[g].push_back(static_cast<double>(r.iterations));
        resh_v[g].push_back(r.reshuffles);
        time_v[g].push_back(r.runtime_s);
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        auto& row = rows[g];
        row.count = static_cast<int>(rse_v[g].size());
        std::tie(row.mean_rse, row.se_rse) = detail::mean_se(rse_v[g]);
        std::tie(row.exact_rate, row.se_exact) = detail::mean_se(exact_v[g]);
        std::tie(row.mean_iterations, row.se_iterations) = detail::mean_se(it_v[g]);
        row.mean_reshuffles = detail::mean_se(resh_v[g]).first;
        row.mean_runtime_s = detail::mean_se(time_v[g]).first;
    }
    return rows;
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    using csv::format_double;
    out << "solver,m,n,k,q,d,snr_db,count,failures,mean_rse,se_rse,exact_rate,se_exact,mean_iterations,"
           "se_iterations,mean_reshuffles,mean_runtime_s\n";
    for (const auto& r : rows) {
        out << r.solver << ',' << r.m << ',' << r.n << ',' << r.k << ',' << r.q << ',' << format_double(r.d) << ','
            << format_double(r.snr_db) << ',' << r.count << ',' << r.failures << ',' << format_double(r.mean_rse)
            << ',' << format_double(r.se_rse) << ',' << format_double(r.exact_rate) << ','
            << format_double(r.se_exact) << ',' << format_double(r.mean_iterations) << ','
            << format_double(r.se_iterations) << ',' << format_double(r.mean_reshuffles) << ','
            << format_double(r.mean_runtime_s) << '\n';
    }
}

}  // namespace fvsr
