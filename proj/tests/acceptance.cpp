// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fvsr/fvsr.hpp"

using namespace fvsr;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail, double seconds) {
    std::printf("%s %s  %s  (%.1fs)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <class F>
void criterion(const char* id, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail += std::string(" exception: ") + e.what();
    }
    report(id, pass, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ExperimentSpec base_spec() {
    ExperimentSpec s;
    s.n = 100;
    s.k_values = {10};
    s.trials = 100;
    s.seed = 1;
    s.solver.lambda = 1e-2;
    s.solver.alpha = 1.0;
    s.baseline.lambda = 1e-2;
    s.baseline.alpha = 1.0;
    s.record_timing = false;
    return s;
}

std::map<std::pair<std::string, int>, SummaryRow> by_solver_m(const std::vector<TrialRecord>& records) {
    std::map<std::pair<std::string, int>, SummaryRow> out;
    for (const auto& row : aggregate(records)) out[{row.solver, row.m}] = row;
    return out;
}

Problem instance(std::uint64_t seed, int m, int n, int k, const Alphabet& a) {
    auto sm = rng::Stream::for_trial(seed, 0, rng::Substream::matrix);
    auto ss = rng::Stream::for_trial(seed, 0, rng::Substream::signal);
    return Problem::from_truth(gen_gaussian_matrix(m, n, sm), gen_signal(n, k, a, ss));
}

// Cyclic coordinate descent for 1/2||y - Ax||^2 + lambda ||x||_1.
Vector lasso_coordinate_descent(const Matrix& A, const Vector& y, double lambda) {
    const auto n = A.cols();
    Vector x = Vector::Zero(n);
    Vector r = y;
    const Vector col_sq = A.colwise().squaredNorm();
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        double move = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double rho = A.col(j).dot(r) + col_sq[j] * x[j];
            const double xn = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / col_sq[j];
            const double delta = xn - x[j];
            if (delta != 0) {
                r -= delta * A.col(j);
                x[j] = xn;
                move = std::max(move, std::abs(delta));
            }
        }
        if (move < 1e-15) break;
    }
    return x;
}

struct OracleInstance {
    Problem problem;
    Vector truth;
};

// Tiny certified instances shared by A5 and A7.
std::vector<OracleInstance> certified_instances(int count) {
    std::vector<OracleInstance> out;
    const Alphabet a = Alphabet::ternary();
    for (std::uint64_t seed = 1; static_cast<int>(out.size()) < count && seed < 100000; ++seed) {
        auto s = rng::Stream::from_seed(rng::derive_key(4242, {seed}));
        const int n = 6 + static_cast<int>(s.below(3));  // 6..8
        const int k = 1 + static_cast<int>(s.below(2));  // 1..2
        const int m = n - 2 + static_cast<int>(s.below(2));
        const Matrix A = gen_gaussian_matrix(m, n, s);
        const SparseSignal x = gen_signal(n, k, a, s);
        if (!certify_all_supports(A, 1e-2, a, k).pass) continue;
        if (!kernel_general_position_check(A, x.support(), 1.0)) continue;
        out.push_back({Problem::from_truth(A, x), x.values()});
    }
    return out;
}

}  // namespace

int main() {
    const std::vector<int> m_sweep{20, 25, 30, 35, 40, 45, 50, 55, 60};
    std::vector<TrialRecord> a2_records;

    criterion("A1", [&](std::string& detail) {
        auto spec = base_spec();
        spec.m_values = {35};
        spec.solvers = {Method::madmm_r};
        const auto rows = aggregate(run_sweep(spec));
        detail = "m=35 madmm_r exact rate " + fmt("%.2f", rows[0].exact_rate) + " (need >= 0.95)";
        return rows[0].exact_rate >= 0.95;
    });

    criterion("A2", [&](std::string& detail) {
        auto spec = base_spec();
        spec.m_values = m_sweep;
        spec.solvers = {Method::madmm, Method::lasso};
        a2_records = run_sweep(spec);
        const auto rows = by_solver_m(a2_records);
        bool pass = true;
        for (int m : m_sweep) {
            const auto& a = rows.at({"madmm", m});
            const auto& b = rows.at({"lasso", m});
            const bool ok = a.exact_rate >= b.exact_rate && a.mean_iterations <= b.mean_iterations;
            pass = pass && ok;
            detail += "m=" + std::to_string(m) + ":" + fmt("%.2f", a.exact_rate) + "/" + fmt("%.2f", b.exact_rate) +
                      " it " + fmt("%.0f", a.mean_iterations) + "/" + fmt("%.0f", b.mean_iterations) +
                      (ok ? "" : "!") + " ";
        }
        detail = "madmm/lasso exact and iterations " + detail;
        return pass;
    });

    criterion("A3", [&](std::string& detail) {
        auto spec = base_spec();
        spec.m_values = {40};
        spec.snr_values = {15.0};
        spec.solvers = {Method::madmm, Method::lasso};
        const auto r15 = by_solver_m(run_sweep(spec));
        spec.snr_values = {20.0};
        spec.solvers = {Method::madmm_r};
        const auto r20 = by_solver_m(run_sweep(spec));
        const double lasso = r15.at({"lasso", 40}).exact_rate;
        const double madmm = r15.at({"madmm", 40}).exact_rate;
        const double madmm_r = r20.at({"madmm_r", 40}).exact_rate;
        detail = "15dB lasso " + fmt("%.2f", lasso) + " (need [0.25,0.55]), madmm " + fmt("%.2f", madmm) +
                 " (need >= 0.70); 20dB madmm_r " + fmt("%.2f", madmm_r) + " (need >= 0.95)";
        return lasso >= 0.25 && lasso <= 0.55 && madmm >= 0.70 && madmm_r >= 0.95;
    });

    criterion("A4", [&](std::string& detail) {
        auto spec = base_spec();
        spec.alphabet = Alphabet(1.0, 5);
        spec.m_values = m_sweep;
        spec.solvers = {Method::madmm, Method::lasso};
        const auto rows = by_solver_m(run_sweep(spec));
        const auto rows1 = by_solver_m(a2_records);
        bool pass = true;
        double gain5 = 0, gain1 = 0;
        for (int m : m_sweep) {
            const double a = rows.at({"madmm", m}).exact_rate, b = rows.at({"lasso", m}).exact_rate;
            pass = pass && a >= b;
            gain5 += a - b;
            if (!rows1.empty()) gain1 += rows1.at({"madmm", m}).exact_rate - rows1.at({"lasso", m}).exact_rate;
            detail += "m=" + std::to_string(m) + ":" + fmt("%.2f", a) + "/" + fmt("%.2f", b) + (a >= b ? " " : "! ");
        }
        detail = "q=5 madmm/lasso exact " + detail + "| mean gain q=5 " + fmt("%.3f", gain5 / m_sweep.size()) +
                 " vs q=1 " + fmt("%.3f", gain1 / m_sweep.size());
        return pass;
    });

    const auto oracle = certified_instances(50);

    criterion("A5", [&](std::string& detail) {
        const Alphabet a = Alphabet::ternary();
        int brute = 0, restarts = 0;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            const auto& inst = oracle[i];
            brute += brute_force_minimizer(inst.problem, a, 1e-2, SearchMode::alphabet) == inst.truth;
            SolverConfig c;
            c.seed = i;
            restarts += a.quantize(solve_madmm_r(inst.problem, a, c).estimate) == inst.truth;
        }
        detail = std::to_string(oracle.size()) + " certified instances; brute force " + std::to_string(brute) +
                 "/50 (need 50), madmm_r " + std::to_string(restarts) + "/50 (need >= 48)";
        return oracle.size() == 50 && brute == 50 && restarts >= 48;
    });

    criterion("A6", [&](std::string& detail) {
        int converged = 0, total = 0;
        double worst_res = 0, worst_step = 0;
        for (int i = 0; i < 200; ++i) {
            const bool generic = i % 4 == 3;
            const Alphabet a = generic ? Alphabet(0.5, 3) : Alphabet::ternary();
            const int m = 20 + 5 * (i % 9);
            const double snr = i % 2 ? 20.0 : kNoNoise;
            const auto inst = make_instance(77, 100, m, 10, a, snr, i);
            SolverConfig c;
            const auto r = solve_madmm(inst.problem, a, c);
            ++total;
            if (!r.converged) continue;
            ++converged;
            worst_res = std::max(worst_res, r.stationarity_residual);
            worst_step = std::max(worst_step, r.last_step);
        }
        detail = std::to_string(converged) + "/" + std::to_string(total) + " converged; worst residual " +
                 fmt("%.2e", worst_res) + " (need <= 1e-6), worst final step " + fmt("%.2e", worst_step) +
                 " (need <= 1e-12)";
        return converged > 0 && worst_res <= 1e-6 && worst_step <= 1e-12;
    });

    criterion("A7", [&](std::string& detail) {
        double worst_f = 0;
        for (int i = 0; i < 100; ++i) {
            const double d = std::vector<double>{1.0, 0.5, 2.0}[i % 3];
            const Alphabet a = Alphabet::ternary(d);
            const int k = 1 + i % 15;
            const auto p = instance(rng::derive_key(7, {static_cast<std::uint64_t>(i)}), 40, 100, k, a);
            const double lambda = 1e-2;
            const double f = objective_F(p.truth->values(), p, ObjectiveParams(lambda, a));
            worst_f = std::max(worst_f, std::abs(f - lambda * k * d * d / 2));
        }
        double worst_h = 0;
        auto s = rng::Stream::from_seed(99);
        const auto p = instance(5, 30, 50, 5, Alphabet::ternary());
        for (int i = 0; i < 1000; ++i) {
            Vector x(50);
            for (auto& v : x) v = s.uniform(-1, 1);
            const ObjectiveParams params(1e-2, Alphabet::ternary());
            const ObjectiveParams generic(1e-2, Alphabet(1.0, 1));
            worst_h = std::max(worst_h, std::abs(objective_H(x, p, generic) - objective_F(x, p, params)));
        }
        int norm_ok = 0;
        for (const auto& inst : oracle) {
            const Vector xs = brute_force_minimizer(inst.problem, Alphabet::ternary(), 1e-2, SearchMode::alphabet);
            norm_ok += xs.norm() <= inst.truth.norm() && xs.lpNorm<1>() <= inst.truth.lpNorm<1>();
        }
        // Over the hull too, on the smallest certified instances.
        int grid_checked = 0, grid_ok = 0;
        for (std::uint64_t seed = 0; seed < 40 && grid_checked < 5; ++seed) {
            const auto q = instance(rng::derive_key(11, {seed}), 3, 4, 1, Alphabet::ternary());
            if (!certify_all_supports(q.A, 1e-2, Alphabet::ternary(), 1).pass) continue;
            ++grid_checked;
            const Vector xs = brute_force_minimizer(q, Alphabet::ternary(), 1e-2, SearchMode::grid, 41);
            const Vector& xt = q.truth->values();
            grid_ok += xs.norm() <= xt.norm() + 1e-12 && xs.lpNorm<1>() <= xt.lpNorm<1>() + 1e-12;
        }
        detail = "|F(x~) - lambda k d^2/2| max " + fmt("%.1e", worst_f) + " (need <= 1e-12); |H - F| max " +
                 fmt("%.1e", worst_h) + " (need <= 1e-13); norm bounds " + std::to_string(norm_ok) + "/" +
                 std::to_string(oracle.size()) + " alphabet, " + std::to_string(grid_ok) + "/" +
                 std::to_string(grid_checked) + " hull grid";
        return worst_f <= 1e-12 && worst_h <= 1e-13 && norm_ok == static_cast<int>(oracle.size()) && !oracle.empty() &&
               grid_checked > 0 && grid_ok == grid_checked;
    });

    criterion("A8", [&](std::string& detail) {
        auto spec = base_spec();
        spec.m_values = {40};
        spec.snr_values = {10, 15, 20, 25, 30, kNoNoise};
        spec.solvers = {Method::madmm};
        const auto rows = aggregate(run_sweep(spec));
        int inversions = 0;
        bool within_se = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            detail += csv::format_double(rows[i].snr_db) + "dB:" + fmt("%.2e", rows[i].mean_rse) + " ";
            if (i == 0 || rows[i].mean_rse <= rows[i - 1].mean_rse) continue;
            ++inversions;
            within_se = within_se &&
                        rows[i].mean_rse - rows[i - 1].mean_rse <= std::max(rows[i].se_rse, rows[i - 1].se_rse);
        }
        detail = "madmm mean rse " + detail + "| inversions " + std::to_string(inversions) + " (allow 1 within 1 SE)";
        return inversions == 0 || (inversions == 1 && within_se);
    });

    criterion("A9", [&](std::string& detail) {
        loc::LocExperiment ex;
        ex.m_values = {20, 30, 40, 50};
        ex.k = 4;
        ex.trials = 100;
        ex.seed = 1;
        ex.config.lambda = 1e-3;
        ex.config.iterate_tol = 1e-8;
        const auto records = loc::run_localization(ex);
        bool pass = true;
        for (int m : ex.m_values) {
            std::map<std::string, std::vector<double>> err, it;
            for (const auto& r : records) {
                if (r.m != m) continue;
                err[r.solver].push_back(r.loc_error_m);
                it[r.solver].push_back(static_cast<double>(r.iterations));
            }
            const auto [e_madmm, se_madmm] = fvsr::detail::mean_se(err["madmm"]);
            const auto [e_lasso, se_lasso] = fvsr::detail::mean_se(err["lasso"]);
            const double i_madmm = fvsr::detail::mean_se(it["madmm"]).first, i_lasso = fvsr::detail::mean_se(it["lasso"]).first;
            const bool ok = e_madmm <= e_lasso + std::max(se_madmm, se_lasso) && i_madmm < i_lasso;
            pass = pass && ok;
            detail += "m=" + std::to_string(m) + ": err " + fmt("%.2f", e_madmm) + "/" + fmt("%.2f", e_lasso) +
                      " it " + fmt("%.0f", i_madmm) + "/" + fmt("%.0f", i_lasso) + (ok ? " " : "! ");
        }
        detail = "madmm/lasso " + detail;
        return pass;
    });

    criterion("A10", [&](std::string& detail) {
        double worst_lasso = 0;
        for (int i = 0; i < 10; ++i) {
            const int m = i < 5 ? 40 : 25, n = i < 5 ? 20 : 50;
            auto p = instance(rng::derive_key(31, {static_cast<std::uint64_t>(i)}), m, n, 4, Alphabet::ternary());
            BaselineConfig c;
            c.quantize_output = false;
            const Vector x = solve_lasso_admm(p, Alphabet::ternary(), c).estimate;
            worst_lasso = std::max(worst_lasso, (x - lasso_coordinate_descent(p.A, p.y, c.lambda)).cwiseAbs().maxCoeff());
        }
        double worst_bp = 0;
        for (int i = 0; i < 10; ++i) {
            const auto p = instance(rng::derive_key(32, {static_cast<std::uint64_t>(i)}), 30, 100, 10,
                                    Alphabet::ternary());
            solve_bp_admm(p, Alphabet::ternary(), BaselineConfig{}, [&](const Vector& x, const Vector&, std::int64_t) {
                worst_bp = std::max(worst_bp, (p.A * x - p.y).norm());
            });
        }
        detail = "lasso vs coordinate descent max " + fmt("%.1e", worst_lasso) + " (need <= 1e-8); bp ||Ax-y|| max " +
                 fmt("%.1e", worst_bp) + " (need <= 1e-10)";
        return worst_lasso <= 1e-8 && worst_bp <= 1e-10;
    });

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
