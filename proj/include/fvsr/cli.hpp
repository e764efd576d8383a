#pragma once

// Command-line front end: recover, bench, certify, localize.
//
// Exit codes: 0 success, 2 input error, 3 refused budget, 4 numerical failure.
// A --config file holds key=value lines (keys are long flag names without
// the dashes, '#' starts a comment); flags given on the command line win.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fvsr/baselines.hpp"
#include "fvsr/bench.hpp"
#include "fvsr/certify.hpp"
#include "fvsr/csv_io.hpp"
#include "fvsr/errors.hpp"
#include "fvsr/localize.hpp"
#include "fvsr/model.hpp"
#include "fvsr/solver.hpp"

namespace fvsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitNumerical = 4;

struct Options {
    std::string matrix, y, out, summary, dump_prefix;
    double lambda = 1e-2, alpha = 1.0, d = 1.0;
    int q = 1, n = 100, trials = 100, workers = 1, max_reshuffles = 50;
    std::vector<int> k{10}, m{40};
    std::vector<std::string> snr{"inf"};
    std::vector<std::string> solver{"madmm"};
    std::uint64_t seed = 1;
    double tol = 1e-12, exact_tol = 1e-4, budget = kDefaultSupportBudget, train_snr_db = 25.0, eta = 0.0;
    std::int64_t max_iters = 20000;
    bool timing = false;
};

inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(path + ": cannot open config file");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key=value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

namespace detail {

inline double parse_snr(const std::string& s) { return csv::parse_double(s, "--snr-db"); }

inline SolverConfig solver_config(const Options& o) {
    SolverConfig c;
    c.lambda = o.lambda;
    c.alpha = o.alpha;
    c.iterate_tol = o.tol;
    c.exact_tol = o.exact_tol;
    c.max_iters = o.max_iters;
    c.max_reshuffles = o.max_reshuffles;
    c.seed = o.seed;
    return c;
}

inline BaselineConfig baseline_config(const Options& o) {
    BaselineConfig c;
    c.lambda = o.lambda;
    c.alpha = o.alpha;
    c.iterate_tol = o.tol;
    c.max_iters = o.max_iters;
    return c;
}

template <class F>
void with_output(const std::string& path, std::ostream& fallback, F&& f) {
    if (path.empty() || path == "-") {
        f(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) throw InvalidArgument(path + ": cannot open for writing");
    f(file);
}

inline int cmd_recover(const Options& o, std::ostream& out) {
    if (o.matrix.empty() || o.y.empty()) throw InvalidArgument("recover needs --matrix and --y");
    if (o.solver.size() != 1) throw InvalidArgument("recover takes exactly one --solver");
    const Matrix A = csv::read_matrix_file(o.matrix);
    const Vector y = csv::read_vector_file(o.y);
    if (y.size() != A.rows())
        throw InvalidArgument(o.y + ": measurement length " + std::to_string(y.size()) + " does not match " +
                              std::to_string(A.rows()) + " rows of " + o.matrix);
    const Problem problem(A, y);
    const Alphabet alphabet(o.d, o.q);
    const Method method = parse_method(o.solver.front());
    const auto r = run_method(method, problem, alphabet, solver_config(o), baseline_config(o));
    with_output(o.out, out, [&](std::ostream& s) { csv::write_vector(s, r.estimate); });
    out << "solver=" << method_name(method) << " iterations=" << r.iterations << " reshuffles=" << r.reshuffles
        << " converged=" << r.converged << " exact=" << r.exact
        << " stationarity_residual=" << csv::format_double(r.stationarity_residual)
        << " objective=" << csv::format_double(r.objective) << '\n';
    return kExitOk;
}

inline int cmd_bench(const Options& o, std::ostream& out) {
    ExperimentSpec spec;
    spec.n = o.n;
    spec.k_values = o.k;
    spec.m_values = o.m;
    spec.alphabet = Alphabet(o.d, o.q);
    spec.snr_values.clear();
    for (const auto& s : o.snr) spec.snr_values.push_back(parse_snr(s));
    spec.trials = o.trials;
    spec.seed = o.seed;
    spec.solvers.clear();
    for (const auto& s : o.solver) spec.solvers.push_back(parse_method(s));
    spec.solver = solver_config(o);
    spec.baseline = baseline_config(o);
    spec.workers = o.workers;
    spec.record_timing = o.timing;
    const auto records = run_sweep(spec);
    with_output(o.out, out, [&](std::ostream& s) { write_records(s, records); });
    if (!o.summary.empty()) with_output(o.summary, out, [&](std::ostream& s) { write_summary(s, aggregate(records)); });
    return kExitOk;
}

inline int cmd_certify(const Options& o, std::ostream& out) {
    if (o.matrix.empty()) throw InvalidArgument("certify needs --matrix");
    if (o.k.size() != 1) throw InvalidArgument("certify takes exactly one --k");
    const Matrix A = csv::read_matrix_file(o.matrix);
    const auto report = certify_all_supports(A, o.lambda, Alphabet(o.d, o.q), o.k.front(), o.budget);
    with_output(o.out, out, [&](std::ostream& s) { write_certificate_csv(s, report); });
    std::ostringstream worst;
    for (std::size_t i = 0; i < report.worst_support.size(); ++i) worst << (i ? ";" : "") << report.worst_support[i];
    out << "supports=" << report.supports.size() << " worst_support=" << worst.str()
        << " worst_min_eig=" << csv::format_double(report.worst_min_eig) << " pass=" << report.pass << '\n';
    return kExitOk;
}

inline int cmd_localize(const Options& o, std::ostream& out) {
    loc::LocExperiment ex;
    ex.m_values = o.m;
    if (o.k.size() != 1) throw InvalidArgument("localize takes exactly one --k");
    ex.k = o.k.front();
    ex.trials = o.trials;
    ex.seed = o.seed;
    ex.train_snr_db = o.train_snr_db;
    ex.meas_noise_std = o.eta;
    ex.config.lambda = o.lambda;
    ex.config.alpha = o.alpha;
    ex.config.iterate_tol = o.tol;
    ex.config.max_iters = o.max_iters;
    ex.solvers.clear();
    for (const auto& s : o.solver) ex.solvers.push_back(loc::parse_loc_solver(s));
    const auto records = loc::run_localization(ex);
    with_output(o.out, out, [&](std::ostream& s) { loc::write_loc_records(s, records); });
    if (!o.dump_prefix.empty()) {
        // Trial 0 of the first m, drawn exactly as in the experiment.
        const int m = ex.m_values.front();
        const std::uint64_t key = rng::derive_key(ex.seed, {static_cast<std::uint64_t>(m)});
        auto s_layout = rng::Stream::for_trial(key, 0, rng::Substream::sensors);
        auto s_dict = rng::Stream::for_trial(key, 0, rng::Substream::dictionary_noise);
        const auto layout = loc::random_layout(ex.grid, m, s_layout, ex.seed);
        std::ofstream lf(o.dump_prefix + "layout.csv");
        if (!lf) throw InvalidArgument(o.dump_prefix + "layout.csv: cannot open for writing");
        loc::write_layout(lf, layout);
        csv::write_matrix_file(o.dump_prefix + "dictionary.csv",
                               loc::build_dictionary(ex.grid, layout, ex.rss, ex.train_snr_db, s_dict));
    }
    return kExitOk;
}

// Long flag names present on the command line.
inline std::set<std::string> given_keys(const std::vector<std::string>& args) {
    std::set<std::string> keys;
    for (const auto& a : args) {
        if (a.rfind("--", 0) != 0) continue;
        keys.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
    }
    return keys;
}

}  // namespace detail

/// Runs one command; args exclude the program name.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Options o;
    std::string config_path;
    CLI::App app{"Finite-valued sparse recovery with MCP-Lasso"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* s) {
        s->add_option("--lambda", o.lambda, "regularization weight");
        s->add_option("--alpha", o.alpha, "ADMM penalty");
        s->add_option("--d", o.d, "alphabet spacing");
        s->add_option("--q", o.q, "alphabet levels");
        s->add_option("--seed", o.seed, "master seed");
        s->add_option("--tol", o.tol, "successive-iterate stopping tolerance");
        s->add_option("--max-iters", o.max_iters, "iteration cap per run");
        s->add_option("--out", o.out, "output CSV path (stdout if omitted)");
        s->add_option("--config", config_path, "key=value config file");
    };
    auto solver_flags = [&](CLI::App* s) {
        s->add_option("--exact-tol", o.exact_tol, "relative distance to the lattice counted as exact");
        s->add_option("--max-reshuffles", o.max_reshuffles, "restart budget for madmm_r");
        s->add_option("--solver", o.solver, "madmm | madmm_r | lasso | bp")->delimiter(',');
    };

    auto* recover = app.add_subcommand("recover", "recover one signal from matrix and measurement CSVs");
    common(recover);
    solver_flags(recover);
    recover->add_option("--matrix", o.matrix, "sensing matrix CSV");
    recover->add_option("--y", o.y, "measurement vector CSV");

    auto* bench = app.add_subcommand("bench", "Monte Carlo sweep over m, k and SNR");
    common(bench);
    solver_flags(bench);
    bench->add_option("--n", o.n, "signal length");
    bench->add_option("--k", o.k, "sparsity levels")->delimiter(',');
    bench->add_option("--m", o.m, "measurement counts")->delimiter(',');
    bench->add_option("--snr-db", o.snr, "SNR levels in dB, inf for noise-free")->delimiter(',');
    bench->add_option("--trials", o.trials, "trials per grid point");
    bench->add_option("--workers", o.workers, "parallel trials");
    bench->add_option("--summary", o.summary, "also write per-point summary CSV");
    bench->add_flag("--timing", o.timing, "record wall-clock runtime_s (otherwise 0)");

    auto* certify = app.add_subcommand("certify", "eigenvalue certificates over all supports up to k");
    common(certify);
    certify->add_option("--matrix", o.matrix, "sensing matrix CSV");
    certify->add_option("--k", o.k, "maximum support size");
    certify->add_option("--budget", o.budget, "maximum number of supports");

    auto* localize = app.add_subcommand("localize", "grid localization experiment");
    common(localize);
    localize->add_option("--solver", o.solver, "madmm | lasso")->delimiter(',');
    localize->add_option("--k", o.k, "number of targets");
    localize->add_option("--m", o.m, "sensor counts")->delimiter(',');
    localize->add_option("--trials", o.trials, "trials per m");
    localize->add_option("--train-snr-db", o.train_snr_db, "dictionary training SNR");
    localize->add_option("--eta", o.eta, "measurement noise std");
    localize->add_option("--dump-prefix", o.dump_prefix, "write layout and dictionary of trial 0");

    // Subcommand defaults that differ from the shared ones.
    if (!args.empty() && args.front() == "localize") {
        o.lambda = 1e-3;
        o.tol = 1e-8;
        o.k = {4};
        o.m = {20, 30, 40, 50};
        o.solver = {"madmm", "lasso"};
    }
    if (!args.empty() && args.front() == "bench") o.solver = {"madmm", "lasso"};
    if (!args.empty() && args.front() == "certify") o.k = {2};

    try {
        // Splice config-file values in front of the flags they do not shadow.
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
        }
        if (!config_path.empty() && !args.empty()) {
            const auto given = detail::given_keys(args);
            std::vector<std::string> spliced{args.front()};
            for (const auto& [key, value] : read_config_file(config_path))
                if (!given.count(key) && key != "config") spliced.push_back("--" + key + "=" + value);
            spliced.insert(spliced.end(), args.begin() + 1, args.end());
            args = std::move(spliced);
        }

        std::vector<std::string> argv_s{"fvsr"};
        argv_s.insert(argv_s.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : argv_s) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kExitOk;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << '\n';
            return kExitInput;
        }

        CLI::App* sub = app.get_subcommands().front();
        err << "# resolved configuration\n" << sub->config_to_str(true, false);

        if (sub == recover) return detail::cmd_recover(o, out);
        if (sub == bench) return detail::cmd_bench(o, out);
        if (sub == certify) return detail::cmd_certify(o, out);
        return detail::cmd_localize(o, out);
    } catch (const BudgetExceeded& e) {
        err << "refused: " << e.what() << '\n';
        return kExitBudget;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

}  // namespace fvsr::cli
