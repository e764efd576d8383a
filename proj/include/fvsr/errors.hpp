#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace fvsr {

// Bad caller input: sizes, ranges, empty data.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A point outside the domain of a penalty or objective.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Solver or experiment configuration that cannot run.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problem data the requested method cannot handle (e.g. rank deficiency).
class InvalidProblem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An enumeration larger than its configured budget was refused.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, double count, double budget)
        : std::runtime_error(what), count_(count), budget_(budget) {}

    double count() const noexcept { return count_; }
    double budget() const noexcept { return budget_; }

private:
    double count_;
    double budget_;
};

// An iterate became non-finite; carries the last finite iterates.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, Eigen::VectorXd x, Eigen::VectorXd z,
                     Eigen::VectorXd mu, std::int64_t iteration)
        : std::runtime_error(what),
          x_(std::move(x)),
          z_(std::move(z)),
          mu_(std::move(mu)),
          iteration_(iteration) {}

    const Eigen::VectorXd& last_x() const noexcept { return x_; }
    const Eigen::VectorXd& last_z() const noexcept { return z_; }
    const Eigen::VectorXd& last_mu() const noexcept { return mu_; }
    std::int64_t iteration() const noexcept { return iteration_; }

private:
    Eigen::VectorXd x_, z_, mu_;
    std::int64_t iteration_;
};

}  // namespace fvsr
