#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plob {

/// Invalid user-facing configuration (bad exponent, degenerate grid, unknown preset...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (mismatched grids, infeasible probe...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The hypothesis of a structure theorem does not hold for the given data.
class PreconditionError : public std::domain_error {
public:
    PreconditionError(const std::string& what, std::vector<std::size_t> nodes)
        : std::domain_error(what), nodes_(std::move(nodes)) {}

    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

private:
    std::vector<std::size_t> nodes_;
};

/// An iterative solver ran out of iterations. Carries the last iterate.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, std::vector<double> last_iterate,
                  long iterations, double pg_norm, double energy)
        : std::runtime_error(what),
          last_iterate_(std::move(last_iterate)),
          iterations_(iterations),
          pg_norm_(pg_norm),
          energy_(energy) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    long iterations() const noexcept { return iterations_; }
    double pg_norm() const noexcept { return pg_norm_; }
    double energy() const noexcept { return energy_; }

private:
    std::vector<double> last_iterate_;
    long iterations_;
    double pg_norm_;
    double energy_;
};

}  // namespace plob
