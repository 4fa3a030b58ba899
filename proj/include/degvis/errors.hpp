/// @file errors.hpp
/// @brief Exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace degvis {

/// Density reached a nonpositive value during time integration.
/// Carries the offending node and simulation time so a failing run can be
/// reported (and dumped) instead of silently clipped.
class PositivityLossError : public std::runtime_error {
public:
    PositivityLossError(int node, double time, double value)
        : std::runtime_error("density positivity lost at node " + std::to_string(node) +
                             ", t=" + std::to_string(time) + ", rho=" + std::to_string(value)),
          node_(node), time_(time), value_(value) {}

    int node() const { return node_; }
    double time() const { return time_; }
    double value() const { return value_; }

private:
    int node_;
    double time_;
    double value_;
};

/// Initial-data family parameters cannot satisfy the construction
/// constraints even after amplitude rescaling.
class ConstructionError : public std::runtime_error {
public:
    ConstructionError(const std::string& what, double limiting_amplitude)
        : std::runtime_error(what + " (limiting amplitude " +
                             std::to_string(limiting_amplitude) + ")"),
          limiting_amplitude_(limiting_amplitude) {}

    double limiting_amplitude() const { return limiting_amplitude_; }

private:
    double limiting_amplitude_;
};

/// A bound verification was requested on a campaign that is missing
/// completed runs for required viscosity parameters.
class IncompleteCampaignError : public std::runtime_error {
public:
    explicit IncompleteCampaignError(std::vector<double> missing_eps)
        : std::runtime_error(format(missing_eps)), missing_eps_(std::move(missing_eps)) {}

    const std::vector<double>& missing_eps() const { return missing_eps_; }

private:
    static std::string format(const std::vector<double>& eps) {
        std::string s = "incomplete campaign, missing completed runs for eps = {";
        for (std::size_t i = 0; i < eps.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(eps[i]);
        }
        return s + "}";
    }
    std::vector<double> missing_eps_;
};

/// Too few usable data points for a requested fit.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace degvis
