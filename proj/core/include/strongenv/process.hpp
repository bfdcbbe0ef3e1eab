#pragma once

#include <cstdint>
#include <vector>

#include "strongenv/filtration_tree.hpp"

namespace strongenv {

// One real value per tree node, F_k-measurable by construction.
class AdaptedProcess {
public:
    AdaptedProcess() = default;
    AdaptedProcess(const FiltrationTree& tree, double fill);
    // Takes ownership of `values`; throws if the size does not match.
    AdaptedProcess(const FiltrationTree& tree, std::vector<double> values);

    double operator[](NodeId n) const { return values_[static_cast<std::size_t>(n)]; }
    double& operator[](NodeId n) { return values_[static_cast<std::size_t>(n)]; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

// Stopping time as per-node stop flags with first-hit semantics: tau(path) is
// the first flagged node along the path.  Cemetery nodes are always flagged,
// so every path stops.
class StoppingTime {
public:
    StoppingTime() = default;

    // Stops at the cemetery only.
    static StoppingTime cemetery_only(const FiltrationTree& tree);
    // Stops at every node of level k (plus the cemetery).
    static StoppingTime at_level(const FiltrationTree& tree, int k);
    // Arbitrary flags; cemetery flags are forced on.
    static StoppingTime from_flags(const FiltrationTree& tree, std::vector<std::uint8_t> flags);

    bool stops_at(NodeId n) const { return flags_[static_cast<std::size_t>(n)] != 0; }
    std::size_t size() const { return flags_.size(); }
    const std::vector<std::uint8_t>& flags() const { return flags_; }

private:
    std::vector<std::uint8_t> flags_;
};

// A random variable measurable at a stopping time: one value per tau-atom
// (the minimal flagged nodes), with the atom probabilities.
struct RandomVariableAtStop {
    std::vector<NodeId> nodes;
    std::vector<double> probabilities;
    std::vector<double> values;

    std::size_t size() const { return nodes.size(); }
    double expectation() const;
    // Throws unless probabilities are positive and sum to 1 within 1e-12.
    void validate() const;
};

} // namespace strongenv
