#include "strongenv/process.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace strongenv {

AdaptedProcess::AdaptedProcess(const FiltrationTree& tree, double fill)
    : values_(tree.node_count(), fill)
{
}

AdaptedProcess::AdaptedProcess(const FiltrationTree& tree, std::vector<double> values)
    : values_(std::move(values))
{
    if (values_.size() != tree.node_count())
        throw std::invalid_argument("AdaptedProcess: expected one value per node (got " +
                                    std::to_string(values_.size()) + " for " +
                                    std::to_string(tree.node_count()) + " nodes)");
}

StoppingTime StoppingTime::cemetery_only(const FiltrationTree& tree)
{
    return from_flags(tree, std::vector<std::uint8_t>(tree.node_count(), 0));
}

StoppingTime StoppingTime::at_level(const FiltrationTree& tree, int k)
{
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    auto [first, last] = tree.level_range(k);
    for (NodeId n = first; n < last; ++n) flags[static_cast<std::size_t>(n)] = 1;
    return from_flags(tree, std::move(flags));
}

StoppingTime StoppingTime::from_flags(const FiltrationTree& tree, std::vector<std::uint8_t> flags)
{
    if (flags.size() != tree.node_count())
        throw std::invalid_argument("StoppingTime: expected one flag per node");
    auto [first, last] = tree.leaf_range();
    for (NodeId n = first; n < last; ++n) flags[static_cast<std::size_t>(n)] = 1;
    StoppingTime tau;
    tau.flags_ = std::move(flags);
    return tau;
}

double RandomVariableAtStop::expectation() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += probabilities[i] * values[i];
    return sum;
}

void RandomVariableAtStop::validate() const
{
    if (nodes.size() != probabilities.size() || nodes.size() != values.size())
        throw std::invalid_argument("RandomVariableAtStop: mismatched atom arrays");
    double sum = 0.0;
    for (double p : probabilities) {
        if (!(p > 0.0))
            throw std::invalid_argument("RandomVariableAtStop: atom probabilities must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("RandomVariableAtStop: atom probabilities sum to " +
                                    std::to_string(sum));
}

} // namespace strongenv
