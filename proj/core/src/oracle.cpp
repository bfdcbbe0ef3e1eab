#include "strongenv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "strongenv/calculus.hpp"
#include "strongenv/envelope.hpp"

namespace strongenv {

namespace {

void require_inputs(const FiltrationTree& tree, const TimeGrid& grid, const char* what)
{
    if (grid.level_count() != tree.level_count())
        throw std::invalid_argument(std::string(what) + ": grid does not match the tree");
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b, std::uint64_t limit)
{
    if (a == 0 || b == 0) return 0;
    if (a > limit / b) return limit;
    return std::min(a * b, limit);
}

} // namespace

std::uint64_t stopping_time_count(const FiltrationTree& tree, const TimeGrid& grid,
                                  std::uint64_t cap)
{
    require_inputs(tree, grid, "stopping_time_count");
    const std::uint64_t limit = cap == std::numeric_limits<std::uint64_t>::max() ? cap : cap + 1;
    std::vector<std::uint64_t> count(tree.node_count(), 1);
    for (NodeId n = static_cast<NodeId>(tree.node_count()) - 1; n >= 0; --n) {
        if (tree.is_leaf(n)) continue; // cemetery: stop is the only choice
        std::uint64_t prod = 1;
        for (NodeId c = tree.child_begin(n); c < tree.child_end(n); ++c)
            prod = sat_mul(prod, count[static_cast<std::size_t>(c)], limit);
        const std::uint64_t stop_here = grid.is_weighted(tree.level(n)) ? 1 : 0;
        count[static_cast<std::size_t>(n)] = std::min(prod + stop_here, limit);
    }
    return count[0];
}

bool StoppingTimeEnumeration::may_stop(NodeId n) const
{
    return tree_->is_leaf(n) || weighted_level_[static_cast<std::size_t>(tree_->level(n))] != 0;
}

StoppingTimeEnumeration::StoppingTimeEnumeration(const FiltrationTree& tree, const TimeGrid& grid,
                                                 std::uint64_t cap)
    : tree_(&tree), stopped_(tree.node_count(), 0), weighted_level_(grid.level_count(), 0)
{
    require_inputs(tree, grid, "StoppingTimeEnumeration");
    for (int k = 0; k < grid.cemetery_level(); ++k)
        weighted_level_[static_cast<std::size_t>(k)] = grid.is_weighted(k) ? 1 : 0;
    total_ = stopping_time_count(tree, grid, cap);
    if (total_ > cap)
        throw std::invalid_argument("StoppingTimeEnumeration: " + std::to_string(total_) +
                                    "+ stopping times exceed the cap of " + std::to_string(cap));
    reset(0);
}

void StoppingTimeEnumeration::reset(NodeId n)
{
    // First state in the sub-enumeration under n: stop if allowed, otherwise
    // continue with every child at its first state.
    if (may_stop(n)) {
        stopped_[static_cast<std::size_t>(n)] = 1;
        return;
    }
    stopped_[static_cast<std::size_t>(n)] = 0;
    for (NodeId c = tree_->child_begin(n); c < tree_->child_end(n); ++c) reset(c);
}

bool StoppingTimeEnumeration::advance(NodeId n)
{
    if (stopped_[static_cast<std::size_t>(n)]) {
        if (tree_->is_leaf(n)) return false; // cemetery: nothing after "stop"
        stopped_[static_cast<std::size_t>(n)] = 0;
        for (NodeId c = tree_->child_begin(n); c < tree_->child_end(n); ++c) reset(c);
        return true;
    }
    // Mixed-radix step over the children, last child fastest.
    for (NodeId c = tree_->child_end(n) - 1; c >= tree_->child_begin(n); --c) {
        if (advance(c)) {
            for (NodeId d = c + 1; d < tree_->child_end(n); ++d) reset(d);
            return true;
        }
    }
    return false;
}

std::optional<StoppingTime> StoppingTimeEnumeration::next()
{
    if (exhausted_) return std::nullopt;
    std::vector<std::uint8_t> flags(tree_->node_count(), 0);
    // The stop cut: stopped nodes whose ancestors all continue.  States below
    // a stopped node are stale by construction and are not read.
    std::vector<NodeId> stack{0};
    while (!stack.empty()) {
        const NodeId n = stack.back();
        stack.pop_back();
        if (stopped_[static_cast<std::size_t>(n)]) {
            flags[static_cast<std::size_t>(n)] = 1;
            continue;
        }
        for (NodeId c = tree_->child_begin(n); c < tree_->child_end(n); ++c) stack.push_back(c);
    }
    ++emitted_;
    if (!advance(0)) exhausted_ = true;
    return StoppingTime::from_flags(*tree_, std::move(flags));
}

std::vector<StoppingTime> enumerate_stopping_times(const FiltrationTree& tree,
                                                   const TimeGrid& grid, std::uint64_t cap)
{
    StoppingTimeEnumeration en(tree, grid, cap);
    std::vector<StoppingTime> out;
    while (auto tau = en.next()) out.push_back(std::move(*tau));
    return out;
}

double root_value_by_enumeration(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, std::uint64_t cap)
{
    if (x.size() != tree.node_count())
        throw std::invalid_argument("root_value_by_enumeration: process does not match the tree");
    AdaptedProcess masked(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (grid.is_weighted(tree.level(n))) masked[n] = x[n];

    StoppingTimeEnumeration en(tree, grid, cap);
    double best = -std::numeric_limits<double>::infinity();
    while (auto tau = en.next()) {
        const RandomVariableAtStop rv = value_at_stopping_time(tree, masked, *tau);
        best = std::max(best, rv.expectation());
    }
    return best;
}

AdaptedProcess obstacle_operator(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, const AdaptedProcess& y)
{
    require_inputs(tree, grid, "obstacle_operator");
    if (x.size() != tree.node_count() || y.size() != tree.node_count())
        throw std::invalid_argument("obstacle_operator: process does not match the tree");
    AdaptedProcess out(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n) {
        const double m = expect_children(tree, n, y);
        out[n] = grid.is_weighted(tree.level(n)) ? std::max(x[n], m) : m;
    }
    return out;
}

AdaptedProcess envelope_by_value_iteration(const FiltrationTree& tree, const TimeGrid& grid,
                                           const AdaptedProcess& x, double start_level,
                                           double tol)
{
    require_inputs(tree, grid, "envelope_by_value_iteration");
    if (x.size() != tree.node_count())
        throw std::invalid_argument("envelope_by_value_iteration: process does not match the tree");
    if (!(tol >= 0.0))
        throw std::invalid_argument("envelope_by_value_iteration: tol must be >= 0");
    double sup_weighted = 0.0;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n)
        if (grid.is_weighted(tree.level(n))) sup_weighted = std::max(sup_weighted, x[n]);
    if (!(start_level >= sup_weighted) || !(start_level >= 0.0))
        throw std::invalid_argument("envelope_by_value_iteration: start_level must dominate the "
                                    "weighted obstacle and be non-negative");

    AdaptedProcess y(tree, start_level);
    {
        auto [first, last] = tree.leaf_range();
        for (NodeId n = first; n < last; ++n) y[n] = 0.0;
    }
    const int max_sweeps = 10 * static_cast<int>(tree.level_count());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        AdaptedProcess next = obstacle_operator(tree, grid, x, y);
        double change = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            change = std::max(change, std::abs(next.values()[i] - y.values()[i]));
        y = std::move(next);
        if (change <= tol) return y;
    }
    throw NonConvergenceError("envelope_by_value_iteration: no fixed point after " +
                              std::to_string(max_sweeps) + " sweeps");
}

} // namespace strongenv
