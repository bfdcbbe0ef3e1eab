#pragma once

#include <vector>

#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv::testing {

struct Fixture {
    FiltrationTree tree;
    TimeGrid grid;
    AdaptedProcess x;
};

// Single-path chain: node k sits alone at level k, the last entry of
// `obstacle` is the cemetery value (must be 0).
inline Fixture make_chain(std::vector<double> obstacle, std::vector<double> weights)
{
    const std::size_t n = obstacle.size();
    std::vector<NodeId> parents(n);
    std::vector<double> probs(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) parents[i] = static_cast<NodeId>(i) - 1;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i);
    FiltrationTree tree = FiltrationTree::build(parents, probs);
    TimeGrid grid(std::move(times), std::move(weights));
    AdaptedProcess x(tree, std::move(obstacle));
    return Fixture{std::move(tree), std::move(grid), std::move(x)};
}

// Deterministic chain with obstacle (1, 3, 2, 0) on the unit grid:
//   U = (3, 3, 2, 0), A = (0, 0, 1, 3), M = 3 everywhere,
//   U^{beta=1} = (2, 2, 1, 0), U^{beta=3} = (2.625, 2.625, 1.5, 0).
inline Fixture make_f1() { return make_chain({1.0, 3.0, 2.0, 0.0}, {1.0, 1.0, 1.0}); }

// Same chain with the obstacle spike at a zero-weight level:
// obstacle (0, 5, 0, 0), weights (1, 0, 1).  The weighted envelope is
// identically 0 while the classical recursion on the unit grid gives
// (5, 5, 0, 0).
inline Fixture make_f2() { return make_chain({0.0, 5.0, 0.0, 0.0}, {1.0, 0.0, 1.0}); }

// Two-branch tree: root (obstacle 1) with children (2, 0) at probabilities
// (1/2, 1/2), each followed by its own cemetery node.
inline Fixture make_branch()
{
    FiltrationTree tree =
        FiltrationTree::build({-1, 0, 0, 1, 2}, {1.0, 0.5, 0.5, 1.0, 1.0});
    TimeGrid grid = TimeGrid::unit(2);
    AdaptedProcess x(tree, {1.0, 2.0, 0.0, 0.0, 0.0});
    return Fixture{std::move(tree), std::move(grid), std::move(x)};
}

} // namespace strongenv::testing
