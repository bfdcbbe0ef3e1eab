#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv {

// Exact number of distinct stopping times with stops restricted to
// positive-weight levels or the cemetery, counted over reachable decision
// prefixes:
//   count(n) = [n may stop] + prod_children count(c),   count(cemetery) = 1.
// Saturates at cap + 1 so callers can test "count > cap" without overflow.
std::uint64_t stopping_time_count(const FiltrationTree& tree, const TimeGrid& grid,
                                  std::uint64_t cap);

// Lazy, duplicate-free enumeration of those stopping times.  Each emitted
// StoppingTime flags one cut of the tree (every path crosses exactly one
// flagged node) plus the always-on cemetery flags.  Construction throws when
// the exact count exceeds the cap.
class StoppingTimeEnumeration {
public:
    StoppingTimeEnumeration(const FiltrationTree& tree, const TimeGrid& grid,
                            std::uint64_t cap = std::uint64_t{1} << 20);

    std::optional<StoppingTime> next();
    std::uint64_t emitted() const { return emitted_; }
    std::uint64_t total() const { return total_; }

private:
    bool advance(NodeId n);
    void reset(NodeId n);
    bool may_stop(NodeId n) const;

    const FiltrationTree* tree_;
    std::vector<std::uint8_t> stopped_; // per-node choice in the active region
    std::uint64_t total_ = 0;
    std::uint64_t emitted_ = 0;
    bool exhausted_ = false;
    std::vector<std::uint8_t> weighted_level_;
};

// Materialized enumeration (same cap guard).
std::vector<StoppingTime> enumerate_stopping_times(const FiltrationTree& tree,
                                                   const TimeGrid& grid,
                                                   std::uint64_t cap = std::uint64_t{1} << 20);

// sup over enumerated tau of E[X~_tau], where X~ equals X on positive-weight
// levels and 0 elsewhere (in particular 0 on the cemetery).  Agrees with the
// root value of direct_recursion to 1e-12 on trees within the cap.
double root_value_by_enumeration(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x,
                                 std::uint64_t cap = std::uint64_t{1} << 20);

// One sweep of the monotone operator behind the envelope:
// (TY)(n) = 0 on the cemetery, max(X(n), E[Y_{k+1}|n]) on positive-weight
// levels, E[Y_{k+1}|n] otherwise.
AdaptedProcess obstacle_operator(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, const AdaptedProcess& y);

// Iterates T from the constant start_level (>= sup weighted X and >= 0,
// checked) until the sup-node change is <= tol; tree depth + 2 sweeps always
// suffice, and the iteration throws NonConvergenceError at 10 * depth sweeps.
AdaptedProcess envelope_by_value_iteration(const FiltrationTree& tree, const TimeGrid& grid,
                                           const AdaptedProcess& x, double start_level,
                                           double tol = 1e-13);

} // namespace strongenv
