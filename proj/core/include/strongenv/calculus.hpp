#pragma once

#include <span>
#include <vector>

#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv {

// E[Y_{k+1} | n] for an inner node n: the probability-weighted sum over the
// children, in child-id order.  Every backward sweep in the library funnels
// through this helper so that repeated evaluations are bit-identical.
double expect_children(const FiltrationTree& tree, NodeId n, std::span<const double> values);
double expect_children(const FiltrationTree& tree, NodeId n, const AdaptedProcess& values);

// One-step conditional expectation of values living on level `child_level`,
// returned on level child_level - 1 (indexed by offset within the level).
// Throws if child_level is out of range or the input size is wrong.
std::vector<double> conditional_expectation(const FiltrationTree& tree,
                                            std::span<const double> child_level_values,
                                            int child_level);
std::vector<double> conditional_expectation(const FiltrationTree& tree,
                                            const AdaptedProcess& values,
                                            int child_level);

struct SupermartingaleReport {
    bool is_supermartingale = false;
    // max over inner nodes of E[Y_{k+1}|n] - Y(n); <= tol passes.
    double worst_violation = 0.0;
    NodeId worst_node = kNoNode;
};

SupermartingaleReport is_supermartingale(const FiltrationTree& tree, const AdaptedProcess& y,
                                         double tol);

// Per node: the stop node of tau on the path at or above n (kNoNode while
// tau has not stopped yet).
std::vector<NodeId> resolve_stops(const FiltrationTree& tree, const StoppingTime& tau);
// The atoms of tau: its minimal flagged nodes, in id order.
std::vector<NodeId> stop_atoms(const FiltrationTree& tree, const StoppingTime& tau);
// True iff tau1 <= tau2 along every path.
bool is_ordered(const FiltrationTree& tree, const StoppingTime& tau1, const StoppingTime& tau2);

// Y sampled at tau, computed pathwise (atom-by-atom).
RandomVariableAtStop value_at_stopping_time(const FiltrationTree& tree, const AdaptedProcess& y,
                                            const StoppingTime& tau);
// E[Y_tau] via a backward sweep; an independent route that must agree with
// value_at_stopping_time(...).expectation() to 1e-12.
double stopped_expectation_by_sweep(const FiltrationTree& tree, const AdaptedProcess& y,
                                    const StoppingTime& tau);

// E[Z | F_{tau1}] on the atoms of tau1, where Z is measurable at some
// tau >= tau1 (backward sweep from Z's nodes to the tau1 atoms).  Throws
// std::invalid_argument if tau1 > tau on some path.
RandomVariableAtStop conditional_value_at(const FiltrationTree& tree,
                                          const RandomVariableAtStop& z,
                                          const StoppingTime& tau1);
// Process overload: conditions the cemetery values, E[Z_cemetery | F_{tau1}].
RandomVariableAtStop conditional_value_at(const FiltrationTree& tree, const AdaptedProcess& z,
                                          const StoppingTime& tau1);

// (sum_i p_i |z_i|^p)^(1/p); requires p >= 1.
double lp_norm(const RandomVariableAtStop& z, double p);

// (E[max of Y^2 over the weighted levels and the cemetery, along each
// path])^(1/2).
double s2_norm(const FiltrationTree& tree, const TimeGrid& grid, const AdaptedProcess& y);

// Pathwise bracket: [Y](n) = sum of squared increments of Y along the path
// from the root to n; zero at the root.
AdaptedProcess quadratic_variation(const FiltrationTree& tree, const AdaptedProcess& y);

// || [M]_inf^(1/2) + sum |dA| ||_{L^2} for the decomposition Y = M - A.
// Throws if (M, A) fails to reproduce Y within 1e-10 * scale.
double h2_norm_canonical(const FiltrationTree& tree, const AdaptedProcess& y,
                         const AdaptedProcess& m, const AdaptedProcess& a);

} // namespace strongenv
