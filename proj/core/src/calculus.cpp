#include "strongenv/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace strongenv {

namespace {

void require_process(const FiltrationTree& tree, const AdaptedProcess& y, const char* what)
{
    if (y.size() != tree.node_count())
        throw std::invalid_argument(std::string(what) + ": process does not match the tree");
}

void require_tau(const FiltrationTree& tree, const StoppingTime& tau, const char* what)
{
    if (tau.size() != tree.node_count())
        throw std::invalid_argument(std::string(what) + ": stopping time does not match the tree");
}

void require_grid(const FiltrationTree& tree, const TimeGrid& grid, const char* what)
{
    if (grid.level_count() != tree.level_count())
        throw std::invalid_argument(std::string(what) + ": grid does not match the tree");
}

} // namespace

double expect_children(const FiltrationTree& tree, NodeId n, std::span<const double> values)
{
    double sum = 0.0;
    for (NodeId c = tree.child_begin(n); c < tree.child_end(n); ++c)
        sum += tree.transition_prob(c) * values[static_cast<std::size_t>(c)];
    return sum;
}

double expect_children(const FiltrationTree& tree, NodeId n, const AdaptedProcess& values)
{
    return expect_children(tree, n, std::span<const double>(values.values()));
}

std::vector<double> conditional_expectation(const FiltrationTree& tree,
                                            std::span<const double> child_level_values,
                                            int child_level)
{
    if (child_level < 1 || static_cast<std::size_t>(child_level) >= tree.level_count())
        throw std::invalid_argument("conditional_expectation: level out of range");
    auto [cfirst, clast] = tree.level_range(child_level);
    if (child_level_values.size() != static_cast<std::size_t>(clast - cfirst))
        throw std::invalid_argument("conditional_expectation: expected one value per level-" +
                                    std::to_string(child_level) + " node");
    auto [pfirst, plast] = tree.level_range(child_level - 1);
    std::vector<double> out(static_cast<std::size_t>(plast - pfirst), 0.0);
    for (NodeId n = pfirst; n < plast; ++n) {
        double sum = 0.0;
        for (NodeId c = tree.child_begin(n); c < tree.child_end(n); ++c)
            sum += tree.transition_prob(c) * child_level_values[static_cast<std::size_t>(c - cfirst)];
        out[static_cast<std::size_t>(n - pfirst)] = sum;
    }
    return out;
}

std::vector<double> conditional_expectation(const FiltrationTree& tree,
                                            const AdaptedProcess& values, int child_level)
{
    require_process(tree, values, "conditional_expectation");
    if (child_level < 1 || static_cast<std::size_t>(child_level) >= tree.level_count())
        throw std::invalid_argument("conditional_expectation: level out of range");
    auto [cfirst, clast] = tree.level_range(child_level);
    return conditional_expectation(
        tree, std::span<const double>(values.values()).subspan(static_cast<std::size_t>(cfirst),
                                                               static_cast<std::size_t>(clast - cfirst)),
        child_level);
}

SupermartingaleReport is_supermartingale(const FiltrationTree& tree, const AdaptedProcess& y,
                                         double tol)
{
    require_process(tree, y, "is_supermartingale");
    SupermartingaleReport report;
    report.worst_violation = -std::numeric_limits<double>::infinity();
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n) {
        const double violation = expect_children(tree, n, y) - y[n];
        if (violation > report.worst_violation) {
            report.worst_violation = violation;
            report.worst_node = n;
        }
    }
    report.is_supermartingale = report.worst_violation <= tol;
    return report;
}

std::vector<NodeId> resolve_stops(const FiltrationTree& tree, const StoppingTime& tau)
{
    require_tau(tree, tau, "resolve_stops");
    std::vector<NodeId> stop(tree.node_count(), kNoNode);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId p = tree.parent(n);
        if (p != kNoNode && stop[static_cast<std::size_t>(p)] != kNoNode)
            stop[static_cast<std::size_t>(n)] = stop[static_cast<std::size_t>(p)];
        else if (tau.stops_at(n))
            stop[static_cast<std::size_t>(n)] = n;
    }
    return stop;
}

std::vector<NodeId> stop_atoms(const FiltrationTree& tree, const StoppingTime& tau)
{
    const std::vector<NodeId> stop = resolve_stops(tree, tau);
    std::vector<NodeId> atoms;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (stop[static_cast<std::size_t>(n)] == n) atoms.push_back(n);
    return atoms;
}

bool is_ordered(const FiltrationTree& tree, const StoppingTime& tau1, const StoppingTime& tau2)
{
    const std::vector<NodeId> s1 = resolve_stops(tree, tau1);
    const std::vector<NodeId> s2 = resolve_stops(tree, tau2);
    auto [first, last] = tree.leaf_range();
    for (NodeId leaf = first; leaf < last; ++leaf) {
        const NodeId a = s1[static_cast<std::size_t>(leaf)];
        const NodeId b = s2[static_cast<std::size_t>(leaf)];
        if (tree.level(a) > tree.level(b)) return false;
    }
    return true;
}

RandomVariableAtStop value_at_stopping_time(const FiltrationTree& tree, const AdaptedProcess& y,
                                            const StoppingTime& tau)
{
    require_process(tree, y, "value_at_stopping_time");
    RandomVariableAtStop rv;
    for (NodeId n : stop_atoms(tree, tau)) {
        rv.nodes.push_back(n);
        rv.probabilities.push_back(tree.path_prob(n));
        rv.values.push_back(y[n]);
    }
    rv.validate();
    return rv;
}

double stopped_expectation_by_sweep(const FiltrationTree& tree, const AdaptedProcess& y,
                                    const StoppingTime& tau)
{
    require_process(tree, y, "stopped_expectation_by_sweep");
    require_tau(tree, tau, "stopped_expectation_by_sweep");
    std::vector<double> v(y.values());
    for (int k = tree.cemetery_level() - 1; k >= 0; --k) {
        auto [first, last] = tree.level_range(k);
        for (NodeId n = first; n < last; ++n)
            if (!tau.stops_at(n)) v[static_cast<std::size_t>(n)] = expect_children(tree, n, v);
    }
    return v[0];
}

namespace {

RandomVariableAtStop condition_on(const FiltrationTree& tree, const std::vector<NodeId>& znodes,
                                  const std::vector<double>& zvalues, const StoppingTime& tau1)
{
    const std::vector<NodeId> s1 = resolve_stops(tree, tau1);
    for (NodeId n : znodes)
        if (s1[static_cast<std::size_t>(n)] == kNoNode)
            throw std::invalid_argument(
                "conditional_value_at: ordering violation, tau1 stops after the sampled time "
                "at node " + tree.path_string(n));

    std::vector<double> val(tree.node_count(), 0.0);
    std::vector<std::uint8_t> defined(tree.node_count(), 0);
    for (std::size_t i = 0; i < znodes.size(); ++i) {
        val[static_cast<std::size_t>(znodes[i])] = zvalues[i];
        defined[static_cast<std::size_t>(znodes[i])] = 1;
    }
    for (int k = tree.cemetery_level() - 1; k >= 0; --k) {
        auto [first, last] = tree.level_range(k);
        for (NodeId n = first; n < last; ++n) {
            if (defined[static_cast<std::size_t>(n)]) continue;
            bool all = true;
            for (NodeId c = tree.child_begin(n); all && c < tree.child_end(n); ++c)
                all = defined[static_cast<std::size_t>(c)] != 0;
            if (all) {
                val[static_cast<std::size_t>(n)] = expect_children(tree, n, val);
                defined[static_cast<std::size_t>(n)] = 1;
            }
        }
    }

    RandomVariableAtStop rv;
    for (NodeId a : stop_atoms(tree, tau1)) {
        if (!defined[static_cast<std::size_t>(a)])
            throw std::invalid_argument("conditional_value_at: sampled values do not cover the "
                                        "subtree of atom " + tree.path_string(a));
        rv.nodes.push_back(a);
        rv.probabilities.push_back(tree.path_prob(a));
        rv.values.push_back(val[static_cast<std::size_t>(a)]);
    }
    rv.validate();
    return rv;
}

} // namespace

RandomVariableAtStop conditional_value_at(const FiltrationTree& tree,
                                          const RandomVariableAtStop& z, const StoppingTime& tau1)
{
    require_tau(tree, tau1, "conditional_value_at");
    return condition_on(tree, z.nodes, z.values, tau1);
}

RandomVariableAtStop conditional_value_at(const FiltrationTree& tree, const AdaptedProcess& z,
                                          const StoppingTime& tau1)
{
    require_process(tree, z, "conditional_value_at");
    require_tau(tree, tau1, "conditional_value_at");
    auto [first, last] = tree.leaf_range();
    std::vector<NodeId> nodes;
    std::vector<double> values;
    for (NodeId n = first; n < last; ++n) {
        nodes.push_back(n);
        values.push_back(z[n]);
    }
    return condition_on(tree, nodes, values, tau1);
}

double lp_norm(const RandomVariableAtStop& z, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        sum += z.probabilities[i] * std::pow(std::abs(z.values[i]), p);
    return std::pow(sum, 1.0 / p);
}

double s2_norm(const FiltrationTree& tree, const TimeGrid& grid, const AdaptedProcess& y)
{
    require_process(tree, y, "s2_norm");
    require_grid(tree, grid, "s2_norm");
    // Pathwise running max of Y^2 over weighted levels and the cemetery.
    std::vector<double> running(tree.node_count(), 0.0);
    double total = 0.0;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const int k = tree.level(n);
        const NodeId p = tree.parent(n);
        double m = p == kNoNode ? 0.0 : running[static_cast<std::size_t>(p)];
        if (grid.is_weighted(k) || k == tree.cemetery_level()) m = std::max(m, y[n] * y[n]);
        running[static_cast<std::size_t>(n)] = m;
        if (tree.is_leaf(n)) total += tree.path_prob(n) * m;
    }
    return std::sqrt(total);
}

AdaptedProcess quadratic_variation(const FiltrationTree& tree, const AdaptedProcess& y)
{
    require_process(tree, y, "quadratic_variation");
    AdaptedProcess qv(tree, 0.0);
    for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId p = tree.parent(n);
        const double d = y[n] - y[p];
        qv[n] = qv[p] + d * d;
    }
    return qv;
}

double h2_norm_canonical(const FiltrationTree& tree, const AdaptedProcess& y,
                         const AdaptedProcess& m, const AdaptedProcess& a)
{
    require_process(tree, y, "h2_norm_canonical");
    require_process(tree, m, "h2_norm_canonical");
    require_process(tree, a, "h2_norm_canonical");
    double scale = 1.0;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        scale = std::max({scale, std::abs(y[n]), std::abs(m[n]), std::abs(a[n])});
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (std::abs(y[n] - (m[n] - a[n])) > 1e-10 * scale)
            throw std::invalid_argument("h2_norm_canonical: (M, A) is not a decomposition of Y "
                                        "at node " + tree.path_string(n));

    const AdaptedProcess qv = quadratic_variation(tree, m);
    std::vector<double> tv(tree.node_count(), 0.0); // total variation of A along the path
    double total = 0.0;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId p = tree.parent(n);
        if (p != kNoNode) tv[static_cast<std::size_t>(n)] = tv[static_cast<std::size_t>(p)] + std::abs(a[n] - a[p]);
        if (tree.is_leaf(n)) {
            const double v = std::sqrt(qv[n]) + tv[static_cast<std::size_t>(n)];
            total += tree.path_prob(n) * v * v;
        }
    }
    return std::sqrt(total);
}

} // namespace strongenv
