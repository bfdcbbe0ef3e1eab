#include "strongenv/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "strongenv/calculus.hpp"
#include "strongenv/oracle.hpp"

namespace strongenv {

namespace {

constexpr double kStructuralTol = 1e-12;
constexpr double kIdentityTol = 1e-10;
constexpr double kEstimateTol = 1e-9;

// Witness label for a node; the root's child-index path is empty, so name it.
std::string node_label(const FiltrationTree& tree, NodeId n)
{
    const std::string path = tree.path_string(n);
    return path.empty() ? "(root)" : path;
}

void require_process(const FiltrationTree& tree, const AdaptedProcess& y, const char* what)
{
    if (y.size() != tree.node_count())
        throw std::invalid_argument(std::string(what) + ": process does not match the tree");
}

void require_grid(const FiltrationTree& tree, const TimeGrid& grid, const char* what)
{
    if (grid.level_count() != tree.level_count())
        throw std::invalid_argument(std::string(what) + ": grid does not match the tree");
}

void require_ordered(const FiltrationTree& tree, const StoppingTime& tau1,
                     const StoppingTime& tau2, const char* what)
{
    if (!is_ordered(tree, tau1, tau2))
        throw std::invalid_argument(std::string(what) + ": tau1 > tau2 on some path");
}

void require_weighted_stops(const FiltrationTree& tree, const TimeGrid& grid,
                            const StoppingTime& tau, const char* what)
{
    for (const NodeId n : stop_atoms(tree, tau))
        if (!tree.is_leaf(n) && !grid.is_weighted(tree.level(n)))
            throw std::invalid_argument(std::string(what) +
                                        ": stop at a zero-weight level, node " +
                                        node_label(tree, n));
}

double sup_abs(const AdaptedProcess& y)
{
    double s = 0.0;
    for (const double v : y.values()) s = std::max(s, std::abs(v));
    return s;
}

// X restricted to the positive-weight levels, zero elsewhere.
AdaptedProcess weighted_only(const FiltrationTree& tree, const TimeGrid& grid,
                             const AdaptedProcess& x)
{
    AdaptedProcess out(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (grid.is_weighted(tree.level(n))) out[n] = x[n];
    return out;
}

// Backward sweep planting y at the stop nodes of tau; entry n then carries
// E[y_tau | F_n] for every n that tau has not passed yet.
std::vector<double> stop_value_sweep(const FiltrationTree& tree, const AdaptedProcess& y,
                                     const StoppingTime& tau)
{
    std::vector<double> val(tree.node_count(), 0.0);
    for (NodeId n = static_cast<NodeId>(tree.node_count()) - 1; n >= 0; --n)
        val[static_cast<std::size_t>(n)] =
            tau.stops_at(n) ? y[n] : expect_children(tree, n, std::span<const double>(val));
    return val;
}

// tau^eps started from sigma: the first node at or after sigma sitting at a
// positive-weight level with X >= U - eps (cemetery fallback).
StoppingTime epsilon_time_after(const FiltrationTree& tree, const TimeGrid& grid,
                                const AdaptedProcess& u, const AdaptedProcess& x,
                                const StoppingTime& sigma, double eps)
{
    const std::vector<NodeId> resolved = resolve_stops(tree, sigma);
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (resolved[static_cast<std::size_t>(n)] != kNoNode && grid.is_weighted(tree.level(n)) &&
            x[n] >= u[n] - eps)
            flags[static_cast<std::size_t>(n)] = 1;
    return StoppingTime::from_flags(tree, std::move(flags));
}

StoppingTime min_of(const FiltrationTree& tree, const StoppingTime& a, const StoppingTime& b)
{
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        flags[static_cast<std::size_t>(n)] = a.stops_at(n) || b.stops_at(n);
    return StoppingTime::from_flags(tree, std::move(flags));
}

} // namespace

double skorohod_residual(const FiltrationTree& tree, const TimeGrid& grid,
                         const AdaptedProcess& x, const AdaptedProcess& u,
                         const AdaptedProcess& a, const AdaptedProcess& xstar)
{
    require_grid(tree, grid, "skorohod_residual");
    require_process(tree, x, "skorohod_residual");
    require_process(tree, u, "skorohod_residual");
    require_process(tree, a, "skorohod_residual");
    require_process(tree, xstar, "skorohod_residual");
    const double slack = 1e-10 * (1.0 + sup_abs(x));
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        if (!grid.is_weighted(tree.level(n))) continue;
        if (xstar[n] < x[n] - slack || xstar[n] > u[n] + slack)
            throw std::invalid_argument("skorohod_residual: xstar is not sandwiched between the "
                                        "obstacle and the envelope at node " +
                                        node_label(tree, n));
    }
    // Pathwise running integral sum_k (U - Xstar)_k dA_{k+1}, settled at the
    // cemetery; its expectation is the residual.
    std::vector<double> run(tree.node_count(), 0.0);
    for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId q = tree.parent(n);
        run[static_cast<std::size_t>(n)] =
            run[static_cast<std::size_t>(q)] + (u[q] - xstar[q]) * (a[n] - a[q]);
    }
    double total = 0.0;
    auto [first, last] = tree.leaf_range();
    for (NodeId n = first; n < last; ++n)
        total += tree.path_prob(n) * run[static_cast<std::size_t>(n)];
    return total;
}

CheckReport complementarity_check(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& a,
                                  const AdaptedProcess& x)
{
    require_grid(tree, grid, "complementarity_check");
    require_process(tree, u, "complementarity_check");
    require_process(tree, a, "complementarity_check");
    require_process(tree, x, "complementarity_check");
    CheckReport rep{"complementarity", true, 0.0, ""};
    for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId q = tree.parent(n);
        const double da = a[n] - a[q];
        if (da <= kIdentityTol) continue;
        const double contact = std::abs(u[q] - x[q]);
        const bool ok = grid.is_weighted(tree.level(q)) && contact <= kEstimateTol;
        if (contact > rep.worst_residual || !ok) {
            rep.worst_residual = std::max(rep.worst_residual, contact);
            if (!ok || rep.witness.empty()) rep.witness = node_label(tree, q);
        }
        if (!ok) rep.pass = false;
    }
    return rep;
}

SviResidual svi_residual(const FiltrationTree& tree, const TimeGrid& grid,
                         const AdaptedProcess& x, const AdaptedProcess& u,
                         const AdaptedProcess& v, const StoppingTime& tau1,
                         const StoppingTime& tau2)
{
    require_grid(tree, grid, "svi_residual");
    require_process(tree, x, "svi_residual");
    require_process(tree, u, "svi_residual");
    require_process(tree, v, "svi_residual");
    require_ordered(tree, tau1, tau2, "svi_residual");
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (grid.is_weighted(tree.level(n)) && v[n] < x[n])
            throw std::invalid_argument("svi_residual: V fails to dominate the obstacle at "
                                        "positive-weight node " +
                                        node_label(tree, n));

    // Pathwise prefix of sum_s (U - V)_{s-1} dU_s from the root.
    std::vector<double> run(tree.node_count(), 0.0);
    for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId q = tree.parent(n);
        run[static_cast<std::size_t>(n)] =
            run[static_cast<std::size_t>(q)] + (u[q] - v[q]) * (u[n] - u[q]);
    }
    const std::vector<NodeId> r1 = resolve_stops(tree, tau1);
    const std::vector<NodeId> atoms2 = stop_atoms(tree, tau2);
    RandomVariableAtStop z;
    z.nodes = atoms2;
    for (const NodeId n : atoms2) {
        z.probabilities.push_back(tree.path_prob(n));
        const NodeId s1 = r1[static_cast<std::size_t>(n)];
        z.values.push_back(run[static_cast<std::size_t>(n)] -
                           run[static_cast<std::size_t>(s1)]);
    }
    SviResidual out;
    out.by_atom = conditional_value_at(tree, z, tau1);
    out.min_value = std::numeric_limits<double>::infinity();
    for (const double val : out.by_atom.values) out.min_value = std::min(out.min_value, val);
    if (out.by_atom.values.empty()) out.min_value = 0.0;
    return out;
}

CheckReport uniqueness_identity_check(const FiltrationTree& tree, const AdaptedProcess& y,
                                      const AdaptedProcess& yprime, const StoppingTime& tau1,
                                      const StoppingTime& tau2, double tol)
{
    require_process(tree, y, "uniqueness_identity_check");
    require_process(tree, yprime, "uniqueness_identity_check");
    require_ordered(tree, tau1, tau2, "uniqueness_identity_check");
    AdaptedProcess d(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        d[n] = y[n] - yprime[n];
    // Prefix of 2 sum_s D_{s-1} dD_s and the pathwise bracket.
    std::vector<double> run(tree.node_count(), 0.0);
    for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const NodeId q = tree.parent(n);
        run[static_cast<std::size_t>(n)] =
            run[static_cast<std::size_t>(q)] + 2.0 * d[q] * (d[n] - d[q]);
    }
    const AdaptedProcess br = quadratic_variation(tree, d);
    const std::vector<NodeId> r1 = resolve_stops(tree, tau1);
    const std::vector<NodeId> r2 = resolve_stops(tree, tau2);
    const double scale = 1.0 + sup_abs(d) * sup_abs(d);

    CheckReport rep{"uniqueness_identity", true, 0.0, ""};
    auto [first, last] = tree.leaf_range();
    for (NodeId leaf = first; leaf < last; ++leaf) {
        const NodeId s1 = r1[static_cast<std::size_t>(leaf)];
        const NodeId s2 = r2[static_cast<std::size_t>(leaf)];
        const double lhs = d[s2] * d[s2] - d[s1] * d[s1];
        const double rhs = run[static_cast<std::size_t>(s2)] -
                           run[static_cast<std::size_t>(s1)] + br[s2] - br[s1];
        const double res = std::abs(lhs - rhs);
        if (res > rep.worst_residual) {
            rep.worst_residual = res;
            rep.witness = node_label(tree, leaf);
        }
    }
    rep.pass = rep.worst_residual <= tol * scale;
    return rep;
}

CheckReport apriori_increment_check(const FiltrationTree& tree, const TimeGrid& grid,
                                    const AdaptedProcess& x, const AdaptedProcess& u,
                                    const AdaptedProcess& a, const StoppingTime& sigma1,
                                    const StoppingTime& sigma2, double eps)
{
    require_grid(tree, grid, "apriori_increment_check");
    require_process(tree, x, "apriori_increment_check");
    require_process(tree, u, "apriori_increment_check");
    require_process(tree, a, "apriori_increment_check");
    require_ordered(tree, sigma1, sigma2, "apriori_increment_check");
    require_weighted_stops(tree, grid, sigma1, "apriori_increment_check");
    require_weighted_stops(tree, grid, sigma2, "apriori_increment_check");
    if (!(eps > 0.0))
        throw std::invalid_argument("apriori_increment_check: eps must be positive");

    const AdaptedProcess xw = weighted_only(tree, grid, x);
    const StoppingTime taue = epsilon_time_after(tree, grid, u, x, sigma1, eps);
    const StoppingTime taum = min_of(tree, taue, sigma2);

    const RandomVariableAtStop a1 = value_at_stopping_time(tree, a, sigma1);
    const RandomVariableAtStop a2 =
        conditional_value_at(tree, value_at_stopping_time(tree, a, sigma2), sigma1);
    const RandomVariableAtStop xm =
        conditional_value_at(tree, value_at_stopping_time(tree, xw, taum), sigma1);
    const RandomVariableAtStop x2 =
        conditional_value_at(tree, value_at_stopping_time(tree, xw, sigma2), sigma1);

    CheckReport rep{"apriori_increment", true, -std::numeric_limits<double>::infinity(), ""};
    for (std::size_t i = 0; i < a1.size(); ++i) {
        const double lhs = a2.values[i] - a1.values[i];
        const double rhs = xm.values[i] - x2.values[i] + eps;
        const double res = lhs - rhs;
        if (res > rep.worst_residual) {
            rep.worst_residual = res;
            rep.witness = node_label(tree, a1.nodes[i]);
        }
    }
    if (a1.size() == 0) rep.worst_residual = 0.0;
    rep.pass = rep.worst_residual <= kEstimateTol;
    return rep;
}

CheckReport apriori_lp_check(const FiltrationTree& tree, const TimeGrid& grid,
                             const AdaptedProcess& x, const AdaptedProcess& a,
                             const StoppingTime& sigma1, const StoppingTime& sigma2, double p)
{
    require_grid(tree, grid, "apriori_lp_check");
    require_process(tree, x, "apriori_lp_check");
    require_process(tree, a, "apriori_lp_check");
    require_ordered(tree, sigma1, sigma2, "apriori_lp_check");
    if (!(p >= 1.0)) throw std::invalid_argument("apriori_lp_check: p must be >= 1");

    const AdaptedProcess xw = weighted_only(tree, grid, x);
    const std::vector<NodeId> r1 = resolve_stops(tree, sigma1);
    const std::vector<NodeId> r2 = resolve_stops(tree, sigma2);
    double lhs_p = 0.0;
    double rhs_p = 0.0;
    auto [first, last] = tree.leaf_range();
    for (NodeId leaf = first; leaf < last; ++leaf) {
        const NodeId s1 = r1[static_cast<std::size_t>(leaf)];
        const NodeId s2 = r2[static_cast<std::size_t>(leaf)];
        const std::vector<NodeId> path = tree.path_to(leaf);
        double sup = 0.0; // sup over weighted s in [sigma1, sigma2], plus sigma2
        for (int k = tree.level(s1); k <= tree.level(s2); ++k) {
            const NodeId n = path[static_cast<std::size_t>(k)];
            if (grid.is_weighted(k) || n == s2) sup = std::max(sup, std::abs(xw[s2] - xw[n]));
        }
        lhs_p += tree.path_prob(leaf) * std::pow(std::abs(a[s2] - a[s1]), p);
        rhs_p += tree.path_prob(leaf) * std::pow(sup, p);
    }
    const double lhs = std::pow(lhs_p, 1.0 / p);
    const double rhs = p * std::pow(rhs_p, 1.0 / p);
    CheckReport rep{"apriori_lp", true, lhs - rhs, "p=" + std::to_string(p)};
    rep.pass = rep.worst_residual <= kEstimateTol;
    return rep;
}

CheckReport stability_check(const FiltrationTree& tree, const TimeGrid& grid,
                            const AdaptedProcess& x1, const AdaptedProcess& x2,
                            const StoppingTime& tau1, const StoppingTime& tau2)
{
    require_grid(tree, grid, "stability_check");
    require_process(tree, x1, "stability_check");
    require_process(tree, x2, "stability_check");
    require_ordered(tree, tau1, tau2, "stability_check");

    const AdaptedProcess u1 = direct_recursion(tree, grid, x1);
    const AdaptedProcess u2 = direct_recursion(tree, grid, x2);
    AdaptedProcess d(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) d[n] = u2[n] - u1[n];
    const AdaptedProcess br = quadratic_variation(tree, d);
    const std::vector<NodeId> r1 = resolve_stops(tree, tau1);
    const std::vector<NodeId> r2 = resolve_stops(tree, tau2);
    const int tstar = grid.last_weighted_level();

    double lhs = 0.0, s_sq = 0.0, g1_sq = 0.0, g2_sq = 0.0;
    double lhs_t = 0.0, st_sq = 0.0, h1_sq = 0.0, h2_sq = 0.0, term = 0.0;
    auto [first, last] = tree.leaf_range();
    for (NodeId leaf = first; leaf < last; ++leaf) {
        const double pp = tree.path_prob(leaf);
        const std::vector<NodeId> path = tree.path_to(leaf);
        const NodeId s1 = r1[static_cast<std::size_t>(leaf)];
        const NodeId s2 = r2[static_cast<std::size_t>(leaf)];
        lhs += pp * (d[s1] * d[s1] + br[s2] - br[s1]);
        double sup12 = 0.0, sup1 = 0.0, sup2 = 0.0;
        for (int k = tree.level(s1); k <= tree.level(s2); ++k) {
            const NodeId n = path[static_cast<std::size_t>(k)];
            const bool wt = grid.is_weighted(k);
            if (wt) sup12 = std::max(sup12, std::abs(x2[n] - x1[n]));
            if (wt || n == s2) {
                sup1 = std::max(sup1, std::abs(x1[n] - x1[s2]));
                sup2 = std::max(sup2, std::abs(x2[n] - x2[s2]));
            }
        }
        s_sq += pp * sup12 * sup12;
        g1_sq += pp * sup1 * sup1;
        g2_sq += pp * sup2 * sup2;

        const NodeId nt = path[static_cast<std::size_t>(tstar)];
        lhs_t += pp * br[nt];
        double t12 = 0.0, t1 = 0.0, t2 = 0.0;
        for (int k = 0; k <= tstar; ++k) {
            const NodeId n = path[static_cast<std::size_t>(k)];
            if (!grid.is_weighted(k)) continue;
            t12 = std::max(t12, std::abs(x2[n] - x1[n]));
            t1 = std::max(t1, std::abs(x1[n] - x1[nt]));
            t2 = std::max(t2, std::abs(x2[n] - x2[nt]));
        }
        st_sq += pp * t12 * t12;
        h1_sq += pp * t1 * t1;
        h2_sq += pp * t2 * t2;
        term += pp * (x2[nt] - x1[nt]) * (x2[nt] - x1[nt]);
    }
    const double rhs = 4.0 * std::sqrt(s_sq) * (std::sqrt(g1_sq) + std::sqrt(g2_sq));
    const double rhs_t = 4.0 * std::sqrt(st_sq) * (std::sqrt(h1_sq) + std::sqrt(h2_sq)) + term;

    CheckReport rep{"stability", true, 0.0, ""};
    rep.worst_residual = std::max(lhs - rhs, lhs_t - rhs_t);
    rep.witness = lhs - rhs >= lhs_t - rhs_t ? "stopped" : "terminal";
    rep.pass = rep.worst_residual <= kEstimateTol;
    return rep;
}

CheckReport monotone_convergence_check(const FiltrationTree& tree, const TimeGrid& grid,
                                       const AdaptedProcess& x, int n_max)
{
    require_grid(tree, grid, "monotone_convergence_check");
    require_process(tree, x, "monotone_convergence_check");
    if (n_max < 1)
        throw std::invalid_argument("monotone_convergence_check: n_max must be >= 1");

    const AdaptedProcess u = direct_recursion(tree, grid, x);
    CheckReport rep{"monotone_convergence", true, 0.0, ""};
    std::vector<double> prev;
    for (int n = 1; n <= n_max; n *= 2) {
        AdaptedProcess xn(tree, 0.0);
        for (NodeId i = 0; i < static_cast<NodeId>(tree.node_count()); ++i)
            xn[i] = tree.is_leaf(i) ? x[i] : x[i] - 1.0 / n;
        const AdaptedProcess un = direct_recursion(tree, grid, xn);
        for (NodeId i = 0; i < static_cast<NodeId>(tree.node_count()); ++i) {
            // Envelopes are nondecreasing as the shift 1/n shrinks, exactly.
            if (!prev.empty()) {
                const double drop = prev[static_cast<std::size_t>(i)] - un[i];
                if (drop > rep.worst_residual) {
                    rep.worst_residual = drop;
                    rep.witness = "n=" + std::to_string(n) + " " + node_label(tree, i);
                    rep.pass = false;
                }
            }
            const double gap = std::abs(un[i] - u[i]) - 1.0 / n;
            if (gap > kIdentityTol) {
                rep.pass = false;
                if (gap > rep.worst_residual) {
                    rep.worst_residual = gap;
                    rep.witness = "n=" + std::to_string(n) + " " + node_label(tree, i);
                }
            }
        }
        prev = un.values();
    }
    return rep;
}

StoppingTime sample_stopping_time(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& x, Rng& rng)
{
    const double theta = rng.uniform(0.0, 0.5) * (1.0 + sup_abs(x));
    const double q = rng.uniform(0.1, 0.6);
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const double r = rng.uniform(); // drawn for every node: stable stream
        if (tree.is_leaf(n) || !grid.is_weighted(tree.level(n))) continue;
        if (u[n] - x[n] <= theta || r < q) flags[static_cast<std::size_t>(n)] = 1;
    }
    return StoppingTime::from_flags(tree, std::move(flags));
}

std::pair<StoppingTime, StoppingTime> sample_stopping_pair(const FiltrationTree& tree,
                                                           const TimeGrid& grid,
                                                           const AdaptedProcess& u,
                                                           const AdaptedProcess& x, Rng& rng)
{
    StoppingTime tau1 = sample_stopping_time(tree, grid, u, x, rng);
    const double keep = rng.uniform(0.2, 0.8);
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const double r = rng.uniform();
        // Dropping flags can only delay the first hit, so tau2 >= tau1.
        if (!tree.is_leaf(n) && tau1.stops_at(n) && r < keep)
            flags[static_cast<std::size_t>(n)] = 1;
    }
    return {std::move(tau1), StoppingTime::from_flags(tree, std::move(flags))};
}

AdaptedProcess sample_sandwiched(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, const AdaptedProcess& u, Rng& rng)
{
    AdaptedProcess out(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const double r = rng.uniform();
        if (tree.is_leaf(n)) continue;
        out[n] = grid.is_weighted(tree.level(n)) ? x[n] + r * (u[n] - x[n]) : r * u[n];
    }
    return out;
}

AdaptedProcess sample_dominating(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, Rng& rng)
{
    const double s = 1.0 + sup_abs(x);
    AdaptedProcess out(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const double r = rng.uniform();
        if (tree.is_leaf(n)) continue;
        out[n] = grid.is_weighted(tree.level(n)) ? x[n] + r * (1.0 + std::abs(x[n]))
                                                 : x[n] + (2.0 * r - 1.0) * s;
    }
    return out;
}

std::vector<CheckReport> run_full_suite(const FiltrationTree& tree, const TimeGrid& grid,
                                        const AdaptedProcess& x, const SuiteOptions& options)
{
    require_grid(tree, grid, "run_full_suite");
    require_process(tree, x, "run_full_suite");
    options.schedule.validate();

    const EnvelopeResult env = strong_envelope(tree, grid, x, options.schedule);
    const AdaptedProcess& u = env.u;
    const AdaptedProcess& a = env.a;
    const double scale = 1.0 + sup_abs(x);
    const AdaptedProcess xw = weighted_only(tree, grid, x);
    Rng rng(options.sampler_seed);
    std::vector<CheckReport> out;

    { // tower_property: iterated one-step expectations match the direct sum
        CheckReport rep{"tower_property", true, 0.0, ""};
        for (int k = 1; k < static_cast<int>(tree.level_count()); ++k) {
            auto [first, last] = tree.level_range(k);
            std::vector<double> vals;
            double direct = 0.0;
            for (NodeId n = first; n < last; ++n) {
                vals.push_back(u[n]);
                direct += tree.path_prob(n) * u[n];
            }
            for (int j = k; j >= 1; --j) vals = conditional_expectation(tree, vals, j);
            const double res = std::abs(vals[0] - direct);
            if (res > rep.worst_residual) {
                rep.worst_residual = res;
                rep.witness = "level " + std::to_string(k);
            }
        }
        rep.pass = rep.worst_residual <= kStructuralTol * (1.0 + sup_abs(u));
        out.push_back(std::move(rep));
    }

    { // stopped_value_consistency: atom route == sweep route
        CheckReport rep{"stopped_value_consistency", true, 0.0, ""};
        for (int i = 0; i < options.estimate_draws; ++i) {
            const StoppingTime tau = sample_stopping_time(tree, grid, u, x, rng);
            for (const AdaptedProcess* y : {&u, &xw}) {
                const RandomVariableAtStop rv = value_at_stopping_time(tree, *y, tau);
                rv.validate();
                const double res =
                    std::abs(rv.expectation() - stopped_expectation_by_sweep(tree, *y, tau));
                if (res > rep.worst_residual) {
                    rep.worst_residual = res;
                    rep.witness = "draw " + std::to_string(i);
                }
            }
        }
        rep.pass = rep.worst_residual <= kStructuralTol * (1.0 + sup_abs(u));
        out.push_back(std::move(rep));
    }

    { // envelope_structure: non-negative supermartingale, zero cemetery
        CheckReport rep{"envelope_structure", true, 0.0, ""};
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
            const double neg = std::max(-u[n], tree.is_leaf(n) ? std::abs(u[n]) : 0.0);
            if (neg > rep.worst_residual) {
                rep.worst_residual = neg;
                rep.witness = node_label(tree, n);
            }
        }
        const SupermartingaleReport sm = is_supermartingale(tree, u, kStructuralTol);
        if (!sm.is_supermartingale || sm.worst_violation > rep.worst_residual) {
            rep.worst_residual = std::max(rep.worst_residual, sm.worst_violation);
            if (sm.worst_node != kNoNode) rep.witness = node_label(tree, sm.worst_node);
        }
        rep.pass = rep.worst_residual <= kStructuralTol;
        out.push_back(std::move(rep));
    }

    { // domination: exact by the max in the recursion
        CheckReport rep{"domination", true, domination_violation(tree, grid, x, u), ""};
        rep.pass = rep.worst_residual == 0.0;
        out.push_back(std::move(rep));
    }

    std::vector<AdaptedProcess> penalized;
    for (const double beta : options.schedule.betas())
        penalized.push_back(penalized_envelope(tree, grid, x, beta));

    { // penalization_monotone: exact nodewise ordering in beta, capped by U
        CheckReport rep{"penalization_monotone", true, 0.0, ""};
        for (std::size_t b = 0; b < penalized.size(); ++b) {
            const AdaptedProcess& hi = b + 1 < penalized.size() ? penalized[b + 1] : u;
            for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
                const double drop = penalized[b][n] - hi[n];
                if (drop > rep.worst_residual) {
                    rep.worst_residual = drop;
                    rep.witness = node_label(tree, n);
                }
            }
        }
        rep.pass = rep.worst_residual == 0.0;
        out.push_back(std::move(rep));
    }

    { // penalization_limit: last sweep close to U and nearly dominating
        const BetaRow& lastrow = env.sweep.back();
        const double threshold =
            env.converged_by_gap
                ? 10.0 * options.schedule.tol_gap
                : std::max(10.0 * options.schedule.tol_gap, 1e-6 * scale);
        CheckReport rep{"penalization_limit", true, lastrow.sup_gap,
                        "beta=" + std::to_string(lastrow.beta)};
        rep.pass = lastrow.sup_gap <= threshold &&
                   lastrow.domination_violation <= options.schedule.tol_dom;
        out.push_back(std::move(rep));
    }

    { // skorohod_residual: vanishes for sandwiched integrands
        CheckReport rep{"skorohod_residual", true, 0.0, ""};
        AdaptedProcess clipped(tree, 0.0); // X capped by U
        AdaptedProcess mid(tree, 0.0);     // midpoint of U and X-extended-by-U
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
            clipped[n] = std::min(x[n], u[n]);
            const double xhat = grid.is_weighted(tree.level(n)) ? x[n] : u[n];
            mid[n] = 0.5 * (xhat + u[n]);
        }
        int i = 0;
        const AdaptedProcess* fixed_integrands[] = {&clipped, &u, &mid};
        for (const AdaptedProcess* xstar : fixed_integrands) {
            const double res = std::abs(skorohod_residual(tree, grid, x, u, a, *xstar));
            if (res > rep.worst_residual) {
                rep.worst_residual = res;
                rep.witness = "fixed integrand " + std::to_string(i);
            }
            ++i;
        }
        for (i = 0; i < options.skorohod_samples; ++i) {
            const AdaptedProcess xstar = sample_sandwiched(tree, grid, x, u, rng);
            const double res = std::abs(skorohod_residual(tree, grid, x, u, a, xstar));
            if (res > rep.worst_residual) {
                rep.worst_residual = res;
                rep.witness = "draw " + std::to_string(i);
            }
        }
        rep.pass = rep.worst_residual <= kIdentityTol * scale;
        out.push_back(std::move(rep));
    }

    out.push_back(complementarity_check(tree, grid, u, a, x));

    { // complementarity_negative_control: shifting U off the obstacle must trip
      // the check wherever the compensator actually grows
        bool grows = false;
        for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n)
            if (a[n] - a[tree.parent(n)] > kIdentityTol) grows = true;
        AdaptedProcess shifted(tree, 0.0);
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
            shifted[n] = u[n] + 1.0;
        const CheckReport inner = complementarity_check(tree, grid, shifted, a, x);
        CheckReport rep{"complementarity_negative_control", !grows || !inner.pass,
                        inner.worst_residual, grows ? inner.witness : "compensator is flat"};
        out.push_back(std::move(rep));
    }

    { // penalized_beta1_domination_control: the first sweep must either already
      // sit on the envelope or visibly under-dominate
        const AdaptedProcess& u0 = penalized.front();
        double gap = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
            gap = std::max(gap, std::abs(u0[n] - u[n]));
        const double dom = domination_violation(tree, grid, x, u0);
        CheckReport rep{"penalized_beta1_domination_control",
                        dom > 0.0 || gap <= 10.0 * options.schedule.tol_gap, dom,
                        "beta=" + std::to_string(options.schedule.beta0)};
        out.push_back(std::move(rep));
    }

    std::vector<NodeId> weighted_nodes;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n)
        if (grid.is_weighted(tree.level(n))) weighted_nodes.push_back(n);
    const double eps_grid[] = {1e-3, 1e-1, 1.0};

    { // vtau_identity: U at the start equals E[U at the eps-optimal time]
        CheckReport rep{"vtau_identity", true, 0.0, ""};
        std::vector<NodeId> starts{0};
        for (int i = 0; i < options.estimate_draws; ++i)
            starts.push_back(weighted_nodes[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(weighted_nodes.size()) - 1))]);
        for (const NodeId start : starts) {
            for (const double eps : eps_grid) {
                const StoppingTime tau = epsilon_optimal_time(tree, grid, u, x, start, eps);
                const std::vector<double> val = stop_value_sweep(tree, u, tau);
                const double res = std::abs(val[static_cast<std::size_t>(start)] - u[start]);
                if (res > rep.worst_residual) {
                    rep.worst_residual = res;
                    rep.witness = "eps=" + std::to_string(eps) + " " + node_label(tree, start);
                }
            }
        }
        rep.pass = rep.worst_residual <= kIdentityTol * scale;
        out.push_back(std::move(rep));
    }

    { // epsilon_optimality: stopping at the eps-optimal time earns U_0 - eps
        CheckReport rep{"epsilon_optimality", true,
                        -std::numeric_limits<double>::infinity(), ""};
        for (const double eps : eps_grid) {
            const StoppingTime tau = epsilon_optimal_time(tree, grid, u, x, 0, eps);
            for (const NodeId atom : stop_atoms(tree, tau))
                if (!tree.is_leaf(atom) && x[atom] < u[atom] - eps)
                    throw std::logic_error("epsilon_optimal_time stopped off the contact region");
            const double value = value_at_stopping_time(tree, xw, tau).expectation();
            const double res = (u[0] - eps) - value;
            if (res > rep.worst_residual) {
                rep.worst_residual = res;
                rep.witness = "eps=" + std::to_string(eps);
            }
        }
        rep.pass = rep.worst_residual <= kIdentityTol * scale;
        out.push_back(std::move(rep));
    }

    { // compensator_flatness: A untouched strictly before the eps-optimal time
        CheckReport rep{"compensator_flatness", true, 0.0, ""};
        for (const double eps : eps_grid) {
            const StoppingTime tau = epsilon_optimal_time(tree, grid, u, x, 0, eps);
            for (const NodeId atom : stop_atoms(tree, tau)) {
                const double res = std::abs(a[atom]);
                if (res > rep.worst_residual) {
                    rep.worst_residual = res;
                    rep.witness = "eps=" + std::to_string(eps) + " " + node_label(tree, atom);
                }
            }
        }
        rep.pass = rep.worst_residual == 0.0;
        out.push_back(std::move(rep));
    }

    { // svi_nonnegativity over sampled dominating processes and time pairs
        CheckReport rep{"svi_nonnegativity", true, std::numeric_limits<double>::infinity(), ""};
        for (int i = 0; i < options.svi_triples; ++i) {
            const AdaptedProcess v = sample_dominating(tree, grid, x, rng);
            const auto [tau1, tau2] = sample_stopping_pair(tree, grid, u, x, rng);
            const SviResidual res = svi_residual(tree, grid, x, u, v, tau1, tau2);
            if (res.min_value < rep.worst_residual) {
                rep.worst_residual = res.min_value;
                rep.witness = "draw " + std::to_string(i);
            }
        }
        if (options.svi_triples <= 0) rep.worst_residual = 0.0;
        rep.pass = rep.worst_residual >= -kIdentityTol * scale;
        out.push_back(std::move(rep));
    }

    { // uniqueness_identity for the envelope against sampled processes
        CheckReport rep{"uniqueness_identity", true, 0.0, ""};
        for (int i = 0; i < options.estimate_draws; ++i) {
            const AdaptedProcess v = sample_dominating(tree, grid, x, rng);
            const auto [tau1, tau2] = sample_stopping_pair(tree, grid, u, x, rng);
            const CheckReport inner = uniqueness_identity_check(tree, u, v, tau1, tau2);
            if (inner.worst_residual > rep.worst_residual) {
                rep.worst_residual = inner.worst_residual;
                rep.witness = inner.witness;
            }
            if (!inner.pass) rep.pass = false;
        }
        out.push_back(std::move(rep));
    }

    { // apriori_increment over sampled pairs and the eps grid
        CheckReport rep{"apriori_increment", true, 0.0, ""};
        for (int i = 0; i < options.estimate_draws; ++i) {
            const auto [s1, s2] = sample_stopping_pair(tree, grid, u, x, rng);
            for (const double eps : eps_grid) {
                const CheckReport inner =
                    apriori_increment_check(tree, grid, x, u, a, s1, s2, eps);
                if (inner.worst_residual > rep.worst_residual) {
                    rep.worst_residual = inner.worst_residual;
                    rep.witness = "eps=" + std::to_string(eps) + " " + inner.witness;
                }
                if (!inner.pass) rep.pass = false;
            }
        }
        out.push_back(std::move(rep));
    }

    { // apriori_lp at p = 1, 2, 4
        CheckReport rep{"apriori_lp", true, -std::numeric_limits<double>::infinity(), ""};
        for (int i = 0; i < options.estimate_draws; ++i) {
            const auto [s1, s2] = sample_stopping_pair(tree, grid, u, x, rng);
            for (const double p : {1.0, 2.0, 4.0}) {
                const CheckReport inner = apriori_lp_check(tree, grid, x, a, s1, s2, p);
                if (inner.worst_residual > rep.worst_residual) {
                    rep.worst_residual = inner.worst_residual;
                    rep.witness = inner.witness;
                }
                if (!inner.pass) rep.pass = false;
            }
        }
        if (options.estimate_draws <= 0) rep.worst_residual = 0.0;
        out.push_back(std::move(rep));
    }

    { // stability against perturbed obstacles, tau2 at the cemetery
        CheckReport rep{"stability", true, -std::numeric_limits<double>::infinity(), ""};
        const StoppingTime tau2 = StoppingTime::cemetery_only(tree);
        for (int i = 0; i < options.estimate_draws; ++i) {
            AdaptedProcess x2(tree, 0.0);
            for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
                const double r = rng.uniform();
                if (!tree.is_leaf(n)) x2[n] = x[n] + (r - 0.5);
            }
            const StoppingTime tau1 = sample_stopping_time(tree, grid, u, x, rng);
            const CheckReport inner = stability_check(tree, grid, x, x2, tau1, tau2);
            if (inner.worst_residual > rep.worst_residual) {
                rep.worst_residual = inner.worst_residual;
                rep.witness = inner.witness + " draw " + std::to_string(i);
            }
            if (!inner.pass) rep.pass = false;
        }
        if (options.estimate_draws <= 0) rep.worst_residual = 0.0;
        out.push_back(std::move(rep));
    }

    out.push_back(monotone_convergence_check(tree, grid, x, options.monotone_n_max));

    { // oracle_agreement: exhaustive enumeration and value iteration
        CheckReport rep{"oracle_agreement", true, 0.0, ""};
        double start = 0.0;
        for (const NodeId n : weighted_nodes) start = std::max(start, x[n]);
        const AdaptedProcess vi = envelope_by_value_iteration(tree, grid, x, start);
        double vi_gap = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
            vi_gap = std::max(vi_gap, std::abs(vi[n] - u[n]));
        rep.worst_residual = vi_gap;
        rep.pass = vi_gap <= 1e-11 * scale;
        rep.witness = "value iteration";
        const std::uint64_t count = stopping_time_count(tree, grid, options.oracle_cap);
        if (count <= options.oracle_cap) {
            const double best = root_value_by_enumeration(tree, grid, x, options.oracle_cap);
            const double res = std::abs(best - u[0]);
            if (res > rep.worst_residual) {
                rep.worst_residual = res;
                rep.witness = "enumeration of " + std::to_string(count);
            }
            if (res > kStructuralTol * scale) rep.pass = false;
        }
        out.push_back(std::move(rep));
    }

    return out;
}

} // namespace strongenv
