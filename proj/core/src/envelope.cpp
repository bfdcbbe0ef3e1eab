#include "strongenv/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace strongenv {

namespace {

void require_inputs(const FiltrationTree& tree, const TimeGrid& grid, const AdaptedProcess& x,
                    const char* what)
{
    if (grid.level_count() != tree.level_count())
        throw std::invalid_argument(std::string(what) + ": grid does not match the tree");
    if (x.size() != tree.node_count())
        throw std::invalid_argument(std::string(what) + ": process does not match the tree");
}

double sup_abs(const AdaptedProcess& x)
{
    double m = 0.0;
    for (double v : x.values()) m = std::max(m, std::abs(v));
    return m;
}

double sup_abs_diff(const AdaptedProcess& a, const AdaptedProcess& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

} // namespace

void BetaSchedule::validate() const
{
    if (!(beta0 > 0.0)) throw std::invalid_argument("BetaSchedule: beta0 must be positive");
    if (!(growth > 1.0)) throw std::invalid_argument("BetaSchedule: growth must exceed 1");
    if (!(beta_max >= beta0)) throw std::invalid_argument("BetaSchedule: beta_max must be >= beta0");
    if (!(tol_gap > 0.0) || !(tol_dom > 0.0))
        throw std::invalid_argument("BetaSchedule: tolerances must be positive");
}

std::vector<double> BetaSchedule::betas() const
{
    validate();
    std::vector<double> out;
    // Tolerate rounding right at beta_max so beta0=1, growth=10, beta_max=1e8
    // reliably ends on 1e8.
    for (double b = beta0; b <= beta_max * (1.0 + 1e-12); b *= growth) out.push_back(b);
    return out;
}

double penalized_step(double x, double m, double c)
{
    if (!(c >= 0.0)) throw std::invalid_argument("penalized_step: c must be non-negative");
    if (m >= x || c == 0.0) return m;
    return x - (x - m) / (1.0 + c);
}

AdaptedProcess penalized_envelope(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& x, double beta)
{
    require_inputs(tree, grid, x, "penalized_envelope");
    if (!(beta > 0.0)) throw std::invalid_argument("penalized_envelope: beta must be positive");
    AdaptedProcess u(tree, 0.0);
    for (int k = tree.cemetery_level() - 1; k >= 0; --k) {
        const double c = beta * grid.weight(k) * grid.dt(k);
        auto [first, last] = tree.level_range(k);
        for (NodeId n = first; n < last; ++n)
            u[n] = penalized_step(x[n], expect_children(tree, n, u), c);
    }
    return u;
}

AdaptedProcess direct_recursion(const FiltrationTree& tree, const TimeGrid& grid,
                                const AdaptedProcess& x)
{
    require_inputs(tree, grid, x, "direct_recursion");
    AdaptedProcess u(tree, 0.0);
    for (int k = tree.cemetery_level() - 1; k >= 0; --k) {
        const bool weighted = grid.is_weighted(k);
        auto [first, last] = tree.level_range(k);
        for (NodeId n = first; n < last; ++n) {
            const double m = expect_children(tree, n, u);
            u[n] = weighted ? std::max(x[n], m) : m;
        }
    }
    // With the cemetery pinned to zero the recursion is non-negative without
    // any extra clamp; guard the invariant rather than assume it.
    for (double v : u.values())
        if (!(v >= 0.0)) throw std::logic_error("direct_recursion: negative envelope value");
    return u;
}

DoobMeyer doob_meyer(const FiltrationTree& tree, const AdaptedProcess& u, double tol)
{
    if (u.size() != tree.node_count())
        throw std::invalid_argument("doob_meyer: process does not match the tree");
    const SupermartingaleReport sm = is_supermartingale(tree, u, tol);
    if (!sm.is_supermartingale)
        throw std::invalid_argument("doob_meyer: input is not a supermartingale (violation " +
                                    std::to_string(sm.worst_violation) + " at node " +
                                    tree.path_string(sm.worst_node) + ")");

    AdaptedProcess a(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n) {
        // Predictable increment into level k+1, identical for all children;
        // tolerance-level negatives are clamped so A stays nondecreasing.
        double da = u[n] - expect_children(tree, n, u);
        if (da < 0.0) da = 0.0;
        const double an = a[n] + da;
        for (NodeId c = tree.child_begin(n); c < tree.child_end(n); ++c) a[c] = an;
    }
    AdaptedProcess m(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) m[n] = u[n] + a[n];
    return DoobMeyer{std::move(m), std::move(a)};
}

double domination_violation(const FiltrationTree& tree, const TimeGrid& grid,
                            const AdaptedProcess& x, const AdaptedProcess& u)
{
    require_inputs(tree, grid, x, "domination_violation");
    if (u.size() != tree.node_count())
        throw std::invalid_argument("domination_violation: process does not match the tree");
    double worst = 0.0;
    for (NodeId n = 0; n < static_cast<NodeId>(tree.non_cemetery_count()); ++n)
        if (grid.is_weighted(tree.level(n))) worst = std::max(worst, x[n] - u[n]);
    return worst;
}

EnvelopeResult strong_envelope(const FiltrationTree& tree, const TimeGrid& grid,
                               const AdaptedProcess& x, const BetaSchedule& schedule)
{
    require_inputs(tree, grid, x, "strong_envelope");
    schedule.validate();

    const AdaptedProcess direct = direct_recursion(tree, grid, x);

    EnvelopeResult result;
    AdaptedProcess prev;
    AdaptedProcess last;
    for (double beta : schedule.betas()) {
        AdaptedProcess ub = penalized_envelope(tree, grid, x, beta);
        result.sweep.push_back(BetaRow{beta, sup_abs_diff(direct, ub),
                                       domination_violation(tree, grid, x, ub)});
        if (prev.size() > 0 && sup_abs_diff(ub, prev) < schedule.tol_gap) {
            result.converged_by_gap = true;
            last = std::move(ub);
            break;
        }
        prev = ub;
        last = std::move(ub);
    }

    // Cross-check the sweep against the direct recursion.  A sweep that
    // stabilized must sit within 10*tol_gap of the limit; one that ran out of
    // betas still carries the O(1/beta_max) penalization bias, so the
    // threshold widens to the limit-identity scale 1e-6*(1 + sup|X|).
    const double cross_gap = sup_abs_diff(direct, last);
    const double threshold = result.converged_by_gap
                                 ? 10.0 * schedule.tol_gap
                                 : std::max(10.0 * schedule.tol_gap, 1e-6 * (1.0 + sup_abs(x)));
    if (cross_gap > threshold)
        throw NonConvergenceError("strong_envelope: penalized sweep disagrees with the direct "
                                  "recursion (gap " + std::to_string(cross_gap) + " > " +
                                  std::to_string(threshold) + " after beta " +
                                  std::to_string(result.sweep.back().beta) + ")");

    DoobMeyer dm = doob_meyer(tree, direct);
    result.u = direct;
    result.m = std::move(dm.martingale);
    result.a = std::move(dm.compensator);
    result.domination_violation = domination_violation(tree, grid, x, result.u);
    return result;
}

StoppingTime epsilon_optimal_time(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& x, NodeId start,
                                  double eps)
{
    require_inputs(tree, grid, x, "epsilon_optimal_time");
    if (u.size() != tree.node_count())
        throw std::invalid_argument("epsilon_optimal_time: process does not match the tree");
    if (start < 0 || static_cast<std::size_t>(start) >= tree.node_count())
        throw std::invalid_argument("epsilon_optimal_time: start node out of range");
    if (!(eps >= 0.0)) throw std::invalid_argument("epsilon_optimal_time: eps must be >= 0");

    const int start_level = tree.level(start);
    std::vector<std::uint8_t> flags(tree.node_count(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        const int k = tree.level(n);
        if (k < start_level) continue;
        if (grid.is_weighted(k) && x[n] >= u[n] - eps) flags[static_cast<std::size_t>(n)] = 1;
    }
    return StoppingTime::from_flags(tree, std::move(flags));
}

} // namespace strongenv
