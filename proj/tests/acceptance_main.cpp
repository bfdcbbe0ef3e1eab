// Acceptance battery: one PASS/FAIL line per criterion, exit code = number
// of failed criteria.  Tolerances are part of the contract and are asserted
// exactly as stated next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "strongenv/calculus.hpp"
#include "strongenv/cli.hpp"
#include "strongenv/envelope.hpp"
#include "strongenv/instance.hpp"
#include "strongenv/oracle.hpp"
#include "strongenv/report.hpp"
#include "strongenv/rng.hpp"
#include "strongenv/verification.hpp"

#include "fixtures.hpp"

using namespace strongenv;
using strongenv::testing::make_f1;
using strongenv::testing::make_f2;

namespace {

struct Criterion {
    std::string name;
    bool pass = true;
    std::string detail;
    double seconds = 0.0;
};

class Timer {
public:
    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double sup_abs(const AdaptedProcess& y)
{
    double m = 0.0;
    for (const double v : y.values()) m = std::max(m, std::abs(v));
    return m;
}

AdaptedProcess masked(const FiltrationTree& tree, const TimeGrid& grid, const AdaptedProcess& x)
{
    AdaptedProcess out(tree, 0.0);
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        if (grid.is_weighted(tree.level(n))) out[n] = x[n];
    return out;
}

Instance seeded_instance(std::uint64_t seed, int depth, int branching)
{
    RandomInstanceSpec spec;
    spec.seed = seed;
    spec.depth = depth;
    spec.branching = branching;
    return make_random_instance(spec);
}

// E[Y at the stop of tau | F_t], swept inside the subtree of t.
double conditional_stop_value(const FiltrationTree& tree, const AdaptedProcess& y,
                              const StoppingTime& tau, NodeId t)
{
    std::vector<double> val(y.values());
    for (int k = tree.cemetery_level() - 1; k >= tree.level(t); --k) {
        auto [first, last] = tree.level_range(k);
        for (NodeId n = first; n < last; ++n)
            if (!tau.stops_at(n)) val[static_cast<std::size_t>(n)] = expect_children(tree, n, val);
    }
    return val[static_cast<std::size_t>(t)];
}

Criterion penalization_monotone_limit()
{
    Timer timer;
    Criterion c{"penalization_monotone_limit"};
    const std::vector<double> betas = BetaSchedule{}.betas();
    double worst_gap = 0.0;
    for (int k = 0; k < 200 && c.pass; ++k) {
        const Instance inst = seeded_instance(1000 + static_cast<std::uint64_t>(k),
                                              2 + k % 5, 1 + k % 3);
        const AdaptedProcess u = direct_recursion(inst.tree, inst.grid, inst.obstacle);
        AdaptedProcess prev(inst.tree, 0.0);
        AdaptedProcess last(inst.tree, 0.0);
        for (const double beta : betas) {
            const AdaptedProcess ub = penalized_envelope(inst.tree, inst.grid, inst.obstacle, beta);
            for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n) {
                if (ub[n] < prev[n] || ub[n] > u[n]) {
                    c.pass = false;
                    c.detail = "monotonicity broken at seed " + std::to_string(1000 + k);
                }
            }
            prev = ub;
            last = ub;
        }
        const double tol = 1e-6 * (1.0 + sup_abs(inst.obstacle));
        double gap = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n)
            gap = std::max(gap, std::abs(last[n] - u[n]));
        worst_gap = std::max(worst_gap, gap / tol);
        if (gap >= tol) {
            c.pass = false;
            c.detail = "limit gap " + std::to_string(gap) + " at seed " + std::to_string(1000 + k);
        }
    }
    c.seconds = timer.elapsed();
    if (c.seconds >= 30.0) {
        c.pass = false;
        c.detail = "over the 30 s budget";
    }
    if (c.pass)
        c.detail = "200 trees, worst limit gap at " + std::to_string(worst_gap) + " of tolerance";
    return c;
}

Criterion small_tree_oracle_agreement()
{
    Timer timer;
    Criterion c{"small_tree_oracle_agreement"};
    double worst_enum = 0.0, worst_vi = 0.0;
    for (std::uint64_t seed = 1; seed <= 1000 && c.pass; ++seed) {
        const Instance inst = make_small_instance(seed, 12);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);

        const double best =
            root_value_by_enumeration(inst.tree, inst.grid, inst.obstacle, std::uint64_t{1} << 22);
        worst_enum = std::max(worst_enum, std::abs(best - env.u.values()[0]));

        double start = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.non_cemetery_count()); ++n)
            if (inst.grid.is_weighted(inst.tree.level(n)))
                start = std::max(start, inst.obstacle[n]);
        const AdaptedProcess vi =
            envelope_by_value_iteration(inst.tree, inst.grid, inst.obstacle, start);
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n)
            worst_vi = std::max(worst_vi, std::abs(vi[n] - env.u[n]));

        if (worst_enum > 1e-12 || worst_vi > 1e-11) {
            c.pass = false;
            c.detail = "oracle disagreement at seed " + std::to_string(seed);
        }
    }
    c.seconds = timer.elapsed();
    if (c.seconds >= 60.0) {
        c.pass = false;
        c.detail = "over the 60 s budget";
    }
    if (c.pass) {
        std::ostringstream detail;
        detail << "1000 instances, worst enumeration " << worst_enum << ", worst iteration "
               << worst_vi;
        c.detail = detail.str();
    }
    return c;
}

Criterion chain_fixture_exact_values()
{
    Timer timer;
    Criterion c{"chain_fixture_exact_values"};
    const auto f = make_f1();
    const EnvelopeResult res = strong_envelope(f.tree, f.grid, f.x);
    const bool ok = res.u.values() == std::vector<double>{3.0, 3.0, 2.0, 0.0} &&
                    res.a.values() == std::vector<double>{0.0, 0.0, 1.0, 3.0} &&
                    res.m.values() == std::vector<double>{3.0, 3.0, 3.0, 3.0} &&
                    penalized_envelope(f.tree, f.grid, f.x, 1.0).values() ==
                        std::vector<double>{2.0, 2.0, 1.0, 0.0} &&
                    penalized_envelope(f.tree, f.grid, f.x, 3.0).values() ==
                        std::vector<double>{2.625, 2.625, 1.5, 0.0};
    c.pass = ok;
    c.detail = ok ? "U, A, M and both penalized sweeps match exactly" : "frozen values drifted";
    c.seconds = timer.elapsed();
    return c;
}

Criterion zero_weight_separation()
{
    Timer timer;
    Criterion c{"zero_weight_separation"};
    const auto f = make_f2();
    const AdaptedProcess weighted = direct_recursion(f.tree, f.grid, f.x);
    const AdaptedProcess unit = direct_recursion(f.tree, TimeGrid::unit(3), f.x);
    const bool ok = weighted.values() == std::vector<double>{0.0, 0.0, 0.0, 0.0} &&
                    unit.values() == std::vector<double>{5.0, 5.0, 0.0, 0.0};
    c.pass = ok;
    c.detail = ok ? "zero-weight spike ignored, unit-weight recursion keeps it"
                  : "separation lost";
    c.seconds = timer.elapsed();
    return c;
}

Criterion skorohod_and_complementarity()
{
    Timer timer;
    Criterion c{"skorohod_and_complementarity"};
    double worst = 0.0;
    int controls = 0;
    for (int k = 0; k < 25 && c.pass; ++k) {
        const Instance inst = seeded_instance(3000 + static_cast<std::uint64_t>(k),
                                              2 + k % 4, 1 + k % 3);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);
        const double tol = 1e-10 * (1.0 + sup_abs(inst.obstacle));
        const FiltrationTree& tree = inst.tree;
        const AdaptedProcess& x = inst.obstacle;

        std::vector<AdaptedProcess> integrands;
        AdaptedProcess clipped(tree, 0.0), hatx(tree, 0.0), mid(tree, 0.0);
        for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
            clipped[n] = std::min(x[n], env.u[n]);
            hatx[n] = inst.grid.is_weighted(tree.level(n)) ? x[n] : env.u[n];
            mid[n] = 0.5 * (hatx[n] + env.u[n]);
        }
        integrands.push_back(std::move(clipped));
        integrands.push_back(env.u);
        integrands.push_back(std::move(mid));
        Rng rng(9000 + static_cast<std::uint64_t>(k));
        for (int i = 0; i < 20; ++i)
            integrands.push_back(sample_sandwiched(tree, inst.grid, x, env.u, rng));

        for (const AdaptedProcess& xstar : integrands) {
            const double res =
                std::abs(skorohod_residual(tree, inst.grid, x, env.u, env.a, xstar));
            worst = std::max(worst, res / tol);
            if (res > tol) {
                c.pass = false;
                c.detail = "residual " + std::to_string(res) + " at seed " +
                           std::to_string(3000 + k);
            }
        }
        if (!complementarity_check(tree, inst.grid, env.u, env.a, x).pass) {
            c.pass = false;
            c.detail = "complementarity failed at seed " + std::to_string(3000 + k);
        }

        // Negative control: shifting U off the obstacle must be caught
        // wherever the compensator grows at all.
        bool grows = false;
        for (NodeId n = 1; n < static_cast<NodeId>(tree.node_count()); ++n)
            if (env.a[n] - env.a[tree.parent(n)] > 1e-10) grows = true;
        if (grows) {
            AdaptedProcess shifted = env.u;
            for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) shifted[n] += 1.0;
            const CheckReport control =
                complementarity_check(tree, inst.grid, shifted, env.a, x);
            if (control.pass || control.witness.empty()) {
                c.pass = false;
                c.detail = "negative control slipped through at seed " + std::to_string(3000 + k);
            }
            ++controls;
        }
    }
    c.seconds = timer.elapsed();
    if (c.pass)
        c.detail = "25 instances x 23 integrands, worst residual at " + std::to_string(worst) +
                   " of tolerance, " + std::to_string(controls) + " negative controls";
    return c;
}

Criterion epsilon_optimal_stopping()
{
    Timer timer;
    Criterion c{"epsilon_optimal_stopping"};
    const double eps_grid[] = {1e-3, 1e-1, 1.0};
    for (int k = 0; k < 25 && c.pass; ++k) {
        const Instance inst = seeded_instance(4000 + static_cast<std::uint64_t>(k),
                                              2 + k % 4, 1 + k % 3);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);
        const AdaptedProcess xt = masked(inst.tree, inst.grid, inst.obstacle);
        for (const double eps : eps_grid) {
            // Root value bound.
            const StoppingTime from_root =
                epsilon_optimal_time(inst.tree, inst.grid, env.u, inst.obstacle, 0, eps);
            const double value = stopped_expectation_by_sweep(inst.tree, xt, from_root);
            if (value < env.u[0] - eps - 1e-10) {
                c.pass = false;
                c.detail = "value " + std::to_string(value) + " below U0 - eps at seed " +
                           std::to_string(4000 + k);
                break;
            }
            // Identity and compensator flatness from every weighted start.
            for (NodeId t = 0; t < static_cast<NodeId>(inst.tree.non_cemetery_count()); ++t) {
                if (!inst.grid.is_weighted(inst.tree.level(t))) continue;
                const StoppingTime tau =
                    epsilon_optimal_time(inst.tree, inst.grid, env.u, inst.obstacle, t, eps);
                const double vtau = conditional_stop_value(inst.tree, env.u, tau, t);
                if (std::abs(vtau - env.u[t]) > 1e-10) {
                    c.pass = false;
                    c.detail = "identity off by " + std::to_string(vtau - env.u[t]);
                    break;
                }
                const std::vector<NodeId> stops = resolve_stops(inst.tree, tau);
                auto [first, last] = inst.tree.leaf_range();
                for (NodeId leaf = first; leaf < last; ++leaf) {
                    const NodeId atom = stops[static_cast<std::size_t>(leaf)];
                    bool below = false; // only paths through t count
                    for (NodeId q = atom; q != kNoNode; q = inst.tree.parent(q))
                        if (q == t) below = true;
                    if (below && env.a[atom] != env.a[t]) {
                        c.pass = false;
                        c.detail = "compensator moved before the stop";
                    }
                }
                if (!c.pass) break;
            }
            if (!c.pass) break;
        }
    }
    c.seconds = timer.elapsed();
    if (c.pass) c.detail = "25 instances x 3 tolerances, identity within 1e-10, flat compensator";
    return c;
}

Criterion variational_inequality_uniqueness()
{
    Timer timer;
    Criterion c{"variational_inequality_uniqueness"};
    double worst_min = 0.0;
    for (int k = 0; k < 20 && c.pass; ++k) {
        const Instance inst = seeded_instance(5000 + static_cast<std::uint64_t>(k),
                                              2 + k % 4, 1 + k % 3);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);
        Rng rng(100 + static_cast<std::uint64_t>(k));
        for (int i = 0; i < 50; ++i) {
            const auto [t1, t2] =
                sample_stopping_pair(inst.tree, inst.grid, env.u, inst.obstacle, rng);
            const AdaptedProcess v = sample_dominating(inst.tree, inst.grid, inst.obstacle, rng);
            const SviResidual svi =
                svi_residual(inst.tree, inst.grid, inst.obstacle, env.u, v, t1, t2);
            worst_min = std::min(worst_min, svi.min_value);
            if (svi.min_value < -1e-10) {
                c.pass = false;
                c.detail = "residual " + std::to_string(svi.min_value) + " at seed " +
                           std::to_string(5000 + k);
            }
        }
    }
    int identity_pairs = 0;
    for (int k = 0; k < 25 && c.pass; ++k) {
        const Instance inst = seeded_instance(6000 + static_cast<std::uint64_t>(k),
                                              2 + k % 4, 1 + k % 3);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);
        Rng rng(200 + static_cast<std::uint64_t>(k));
        for (int i = 0; i < 20; ++i) {
            AdaptedProcess y(inst.tree, 0.0), yp(inst.tree, 0.0);
            for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n) {
                y[n] = rng.uniform(-2.0, 2.0);
                yp[n] = rng.uniform(-2.0, 2.0);
            }
            const auto [t1, t2] =
                sample_stopping_pair(inst.tree, inst.grid, env.u, inst.obstacle, rng);
            const CheckReport rep = uniqueness_identity_check(inst.tree, y, yp, t1, t2, 1e-10);
            ++identity_pairs;
            if (!rep.pass) {
                c.pass = false;
                c.detail = "identity residual " + std::to_string(rep.worst_residual);
            }
        }
    }
    c.seconds = timer.elapsed();
    if (c.pass)
        c.detail = "1000 triples (worst min " + std::to_string(worst_min) + "), " +
                   std::to_string(identity_pairs) + " identity pairs";
    return c;
}

Criterion apriori_bounds_and_stability()
{
    Timer timer;
    Criterion c{"apriori_bounds_and_stability"};
    int draws = 0, stability_pairs = 0;
    for (int k = 0; k < 25 && c.pass; ++k) {
        const Instance inst = seeded_instance(7000 + static_cast<std::uint64_t>(k),
                                              2 + k % 4, 1 + k % 3);
        const EnvelopeResult env = strong_envelope(inst.tree, inst.grid, inst.obstacle);
        Rng rng(300 + static_cast<std::uint64_t>(k));
        for (int i = 0; i < 20; ++i) {
            const auto [s1, s2] =
                sample_stopping_pair(inst.tree, inst.grid, env.u, inst.obstacle, rng);
            const double eps = rng.uniform(0.05, 1.0);
            const CheckReport inc = apriori_increment_check(inst.tree, inst.grid, inst.obstacle,
                                                            env.u, env.a, s1, s2, eps);
            ++draws;
            if (!inc.pass) {
                c.pass = false;
                c.detail = "increment bound residual " + std::to_string(inc.worst_residual);
                break;
            }
            for (const double p : {1.0, 2.0, 4.0}) {
                const CheckReport lp =
                    apriori_lp_check(inst.tree, inst.grid, inst.obstacle, env.a, s1, s2, p);
                if (!lp.pass) {
                    c.pass = false;
                    c.detail = "Lp bound residual " + std::to_string(lp.worst_residual) + " at " +
                               lp.witness;
                    break;
                }
            }
            if (!c.pass) break;
        }

        const StoppingTime end = StoppingTime::cemetery_only(inst.tree);
        for (int i = 0; i < 20 && c.pass; ++i) {
            AdaptedProcess x2 = inst.obstacle;
            for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.non_cemetery_count()); ++n)
                x2[n] += rng.uniform(-0.5, 0.5);
            const StoppingTime t1 =
                sample_stopping_time(inst.tree, inst.grid, env.u, inst.obstacle, rng);
            const CheckReport st =
                stability_check(inst.tree, inst.grid, inst.obstacle, x2, t1, end);
            ++stability_pairs;
            if (!st.pass) {
                c.pass = false;
                c.detail = "stability residual " + std::to_string(st.worst_residual) + " (" +
                           st.witness + ")";
            }
        }
    }

    // Tight case: on the chain fixture the L1 bound holds with equality.
    const auto f = make_f1();
    const EnvelopeResult res = strong_envelope(f.tree, f.grid, f.x);
    const CheckReport tight =
        apriori_lp_check(f.tree, f.grid, f.x, res.a, StoppingTime::at_level(f.tree, 1),
                         StoppingTime::cemetery_only(f.tree), 1.0);
    if (!tight.pass || tight.worst_residual != 0.0) {
        c.pass = false;
        c.detail = "tight L1 case is no longer exact";
    }

    c.seconds = timer.elapsed();
    if (c.pass)
        c.detail = std::to_string(draws) + " increment/Lp draws, " +
                   std::to_string(stability_pairs) + " stability pairs, tight L1 case exact";
    return c;
}

Criterion monotone_convergence()
{
    Timer timer;
    Criterion c{"monotone_convergence"};
    for (int k = 0; k < 200 && c.pass; ++k) {
        const Instance inst = seeded_instance(8000 + static_cast<std::uint64_t>(k),
                                              2 + k % 5, 1 + k % 3);
        const CheckReport rep =
            monotone_convergence_check(inst.tree, inst.grid, inst.obstacle, 64);
        if (!rep.pass) {
            c.pass = false;
            c.detail = "failed at seed " + std::to_string(8000 + k) + ": " + rep.witness;
        }
    }
    c.seconds = timer.elapsed();
    if (c.pass) c.detail = "200 instances, approximations within 1/n + 1e-10 up to n = 64";
    return c;
}

Criterion deterministic_verify_reports()
{
    Timer timer;
    Criterion c{"deterministic_verify_reports"};
    const char* argv[] = {"strongenv", "verify", "--seeds", "100"};
    std::ostringstream out1, err1, out2, err2;
    const int rc1 = run_cli(4, argv, out1, err1);
    const int rc2 = run_cli(4, argv, out2, err2);
    if (rc1 != 0 || rc2 != 0) {
        c.pass = false;
        c.detail = "verify exited with " + std::to_string(rc1) + "/" + std::to_string(rc2) +
                   (err1.str().empty() ? "" : ": " + err1.str());
    } else if (report_digest_field(out1.str()) != report_digest_field(out2.str())) {
        c.pass = false;
        c.detail = "digests differ between identical runs";
    } else {
        c.detail = "two 100-seed runs, digest " + report_digest_field(out1.str());
    }
    c.seconds = timer.elapsed();
    return c;
}

} // namespace

int main()
{
    std::vector<Criterion> results;
    results.push_back(penalization_monotone_limit());
    results.push_back(small_tree_oracle_agreement());
    results.push_back(chain_fixture_exact_values());
    results.push_back(zero_weight_separation());
    results.push_back(skorohod_and_complementarity());
    results.push_back(epsilon_optimal_stopping());
    results.push_back(variational_inequality_uniqueness());
    results.push_back(apriori_bounds_and_stability());
    results.push_back(monotone_convergence());
    results.push_back(deterministic_verify_reports());

    int failures = 0;
    for (const Criterion& c : results) {
        std::printf("%s %-34s %7.2fs  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.seconds,
                    c.detail.c_str());
        if (!c.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures;
}
