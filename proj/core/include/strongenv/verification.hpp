#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "strongenv/envelope.hpp"
#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/rng.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv {

struct CheckReport {
    std::string name;
    bool pass = false;
    double worst_residual = 0.0;
    std::string witness; // node path / atom / parameter pinpointing the residual
};

// E[ sum_k (U_k - Xstar_k) * dA_{k+1} ] under the left-limit convention (the
// integrand at level k pairs with the compensator increment into level k+1).
// Pre: X <= Xstar <= U at positive-weight nodes within 1e-10 (throws).
// For an envelope with its own compensator the value vanishes for every
// sandwiched Xstar; it is always >= -1e-12 when Xstar <= U wherever A grows.
double skorohod_residual(const FiltrationTree& tree, const TimeGrid& grid,
                         const AdaptedProcess& x, const AdaptedProcess& u,
                         const AdaptedProcess& a, const AdaptedProcess& xstar);

// Passes iff every compensator increment dA_{k+1} > 1e-10 happens at a node
// with positive weight and |U - X| <= 1e-9.
CheckReport complementarity_check(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& a,
                                  const AdaptedProcess& x);

struct SviResidual {
    // E[ sum_{s=tau1+1}^{tau2} (U_{s-1} - V_{s-1}) dU_s | F_tau1 ] per tau1-atom.
    RandomVariableAtStop by_atom;
    double min_value = 0.0;
};

// Pre: V >= X at positive-weight nodes and tau1 <= tau2 pathwise (both
// throw).  For U the weighted envelope the residual is non-negative on every
// atom.
SviResidual svi_residual(const FiltrationTree& tree, const TimeGrid& grid,
                         const AdaptedProcess& x, const AdaptedProcess& u,
                         const AdaptedProcess& v, const StoppingTime& tau1,
                         const StoppingTime& tau2);

// Pathwise discrete Ito identity for D = Y - Y':
//   D^2_tau2 - D^2_tau1 = 2 sum_{s=tau1+1}^{tau2} D_{s-1} dD_s + [D]_tau2 - [D]_tau1
// checked on every path within tol.  Holds for arbitrary processes.
CheckReport uniqueness_identity_check(const FiltrationTree& tree, const AdaptedProcess& y,
                                      const AdaptedProcess& yprime, const StoppingTime& tau1,
                                      const StoppingTime& tau2, double tol = 1e-10);

// E(A_sigma2 - A_sigma1 | F_sigma1) <= E(X_{tau^eps_sigma1 ^ sigma2} - X_sigma2 | F_sigma1) + eps
// per sigma1-atom, within 1e-9.  sigma1, sigma2 must stop at positive-weight
// levels or the cemetery.
CheckReport apriori_increment_check(const FiltrationTree& tree, const TimeGrid& grid,
                                    const AdaptedProcess& x, const AdaptedProcess& u,
                                    const AdaptedProcess& a, const StoppingTime& sigma1,
                                    const StoppingTime& sigma2, double eps);

// ||A_sigma2 - A_sigma1||_Lp <= p * || sup_{sigma1<=s<=sigma2} |X_sigma2 - X_s| ||_Lp
// within 1e-9, the sup running over positive-weight levels in [sigma1, sigma2]
// plus sigma2 itself; p >= 1.
CheckReport apriori_lp_check(const FiltrationTree& tree, const TimeGrid& grid,
                             const AdaptedProcess& x, const AdaptedProcess& a,
                             const StoppingTime& sigma1, const StoppingTime& sigma2, double p);

// Stability of the envelope map in the obstacle, two displayed inequalities
// with D = U^2 - U^1:
//  (i)  E[ D^2_tau1 + [D]_tau2 - [D]_tau1 ]
//         <= 4 || sup |X^2-X^1| ||_L2 ( || sup |X^1 - X^1_tau2| ||_L2
//                                      + || sup |X^2 - X^2_tau2| ||_L2 )
//       with sups over positive-weight levels in the closed [tau1, tau2]
//       (plus tau2 itself in the second factors); sound whenever
//       U^2_tau2 = U^1_tau2, e.g. tau2 stopping at the cemetery.
//  (ii) the terminal variant at T* = last positive-weight level:
//       E[D]_{T*} <= 4 ||sup|X^2-X^1|||_L2 (||sup|X^1-X^1_{T*}|||_L2
//                    + ||sup|X^2-X^2_{T*}|||_L2) + E (X^2_{T*} - X^1_{T*})^2
//       with sups over positive-weight levels up to T*.
// Both within 1e-9.  Envelopes are computed internally by direct recursion.
CheckReport stability_check(const FiltrationTree& tree, const TimeGrid& grid,
                            const AdaptedProcess& x1, const AdaptedProcess& x2,
                            const StoppingTime& tau1, const StoppingTime& tau2);

// For X^n = X - 1/n with n = 1, 2, 4, ..., n_max: envelopes nodewise
// nondecreasing in n and |SE(X^n) - SE(X)| <= 1/n + 1e-10 nodewise.
CheckReport monotone_convergence_check(const FiltrationTree& tree, const TimeGrid& grid,
                                       const AdaptedProcess& x, int n_max);

// --- deterministic samplers shared by the suite, tests and acceptance ---

// Random stopping time stopping only at positive-weight levels (plus the
// cemetery): nodes with U - X below a random threshold are flagged, plus
// independent random flags.
StoppingTime sample_stopping_time(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& x, Rng& rng);
// Monotone pair tau1 <= tau2 (tau2 built from a random subset of tau1's flags).
std::pair<StoppingTime, StoppingTime> sample_stopping_pair(const FiltrationTree& tree,
                                                           const TimeGrid& grid,
                                                           const AdaptedProcess& u,
                                                           const AdaptedProcess& x, Rng& rng);
// Random Xstar with X <= Xstar <= U at weighted nodes and Xstar <= U
// everywhere else (0 on the cemetery).
AdaptedProcess sample_sandwiched(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, const AdaptedProcess& u, Rng& rng);
// Random V >= X at weighted nodes (unconstrained at zero-weight levels).
AdaptedProcess sample_dominating(const FiltrationTree& tree, const TimeGrid& grid,
                                 const AdaptedProcess& x, Rng& rng);

struct SuiteOptions {
    BetaSchedule schedule{};
    std::uint64_t sampler_seed = 1;
    int skorohod_samples = 20;
    int svi_triples = 50;
    int estimate_draws = 20;
    int monotone_n_max = 64;
    std::uint64_t oracle_cap = 4096; // oracle agreement runs when count fits
};

// The full, deterministically ordered battery of checks for one instance.
std::vector<CheckReport> run_full_suite(const FiltrationTree& tree, const TimeGrid& grid,
                                        const AdaptedProcess& x, const SuiteOptions& options);

} // namespace strongenv
