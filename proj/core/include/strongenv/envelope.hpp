#pragma once

#include <stdexcept>
#include <vector>

#include "strongenv/calculus.hpp"
#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv {

struct BetaSchedule {
    double beta0 = 1.0;
    double growth = 10.0;
    double beta_max = 1e8;
    double tol_gap = 1e-9;
    double tol_dom = 1e-6;

    // Throws std::invalid_argument on a non-positive beta0/beta_max,
    // growth <= 1, or non-positive tolerances.
    void validate() const;
    // beta0, beta0*growth, ... up to beta_max inclusive.
    std::vector<double> betas() const;
};

class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unique solution y of y = c*(x - y)^+ + m for c >= 0: the implicit one-step
// penalization update.  y = m when m >= x, else y = x - (x - m)/(1 + c);
// this form is exactly monotone in m and c in floating point, which the
// beta-monotonicity guarantee relies on.  Throws on c < 0.
double penalized_step(double x, double m, double c);

// Backward penalized sweep: zero on the cemetery, then
// U(n) = penalized_step(X(n), E[U_{k+1}|n], beta * w_k * dt_k).
// The result is a non-negative supermartingale, nondecreasing in beta.
AdaptedProcess penalized_envelope(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& x, double beta);

// Reference backward recursion for the weighted envelope: zero on the
// cemetery, max(X, E[U_{k+1}|n]) at positive-weight levels and the bare
// conditional expectation at zero-weight levels.
AdaptedProcess direct_recursion(const FiltrationTree& tree, const TimeGrid& grid,
                                const AdaptedProcess& x);

struct DoobMeyer {
    AdaptedProcess martingale;  // M = U + A
    AdaptedProcess compensator; // A, predictable and nondecreasing, A(root) = 0
};

// Doob decomposition U = M - A of a supermartingale (checked within tol).
// The increment of A into level k+1 is U(n) - E[U_{k+1}|n], shared by all
// children of n (predictability).
DoobMeyer doob_meyer(const FiltrationTree& tree, const AdaptedProcess& u, double tol = 1e-10);

struct BetaRow {
    double beta = 0.0;
    double sup_gap = 0.0;              // sup-node |direct recursion - U^beta|
    double domination_violation = 0.0; // max over weighted nodes of (X - U^beta)^+
};

struct EnvelopeResult {
    AdaptedProcess u;
    AdaptedProcess m;
    AdaptedProcess a;
    std::vector<BetaRow> sweep;
    double domination_violation = 0.0; // of the returned U
    bool converged_by_gap = false;     // consecutive-sweep gap fell below tol_gap
};

// max over weighted nodes of (X - U)^+.
double domination_violation(const FiltrationTree& tree, const TimeGrid& grid,
                            const AdaptedProcess& x, const AdaptedProcess& u);

// Runs the penalized sweep over the beta schedule until the consecutive-sweep
// sup gap drops below tol_gap or beta exceeds beta_max, cross-checks the last
// sweep against the direct recursion, and returns the direct-recursion values
// as U together with their Doob decomposition and the per-beta diagnostics.
// Throws NonConvergenceError when the cross-check fails (see README for the
// threshold).
EnvelopeResult strong_envelope(const FiltrationTree& tree, const TimeGrid& grid,
                               const AdaptedProcess& x, const BetaSchedule& schedule = {});

// First node at or after `start` (level-wise) sitting at a positive-weight
// level with X >= U - eps; the cemetery catches every path that never
// qualifies.  The defining rule is applied on every node of level >=
// level(start), so the result is a valid stopping time on the whole tree.
StoppingTime epsilon_optimal_time(const FiltrationTree& tree, const TimeGrid& grid,
                                  const AdaptedProcess& u, const AdaptedProcess& x,
                                  NodeId start, double eps);

} // namespace strongenv
