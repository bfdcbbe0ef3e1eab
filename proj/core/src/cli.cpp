#include "strongenv/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strongenv/envelope.hpp"
#include "strongenv/instance.hpp"
#include "strongenv/oracle.hpp"
#include "strongenv/report.hpp"
#include "strongenv/verification.hpp"

namespace strongenv {

namespace {

class Stopwatch {
public:
    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Tolerance defaults can come from the environment; explicit flags win.
std::optional<double> env_double(const char* name)
{
    const char* raw = std::getenv(name);
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(raw, &end);
    if (end == raw || *end != '\0')
        throw ConfigError(std::string(name) + ": cannot parse '" + raw + "' as a number");
    return v;
}

// Precedence: command-line flag > environment > config file > built-in.
BetaSchedule effective_schedule(const std::optional<BetaSchedule>& from_config,
                                const std::optional<double>& tol_gap_flag,
                                const std::optional<double>& tol_dom_flag)
{
    BetaSchedule s = from_config.value_or(BetaSchedule{});
    if (const auto v = env_double("STRONGENV_TOL_GAP")) s.tol_gap = *v;
    if (const auto v = env_double("STRONGENV_TOL_DOM")) s.tol_dom = *v;
    if (tol_gap_flag) s.tol_gap = *tol_gap_flag;
    if (tol_dom_flag) s.tol_dom = *tol_dom_flag;
    s.validate();
    return s;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out)
{
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ConfigError(out_path + ": cannot open for writing");
    f << text;
}

int run_envelope(const std::string& config_path, const std::string& out_path, std::ostream& out)
{
    const InstanceConfig config = load_config(config_path);
    const Instance inst = resolve(config);
    const BetaSchedule schedule = effective_schedule(config.schedule, {}, {});
    Stopwatch watch;
    const EnvelopeResult result = strong_envelope(inst.tree, inst.grid, inst.obstacle, schedule);
    emit(envelope_report_json(inst, result, watch.elapsed()), out_path, out);
    return 0;
}

int run_verify(const std::string& config_path, int seeds,
               const std::optional<double>& tol_gap_flag,
               const std::optional<double>& tol_dom_flag, const std::string& out_path,
               std::ostream& out, std::ostream& err)
{
    Stopwatch watch;
    std::optional<InstanceConfig> config;
    if (!config_path.empty()) config = load_config(config_path);
    const BetaSchedule schedule = effective_schedule(
        config ? config->schedule : std::nullopt, tol_gap_flag, tol_dom_flag);
    SuiteOptions options;
    options.schedule = schedule;
    std::vector<InstanceChecks> rows;
    auto run_one = [&](const std::string& name, const Instance& inst) {
        rows.push_back(InstanceChecks{
            name, instance_digest(inst), inst.tree.node_count(),
            run_full_suite(inst.tree, inst.grid, inst.obstacle, options)});
    };
    if (config) run_one("config", resolve(*config));
    for (int s = 1; s <= seeds; ++s) {
        RandomInstanceSpec spec;
        spec.seed = static_cast<std::uint64_t>(s);
        run_one("seed=" + std::to_string(s), make_random_instance(spec));
    }

    std::size_t failures = 0;
    for (const InstanceChecks& row : rows)
        for (const CheckReport& c : row.checks)
            if (!c.pass) {
                ++failures;
                err << "FAIL " << row.name << " " << c.name
                    << " worst_residual=" << c.worst_residual
                    << (c.witness.empty() ? "" : " at " + c.witness) << "\n";
            }
    emit(verify_report_json("verify", rows, schedule, watch.elapsed()), out_path, out);
    return failures == 0 ? 0 : 1;
}

int run_convergence(const std::string& config_path, double beta_max,
                    const std::string& out_path, std::ostream& out)
{
    const InstanceConfig config = load_config(config_path);
    const Instance inst = resolve(config);
    BetaSchedule schedule = effective_schedule(config.schedule, {}, {});
    schedule.beta_max = beta_max;
    schedule.validate();

    // Full sweep without the early stop, so the curve covers every beta.
    const AdaptedProcess u = direct_recursion(inst.tree, inst.grid, inst.obstacle);
    std::vector<BetaRow> rows;
    for (const double beta : schedule.betas()) {
        const AdaptedProcess ub = penalized_envelope(inst.tree, inst.grid, inst.obstacle, beta);
        double gap = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n)
            gap = std::max(gap, std::abs(u[n] - ub[n]));
        rows.push_back(BetaRow{
            beta, gap, domination_violation(inst.tree, inst.grid, inst.obstacle, ub)});
    }
    std::ostringstream csv;
    write_convergence_csv(csv, rows);
    emit(csv.str(), out_path, out);
    return 0;
}

int run_oracle(std::size_t max_nodes, int seeds, const BetaSchedule& schedule,
               const std::string& out_path, std::ostream& out, std::ostream& err)
{
    Stopwatch watch;
    std::vector<InstanceChecks> rows;
    bool all = true;
    for (int s = 1; s <= seeds; ++s) {
        const Instance inst = make_small_instance(static_cast<std::uint64_t>(s), max_nodes);
        const EnvelopeResult env =
            strong_envelope(inst.tree, inst.grid, inst.obstacle, schedule);
        double sup = 0.0;
        for (const double v : inst.obstacle.values()) sup = std::max(sup, std::abs(v));
        const double scale = 1.0 + sup;

        const double best =
            root_value_by_enumeration(inst.tree, inst.grid, inst.obstacle, 1u << 22);
        CheckReport enumeration{"enumeration_root", false, std::abs(best - env.u[0]), ""};
        enumeration.pass = enumeration.worst_residual <= 1e-12 * scale;

        double start = 0.0;
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.non_cemetery_count()); ++n)
            if (inst.grid.is_weighted(inst.tree.level(n)))
                start = std::max(start, inst.obstacle[n]);
        const AdaptedProcess vi =
            envelope_by_value_iteration(inst.tree, inst.grid, inst.obstacle, start);
        CheckReport iteration{"value_iteration", false, 0.0, ""};
        for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.node_count()); ++n)
            iteration.worst_residual =
                std::max(iteration.worst_residual, std::abs(vi[n] - env.u[n]));
        iteration.pass = iteration.worst_residual <= 1e-11 * scale;

        all = all && enumeration.pass && iteration.pass;
        rows.push_back(InstanceChecks{"seed=" + std::to_string(s), instance_digest(inst),
                                      inst.tree.node_count(),
                                      {std::move(enumeration), std::move(iteration)}});
    }
    if (!all) err << "oracle disagreement, see report\n";
    emit(verify_report_json("oracle", rows, schedule, watch.elapsed()), out_path, out);
    return all ? 0 : 1;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Weighted envelopes of obstacles on finite probability trees"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    int seeds = -1;
    std::size_t max_nodes = 12;
    double beta_max = 0.0;
    double tol_gap_val = 0.0, tol_dom_val = 0.0;
    std::optional<double> tol_gap_flag, tol_dom_flag;

    CLI::App* envelope = app.add_subcommand("envelope", "Compute U, M, A for one instance");
    envelope->add_option("--config", config_path, "instance config (JSON)")->required();
    envelope->add_option("--out", out_path, "write the JSON report here instead of stdout");

    CLI::App* verify = app.add_subcommand("verify", "Run the verification suite");
    verify->add_option("--config", config_path, "instance config (JSON)");
    verify->add_option("--seeds", seeds, "also verify seeded random instances 1..N");
    verify->add_option("--tol-gap", tol_gap_val, "penalization convergence tolerance");
    verify->add_option("--tol-dom", tol_dom_val, "domination tolerance");
    verify->add_option("--out", out_path, "write the JSON report here instead of stdout");

    CLI::App* convergence = app.add_subcommand("convergence", "Emit the beta-sweep CSV");
    convergence->add_option("--config", config_path, "instance config (JSON)")->required();
    convergence->add_option("--beta-max", beta_max, "largest beta in the sweep")->required();
    convergence->add_option("--out", out_path, "write the CSV here instead of stdout");

    CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive cross-checks on small instances");
    oracle->add_option("--max-nodes", max_nodes, "largest non-cemetery node count");
    oracle->add_option("--seeds", seeds, "number of seeded instances")->required();
    oracle->add_option("--out", out_path, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(envelope)) return run_envelope(config_path, out_path, out);
        if (app.got_subcommand(verify)) {
            if (config_path.empty() && seeds < 0) seeds = 20; // default battery
            if (seeds < 0) seeds = 0;
            if (verify->count("--tol-gap") > 0) tol_gap_flag = tol_gap_val;
            if (verify->count("--tol-dom") > 0) tol_dom_flag = tol_dom_val;
            return run_verify(config_path, seeds, tol_gap_flag, tol_dom_flag, out_path, out,
                              err);
        }
        if (app.got_subcommand(convergence))
            return run_convergence(config_path, beta_max, out_path, out);
        if (app.got_subcommand(oracle)) {
            const BetaSchedule schedule = effective_schedule({}, tol_gap_flag, tol_dom_flag);
            return run_oracle(max_nodes, seeds, schedule, out_path, out, err);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace strongenv
