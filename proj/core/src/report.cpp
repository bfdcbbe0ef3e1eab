#include "strongenv/report.hpp"

#include <cstdint>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "strongenv/rng.hpp"

namespace strongenv {

namespace {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal form, via the JSON serializer's double path.
std::string double_repr(double v)
{
    return ordered_json(v).dump();
}

ordered_json sweep_json(const std::vector<BetaRow>& sweep)
{
    ordered_json rows = ordered_json::array();
    for (const BetaRow& row : sweep) {
        ordered_json r;
        r["beta"] = row.beta;
        r["sup_gap"] = row.sup_gap;
        r["domination_violation"] = row.domination_violation;
        rows.push_back(std::move(r));
    }
    return rows;
}

ordered_json process_json(const FiltrationTree& tree, const AdaptedProcess& y)
{
    ordered_json obj = ordered_json::object();
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n)
        obj[tree.path_string(n)] = y[n];
    return obj;
}

// The digest covers the whole report except the volatile timing block.
std::string seal(ordered_json& report)
{
    ordered_json body = report;
    body.erase("timings");
    const std::string digest = fnv1a64_hex(body.dump());
    report["digest"] = digest;
    return report.dump(2) + "\n";
}

} // namespace

std::string fnv1a64_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char ch : bytes) {
        h ^= static_cast<std::uint8_t>(ch);
        h *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << "fnv1a64:" << std::hex;
    for (int i = 15; i >= 0; --i) out << ((h >> (4 * i)) & 0xf);
    return out.str();
}

std::string envelope_report_json(const Instance& instance, const EnvelopeResult& result,
                                 double elapsed_seconds)
{
    ordered_json j;
    j["command"] = "envelope";
    j["instance"] = {
        {"digest", instance_digest(instance)},
        {"nodes", instance.tree.node_count()},
        {"levels", instance.tree.level_count()},
    };
    j["root_value"] = result.u[0];
    j["domination_violation"] = result.domination_violation;
    j["converged_by_gap"] = result.converged_by_gap;
    j["sweep"] = sweep_json(result.sweep);
    j["envelope"] = process_json(instance.tree, result.u);
    j["martingale"] = process_json(instance.tree, result.m);
    j["compensator"] = process_json(instance.tree, result.a);
    j["timings"] = {{"elapsed_seconds", elapsed_seconds}};
    return seal(j);
}

std::string verify_report_json(const std::string& command,
                               const std::vector<InstanceChecks>& instances,
                               const BetaSchedule& schedule, double elapsed_seconds)
{
    ordered_json j;
    j["command"] = command;
    j["rng"] = Rng::kAlgorithm;
    j["schedule"] = {
        {"beta0", schedule.beta0},       {"growth", schedule.growth},
        {"beta_max", schedule.beta_max}, {"tol_gap", schedule.tol_gap},
        {"tol_dom", schedule.tol_dom},
    };
    bool all = true;
    std::size_t checks = 0;
    ordered_json rows = ordered_json::array();
    for (const InstanceChecks& inst : instances) {
        ordered_json r;
        r["name"] = inst.name;
        r["digest"] = inst.digest;
        r["nodes"] = inst.nodes;
        ordered_json cj = ordered_json::array();
        for (const CheckReport& c : inst.checks) {
            ordered_json one;
            one["name"] = c.name;
            one["pass"] = c.pass;
            one["worst_residual"] = c.worst_residual;
            if (!c.witness.empty()) one["witness"] = c.witness;
            cj.push_back(std::move(one));
            all = all && c.pass;
            ++checks;
        }
        r["checks"] = std::move(cj);
        rows.push_back(std::move(r));
    }
    j["instances"] = std::move(rows);
    j["total_checks"] = checks;
    j["all_pass"] = all;
    j["timings"] = {{"elapsed_seconds", elapsed_seconds}};
    return seal(j);
}

std::string report_digest_field(const std::string& report_json)
{
    const ordered_json j = ordered_json::parse(report_json);
    return j.at("digest").get<std::string>();
}

void write_convergence_csv(std::ostream& out, const std::vector<BetaRow>& rows)
{
    out << "beta,sup_gap,domination_violation\n";
    for (const BetaRow& r : rows)
        out << double_repr(r.beta) << ',' << double_repr(r.sup_gap) << ','
            << double_repr(r.domination_violation) << '\n';
}

} // namespace strongenv
