#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strongenv/cli.hpp"
#include "strongenv/envelope.hpp"
#include "strongenv/instance.hpp"
#include "strongenv/report.hpp"

#include "fixtures.hpp"

#ifndef STRONGENV_CONFIG_DIR
#error "STRONGENV_CONFIG_DIR must point at the configs directory"
#endif

using namespace strongenv;
using nlohmann::json;
using strongenv::testing::make_f1;

namespace {

std::string config_path(const std::string& name)
{
    return std::string(STRONGENV_CONFIG_DIR) + "/" + name;
}

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args)
{
    std::vector<const char*> argv{"strongenv"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun run;
    run.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    run.out = out.str();
    run.err = err.str();
    return run;
}

// RAII environment variable override.
struct EnvVar {
    EnvVar(const char* name, const char* value) : name_(name)
    {
        const char* old = std::getenv(name);
        if (old) saved_ = old;
        had_ = old != nullptr;
        setenv(name, value, 1);
    }
    ~EnvVar()
    {
        if (had_)
            setenv(name_, saved_.c_str(), 1);
        else
            unsetenv(name_);
    }
    const char* name_;
    std::string saved_;
    bool had_ = false;
};

} // namespace

TEST_CASE("fnv1a64: reference values")
{
    CHECK(fnv1a64_hex("") == "fnv1a64:cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "fnv1a64:af63dc4c8601ec8c");
    CHECK(fnv1a64_hex(std::string(1, '\0')) == "fnv1a64:af63bd4c8601b7df");
}

TEST_CASE("config: file fixture resolves to the hand-built instance")
{
    const InstanceConfig config = load_config(config_path("fixture_f1.json"));
    const Instance inst = resolve(config);
    CHECK(inst.tree.node_count() == 4);
    CHECK(inst.grid.level_count() == 4);
    CHECK(inst.obstacle.values() == std::vector<double>{1.0, 3.0, 2.0, 0.0});

    const auto f = make_f1();
    const Instance hand{f.tree, f.grid, f.x};
    CHECK(instance_digest(inst) == instance_digest(hand));
    CHECK(instance_digest(inst).substr(0, 8) == "fnv1a64:");
}

TEST_CASE("config: serialization round-trips through parse")
{
    const InstanceConfig config = load_config(config_path("fixture_f2.json"));
    const std::string text = config_to_json(config);
    const InstanceConfig again = parse_config(text, "round-trip");
    CHECK(config_to_json(again) == text);
    CHECK(instance_digest(resolve(again)) == instance_digest(resolve(config)));

    const InstanceConfig binomial = load_config(config_path("binomial_put.json"));
    const InstanceConfig binomial2 = parse_config(config_to_json(binomial), "round-trip");
    CHECK(instance_digest(resolve(binomial2)) == instance_digest(resolve(binomial)));
}

TEST_CASE("config: binomial expansion")
{
    InstanceConfig config;
    config.kind = InstanceConfig::Kind::binomial;
    config.steps = 1;
    config.p_up = 0.5;
    config.initial = 1.0;
    config.up = 2.0;
    config.down = 0.5;
    config.payoff = "table";
    config.table = {{0.0}, {2.0, 0.0}};
    const Instance inst = resolve(config);
    CHECK(inst.tree.node_count() == 5); // root, up, down, two cemetery nodes
    CHECK(inst.obstacle[0] == 0.0);
    CHECK(inst.obstacle[1] == 2.0); // child 0 is the up move
    CHECK(inst.obstacle[2] == 0.0);
    const EnvelopeResult res = strong_envelope(inst.tree, inst.grid, inst.obstacle);
    CHECK(res.u.values()[0] == 1.0);

    // A 4-step put has 2^4 leaves-of-the-lattice plus their cemetery nodes.
    const Instance put = resolve(load_config(config_path("binomial_put.json")));
    CHECK(put.tree.node_count() == 47); // 31 lattice nodes + 16 cemetery
    CHECK(put.obstacle[0] == 0.0);      // at-the-money put
}

TEST_CASE("config: malformed inputs are rejected with ConfigError")
{
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"kind": "explicit_tree"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"kind": "nonsense"})"), ConfigError);

    const std::string base = R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0, 1.0],
        "obstacle": [1.0, 0.0]
    })";
    CHECK(resolve(parse_config(base)).tree.node_count() == 2);

    // Unknown fields are typos, not extensions.
    CHECK_THROWS_AS(parse_config(R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0, 1.0],
        "obstacle": [1.0, 0.0],
        "obstacles": [1.0, 0.0]
    })"),
                    ConfigError);

    // Cemetery obstacle must vanish.
    CHECK_THROWS_AS(resolve(parse_config(R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0, 1.0],
        "obstacle": [1.0, 0.5]
    })")),
                    ConfigError);

    // Mismatched array lengths.
    CHECK_THROWS_AS(resolve(parse_config(R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0],
        "obstacle": [1.0, 0.0]
    })")),
                    ConfigError);

    // times without weights.
    CHECK_THROWS_AS(resolve(parse_config(R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0, 1.0],
        "obstacle": [1.0, 0.0],
        "times": [0.0, 1.0]
    })")),
                    ConfigError);

    // Wrong grid depth for the tree.
    CHECK_THROWS_AS(resolve(parse_config(R"({
        "kind": "explicit_tree",
        "parents": [-1, 0],
        "probs": [1.0, 1.0],
        "obstacle": [1.0, 0.0],
        "times": [0.0, 1.0, 2.0],
        "weights": [1.0, 1.0]
    })")),
                    ConfigError);

    // Binomial parameter validation.
    InstanceConfig bin;
    bin.kind = InstanceConfig::Kind::binomial;
    bin.steps = 0;
    CHECK_THROWS_AS(resolve(bin), ConfigError);
    bin.steps = 19;
    CHECK_THROWS_AS(resolve(bin), ConfigError);
    bin.steps = 2;
    bin.p_up = 1.5;
    CHECK_THROWS_AS(resolve(bin), ConfigError);
    bin.p_up = 0.5;
    bin.down = -0.5;
    CHECK_THROWS_AS(resolve(bin), ConfigError);
    bin.down = 0.9;
    bin.payoff = "table";
    bin.table = {{0.0}, {0.0, 0.0}}; // missing the level-2 row
    CHECK_THROWS_AS(resolve(bin), ConfigError);
}

TEST_CASE("random instances: reproducible generation")
{
    RandomInstanceSpec spec;
    spec.seed = 7;
    const InstanceConfig a = generate_random(spec);
    const InstanceConfig b = generate_random(spec);
    CHECK(config_to_json(a) == config_to_json(b));
    CHECK(instance_digest(resolve(a)) == instance_digest(resolve(b)));

    spec.seed = 8;
    CHECK(config_to_json(generate_random(spec)) != config_to_json(a));

    const Instance inst = make_random_instance(spec);
    CHECK(inst.tree.node_count() == resolve(generate_random(spec)).tree.node_count());
    CHECK(inst.tree.level_count() == static_cast<std::size_t>(spec.depth) + 1);
}

TEST_CASE("random instances: small trees respect the cap")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Instance inst = make_small_instance(seed, 12);
        CHECK(inst.tree.non_cemetery_count() <= 12);
        CHECK(inst.tree.non_cemetery_count() >= 2);
        CHECK(instance_digest(inst) == instance_digest(make_small_instance(seed, 12)));
    }
    CHECK_THROWS_AS(make_small_instance(1, 1), ConfigError);
}

TEST_CASE("envelope report: structure and digest stability")
{
    const Instance inst = resolve(load_config(config_path("fixture_f1.json")));
    const EnvelopeResult res = strong_envelope(inst.tree, inst.grid, inst.obstacle);

    const std::string report = envelope_report_json(inst, res, 0.25);
    const json j = json::parse(report);
    CHECK(j.at("command") == "envelope");
    CHECK(j.at("instance").at("nodes") == 4);
    CHECK(j.at("instance").at("digest") == instance_digest(inst));
    CHECK(j.at("root_value") == 3.0);
    CHECK(j.at("domination_violation") == 0.0);
    CHECK(j.at("sweep").size() == 9);
    CHECK(j.at("envelope").at("") == 3.0);
    CHECK(j.at("envelope").at("0.0") == 2.0);
    CHECK(j.at("martingale").at("0.0.0") == 3.0);
    CHECK(j.at("compensator").at("0.0.0") == 3.0);
    CHECK(j.at("timings").at("elapsed_seconds") == 0.25);

    // The digest ignores timings, so reruns reproduce it.
    const std::string rerun = envelope_report_json(inst, res, 99.0);
    CHECK(report != rerun);
    CHECK(report_digest_field(report) == report_digest_field(rerun));
    CHECK(report_digest_field(report).substr(0, 8) == "fnv1a64:");
}

TEST_CASE("convergence csv: exact header and shrinking gaps")
{
    const Instance inst = resolve(load_config(config_path("fixture_f1.json")));
    const EnvelopeResult res = strong_envelope(inst.tree, inst.grid, inst.obstacle);
    std::ostringstream csv;
    write_convergence_csv(csv, res.sweep);

    std::istringstream lines(csv.str());
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "beta,sup_gap,domination_violation");
    REQUIRE(std::getline(lines, line));
    CHECK(line == "1.0,1.0,1.0");
    std::size_t rows = 1;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == res.sweep.size());
}

TEST_CASE("cli: usage errors exit with 2")
{
    CHECK(cli({}).code == 2);
    CHECK(cli({"bogus"}).code == 2);
    CHECK(cli({"envelope"}).code == 2);              // --config is required
    CHECK(cli({"convergence", "--config", config_path("fixture_f1.json")}).code == 2);
    CHECK(cli({"oracle"}).code == 2);                // --seeds is required
    CHECK(cli({"envelope", "--config", "/nonexistent.json"}).code == 2);
    const CliRun help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("envelope") != std::string::npos);
}

TEST_CASE("cli: envelope command emits the report")
{
    const CliRun run = cli({"envelope", "--config", config_path("fixture_f1.json")});
    REQUIRE(run.code == 0);
    const json j = json::parse(run.out);
    CHECK(j.at("root_value") == 3.0);
    CHECK(j.at("converged_by_gap") == false);
}

TEST_CASE("cli: verify runs the suite on the config instance")
{
    const CliRun run =
        cli({"verify", "--config", config_path("fixture_f2.json"), "--seeds", "0"});
    REQUIRE(run.code == 0);
    CHECK(run.err.empty());
    const json j = json::parse(run.out);
    CHECK(j.at("command") == "verify");
    CHECK(j.at("rng") == "mt19937_64+u53");
    CHECK(j.at("all_pass") == true);
    CHECK(j.at("instances").size() == 1);
    CHECK(j.at("instances").at(0).at("name") == "config");
    CHECK(j.at("instances").at(0).at("checks").size() == 20);
}

TEST_CASE("cli: verify covers seeded random instances deterministically")
{
    const CliRun first = cli({"verify", "--seeds", "2"});
    REQUIRE(first.code == 0);
    const json j = json::parse(first.out);
    CHECK(j.at("instances").size() == 2);
    CHECK(j.at("instances").at(0).at("name") == "seed=1");
    CHECK(j.at("all_pass") == true);

    const CliRun second = cli({"verify", "--seeds", "2"});
    CHECK(report_digest_field(first.out) == report_digest_field(second.out));
}

TEST_CASE("cli: tolerance precedence is flag over environment over default")
{
    const std::string cfg = config_path("fixture_f1.json");
    {
        // 1e-5 keeps the beta sweep running far enough that domination still
        // holds within tol_dom; the suite must stay green under the override.
        const EnvVar gap("STRONGENV_TOL_GAP", "1e-5");
        const CliRun run = cli({"verify", "--config", cfg, "--seeds", "0"});
        REQUIRE(run.code == 0);
        CHECK(json::parse(run.out).at("schedule").at("tol_gap") == 1e-5);

        const CliRun flagged =
            cli({"verify", "--config", cfg, "--seeds", "0", "--tol-gap", "1e-9"});
        REQUIRE(flagged.code == 0);
        CHECK(json::parse(flagged.out).at("schedule").at("tol_gap") == 1e-9);
    }
    {
        const EnvVar gap("STRONGENV_TOL_GAP", "not-a-number");
        CHECK(cli({"verify", "--config", cfg, "--seeds", "0"}).code == 2);
    }
    {
        const EnvVar dom("STRONGENV_TOL_DOM", "0.5");
        const CliRun run = cli({"verify", "--config", cfg, "--seeds", "0"});
        REQUIRE(run.code == 0);
        CHECK(json::parse(run.out).at("schedule").at("tol_dom") == 0.5);
    }
    const CliRun plain = cli({"verify", "--config", cfg, "--seeds", "0"});
    REQUIRE(plain.code == 0);
    CHECK(json::parse(plain.out).at("schedule").at("tol_gap") == 1e-9);
}

TEST_CASE("cli: convergence writes the csv to a file")
{
    const std::string out_path = "convergence_test_out.csv";
    const CliRun run = cli({"convergence", "--config", config_path("fixture_f1.json"),
                            "--beta-max", "1e4", "--out", out_path});
    REQUIRE(run.code == 0);
    std::ifstream in(out_path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "beta,sup_gap,domination_violation");
    std::vector<double> gaps;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        gaps.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    REQUIRE(gaps.size() == 5); // beta = 1, 10, 100, 1e3, 1e4
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] < gaps[i - 1]);
    std::remove(out_path.c_str());

    CHECK(cli({"convergence", "--config", config_path("fixture_f1.json"), "--beta-max",
               "1e4", "--out", "/nonexistent-dir/x.csv"})
              .code == 2);
}

TEST_CASE("cli: oracle agrees on small instances")
{
    const CliRun run = cli({"oracle", "--seeds", "3", "--max-nodes", "10"});
    REQUIRE(run.code == 0);
    const json j = json::parse(run.out);
    CHECK(j.at("command") == "oracle");
    CHECK(j.at("all_pass") == true);
    CHECK(j.at("instances").size() == 3);
    for (const auto& inst : j.at("instances"))
        CHECK(inst.at("checks").size() == 2); // enumeration + value iteration
}
