#include "strongenv/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "strongenv/report.hpp"
#include "strongenv/rng.hpp"

namespace strongenv {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& origin, const std::string& message)
{
    throw ConfigError(origin + ": " + message);
}

template <typename T>
T field_as(const ordered_json& j, const std::string& origin, const std::string& key)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(origin, "field '" + key + "': " + e.what());
    }
}

template <typename T>
void read_optional(const ordered_json& j, const std::string& origin, const std::string& key,
                   T& out)
{
    if (j.contains(key)) out = field_as<T>(j, origin, key);
}

BetaSchedule parse_schedule(const ordered_json& j, const std::string& origin)
{
    BetaSchedule s;
    read_optional(j, origin, "beta0", s.beta0);
    read_optional(j, origin, "growth", s.growth);
    read_optional(j, origin, "beta_max", s.beta_max);
    read_optional(j, origin, "tol_gap", s.tol_gap);
    read_optional(j, origin, "tol_dom", s.tol_dom);
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        fail(origin, std::string("schedule: ") + e.what());
    }
    return s;
}

void append_le_bytes(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_le_double(std::string& out, double v)
{
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    append_le_bytes(out, bits);
}

} // namespace

InstanceConfig parse_config(const std::string& json_text, const std::string& origin)
{
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(origin, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(origin, "top level must be an object");

    InstanceConfig c;
    const std::string kind = j.contains("kind") ? field_as<std::string>(j, origin, "kind")
                                                : std::string("explicit_tree");
    if (kind == "explicit_tree") {
        c.kind = InstanceConfig::Kind::explicit_tree;
        c.parents = field_as<std::vector<NodeId>>(j, origin, "parents");
        c.probs = field_as<std::vector<double>>(j, origin, "probs");
        c.obstacle = field_as<std::vector<double>>(j, origin, "obstacle");
    } else if (kind == "binomial") {
        c.kind = InstanceConfig::Kind::binomial;
        c.steps = field_as<int>(j, origin, "steps");
        read_optional(j, origin, "p_up", c.p_up);
        read_optional(j, origin, "initial", c.initial);
        read_optional(j, origin, "up", c.up);
        read_optional(j, origin, "down", c.down);
        read_optional(j, origin, "payoff", c.payoff);
        read_optional(j, origin, "strike", c.strike);
        if (c.payoff == "table") c.table = field_as<std::vector<std::vector<double>>>(j, origin, "table");
        else if (j.contains("table")) fail(origin, "field 'table' requires payoff \"table\"");
        if (c.payoff != "call" && c.payoff != "put" && c.payoff != "table")
            fail(origin, "payoff must be \"call\", \"put\" or \"table\"");
    } else {
        fail(origin, "kind must be \"explicit_tree\" or \"binomial\"");
    }

    if (j.contains("times")) c.times = field_as<std::vector<double>>(j, origin, "times");
    if (j.contains("weights")) c.weights = field_as<std::vector<double>>(j, origin, "weights");
    if (j.contains("schedule")) {
        if (!j["schedule"].is_object()) fail(origin, "schedule must be an object");
        c.schedule = parse_schedule(j["schedule"], origin);
    }

    static const char* known[] = {"kind",    "parents", "probs",  "obstacle", "steps",
                                  "p_up",    "initial", "up",     "down",     "payoff",
                                  "strike",  "table",   "times",  "weights",  "schedule"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return it.key() == k; }) == std::end(known))
            fail(origin, "unknown field '" + it.key() + "'");
    return c;
}

InstanceConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string config_to_json(const InstanceConfig& config)
{
    ordered_json j;
    if (config.kind == InstanceConfig::Kind::explicit_tree) {
        j["kind"] = "explicit_tree";
        j["parents"] = config.parents;
        j["probs"] = config.probs;
        j["obstacle"] = config.obstacle;
    } else {
        j["kind"] = "binomial";
        j["steps"] = config.steps;
        j["p_up"] = config.p_up;
        j["initial"] = config.initial;
        j["up"] = config.up;
        j["down"] = config.down;
        j["payoff"] = config.payoff;
        if (config.payoff == "table") j["table"] = config.table;
        else j["strike"] = config.strike;
    }
    if (config.times) j["times"] = *config.times;
    if (config.weights) j["weights"] = *config.weights;
    if (config.schedule) {
        ordered_json s;
        s["beta0"] = config.schedule->beta0;
        s["growth"] = config.schedule->growth;
        s["beta_max"] = config.schedule->beta_max;
        s["tol_gap"] = config.schedule->tol_gap;
        s["tol_dom"] = config.schedule->tol_dom;
        j["schedule"] = s;
    }
    return j.dump(2) + "\n";
}

InstanceConfig generate_random(const RandomInstanceSpec& spec)
{
    if (spec.depth < 1) throw ConfigError("generate_random: depth must be >= 1");
    if (spec.branching < 1) throw ConfigError("generate_random: branching must be >= 1");
    if (!(spec.obstacle.lo <= spec.obstacle.hi))
        throw ConfigError("generate_random: obstacle range is empty");
    if (!(spec.zero_weight_prob >= 0.0 && spec.zero_weight_prob < 1.0))
        throw ConfigError("generate_random: zero_weight_prob must lie in [0, 1)");

    Rng rng(spec.seed);
    InstanceConfig c;
    c.kind = InstanceConfig::Kind::explicit_tree;

    // Non-cemetery levels 0..depth-1, then one cemetery child per leaf-to-be.
    c.parents.push_back(kNoNode);
    c.probs.push_back(1.0);
    std::vector<NodeId> frontier{0};
    for (int k = 1; k < spec.depth; ++k) {
        std::vector<NodeId> next;
        for (const NodeId p : frontier) {
            const int nc = rng.uniform_int(1, spec.branching);
            std::vector<double> g(static_cast<std::size_t>(nc));
            double sum = 0.0;
            for (double& v : g) {
                v = rng.uniform(0.1, 1.0);
                sum += v;
            }
            for (int i = 0; i < nc; ++i) {
                next.push_back(static_cast<NodeId>(c.parents.size()));
                c.parents.push_back(p);
                c.probs.push_back(g[static_cast<std::size_t>(i)] / sum);
            }
            if (c.parents.size() > kMaxInstanceNodes)
                throw ConfigError("generate_random: instance exceeds the node limit");
        }
        frontier = std::move(next);
    }
    for (const NodeId p : frontier) {
        c.parents.push_back(p);
        c.probs.push_back(1.0);
    }

    // Obstacles in canonical order (generation order is already canonical);
    // cemetery nodes carry 0.
    const std::size_t cemetery_first = c.parents.size() - frontier.size();
    for (std::size_t i = 0; i < c.parents.size(); ++i)
        c.obstacle.push_back(i < cemetery_first
                                 ? rng.uniform(spec.obstacle.lo, spec.obstacle.hi)
                                 : 0.0);

    // Weights in [0.5, 1.5] (zero with probability zero_weight_prob, at least
    // one forced positive) and steps dt in [0.5, 1.5]: the products keep the
    // final penalization gap clear of its tolerance.
    std::vector<double> w(static_cast<std::size_t>(spec.depth));
    bool any = false;
    for (double& v : w) {
        const double gate = rng.uniform();
        const double mag = rng.uniform(0.5, 1.5);
        v = gate < spec.zero_weight_prob ? 0.0 : mag;
        any = any || v > 0.0;
    }
    if (!any) w[static_cast<std::size_t>(spec.depth - 1)] = rng.uniform(0.5, 1.5);
    std::vector<double> times{0.0};
    for (int k = 0; k < spec.depth; ++k) times.push_back(times.back() + rng.uniform(0.5, 1.5));
    c.times = std::move(times);
    c.weights = std::move(w);
    return c;
}

namespace {

Instance resolve_explicit(const InstanceConfig& config)
{
    if (config.parents.size() != config.probs.size() ||
        config.parents.size() != config.obstacle.size())
        throw ConfigError("explicit_tree: parents, probs and obstacle must have equal length");
    if (config.parents.size() > kMaxInstanceNodes)
        throw ConfigError("explicit_tree: instance exceeds the node limit");

    std::vector<NodeId> to_canonical;
    FiltrationTree tree = [&] {
        try {
            return FiltrationTree::build(config.parents, config.probs, &to_canonical);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("explicit_tree: ") + e.what());
        }
    }();

    std::vector<double> obstacle(tree.node_count());
    for (std::size_t i = 0; i < config.obstacle.size(); ++i)
        obstacle[static_cast<std::size_t>(to_canonical[i])] = config.obstacle[i];
    AdaptedProcess x(tree, std::move(obstacle));
    {
        auto [first, last] = tree.leaf_range();
        for (NodeId n = first; n < last; ++n)
            if (x[n] != 0.0) throw ConfigError("explicit_tree: cemetery obstacle must be 0");
    }

    const int depth = tree.cemetery_level();
    TimeGrid grid = [&] {
        try {
            if (config.times && config.weights) return TimeGrid(*config.times, *config.weights);
            if (config.times || config.weights)
                throw std::invalid_argument("times and weights must be given together");
            return TimeGrid::unit(depth);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }();
    if (grid.level_count() != tree.level_count())
        throw ConfigError("grid: " + std::to_string(grid.weighted_level_count()) +
                          " weights for a tree of depth " + std::to_string(depth));
    return Instance{std::move(tree), std::move(grid), std::move(x)};
}

Instance resolve_binomial(const InstanceConfig& config)
{
    if (config.steps < 1) throw ConfigError("binomial: steps must be >= 1");
    if (config.steps > 18) throw ConfigError("binomial: steps too large to expand");
    if (!(config.p_up > 0.0 && config.p_up < 1.0))
        throw ConfigError("binomial: p_up must lie in (0, 1)");
    if (!(config.initial > 0.0 && config.up > 0.0 && config.down > 0.0))
        throw ConfigError("binomial: initial, up and down must be positive");
    if (config.payoff == "table" &&
        config.table.size() != static_cast<std::size_t>(config.steps) + 1)
        throw ConfigError("binomial: table needs one row per level");

    // Expand the lattice into the non-recombining tree; child 0 is the up
    // move.  Level k holds 2^k nodes, in the order induced by the parents.
    InstanceConfig flat;
    flat.kind = InstanceConfig::Kind::explicit_tree;
    flat.times = config.times;
    flat.weights = config.weights;

    std::vector<double> price{config.initial};
    std::vector<NodeId> frontier{0};
    flat.parents.push_back(kNoNode);
    flat.probs.push_back(1.0);

    auto payoff_of = [&](int level, std::size_t offset, double s) -> double {
        if (config.payoff == "call") return std::max(s - config.strike, 0.0);
        if (config.payoff == "put") return std::max(config.strike - s, 0.0);
        const auto& row = config.table[static_cast<std::size_t>(level)];
        if (offset >= row.size())
            throw ConfigError("binomial: table row " + std::to_string(level) + " is too short");
        return row[offset];
    };

    flat.obstacle.push_back(payoff_of(0, 0, config.initial));
    for (int k = 1; k <= config.steps; ++k) {
        std::vector<double> nprice;
        std::vector<NodeId> nfrontier;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            for (const int updown : {0, 1}) {
                const double s = price[i] * (updown == 0 ? config.up : config.down);
                nfrontier.push_back(static_cast<NodeId>(flat.parents.size()));
                flat.parents.push_back(frontier[i]);
                flat.probs.push_back(updown == 0 ? config.p_up : 1.0 - config.p_up);
                flat.obstacle.push_back(payoff_of(k, nprice.size(), s));
                nprice.push_back(s);
            }
        }
        price = std::move(nprice);
        frontier = std::move(nfrontier);
        if (flat.parents.size() > kMaxInstanceNodes)
            throw ConfigError("binomial: instance exceeds the node limit");
    }
    for (const NodeId p : frontier) {
        flat.parents.push_back(p);
        flat.probs.push_back(1.0);
        flat.obstacle.push_back(0.0);
    }
    return resolve_explicit(flat);
}

} // namespace

Instance resolve(const InstanceConfig& config)
{
    return config.kind == InstanceConfig::Kind::explicit_tree ? resolve_explicit(config)
                                                              : resolve_binomial(config);
}

Instance make_random_instance(const RandomInstanceSpec& spec)
{
    return resolve(generate_random(spec));
}

Instance make_small_instance(std::uint64_t seed, std::size_t max_non_cemetery)
{
    if (max_non_cemetery < 2)
        throw ConfigError("make_small_instance: max_non_cemetery must be >= 2");
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng r(seed + 0x9e3779b97f4a7c15ull * (attempt + 1));
        RandomInstanceSpec spec;
        spec.seed = r.next_u64();
        spec.depth = r.uniform_int(2, 4);
        spec.branching = r.uniform_int(1, 2);
        Instance inst = make_random_instance(spec);
        // depth 2, branching 1 always fits, so the rejection terminates.
        if (inst.tree.non_cemetery_count() <= max_non_cemetery) return inst;
    }
}

std::string instance_digest(const Instance& instance)
{
    const FiltrationTree& tree = instance.tree;
    std::string bytes;
    bytes.reserve(tree.node_count() * 24 + 64);
    append_le_bytes(bytes, tree.node_count());
    append_le_bytes(bytes, tree.level_count());
    for (NodeId n = 0; n < static_cast<NodeId>(tree.node_count()); ++n) {
        append_le_bytes(bytes, static_cast<std::uint64_t>(
                                   static_cast<std::int64_t>(tree.parent(n))));
        append_le_double(bytes, tree.transition_prob(n));
        append_le_double(bytes, instance.obstacle[n]);
    }
    for (int k = 0; k <= instance.grid.cemetery_level(); ++k)
        append_le_double(bytes, instance.grid.time(k));
    for (int k = 0; k < instance.grid.cemetery_level(); ++k)
        append_le_double(bytes, instance.grid.weight(k));
    return fnv1a64_hex(bytes);
}

} // namespace strongenv
