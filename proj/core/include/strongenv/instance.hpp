#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strongenv/envelope.hpp"
#include "strongenv/filtration_tree.hpp"
#include "strongenv/process.hpp"
#include "strongenv/time_grid.hpp"

namespace strongenv {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Instance {
    FiltrationTree tree;
    TimeGrid grid;
    AdaptedProcess obstacle;
};

// Hard limit on resolved tree sizes (the binomial expansion is exponential).
inline constexpr std::size_t kMaxInstanceNodes = std::size_t{1} << 20;

struct ObstacleDistribution {
    double lo = -1.0;
    double hi = 1.0;
};

struct RandomInstanceSpec {
    std::uint64_t seed = 1;
    int depth = 5; // number of non-cemetery levels
    int branching = 3;
    ObstacleDistribution obstacle{};
    double zero_weight_prob = 0.25;
};

// Declarative instance description, loadable from JSON (see README for the
// schema) and serializable back.  Either an explicit tree or a binomial
// lattice expanded to the full non-recombining tree.
struct InstanceConfig {
    enum class Kind { explicit_tree, binomial };

    Kind kind = Kind::explicit_tree;

    // Optional grid; when absent, unit times and weights are used.
    std::optional<std::vector<double>> times;   // length = weighted levels + 1
    std::optional<std::vector<double>> weights; // length = weighted levels

    // explicit_tree: node i has parents[i] (< i, -1 for the root),
    // transition probability probs[i] and obstacle value obstacle[i]
    // (cemetery entries must be 0).
    std::vector<NodeId> parents;
    std::vector<double> probs;
    std::vector<double> obstacle;

    // binomial: `steps` one-period moves; child 0 is the up move.
    int steps = 0;
    double p_up = 0.5;
    double initial = 100.0;
    double up = 1.1;
    double down = 0.9;
    std::string payoff = "put"; // "call", "put" or "table"
    double strike = 100.0;
    std::vector<std::vector<double>> table; // per level, in node order

    std::optional<BetaSchedule> schedule;
};

InstanceConfig load_config(const std::string& path);
InstanceConfig parse_config(const std::string& json_text, const std::string& origin = "<string>");
std::string config_to_json(const InstanceConfig& config); // stable field order

// Deterministic random instance as an explicit-tree config (see README for
// the generation recipe; reproducible across platforms).
InstanceConfig generate_random(const RandomInstanceSpec& spec);

// Validates and expands a config; throws ConfigError with a field diagnostic.
Instance resolve(const InstanceConfig& config);

Instance make_random_instance(const RandomInstanceSpec& spec);

// Deterministic small instance with at most max_non_cemetery nodes off the
// cemetery (>= 2 required): rejection over seeded shallow draws, so every
// seed maps to a reproducible instance.
Instance make_small_instance(std::uint64_t seed, std::size_t max_non_cemetery);

// FNV-1a 64 over the canonical little-endian serialization of the resolved
// tree, grid and obstacle; stable across platforms and runs.
std::string instance_digest(const Instance& instance);

} // namespace strongenv
