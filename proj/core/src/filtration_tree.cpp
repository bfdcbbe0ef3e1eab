#include "strongenv/filtration_tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace strongenv {

namespace {

constexpr double kProbSumTol = 1e-12;

[[noreturn]] void fail(const std::string& msg)
{
    throw std::invalid_argument("FiltrationTree: " + msg);
}

} // namespace

FiltrationTree FiltrationTree::build(const std::vector<NodeId>& parents,
                                     const std::vector<double>& probs,
                                     std::vector<NodeId>* input_to_canonical)
{
    const std::size_t n = parents.size();
    if (n == 0) fail("empty node list");
    if (probs.size() != n) fail("parents and probs must have the same length");
    if (parents[0] != kNoNode) fail("node 0 must be the root (parent -1)");

    std::vector<int> in_level(n);
    std::vector<std::vector<NodeId>> in_children(n);
    for (std::size_t i = 1; i < n; ++i) {
        const NodeId p = parents[i];
        if (p < 0) fail("multiple roots (node " + std::to_string(i) + " has no parent)");
        if (static_cast<std::size_t>(p) >= i)
            fail("parents must precede children (node " + std::to_string(i) + ")");
        in_level[i] = in_level[static_cast<std::size_t>(p)] + 1;
        in_children[static_cast<std::size_t>(p)].push_back(static_cast<NodeId>(i));
    }
    if (!(probs[0] == 1.0)) fail("root transition probability must be 1");

    const int max_level = *std::max_element(in_level.begin(), in_level.end());

    // Canonical breadth-first numbering: level by level, children grouped by
    // parent in input order.
    std::vector<NodeId> order; // canonical id -> input index
    order.reserve(n);
    order.push_back(0);
    for (std::size_t head = 0; head < order.size(); ++head)
        for (NodeId c : in_children[static_cast<std::size_t>(order[head])]) order.push_back(c);
    if (order.size() != n) fail("disconnected node list");

    std::vector<NodeId> to_canonical(n);
    for (std::size_t i = 0; i < n; ++i) to_canonical[static_cast<std::size_t>(order[i])] = static_cast<NodeId>(i);

    FiltrationTree t;
    t.parent_.resize(n);
    t.level_.resize(n);
    t.prob_.resize(n);
    t.path_prob_.resize(n);
    t.child_begin_.assign(n + 1, 0);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t in = static_cast<std::size_t>(order[i]);
        t.level_[i] = in_level[in];
        t.prob_[i] = probs[in];
        t.parent_[i] = parents[in] == kNoNode ? kNoNode : to_canonical[static_cast<std::size_t>(parents[in])];
        if (i > 0 && t.level_[i] < t.level_[i - 1]) fail("internal ordering error");
    }

    NodeId next_child = 1;
    for (std::size_t i = 0; i < n; ++i) {
        t.child_begin_[i] = next_child;
        next_child += static_cast<NodeId>(in_children[static_cast<std::size_t>(order[i])].size());
    }
    t.child_begin_[n] = next_child;
    if (static_cast<std::size_t>(next_child) != n) fail("internal child layout error");

    t.level_begin_.assign(static_cast<std::size_t>(max_level) + 2, 0);
    for (std::size_t i = 0; i < n; ++i) t.level_begin_[static_cast<std::size_t>(t.level_[i]) + 1] = static_cast<NodeId>(i + 1);
    for (std::size_t k = 1; k < t.level_begin_.size(); ++k)
        if (t.level_begin_[k] < t.level_begin_[k - 1]) fail("level " + std::to_string(k - 1) + " is empty");

    // Probabilities: positive, summing to 1 per parent; path probabilities.
    t.path_prob_[0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        if (!(t.prob_[i] > 0.0))
            fail("transition probability of node " + std::to_string(i) + " must be positive");
        t.path_prob_[i] = t.path_prob_[static_cast<std::size_t>(t.parent_[i])] * t.prob_[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (t.child_begin_[i] == t.child_begin_[i + 1]) continue;
        double sum = 0.0;
        for (NodeId c = t.child_begin_[i]; c < t.child_begin_[i + 1]; ++c)
            sum += t.prob_[static_cast<std::size_t>(c)];
        if (std::abs(sum - 1.0) > kProbSumTol)
            fail("child probabilities of node " + std::to_string(i) + " sum to " +
                 std::to_string(sum));
    }

    // Every path visits each level exactly once: inner nodes have children,
    // and only cemetery-level nodes are leaves.
    for (std::size_t i = 0; i < n; ++i) {
        const bool leaf = t.child_begin_[i] == t.child_begin_[i + 1];
        if (leaf && t.level_[i] != max_level)
            fail("node " + std::to_string(i) + " is a leaf above the cemetery level");
    }

    if (input_to_canonical) *input_to_canonical = std::move(to_canonical);
    return t;
}

std::pair<NodeId, NodeId> FiltrationTree::level_range(int k) const
{
    if (k < 0 || static_cast<std::size_t>(k) >= level_count())
        throw std::invalid_argument("FiltrationTree: level out of range");
    return {level_begin_[static_cast<std::size_t>(k)], level_begin_[static_cast<std::size_t>(k) + 1]};
}

std::vector<NodeId> FiltrationTree::path_to(NodeId n) const
{
    std::vector<NodeId> path(static_cast<std::size_t>(level(n)) + 1);
    for (int k = level(n); k >= 0; --k) {
        path[static_cast<std::size_t>(k)] = n;
        n = parent(n);
    }
    return path;
}

std::string FiltrationTree::path_string(NodeId n) const
{
    if (n < 0 || static_cast<std::size_t>(n) >= node_count())
        throw std::invalid_argument("FiltrationTree: node out of range");
    std::string out;
    for (NodeId cur = n; parent(cur) != kNoNode; cur = parent(cur)) {
        const NodeId p = parent(cur);
        const int idx = cur - child_begin(p);
        std::string piece = std::to_string(idx);
        if (!out.empty()) piece += '.';
        out.insert(0, piece);
    }
    return out;
}

NodeId FiltrationTree::node_at_path(const std::string& path) const
{
    NodeId cur = 0;
    if (path.empty()) return cur;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string piece = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        std::size_t used = 0;
        int idx = -1;
        try {
            idx = std::stoi(piece, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("FiltrationTree: bad path component '" + piece + "'");
        }
        if (used != piece.size() || idx < 0 ||
            static_cast<std::size_t>(idx) >= child_count(cur))
            throw std::invalid_argument("FiltrationTree: path '" + path + "' does not exist");
        cur = child_begin(cur) + idx;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

} // namespace strongenv
