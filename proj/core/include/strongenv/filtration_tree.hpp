#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace strongenv {

using NodeId = std::int32_t;

inline constexpr NodeId kNoNode = -1;

// Finite filtration tree.  Nodes are stored level-contiguously in canonical
// breadth-first order (parents precede children, siblings keep their input
// order), so each node's children occupy one contiguous id range and each
// level is one contiguous id range.
//
// Invariants enforced by build():
//   - exactly one root,
//   - transition probabilities are > 0 and sum to 1 within 1e-12 per parent,
//   - every root-to-leaf path visits each level exactly once, i.e. all
//     leaves sit at the maximal (cemetery) level and no inner node is
//     childless.
class FiltrationTree {
public:
    // parents[i] is the input index of node i's parent (-1 for the root,
    // which must be listed before its descendants: parents[i] < i).
    // probs[i] = P(node i | parent); the root entry must be 1.
    // If input_to_canonical is non-null it receives the permutation from
    // input indices to canonical NodeIds.
    static FiltrationTree build(const std::vector<NodeId>& parents,
                                const std::vector<double>& probs,
                                std::vector<NodeId>* input_to_canonical = nullptr);

    std::size_t node_count() const { return parent_.size(); }
    std::size_t level_count() const { return level_begin_.size() - 1; }
    int cemetery_level() const { return static_cast<int>(level_count()) - 1; }
    std::size_t non_cemetery_count() const
    {
        return static_cast<std::size_t>(level_begin_[static_cast<std::size_t>(cemetery_level())]);
    }

    int level(NodeId n) const { return level_[static_cast<std::size_t>(n)]; }
    NodeId parent(NodeId n) const { return parent_[static_cast<std::size_t>(n)]; }
    bool is_leaf(NodeId n) const { return child_begin(n) == child_end(n); }

    NodeId child_begin(NodeId n) const { return child_begin_[static_cast<std::size_t>(n)]; }
    NodeId child_end(NodeId n) const { return child_begin_[static_cast<std::size_t>(n) + 1]; }
    std::size_t child_count(NodeId n) const
    {
        return static_cast<std::size_t>(child_end(n) - child_begin(n));
    }

    // P(n | parent(n)); 1 for the root.
    double transition_prob(NodeId n) const { return prob_[static_cast<std::size_t>(n)]; }
    // P(n) = product of transition probabilities along the path from the root.
    double path_prob(NodeId n) const { return path_prob_[static_cast<std::size_t>(n)]; }

    // Contiguous id range [first, last) of the nodes at level k.
    std::pair<NodeId, NodeId> level_range(int k) const;
    std::pair<NodeId, NodeId> leaf_range() const { return level_range(cemetery_level()); }

    // Path from the root to n, root first, n last.
    std::vector<NodeId> path_to(NodeId n) const;

    // Child-index path string, e.g. "0.1.0"; the root is "".
    std::string path_string(NodeId n) const;
    // Inverse of path_string; throws std::invalid_argument on a bad path.
    NodeId node_at_path(const std::string& path) const;

private:
    FiltrationTree() = default;

    std::vector<NodeId> parent_;
    std::vector<int> level_;
    std::vector<double> prob_;
    std::vector<double> path_prob_;
    std::vector<NodeId> child_begin_; // size node_count()+1; children contiguous
    std::vector<NodeId> level_begin_; // size level_count()+1
};

} // namespace strongenv
