#pragma once

#include "gwharm/laws.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gwharm {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
/// The artificial parent of the root; the walk reflects there.
inline constexpr NodeId kRootParent = kNoNode - 1;

/// Rooted tree stored in flat arrays. Children of a node are contiguous and
/// always have larger ids than their parent, so reverse id order is a valid
/// bottom-up order. Nodes are expanded (given children) either all at once
/// down to a truncation depth or lazily on demand.
class Tree {
public:
    explicit Tree(bool marked, std::size_t node_budget = 50'000'000);

    std::size_t size() const { return parent_.size(); }
    NodeId root() const { return 0; }
    NodeId parent(NodeId x) const { return parent_[x]; }
    int level(NodeId x) const { return level_[x]; }
    bool expanded(NodeId x) const { return count_[x] != kUnexpanded; }
    NodeId first_child(NodeId x) const { return first_[x]; }
    std::uint32_t child_count(NodeId x) const { return count_[x]; }
    bool marked() const { return marked_; }
    double mark(NodeId x) const { return mark_[x]; }
    void set_root_mark(double g) { mark_.at(0) = g; }

    /// Draws the children of an unexpanded node (and their marks).
    void expand(NodeId x, const OffspringLaw& law, const MarkLaw* marks, Rng& rng);
    void ensure_expanded(NodeId x, const OffspringLaw& law, const MarkLaw* marks, Rng& rng) {
        if (!expanded(x)) {
            expand(x, law, marks, rng);
        }
    }

    /// Nodes from the root down to x, root first.
    std::vector<NodeId> path_to(NodeId x) const;

private:
    static constexpr std::uint32_t kUnexpanded = std::numeric_limits<std::uint32_t>::max();

    NodeId add_node(NodeId parent, int level, double mark);

    bool marked_;
    std::size_t budget_;
    std::vector<NodeId> parent_;
    std::vector<NodeId> first_;
    std::vector<std::uint32_t> count_;
    std::vector<int> level_;
    std::vector<double> mark_;
};

/// Tree whose nodes are all expanded down to `depth` (levels 0..depth).
struct TruncatedTree {
    Tree tree;
    int depth = 0;
};

TruncatedTree sample_tree(const OffspringLaw& law, int depth, const MarkLaw* marks, Rng& rng,
                          std::size_t node_budget = 50'000'000);

/// Conductances truncated at level `cap` (default: the tree's depth): nodes at
/// level cap get 1, others b = S / (lambda + S) over their children. Entries
/// below the cap are NaN.
std::vector<double> beta_truncated(const TruncatedTree& t, double lambda, std::optional<int> cap = {});

/// Truncated conductance of the subtree rooted at x, looking `window` levels
/// below x and expanding the tree lazily where needed.
double subtree_beta(Tree& tree, NodeId x, int window, double lambda, const OffspringLaw& law, Rng& rng);

struct WalkOptions {
    std::uint64_t max_steps = 1'000'000;
    /// Stop as soon as this level is reached (negative = never).
    int stop_level = -1;
    bool record_heights = false;
};

struct WalkState {
    NodeId vertex = 0;
    std::uint64_t steps = 0;
    int height = 0;
    /// Last vertex visited at each level so far.
    std::vector<NodeId> last_exit;
    std::vector<int> heights;
};

/// lambda-biased walk from the root: parent with probability lambda/(lambda+k),
/// each of the k children with 1/(lambda+k), and back to the root from the
/// artificial parent. When `grow` is given the tree is expanded on demand;
/// otherwise reaching an unexpanded node throws DepthExhausted.
WalkState run_walk(Tree& tree, double lambda, const WalkOptions& opts, Rng& rng,
                   const OffspringLaw* grow = nullptr);

struct McOptions {
    std::uint64_t seed = 7;
    unsigned workers = 1;
};

/// Speed estimate |X_n|/n averaged over independent walks on independent trees.
Estimate speed_mc(const OffspringLaw& law, double lambda, std::uint64_t steps, std::size_t n_walks,
                  const McOptions& mc);

struct DimMcOptions {
    /// Level at which the walk is stopped.
    int depth = 60;
    int horizon = 30;
    /// Levels below a node used to evaluate its truncated conductance;
    /// negative picks min(16, log(4096)/log m) so a window holds ~4096 nodes.
    int beta_window = -1;
    std::size_t n_trees = 10'000;
    /// Weight each tree by kappa(b(T)) (independent copy for the second
    /// argument) so the ray starts from the chain's stationary law.
    bool stationary_start = true;
};

struct DimMcResult {
    Estimate at_horizon;
    Estimate at_half_horizon;
    /// |at_horizon - at_half_horizon| <= 2 SE (combined).
    bool stabilized = true;
    double mean_walk_steps = 0.0;
};

/// Ergodic-average estimate of the harmonic-measure dimension: each tree's
/// walk yields an exit ray; -log of the harmonic flow of its first `horizon`
/// levels divided by the horizon is averaged over trees (a weighted ratio
/// estimate when stationary_start is set).
int auto_beta_window(const OffspringLaw& law);

DimMcResult dim_mc(const OffspringLaw& law, double lambda, const DimMcOptions& opts, const McOptions& mc);

struct TestStatistic {
    std::string name;
    std::function<double(double)> f;
};

struct StationarityResult {
    std::string name;
    double child_side = 0.0; ///< E[f(b(T[Xi_1])) kappa(b(T))]
    double root_side = 0.0;  ///< E[f(b(T)) kappa(b(T))]
    double se = 0.0;         ///< standard error of the paired difference
    double z = 0.0;          ///< paired standardized difference
};

/// Compares the kappa-weighted laws of b(T) and of b at the first exit vertex.
/// `depth` is the truncation depth of the children's conductances.
std::vector<StationarityResult> stationarity_test(const OffspringLaw& law, double lambda, int depth,
                                                  std::size_t n_trees, const std::vector<TestStatistic>& stats,
                                                  const McOptions& mc);

} // namespace gwharm
