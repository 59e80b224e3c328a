#include "gwharm/mctree.hpp"

#include "gwharm/conductance.hpp"
#include "gwharm/error.hpp"
#include "gwharm/kernels.hpp"
#include "gwharm/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace gwharm {

namespace {

constexpr std::size_t kWorkBlocks = 256;

enum StreamTag : std::uint64_t { kSpeedStream = 1, kDimStream = 2, kStationarityStream = 3, kBootstrapStream = 4 };

// Runs body(i) for i in [0, n) grouped into fixed blocks.
void for_each_sample(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    const BlockLayout layout(n, kWorkBlocks);
    parallel_for(layout.blocks, workers, [&](std::size_t b) {
        for (std::size_t i = layout.begin(b); i < layout.end(b); ++i) {
            body(i);
        }
    });
}

Estimate weighted_block_mean(std::span<const double> values, std::span<const double> weights,
                             std::uint64_t seed) {
    const BlockLayout layout(values.size());
    std::vector<double> sums(layout.blocks);
    std::vector<double> norms(layout.blocks);
    for (std::size_t b = 0; b < layout.blocks; ++b) {
        double s = 0.0;
        double w = 0.0;
        for (std::size_t i = layout.begin(b); i < layout.end(b); ++i) {
            s += weights[i] * values[i];
            w += weights[i];
        }
        sums[b] = s;
        norms[b] = w;
    }
    return bootstrap_ratio(sums, norms, seed);
}

Estimate block_mean(std::span<const double> values, std::uint64_t seed) {
    const std::vector<double> ones(values.size(), 1.0);
    return weighted_block_mean(values, ones, seed);
}

} // namespace

Tree::Tree(bool marked, std::size_t node_budget) : marked_(marked), budget_(node_budget) {
    add_node(kNoNode, 0, 0.0);
}

NodeId Tree::add_node(NodeId parent, int level, double mark) {
    if (parent_.size() >= budget_) {
        fail(ErrorCode::NodeBudgetExceeded, "tree exceeds node budget of " + std::to_string(budget_));
    }
    const auto id = static_cast<NodeId>(parent_.size());
    parent_.push_back(parent);
    first_.push_back(kNoNode);
    count_.push_back(kUnexpanded);
    level_.push_back(level);
    if (marked_) {
        mark_.push_back(mark);
    }
    return id;
}

void Tree::expand(NodeId x, const OffspringLaw& law, const MarkLaw* marks, Rng& rng) {
    if (expanded(x)) {
        return;
    }
    if (marked_ && marks == nullptr) {
        fail(ErrorCode::InvalidArgument, "marked tree needs a mark law to grow");
    }
    const int k = law.sample(rng);
    if (parent_.size() + static_cast<std::size_t>(k) > budget_) {
        fail(ErrorCode::NodeBudgetExceeded, "tree exceeds node budget of " + std::to_string(budget_));
    }
    first_[x] = static_cast<NodeId>(parent_.size());
    count_[x] = static_cast<std::uint32_t>(k);
    const int lvl = level_[x] + 1;
    for (int i = 0; i < k; ++i) {
        add_node(x, lvl, marked_ ? marks->sample(rng) : 0.0);
    }
}

std::vector<NodeId> Tree::path_to(NodeId x) const {
    std::vector<NodeId> path;
    for (NodeId v = x; v != kNoNode; v = parent_[v]) {
        path.push_back(v);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

TruncatedTree sample_tree(const OffspringLaw& law, int depth, const MarkLaw* marks, Rng& rng,
                          std::size_t node_budget) {
    if (depth < 1) {
        fail(ErrorCode::InvalidArgument, "tree depth must be >= 1");
    }
    TruncatedTree t{Tree(marks != nullptr, node_budget), depth};
    Tree& tree = t.tree;
    if (marks != nullptr) {
        tree.set_root_mark(marks->sample(rng));
    }
    for (NodeId x = 0; x < tree.size(); ++x) {
        if (tree.level(x) < depth) {
            tree.expand(x, law, marks, rng);
        }
    }
    return t;
}

std::vector<double> beta_truncated(const TruncatedTree& t, double lambda, std::optional<int> cap) {
    if (!(lambda > 0.0)) {
        fail(ErrorCode::InvalidArgument, "lambda must be positive");
    }
    const int limit = cap.value_or(t.depth);
    if (limit < 0 || limit > t.depth) {
        fail(ErrorCode::InvalidArgument, "truncation level outside the sampled depth");
    }
    const Tree& tree = t.tree;
    std::vector<double> beta(tree.size(), std::nan(""));
    for (std::size_t i = tree.size(); i-- > 0;) {
        const auto x = static_cast<NodeId>(i);
        const int lvl = tree.level(x);
        if (lvl > limit) {
            continue;
        }
        if (lvl == limit) {
            beta[i] = 1.0;
            continue;
        }
        if (!tree.expanded(x)) {
            fail(ErrorCode::DepthExhausted, "unexpanded node above the truncation level");
        }
        double s = 0.0;
        const NodeId first = tree.first_child(x);
        for (std::uint32_t c = 0; c < tree.child_count(x); ++c) {
            s += beta[first + c];
        }
        beta[i] = s / (lambda + s);
    }
    return beta;
}

double subtree_beta(Tree& tree, NodeId x, int window, double lambda, const OffspringLaw& law, Rng& rng) {
    if (window < 0) {
        fail(ErrorCode::InvalidArgument, "window must be >= 0");
    }
    const int base = tree.level(x);
    std::vector<NodeId> order{x};
    std::vector<std::size_t> first_pos{0};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const NodeId v = order[i];
        if (tree.level(v) - base >= window) {
            continue;
        }
        tree.ensure_expanded(v, law, nullptr, rng);
        first_pos[i] = order.size();
        const NodeId first = tree.first_child(v);
        for (std::uint32_t c = 0; c < tree.child_count(v); ++c) {
            order.push_back(first + c);
            first_pos.push_back(0);
        }
    }
    std::vector<double> val(order.size());
    for (std::size_t i = order.size(); i-- > 0;) {
        const NodeId v = order[i];
        if (tree.level(v) - base >= window) {
            val[i] = 1.0;
            continue;
        }
        double s = 0.0;
        for (std::uint32_t c = 0; c < tree.child_count(v); ++c) {
            s += val[first_pos[i] + c];
        }
        val[i] = s / (lambda + s);
    }
    return val[0];
}

WalkState run_walk(Tree& tree, double lambda, const WalkOptions& opts, Rng& rng, const OffspringLaw* grow) {
    if (!(lambda > 0.0)) {
        fail(ErrorCode::InvalidArgument, "lambda must be positive");
    }
    WalkState st;
    st.vertex = tree.root();
    st.last_exit.push_back(tree.root());
    if (opts.record_heights) {
        st.heights.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(opts.max_steps, 1u << 24)) + 1);
        st.heights.push_back(0);
    }
    while (st.steps < opts.max_steps && (opts.stop_level < 0 || st.height != opts.stop_level)) {
        if (st.vertex == kRootParent) {
            st.vertex = tree.root();
            st.height = 0;
        } else {
            if (!tree.expanded(st.vertex)) {
                if (grow == nullptr) {
                    fail(ErrorCode::DepthExhausted, "walk reached the truncation level");
                }
                tree.expand(st.vertex, *grow, nullptr, rng);
            }
            const auto k = static_cast<double>(tree.child_count(st.vertex));
            const double r = rng.uniform() * (lambda + k);
            if (r < lambda) {
                const NodeId p = tree.parent(st.vertex);
                st.vertex = p == kNoNode ? kRootParent : p;
                --st.height;
            } else {
                const auto i = std::min<std::uint32_t>(static_cast<std::uint32_t>(r - lambda),
                                                       tree.child_count(st.vertex) - 1);
                st.vertex = tree.first_child(st.vertex) + i;
                ++st.height;
            }
        }
        ++st.steps;
        if (st.height >= 0) {
            const auto h = static_cast<std::size_t>(st.height);
            if (h >= st.last_exit.size()) {
                st.last_exit.resize(h + 1, kNoNode);
            }
            st.last_exit[h] = st.vertex;
        }
        if (opts.record_heights) {
            st.heights.push_back(st.height);
        }
    }
    return st;
}

Estimate speed_mc(const OffspringLaw& law, double lambda, std::uint64_t steps, std::size_t n_walks,
                  const McOptions& mc) {
    if (steps < 1 || n_walks < 1) {
        fail(ErrorCode::InvalidArgument, "speed estimate needs steps >= 1 and at least one walk");
    }
    std::vector<double> speed(n_walks);
    for_each_sample(n_walks, mc.workers, [&](std::size_t w) {
        Rng rng(mc.seed, substream(kSpeedStream, w));
        Tree tree(false);
        WalkOptions opts;
        opts.max_steps = steps;
        const WalkState st = run_walk(tree, lambda, opts, rng, &law);
        speed[w] = static_cast<double>(st.height) / static_cast<double>(st.steps);
    });
    return block_mean(speed, substream(mc.seed, kBootstrapStream));
}

int auto_beta_window(const OffspringLaw& law) {
    const int fit = static_cast<int>(std::floor(std::log(4096.0) / std::log(law.mean())));
    return std::clamp(fit, 1, 16);
}

DimMcResult dim_mc(const OffspringLaw& law, double lambda, const DimMcOptions& opts, const McOptions& mc) {
    const int window = opts.beta_window < 0 ? auto_beta_window(law) : opts.beta_window;
    if (opts.horizon < 1) {
        fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
    }
    if (opts.depth <= opts.horizon) {
        fail(ErrorCode::InvalidArgument, "walk depth must exceed the horizon");
    }
    if (opts.n_trees < 2) {
        fail(ErrorCode::InvalidArgument, "need at least two trees");
    }
    const int half = std::max(1, opts.horizon / 2);
    const KernelFamily h = KernelFamily::biased_walk(lambda);
    std::vector<double> full(opts.n_trees);
    std::vector<double> part(opts.n_trees);
    std::vector<double> weight(opts.n_trees);
    std::vector<double> steps(opts.n_trees);
    for_each_sample(opts.n_trees, mc.workers, [&](std::size_t t) {
        Rng rng(mc.seed, substream(kDimStream, t));
        Tree tree(false);
        WalkOptions wopts;
        wopts.stop_level = opts.depth;
        wopts.max_steps = std::uint64_t{1} << 40;
        const WalkState st = run_walk(tree, lambda, wopts, rng, &law);
        if (st.height != opts.depth) {
            fail(ErrorCode::DepthExhausted, "walk did not reach the stopping level");
        }
        // After its last visit to level n the walk stays in the subtree of
        // that vertex, so the exit ray is the ancestry of the final vertex.
        const std::vector<NodeId> ray = tree.path_to(st.vertex);
        double acc = 0.0;
        double beta_root = 0.0;
        std::vector<double> betas;
        for (int k = 0; k < opts.horizon; ++k) {
            const NodeId x = ray[static_cast<std::size_t>(k)];
            const NodeId first = tree.first_child(x);
            const std::uint32_t n = tree.child_count(x);
            betas.resize(n);
            double s = 0.0;
            for (std::uint32_t c = 0; c < n; ++c) {
                betas[c] = subtree_beta(tree, first + c, window, lambda, law, rng);
                s += betas[c];
            }
            if (k == 0) {
                beta_root = s / (lambda + s);
            }
            const auto w = harmonic_flow_weights(betas);
            acc -= std::log(w[ray[static_cast<std::size_t>(k) + 1] - first]);
            if (k + 1 == half) {
                part[t] = acc / half;
            }
        }
        full[t] = acc / opts.horizon;
        steps[t] = static_cast<double>(st.steps);

        // Reweight the GW start to the stationary law of the exit-ray chain.
        double sigma = 0.0;
        if (opts.stationary_start) {
            Tree other(false);
            other.expand(other.root(), law, nullptr, rng);
            for (std::uint32_t c = 0; c < other.child_count(0); ++c) {
                sigma += subtree_beta(other, other.first_child(0) + c, window, lambda, law, rng);
            }
        }
        weight[t] = opts.stationary_start ? h(beta_root, sigma) : 1.0;
    });
    DimMcResult out;
    out.at_horizon = weighted_block_mean(full, weight, substream(mc.seed, kBootstrapStream));
    out.at_half_horizon = weighted_block_mean(part, weight, substream(mc.seed, kBootstrapStream + 1));
    out.stabilized = std::abs(out.at_horizon.value - out.at_half_horizon.value) <=
                     2.0 * std::hypot(out.at_horizon.se, out.at_half_horizon.se);
    out.mean_walk_steps = pairwise_sum(steps) / static_cast<double>(steps.size());
    return out;
}

std::vector<StationarityResult> stationarity_test(const OffspringLaw& law, double lambda, int depth,
                                                  std::size_t n_trees, const std::vector<TestStatistic>& stats,
                                                  const McOptions& mc) {
    if (depth < 1 || n_trees < 2) {
        fail(ErrorCode::InvalidArgument, "stationarity test needs depth >= 1 and at least two trees");
    }
    const KernelFamily h = KernelFamily::biased_walk(lambda);
    const std::size_t ns = stats.size();
    std::vector<double> child_val(n_trees * ns);
    std::vector<double> root_val(n_trees * ns);
    for_each_sample(n_trees, mc.workers, [&](std::size_t i) {
        Rng rng(mc.seed, substream(kStationarityStream, i));
        const TruncatedTree t = sample_tree(law, depth + 1, nullptr, rng);
        // Children use depth levels below themselves; so does the root value.
        const std::vector<double> beta = beta_truncated(t, lambda);
        const double root_beta = beta_truncated(t, lambda, depth)[0];
        const NodeId first = t.tree.first_child(0);
        const std::uint32_t k = t.tree.child_count(0);
        const std::span<const double> children(beta.data() + first, k);
        const auto w = harmonic_flow_weights(children);
        double u = rng.uniform();
        std::uint32_t pick = 0;
        while (pick + 1 < k && u >= w[pick]) {
            u -= w[pick];
            ++pick;
        }

        const TruncatedTree other = sample_tree(law, depth, nullptr, rng);
        const std::vector<double> other_beta = beta_truncated(other, lambda);
        double sigma = 0.0;
        for (std::uint32_t c = 0; c < other.tree.child_count(0); ++c) {
            sigma += other_beta[other.tree.first_child(0) + c];
        }
        const double kappa = h(root_beta, sigma);
        for (std::size_t s = 0; s < ns; ++s) {
            child_val[i * ns + s] = stats[s].f(children[pick]) * kappa;
            root_val[i * ns + s] = stats[s].f(root_beta) * kappa;
        }
    });
    std::vector<StationarityResult> out(ns);
    std::vector<double> lhs(n_trees);
    std::vector<double> rhs(n_trees);
    std::vector<double> diff(n_trees);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t i = 0; i < n_trees; ++i) {
            lhs[i] = child_val[i * ns + s];
            rhs[i] = root_val[i * ns + s];
            diff[i] = lhs[i] - rhs[i];
        }
        const Estimate d = mean_se(diff);
        out[s].name = stats[s].name;
        out[s].child_side = pairwise_sum(lhs) / static_cast<double>(n_trees);
        out[s].root_side = pairwise_sum(rhs) / static_cast<double>(n_trees);
        out[s].se = d.se;
        out[s].z = d.se > 0.0 ? d.value / d.se : 0.0;
    }
    return out;
}

} // namespace gwharm
