#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aact/errors.hpp"
#include "tree_builder.hpp"

namespace aact {

double RegressionTree::predict(std::span<const double> x) const {
    return nodes[leaf_index(x)].value;
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

namespace detail {

void check_training_data(const TrainingSet& data) {
    if (data.empty() || data.width() == 0) throw EmptyData("training set has no rows or no features");
    const std::size_t pos = data.positives();
    if (pos == 0 || pos == data.rows()) throw DegenerateLabels("training set holds a single class");
}

ColumnData ColumnData::build(const TrainingSet& data) {
    ColumnData out;
    out.rows = data.rows();
    out.width = data.width();
    out.columns.assign(out.width, std::vector<double>(out.rows));
    out.order.assign(out.width, std::vector<std::uint32_t>(out.rows));
    for (std::size_t i = 0; i < out.rows; ++i) {
        const auto row = data.row(i);
        for (std::size_t f = 0; f < out.width; ++f) out.columns[f][i] = row[f];
    }
    for (std::size_t f = 0; f < out.width; ++f) {
        auto& order = out.order[f];
        std::iota(order.begin(), order.end(), 0u);
        const auto& col = out.columns[f];
        std::stable_sort(order.begin(), order.end(),
                         [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
    return out;
}

namespace {

struct NodeStats {
    double w = 0.0;
    double g = 0.0;
    double h = 0.0;
};

struct SplitCandidate {
    double gain = 1e-12;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

struct Scan {
    double w = 0.0;
    double g = 0.0;
    double last = 0.0;
    bool seen = false;
};

double node_value(const NodeStats& s, const TreeBuildParams& p) {
    double v = 0.0;
    if (p.leaf_rule == LeafRule::Newton) {
        v = std::abs(s.h) < 1e-150 ? 0.0 : s.g / s.h;
    } else {
        v = s.w > 0 ? s.g / s.w : 0.0;
    }
    return v * p.value_scale;
}

double split_threshold(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return (mid >= hi || mid < lo) ? lo : mid;
}

}  // namespace

RegressionTree build_tree(const ColumnData& data, std::span<const double> g, std::span<const double> h,
                          std::span<const double> w, const TreeBuildParams& params, std::mt19937_64* rng) {
    const std::size_t n = data.rows;
    std::vector<std::int32_t> node_of(n, -1);
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] <= 0.0) continue;
        node_of[i] = 0;
        stats[0].w += w[i];
        stats[0].g += w[i] * g[i];
        stats[0].h += w[i] * h[i];
    }
    RegressionTree tree;
    tree.nodes.emplace_back();

    std::vector<std::int32_t> frontier{0};
    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
        std::vector<std::int32_t> candidates;
        for (std::int32_t node : frontier) {
            if (stats[static_cast<std::size_t>(node)].w >= 2.0 * params.min_leaf_weight) candidates.push_back(node);
        }
        if (candidates.empty()) break;

        std::vector<std::int32_t> slot(tree.nodes.size(), -1);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            slot[static_cast<std::size_t>(candidates[c])] = static_cast<std::int32_t>(c);
        }
        // Per-node feature subsets, drawn in node order for reproducibility.
        std::vector<std::vector<char>> allowed;
        if (params.max_features > 0 && static_cast<std::size_t>(params.max_features) < data.width && rng) {
            allowed.assign(candidates.size(), std::vector<char>(data.width, 0));
            std::vector<std::size_t> features(data.width);
            for (auto& mask : allowed) {
                std::iota(features.begin(), features.end(), 0);
                for (int k = 0; k < params.max_features; ++k) {
                    const auto j = static_cast<std::size_t>(k) +
                                   uniform_index(*rng, data.width - static_cast<std::size_t>(k));
                    std::swap(features[static_cast<std::size_t>(k)], features[j]);
                    mask[features[static_cast<std::size_t>(k)]] = 1;
                }
            }
        }

        std::vector<SplitCandidate> best(candidates.size());
        std::vector<Scan> scan(candidates.size());
        for (std::size_t f = 0; f < data.width; ++f) {
            std::fill(scan.begin(), scan.end(), Scan{});
            const auto& col = data.columns[f];
            for (std::uint32_t i : data.order[f]) {
                const std::int32_t node = node_of[i];
                if (node < 0) continue;
                const std::int32_t c = slot[static_cast<std::size_t>(node)];
                if (c < 0) continue;
                const auto ci = static_cast<std::size_t>(c);
                if (!allowed.empty() && !allowed[ci][f]) continue;
                Scan& s = scan[ci];
                const double x = col[i];
                if (s.seen && x > s.last) {
                    const NodeStats& total = stats[static_cast<std::size_t>(node)];
                    const double wl = s.w;
                    const double wr = total.w - wl;
                    if (wl >= params.min_leaf_weight && wr >= params.min_leaf_weight) {
                        const double gr = total.g - s.g;
                        const double gain = s.g * s.g / wl + gr * gr / wr - total.g * total.g / total.w;
                        if (gain > best[ci].gain) {
                            best[ci] = SplitCandidate{gain, static_cast<std::int32_t>(f), split_threshold(s.last, x)};
                        }
                    }
                }
                s.w += w[i];
                s.g += w[i] * g[i];
                s.last = x;
                s.seen = true;
            }
        }

        std::vector<std::int32_t> next;
        std::vector<std::int32_t> split_of(tree.nodes.size(), -1);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (best[c].feature < 0) continue;
            const auto node = static_cast<std::size_t>(candidates[c]);
            const auto left = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes[node].feature = best[c].feature;
            tree.nodes[node].threshold = best[c].threshold;
            tree.nodes[node].left = left;
            tree.nodes[node].right = left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stats.resize(tree.nodes.size());
            split_of[node] = static_cast<std::int32_t>(c);
            next.push_back(left);
            next.push_back(left + 1);
        }
        if (next.empty()) break;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int32_t node = node_of[i];
            if (node < 0 || static_cast<std::size_t>(node) >= split_of.size() ||
                split_of[static_cast<std::size_t>(node)] < 0) {
                continue;
            }
            const TreeNode& parent = tree.nodes[static_cast<std::size_t>(node)];
            const std::int32_t child =
                data.columns[static_cast<std::size_t>(parent.feature)][i] <= parent.threshold ? parent.left
                                                                                            : parent.right;
            node_of[i] = child;
            NodeStats& s = stats[static_cast<std::size_t>(child)];
            s.w += w[i];
            s.g += w[i] * g[i];
            s.h += w[i] * h[i];
        }
        frontier = std::move(next);
    }

    for (std::size_t i = 0; i < tree.nodes.size(); ++i) tree.nodes[i].value = node_value(stats[i], params);
    return tree;
}

}  // namespace detail
}  // namespace aact
