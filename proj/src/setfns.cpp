#include "rcps/setfns.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rcps {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

std::vector<int> threshold_set(std::span<const double> probs, double lambda) {
    std::vector<int> out;
    for (std::size_t y = 0; y < probs.size(); ++y) {
        if (probs[y] > -lambda) out.push_back(static_cast<int>(y));
    }
    return out;
}

double class_varying_loss(int y, std::span<const int> set, std::span<const double> weights) {
    if (y < 0 || static_cast<std::size_t>(y) >= weights.size()) {
        throw std::invalid_argument("label out of range");
    }
    if (std::binary_search(set.begin(), set.end(), y)) return 0.0;
    return weights[y];
}

double multilabel_fnr_loss(std::span<const int> y, std::span<const int> s) {
    if (y.empty()) throw std::invalid_argument("multilabel loss needs a non-empty label set");
    std::size_t hit = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < y.size() && j < s.size()) {
        if (y[i] < s[j]) {
            ++i;
        } else if (s[j] < y[i]) {
            ++j;
        } else {
            ++hit;
            ++i;
            ++j;
        }
    }
    return 1.0 - static_cast<double>(hit) / static_cast<double>(y.size());
}

std::vector<int> greedy_sets(const RiskDensityFn& rho, int num_labels, double lambda,
                             double dzeta, double upper_bound, bool set_independent) {
    if (!(dzeta > 0.0)) throw std::domain_error("dzeta must be positive");
    if (num_labels < 0) throw std::invalid_argument("negative label count");
    std::vector<char> members(static_cast<std::size_t>(num_labels), 0);
    auto density = [&](int y, const std::vector<char>& cur) {
        const double d = rho(y, cur);
        if (!(d >= 0.0)) throw std::domain_error("risk density must be nonnegative");
        return d;
    };

    if (set_independent) {
        const std::vector<char> empty(static_cast<std::size_t>(num_labels), 0);
        std::vector<int> out;
        for (int y = 0; y < num_labels; ++y) {
            if (density(y, empty) >= -lambda) out.push_back(y);
        }
        return out;
    }

    double zeta = upper_bound;
    std::vector<int> pending;
    while (zeta > -lambda) {
        zeta -= dzeta;
        pending.clear();
        for (int y = 0; y < num_labels; ++y) {
            if (!members[static_cast<std::size_t>(y)] && density(y, members) > zeta) {
                pending.push_back(y);
            }
        }
        for (int y : pending) members[static_cast<std::size_t>(y)] = 1;
    }
    std::vector<int> out;
    for (int y = 0; y < num_labels; ++y) {
        if (members[static_cast<std::size_t>(y)]) out.push_back(y);
    }
    return out;
}

bool greedy_optimality_check(const std::vector<std::vector<double>>& cond_probs,
                             std::span<const double> x_probs, std::span<const double> weights,
                             double lambda) {
    const std::size_t num_x = cond_probs.size();
    const std::size_t num_y = weights.size();
    if (num_x == 0 || num_y == 0) throw std::invalid_argument("empty instance");
    if (x_probs.size() != num_x) throw std::invalid_argument("x_probs size mismatch");
    if (num_x * num_y > 24) throw std::invalid_argument("instance too large for brute force");
    for (const auto& row : cond_probs) {
        if (row.size() != num_y) throw std::invalid_argument("cond_probs row size mismatch");
    }

    const double zeta = -lambda;
    const auto num_masks = static_cast<std::uint32_t>(1u << num_y);

    // Per-x tables: risk of predicting mask m (mass of excluded labels) and
    // the threshold set itself.
    std::vector<std::vector<double>> mask_risk(num_x, std::vector<double>(num_masks, 0.0));
    double risk_t = 0.0;
    double size_t_ = 0.0;
    for (std::size_t x = 0; x < num_x; ++x) {
        std::uint32_t tmask = 0;
        for (std::size_t y = 0; y < num_y; ++y) {
            if (weights[y] * cond_probs[x][y] >= zeta) tmask |= (1u << y);
        }
        for (std::uint32_t m = 0; m < num_masks; ++m) {
            double r = 0.0;
            for (std::size_t y = 0; y < num_y; ++y) {
                if (!(m & (1u << y))) r += weights[y] * cond_probs[x][y];
            }
            mask_risk[x][m] = x_probs[x] * r;
        }
        risk_t += mask_risk[x][tmask];
        size_t_ += x_probs[x] * std::popcount(tmask);
    }

    constexpr double tol = 1e-12;
    // Depth-first over competitor assignments, pruning branches that can no
    // longer be both smaller and risk-feasible.
    std::vector<std::uint32_t> pick(num_x, 0);
    std::function<bool(std::size_t, double, double)> smaller_feasible_exists =
        [&](std::size_t x, double risk_acc, double size_acc) -> bool {
        if (risk_acc > risk_t + tol) return false;
        if (size_acc >= size_t_ - tol) return false;
        if (x == num_x) return true; // counterexample found
        for (std::uint32_t m = 0; m < num_masks; ++m) {
            if (smaller_feasible_exists(x + 1, risk_acc + mask_risk[x][m],
                                        size_acc + x_probs[x] * std::popcount(m))) {
                return true;
            }
        }
        return false;
    };
    return !smaller_feasible_exists(0, 0.0, 0.0);
}

LabelTree LabelTree::build(std::vector<int> parent, std::vector<int> leaf_of_label) {
    LabelTree tree;
    tree.parent = std::move(parent);
    tree.leaf_of_label = std::move(leaf_of_label);
    const int n = tree.num_nodes();
    if (n == 0) throw std::invalid_argument("empty tree");

    int root = -1;
    std::vector<int> children(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        const int p = tree.parent[static_cast<std::size_t>(v)];
        if (p < 0 || p >= n) throw std::invalid_argument("tree parent index out of range");
        if (p == v) {
            if (root != -1) throw std::invalid_argument("tree has more than one root");
            root = v;
        } else {
            ++children[static_cast<std::size_t>(p)];
        }
    }
    if (root == -1) throw std::invalid_argument("tree has no root");
    tree.root = root;

    // Depth of every node; a chain longer than n nodes means a cycle.
    int max_depth = 0;
    for (int v = 0; v < n; ++v) {
        int d = 0;
        int cur = v;
        while (cur != tree.parent[static_cast<std::size_t>(cur)]) {
            cur = tree.parent[static_cast<std::size_t>(cur)];
            if (++d > n) throw std::invalid_argument("tree contains a cycle");
        }
        max_depth = std::max(max_depth, d);
    }
    tree.depth = max_depth;

    std::vector<char> is_mapped(static_cast<std::size_t>(n), 0);
    for (int leaf : tree.leaf_of_label) {
        if (leaf < 0 || leaf >= n) throw std::invalid_argument("leaf node index out of range");
        if (children[static_cast<std::size_t>(leaf)] != 0) {
            throw std::invalid_argument("label mapped to an internal node");
        }
        if (is_mapped[static_cast<std::size_t>(leaf)]) {
            throw std::invalid_argument("two labels share one leaf");
        }
        is_mapped[static_cast<std::size_t>(leaf)] = 1;
    }
    for (int v = 0; v < n; ++v) {
        if (children[static_cast<std::size_t>(v)] == 0 && !is_mapped[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument("tree leaf without a label");
        }
    }
    return tree;
}

int LabelTree::node_depth(int v) const {
    if (v < 0 || v >= num_nodes()) throw std::invalid_argument("node index out of range");
    int d = 0;
    while (v != parent[static_cast<std::size_t>(v)]) {
        v = parent[static_cast<std::size_t>(v)];
        ++d;
    }
    return d;
}

bool LabelTree::is_ancestor_or_self(int a, int v) const {
    if (a < 0 || a >= num_nodes() || v < 0 || v >= num_nodes()) {
        throw std::invalid_argument("node index out of range");
    }
    while (true) {
        if (v == a) return true;
        const int p = parent[static_cast<std::size_t>(v)];
        if (p == v) return false;
        v = p;
    }
}

std::vector<int> LabelTree::leaves_under(int v) const {
    std::vector<int> labels;
    for (std::size_t label = 0; label < leaf_of_label.size(); ++label) {
        if (is_ancestor_or_self(v, leaf_of_label[label])) {
            labels.push_back(static_cast<int>(label));
        }
    }
    return labels;
}

int tree_distance(const LabelTree& tree, int u, int v) {
    int du = tree.node_depth(u);
    int dv = tree.node_depth(v);
    const int total = du + dv;
    while (du > dv) {
        u = tree.parent[static_cast<std::size_t>(u)];
        --du;
    }
    while (dv > du) {
        v = tree.parent[static_cast<std::size_t>(v)];
        --dv;
    }
    while (u != v) {
        u = tree.parent[static_cast<std::size_t>(u)];
        v = tree.parent[static_cast<std::size_t>(v)];
        --du;
    }
    return total - 2 * du;
}

double hierarchical_loss(const LabelTree& tree, int y_label, std::span<const int> node_set) {
    if (node_set.empty()) throw std::invalid_argument("hierarchical loss needs a non-empty set");
    if (y_label < 0 || y_label >= tree.num_labels()) {
        throw std::invalid_argument("label out of range");
    }
    if (tree.depth < 1) throw std::invalid_argument("tree depth must be at least 1");

    int best = std::numeric_limits<int>::max();
    for (int s : node_set) {
        // d_H(y, s): minimum over ancestors-or-self of y's leaf.
        int a = tree.leaf_of_label[static_cast<std::size_t>(y_label)];
        while (true) {
            best = std::min(best, tree_distance(tree, a, s));
            const int p = tree.parent[static_cast<std::size_t>(a)];
            if (p == a) break;
            a = p;
        }
    }
    return static_cast<double>(best) / static_cast<double>(tree.depth);
}

int hierarchical_set(const LabelTree& tree, std::span<const double> probs, double lambda) {
    if (probs.empty()) throw std::invalid_argument("empty probability vector");
    if (probs.size() != static_cast<std::size_t>(tree.num_labels())) {
        throw std::invalid_argument("probability vector size does not match label count");
    }
    std::size_t best_label = 0;
    for (std::size_t y = 1; y < probs.size(); ++y) {
        if (probs[y] > probs[best_label]) best_label = y;
    }
    // Walk up from the argmax leaf; the first node whose subtree mass reaches
    // -lambda is the deepest qualifying ancestor.
    int node = tree.leaf_of_label[best_label];
    while (true) {
        double mass = 0.0;
        for (int label : tree.leaves_under(node)) mass += probs[static_cast<std::size_t>(label)];
        if (mass >= -lambda) return node;
        const int p = tree.parent[static_cast<std::size_t>(node)];
        if (p == node) return node; // root; nothing larger exists
        node = p;
    }
}

std::vector<std::vector<int>> connected_components_8(const BinaryMask& mask) {
    const auto rows = static_cast<std::ptrdiff_t>(mask.rows);
    const auto cols = static_cast<std::ptrdiff_t>(mask.cols);
    std::vector<char> seen(mask.data.size(), 0);
    std::vector<std::vector<int>> components;

    for (std::ptrdiff_t start = 0; start < rows * cols; ++start) {
        if (!mask.data[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) {
            continue;
        }
        // Row-major scan order makes `start` the component's smallest index.
        std::vector<int> comp;
        std::deque<std::ptrdiff_t> frontier{start};
        seen[static_cast<std::size_t>(start)] = 1;
        while (!frontier.empty()) {
            const std::ptrdiff_t p = frontier.front();
            frontier.pop_front();
            comp.push_back(static_cast<int>(p));
            const std::ptrdiff_t r = p / cols;
            const std::ptrdiff_t c = p % cols;
            for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
                for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const std::ptrdiff_t rr = r + dr;
                    const std::ptrdiff_t cc = c + dc;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const std::ptrdiff_t q = rr * cols + cc;
                    if (mask.data[static_cast<std::size_t>(q)] &&
                        !seen[static_cast<std::size_t>(q)]) {
                        seen[static_cast<std::size_t>(q)] = 1;
                        frontier.push_back(q);
                    }
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    return components;
}

double segmentation_loss(const BinaryMask& truth, const BinaryMask& prediction) {
    if (truth.rows != prediction.rows || truth.cols != prediction.cols) {
        throw std::invalid_argument("mask dimensions differ");
    }
    const auto components = connected_components_8(truth);
    if (components.empty()) throw std::invalid_argument("ground truth has no object pixels");
    double total = 0.0;
    for (const auto& comp : components) {
        std::size_t missed = 0;
        for (int p : comp) {
            if (!prediction.data[static_cast<std::size_t>(p)]) ++missed;
        }
        total += static_cast<double>(missed) / static_cast<double>(comp.size());
    }
    return total / static_cast<double>(components.size());
}

BinaryMask segmentation_set(const ScoreGrid& scores, double lambda) {
    BinaryMask out = BinaryMask::zeros(scores.rows, scores.cols);
    for (std::size_t p = 0; p < scores.data.size(); ++p) {
        const double s = scores.data[p];
        if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("segmentation score outside [0,1]");
        out.data[p] = (s >= -lambda) ? 1 : 0;
    }
    return out;
}

IntervalSet ranking_interval(double r_hat, double lambda) {
    if (lambda < 0.0) throw std::domain_error("interval half-width must be nonnegative");
    return {r_hat - lambda, r_hat + lambda, false};
}

double ranking_loss(int y1, int y2, const IntervalSet& s) {
    if (s.empty) return (y1 != y2) ? 1.0 : 0.0;
    double loss = 0.0;
    if (s.hi < 0.0 && y1 > y2) loss += 1.0;
    if (s.lo > 0.0 && y1 < y2) loss += 1.0;
    return loss;
}

double metric_loss(int y1, int y2, const IntervalSet& s) {
    const double lo = s.empty ? kInf : s.lo;
    const double hi = s.empty ? -kInf : s.hi;
    if (y1 == y2) return std::max(lo - 1.0, 0.0);
    return std::max(1.0 - hi, 0.0);
}

double pairwise_empirical_risk(const std::function<double(std::size_t, std::size_t)>& pair_loss,
                               std::size_t n) {
    if (n < 2) throw std::invalid_argument("pairwise risk needs n >= 2");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) total += pair_loss(i, j);
    }
    return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

void Distogram::validate() const {
    if (bins.empty()) throw std::invalid_argument("distogram has no bins");
    if (size == 0) throw std::invalid_argument("distogram has no cells");
    for (std::size_t k = 1; k < bins.size(); ++k) {
        if (!(bins[k] > bins[k - 1])) throw std::invalid_argument("bins must be ascending");
    }
    if (mass.size() != size * size * bins.size()) {
        throw std::invalid_argument("distogram mass size mismatch");
    }
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < bins.size(); ++k) {
                const double v = at(i, j, k);
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw std::invalid_argument("distogram mass must be finite and nonnegative");
                }
                sum += v;
            }
            if (std::fabs(sum - 1.0) > 1e-6) {
                throw std::invalid_argument("distogram cell mass does not sum to 1");
            }
        }
    }
}

std::vector<std::vector<int>> distogram_set(const Distogram& d, double lambda) {
    d.validate();
    std::vector<std::vector<int>> sets(d.size * d.size);
    for (std::size_t i = 0; i < d.size; ++i) {
        for (std::size_t j = 0; j < d.size; ++j) {
            auto& cell = sets[i * d.size + j];
            for (std::size_t k = 0; k < d.bins.size(); ++k) {
                if (d.at(i, j, k) >= -lambda) cell.push_back(static_cast<int>(k));
            }
        }
    }
    return sets;
}

double distogram_loss(std::span<const double> truth, const Distogram& d,
                      const std::vector<std::vector<int>>& sets) {
    const std::size_t cells = d.size * d.size;
    if (truth.size() != cells) throw std::invalid_argument("truth size does not match distogram");
    if (sets.size() != cells) throw std::invalid_argument("set count does not match distogram");
    double total = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        if (sets[c].empty()) throw std::invalid_argument("empty bin set for a distogram cell");
        double best = kInf;
        for (int k : sets[c]) {
            best = std::min(best, std::fabs(truth[c] - d.bins[static_cast<std::size_t>(k)]));
        }
        total += best;
    }
    return total / static_cast<double>(cells);
}

// ---- loss-matrix builders ---------------------------------------------------

namespace {

LossMatrix make_matrix(LambdaGrid grid, std::size_t rows) {
    grid.validate();
    LossMatrix m;
    m.rows = rows;
    m.cols = grid.size();
    m.grid = std::move(grid);
    m.data.assign(m.rows * m.cols, 0.0);
    return m;
}

} // namespace

LossMatrix classification_loss_matrix(const std::vector<std::vector<double>>& scores,
                                      std::span<const int> labels,
                                      std::span<const double> weights, LambdaGrid grid) {
    if (scores.empty()) throw std::invalid_argument("no examples");
    if (labels.size() != scores.size()) throw std::invalid_argument("label count mismatch");
    LossMatrix m = make_matrix(std::move(grid), scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != weights.size()) {
            throw std::invalid_argument("score vector size does not match class count");
        }
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= weights.size()) {
            throw std::invalid_argument("label out of range");
        }
        const double own = scores[i][static_cast<std::size_t>(y)];
        for (std::size_t j = 0; j < m.cols; ++j) {
            // y is in the threshold set iff its own score clears -lambda.
            m.at(i, j) = (own > -m.grid.values[j]) ? 0.0 : weights[static_cast<std::size_t>(y)];
        }
    }
    validate_matrix(m);
    return m;
}

LossMatrix multilabel_loss_matrix(const std::vector<std::vector<double>>& scores,
                                  const std::vector<std::vector<int>>& label_sets,
                                  LambdaGrid grid) {
    if (scores.empty()) throw std::invalid_argument("no examples");
    if (label_sets.size() != scores.size()) throw std::invalid_argument("label count mismatch");
    LossMatrix m = make_matrix(std::move(grid), scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& y = label_sets[i];
        if (y.empty()) throw std::invalid_argument("empty multilabel set");
        for (int label : y) {
            if (label < 0 || static_cast<std::size_t>(label) >= scores[i].size()) {
                throw std::invalid_argument("label out of range");
            }
        }
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double threshold = -m.grid.values[j];
            std::size_t missed = 0;
            for (int label : y) {
                if (!(scores[i][static_cast<std::size_t>(label)] > threshold)) ++missed;
            }
            m.at(i, j) = static_cast<double>(missed) / static_cast<double>(y.size());
        }
    }
    validate_matrix(m);
    return m;
}

LossMatrix hierarchical_loss_matrix(const LabelTree& tree,
                                    const std::vector<std::vector<double>>& scores,
                                    std::span<const int> labels, LambdaGrid grid) {
    if (scores.empty()) throw std::invalid_argument("no examples");
    if (labels.size() != scores.size()) throw std::invalid_argument("label count mismatch");
    LossMatrix m = make_matrix(std::move(grid), scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            // The grid axis must make sets grow with lambda, so the subtree
            // mass threshold is 1 + lambda: the leaf at lambda = -1, the root
            // (zero loss) at lambda = 0.
            const int node = hierarchical_set(tree, scores[i], -1.0 - m.grid.values[j]);
            const int node_arr[1] = {node};
            m.at(i, j) = hierarchical_loss(tree, labels[i], node_arr);
        }
    }
    validate_matrix(m);
    return m;
}

LossMatrix segmentation_loss_matrix(const std::vector<ScoreGrid>& scores,
                                    const std::vector<BinaryMask>& masks, LambdaGrid grid) {
    if (scores.empty()) throw std::invalid_argument("no examples");
    if (masks.size() != scores.size()) throw std::invalid_argument("mask count mismatch");
    LossMatrix m = make_matrix(std::move(grid), scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            m.at(i, j) = segmentation_loss(masks[i], segmentation_set(scores[i], m.grid.values[j]));
        }
    }
    validate_matrix(m);
    return m;
}

LossMatrix distogram_loss_matrix(const std::vector<Distogram>& distograms,
                                 const std::vector<std::vector<double>>& truths,
                                 LambdaGrid grid) {
    if (distograms.empty()) throw std::invalid_argument("no examples");
    if (truths.size() != distograms.size()) throw std::invalid_argument("truth count mismatch");
    LossMatrix m = make_matrix(std::move(grid), distograms.size());
    for (std::size_t i = 0; i < distograms.size(); ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            m.at(i, j) =
                distogram_loss(truths[i], distograms[i], distogram_set(distograms[i], m.grid.values[j]));
        }
    }
    validate_matrix(m);
    return m;
}

} // namespace rcps
