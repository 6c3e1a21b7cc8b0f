#pragma once
// Task-specific nested set families and their losses.
//
// Each family is indexed by a scalar lambda with sets growing in lambda, and
// each loss shrinks as the set grows, which is exactly what the calibration
// module needs. Covered tasks: classification with per-class costs, multilabel
// (false-negative proportion), hierarchical labels on a tree, binary image
// segmentation with a per-object miss loss, distance-histogram regression,
// plus interval predictions for ranking and metric learning scored as
// order-two U-statistics. The *_loss_matrix builders compose a family with its
// loss over a lambda grid into a calibration-ready LossMatrix.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rcps/calibration.hpp"

namespace rcps {

struct LabelDist {
    std::vector<double> probs;                   // nonnegative scores per label
    std::optional<std::vector<double>> weights;  // per-class losses L_y
};

// {y : probs[y] > -lambda}; nested nondecreasing in lambda (lambda <= 0 for
// probability scores). Returns sorted label ids.
std::vector<int> threshold_set(std::span<const double> probs, double lambda);

// L_y if y is missing from the set, else 0. `set` must be sorted.
double class_varying_loss(int y, std::span<const int> set, std::span<const double> weights);

// False-negative proportion 1 - |y & s| / |y|. Both sets sorted; y non-empty.
double multilabel_fnr_loss(std::span<const int> y, std::span<const int> s);

// Risk-density evaluator: rho(y, current_set) with current_set a membership
// mask over the label space.
using RiskDensityFn = std::function<double(int, const std::vector<char>&)>;

// Greedy nested sets: lower a cutoff zeta from upper_bound toward -lambda in
// steps of dzeta, each step admitting every excluded label whose density
// against the current set exceeds zeta. When the density does not depend on
// the set (losses of the form L_y 1{y not in S}), pass set_independent=true to
// use the exact threshold family {y : rho(y, empty) >= -lambda} instead.
std::vector<int> greedy_sets(const RiskDensityFn& rho, int num_labels, double lambda,
                             double dzeta, double upper_bound, bool set_independent = false);

// Exhaustively verifies that the threshold family built from exact class
// probabilities and weights is size-optimal: no competitor set map with risk
// <= R(T_lambda) has smaller expected size. Brute-force over all per-x subsets,
// so the instance must be small (|labels| <= 8, |x| <= 8).
bool greedy_optimality_check(const std::vector<std::vector<double>>& cond_probs,
                             std::span<const double> x_probs, std::span<const double> weights,
                             double lambda);

// Rooted tree over K leaf labels. parent[root] == root.
struct LabelTree {
    std::vector<int> parent;
    std::vector<int> leaf_of_label; // label id -> node id
    int root = 0;
    int depth = 0; // max root-to-leaf edge count

    static LabelTree build(std::vector<int> parent, std::vector<int> leaf_of_label);
    int num_nodes() const { return static_cast<int>(parent.size()); }
    int num_labels() const { return static_cast<int>(leaf_of_label.size()); }
    int node_depth(int v) const;
    bool is_ancestor_or_self(int a, int v) const;
    // Leaf labels in the subtree rooted at v.
    std::vector<int> leaves_under(int v) const;
};

// Shortest-path length between two nodes: depth(u)+depth(v)-2*depth(lca).
int tree_distance(const LabelTree& tree, int u, int v);

// min over s in the node set, over ancestors-or-self a of label y's leaf, of
// d(a, s), scaled by 1/depth. Zero exactly when some s covers y.
double hierarchical_loss(const LabelTree& tree, int y_label, std::span<const int> node_set);

// Deepest ancestor of the argmax leaf whose subtree probability mass reaches
// -lambda; the root when no deeper ancestor qualifies.
int hierarchical_set(const LabelTree& tree, std::span<const double> probs, double lambda);

struct BinaryMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<char> data; // row-major

    bool at(std::size_t i, std::size_t j) const { return data[i * cols + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { data[i * cols + j] = v ? 1 : 0; }
    static BinaryMask zeros(std::size_t rows, std::size_t cols) {
        return {rows, cols, std::vector<char>(rows * cols, 0)};
    }
};

struct ScoreGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major, values in [0,1]

    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Maximal 8-connected components of the true pixels, as sorted row-major pixel
// indices, components ordered by their smallest pixel index.
std::vector<std::vector<int>> connected_components_8(const BinaryMask& mask);

// Mean over ground-truth components of the fraction of that component's pixels
// missing from the prediction.
double segmentation_loss(const BinaryMask& truth, const BinaryMask& prediction);

// {(i,j) : scores[i][j] >= -lambda}.
BinaryMask segmentation_set(const ScoreGrid& scores, double lambda);

struct IntervalSet {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;
};

// (r_hat - lambda, r_hat + lambda) for lambda >= 0.
IntervalSet ranking_interval(double r_hat, double lambda);

// 1 when the interval has only values of the wrong sign for the ordered pair.
double ranking_loss(int y1, int y2, const IntervalSet& s);

// (inf(s) - 1)^+ for same-class pairs, (1 - sup(s))^+ for different-class
// pairs: the deficit of the predicted distance interval against the unit
// decision boundary.
double metric_loss(int y1, int y2, const IntervalSet& s);

// Mean of pair_loss(i, j) over all n(n-1)/2 unordered pairs.
double pairwise_empirical_risk(const std::function<double(std::size_t, std::size_t)>& pair_loss,
                               std::size_t n);

// Per-residue-pair histogram over distance bins.
struct Distogram {
    std::vector<double> bins; // bin-center distances, ascending
    std::size_t size = 0;     // residue count; mass is size*size*bins.size()
    std::vector<double> mass; // cell-major: mass[(i*size + j)*K + k]

    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return mass[(i * size + j) * bins.size() + k];
    }
    void validate() const; // shape and per-cell normalization within 1e-6
};

// Per cell, the bin indices with mass >= -lambda (lambda in [-1, 0]).
std::vector<std::vector<int>> distogram_set(const Distogram& d, double lambda);

// Mean over cells of the distance from truth[i][j] to the nearest selected bin
// center. The prediction is a product over cells, so the infimum decomposes.
// Throws if any cell set is empty.
double distogram_loss(std::span<const double> truth, const Distogram& d,
                      const std::vector<std::vector<int>>& sets);

// ---- loss-matrix builders over a lambda grid -------------------------------

// Classification with per-class costs. scores: n rows of per-class scores.
LossMatrix classification_loss_matrix(const std::vector<std::vector<double>>& scores,
                                      std::span<const int> labels,
                                      std::span<const double> weights, LambdaGrid grid);

// Multilabel false-negative proportion; label_sets[i] sorted and non-empty.
LossMatrix multilabel_loss_matrix(const std::vector<std::vector<double>>& scores,
                                  const std::vector<std::vector<int>>& label_sets,
                                  LambdaGrid grid);

LossMatrix hierarchical_loss_matrix(const LabelTree& tree,
                                    const std::vector<std::vector<double>>& scores,
                                    std::span<const int> labels, LambdaGrid grid);

LossMatrix segmentation_loss_matrix(const std::vector<ScoreGrid>& scores,
                                    const std::vector<BinaryMask>& masks, LambdaGrid grid);

LossMatrix distogram_loss_matrix(const std::vector<Distogram>& distograms,
                                 const std::vector<std::vector<double>>& truths,
                                 LambdaGrid grid);

} // namespace rcps
