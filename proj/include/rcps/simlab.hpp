#pragma once
// Monte Carlo laboratory for the bound-comparison and calibration-validity
// experiments.
//
// Sampling is deterministic: replicate r of an experiment with base seed s
// draws from an mt19937_64 stream keyed by s + r, and all variate transforms
// are hand-rolled (inverse CDF, Box-Muller, Marsaglia-Tsang) so results do not
// depend on the standard library's unspecified distribution algorithms.
// Replicates may run on any number of threads; aggregation is by replicate
// index, so thread count never changes a result.

#include <cstdint>
#include <random>
#include <vector>

#include "rcps/bounds.hpp"
#include "rcps/calibration.hpp"

namespace rcps {

// Deterministic random stream with explicit variate transforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    double uniform(); // [0, 1)
    double normal();
    // Marsaglia-Tsang, boosted below shape 1 via G(a) = G(a+1) U^{1/a}.
    double gamma(double shape);
    double beta(double a, double b);

private:
    std::mt19937_64 eng_; // the engine's output sequence is pinned by the standard
    bool has_spare_ = false;
    double spare_ = 0.0;
};

enum class DistFamily { Bernoulli, Beta, Gamma, SquaredT, LogNormal };

// A loss distribution with a known mean, in the parameterizations used by the
// bound-comparison experiments.
struct DistSpec {
    DistFamily family = DistFamily::Bernoulli;
    double p1 = 0.0; // mu (Bernoulli), a (Beta, Gamma), v (squared-t), mu (log-normal)
    double p2 = 0.0; // mu (Beta), sigma (log-normal)
    double target_mean = 0.0;

    static DistSpec bernoulli(double mu);
    // Beta(a, b) with b = a(1/mu - 1), so the mean is mu.
    static DistSpec beta(double a, double mu);
    // Gamma(a, 1) rescaled by 1/a to mean 1.
    static DistSpec gamma(double a);
    // Squared t with v > 2 degrees of freedom, rescaled by (v-2)/v to mean 1.
    static DistSpec squared_t(double v);
    // exp(N(mu, sigma^2)); mean exp(mu + sigma^2/2).
    static DistSpec lognormal(double mu, double sigma);

    bool bounded() const { return family == DistFamily::Bernoulli || family == DistFamily::Beta; }
    double beta_b() const; // the derived b parameter (Beta only)
};

// One replicate's worth of losses, deterministic in (spec, n, seed).
std::vector<double> sample_dist(const DistSpec& spec, std::size_t n, std::uint64_t seed);

struct SimResult {
    BoundKind bound = BoundKind::Wsr;
    std::int64_t n = 0;
    std::int64_t reps = 0;
    double coverage = 0.0;          // fraction of replicates with UCB >= true mean
    double median_gap = 0.0;        // median of UCB - true mean
    double mean_relative_gap = 0.0; // mean of (UCB - true mean) / true mean
    std::uint64_t seed = 0;
};

// Draws `reps` samples of size n (replicate r seeded with seed + r) and
// evaluates every requested bound on each sample. Throws on bound/distribution
// mismatches such as a bounded-loss bound on Gamma losses.
std::vector<SimResult> bound_eval_experiment(const DistSpec& spec, std::size_t n, double delta,
                                             const std::vector<BoundKind>& bounds,
                                             std::int64_t reps, std::uint64_t seed);

// Synthetic classification task with per-class costs whose exact risk curve is
// available in closed form: X is one of a few score profiles, Y follows known
// conditional probabilities, and the predictor thresholds fixed scores.
struct ClassVaryingTask {
    std::vector<double> x_probs;             // profile marginals
    std::vector<std::vector<double>> cond;   // true P(y | profile)
    std::vector<std::vector<double>> scores; // model scores per profile (all > 0)
    std::vector<double> weights;             // per-class losses in [0,1]

    static ClassVaryingTask random(std::size_t num_profiles, std::size_t num_classes,
                                   std::uint64_t seed);
    double exact_risk(double lambda) const;
    double max_risk(const LambdaGrid& grid) const;
    // n fresh examples as a calibration loss matrix over the grid.
    LossMatrix sample_matrix(const LambdaGrid& grid, std::size_t n, std::uint64_t seed) const;
};

struct ValiditySummary {
    std::int64_t trials = 0;
    std::int64_t violations = 0; // exact risk at lambda_hat exceeded alpha
    std::int64_t saturated = 0;  // reported separately, never counted as violations
    double violation_rate = 0.0;
    double max_exact_risk = 0.0;        // largest exact risk seen at any lambda_hat
    double min_lambda_hat = 0.0;
    double max_lambda_hat = 0.0;
};

// Repeatedly calibrates on fresh matrices (trial t seeded with seed + t) and
// scores the selected lambda against the task's exact risk curve.
ValiditySummary rcps_validity_experiment(const ClassVaryingTask& task, const LambdaGrid& grid,
                                         const BoundSpec& bound, double alpha, std::size_t n,
                                         std::int64_t trials, std::uint64_t seed);

} // namespace rcps
