#include "rcps/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "parallel.hpp"
#include "rcps/setfns.hpp"

namespace rcps {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
} // namespace

Rng::Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

double Rng::uniform() {
    // 53 high bits -> [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw std::domain_error("gamma shape must be positive");
    if (shape < 1.0) {
        const double u = 1.0 - uniform(); // (0, 1], keeps the power finite
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
}

DistSpec DistSpec::bernoulli(double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::domain_error("Bernoulli mean outside [0,1]");
    return {DistFamily::Bernoulli, mu, 0.0, mu};
}

DistSpec DistSpec::beta(double a, double mu) {
    if (!(a > 0.0)) throw std::domain_error("Beta shape must be positive");
    if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("Beta mean must lie in (0,1)");
    return {DistFamily::Beta, a, mu, mu};
}

DistSpec DistSpec::gamma(double a) {
    if (!(a > 0.0)) throw std::domain_error("Gamma shape must be positive");
    return {DistFamily::Gamma, a, 0.0, 1.0};
}

DistSpec DistSpec::squared_t(double v) {
    if (!(v > 2.0)) throw std::domain_error("squared-t needs v > 2 for a finite mean");
    return {DistFamily::SquaredT, v, 0.0, 1.0};
}

DistSpec DistSpec::lognormal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("log-normal sigma must be positive");
    return {DistFamily::LogNormal, mu, sigma, std::exp(mu + 0.5 * sigma * sigma)};
}

double DistSpec::beta_b() const {
    if (family != DistFamily::Beta) throw std::logic_error("beta_b on a non-Beta spec");
    return p1 * (1.0 / p2 - 1.0);
}

std::vector<double> sample_dist(const DistSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample size must be positive");
    Rng rng(seed);
    std::vector<double> out(n);
    switch (spec.family) {
        case DistFamily::Bernoulli:
            for (auto& v : out) v = rng.uniform() < spec.p1 ? 1.0 : 0.0;
            break;
        case DistFamily::Beta: {
            const double b = spec.beta_b();
            for (auto& v : out) v = rng.beta(spec.p1, b);
            break;
        }
        case DistFamily::Gamma:
            for (auto& v : out) v = rng.gamma(spec.p1) / spec.p1;
            break;
        case DistFamily::SquaredT: {
            // t = Z / sqrt(W/v) with W ~ chi^2_v; t^2 rescaled to mean 1.
            const double v_df = spec.p1;
            const double rescale = (v_df - 2.0) / v_df;
            for (auto& v : out) {
                const double z = rng.normal();
                const double w = 2.0 * rng.gamma(v_df / 2.0);
                v = rescale * z * z * v_df / w;
            }
            break;
        }
        case DistFamily::LogNormal:
            for (auto& v : out) v = std::exp(spec.p1 + spec.p2 * rng.normal());
            break;
    }
    return out;
}

namespace {

void check_bound_domain(BoundKind kind, const DistSpec& spec) {
    switch (kind) {
        case BoundKind::SimpleHoeffding:
        case BoundKind::HoeffdingBentkus:
        case BoundKind::EmpiricalBernstein:
        case BoundKind::Wsr:
            if (!spec.bounded()) {
                throw std::invalid_argument(std::string(bound_kind_name(kind)) +
                                            " requires losses in [0,1]");
            }
            return;
        case BoundKind::BinomialExact:
            if (spec.family != DistFamily::Bernoulli) {
                throw std::invalid_argument("binomial-exact requires binary losses");
            }
            return;
        case BoundKind::PinelisUtev:
        case BoundKind::Clt:
            return; // every family here is nonnegative with finite variance at test scale
        case BoundKind::UstatHbm:
            throw std::invalid_argument("ustat-hbm is for pairwise risks, not i.i.d. loss draws");
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::vector<SimResult> bound_eval_experiment(const DistSpec& spec, std::size_t n, double delta,
                                             const std::vector<BoundKind>& bounds,
                                             std::int64_t reps, std::uint64_t seed) {
    if (reps < 1) throw std::invalid_argument("need at least one replicate");
    if (bounds.empty()) throw std::invalid_argument("no bounds requested");
    for (BoundKind kind : bounds) check_bound_domain(kind, spec);

    const std::size_t num_bounds = bounds.size();
    const auto reps_sz = static_cast<std::size_t>(reps);
    std::vector<std::vector<double>> ucbs(num_bounds, std::vector<double>(reps_sz, 0.0));

    detail::parallel_for(reps_sz, [&](std::size_t r) {
        const std::vector<double> losses = sample_dist(spec, n, seed + r);
        for (std::size_t b = 0; b < num_bounds; ++b) {
            const BoundSpec bs{bounds[b], delta, std::nullopt};
            const UCBValue u = compute_ucb(bs, losses);
            ucbs[b][r] = u.finite ? u.value : kInf;
        }
    });

    const double mu = spec.target_mean;
    std::vector<SimResult> results(num_bounds);
    for (std::size_t b = 0; b < num_bounds; ++b) {
        std::int64_t covered = 0;
        double rel_sum = 0.0;
        std::vector<double> gaps(reps_sz);
        for (std::size_t r = 0; r < reps_sz; ++r) {
            const double gap = ucbs[b][r] - mu;
            gaps[r] = gap;
            if (gap >= 0.0) ++covered;
            rel_sum += gap / std::max(mu, 1e-12);
        }
        results[b] = {bounds[b],
                      static_cast<std::int64_t>(n),
                      reps,
                      static_cast<double>(covered) / static_cast<double>(reps),
                      median_of(std::move(gaps)),
                      rel_sum / static_cast<double>(reps),
                      seed};
    }
    return results;
}

ClassVaryingTask ClassVaryingTask::random(std::size_t num_profiles, std::size_t num_classes,
                                          std::uint64_t seed) {
    if (num_profiles == 0 || num_classes == 0) throw std::invalid_argument("empty task");
    Rng rng(seed);
    ClassVaryingTask task;
    task.x_probs.resize(num_profiles);
    double total = 0.0;
    for (auto& q : task.x_probs) {
        q = 0.2 + rng.uniform();
        total += q;
    }
    for (auto& q : task.x_probs) q /= total;

    task.cond.resize(num_profiles);
    task.scores.resize(num_profiles);
    for (std::size_t x = 0; x < num_profiles; ++x) {
        auto& p = task.cond[x];
        auto& s = task.scores[x];
        p.resize(num_classes);
        s.resize(num_classes);
        double mass = 0.0;
        for (std::size_t y = 0; y < num_classes; ++y) {
            p[y] = 0.05 + rng.uniform();
            mass += p[y];
        }
        for (std::size_t y = 0; y < num_classes; ++y) {
            p[y] /= mass;
            // Imperfect but positively correlated model scores.
            s[y] = std::min(1.0, std::max(1e-4, p[y] * (0.5 + rng.uniform())));
        }
    }
    task.weights.resize(num_classes);
    for (auto& w : task.weights) w = rng.uniform();
    return task;
}

double ClassVaryingTask::exact_risk(double lambda) const {
    double risk = 0.0;
    for (std::size_t x = 0; x < x_probs.size(); ++x) {
        for (std::size_t y = 0; y < weights.size(); ++y) {
            if (!(scores[x][y] > -lambda)) {
                risk += x_probs[x] * cond[x][y] * weights[y];
            }
        }
    }
    return risk;
}

double ClassVaryingTask::max_risk(const LambdaGrid& grid) const {
    double worst = 0.0;
    for (double lambda : grid.values) worst = std::max(worst, exact_risk(lambda));
    return worst;
}

LossMatrix ClassVaryingTask::sample_matrix(const LambdaGrid& grid, std::size_t n,
                                           std::uint64_t seed) const {
    if (n == 0) throw std::invalid_argument("sample size must be positive");
    Rng rng(seed);
    std::vector<std::vector<double>> example_scores;
    std::vector<int> labels;
    example_scores.reserve(n);
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Draw a profile, then a class from its conditional law.
        double u = rng.uniform();
        std::size_t x = 0;
        while (x + 1 < x_probs.size() && u >= x_probs[x]) {
            u -= x_probs[x];
            ++x;
        }
        double v = rng.uniform();
        std::size_t y = 0;
        while (y + 1 < weights.size() && v >= cond[x][y]) {
            v -= cond[x][y];
            ++y;
        }
        example_scores.push_back(scores[x]);
        labels.push_back(static_cast<int>(y));
    }
    return classification_loss_matrix(example_scores, labels, weights, grid);
}

ValiditySummary rcps_validity_experiment(const ClassVaryingTask& task, const LambdaGrid& grid,
                                         const BoundSpec& bound, double alpha, std::size_t n,
                                         std::int64_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    grid.validate();

    const auto trials_sz = static_cast<std::size_t>(trials);
    std::vector<double> lambda_hats(trials_sz, 0.0);
    std::vector<char> saturated(trials_sz, 0);
    detail::parallel_for(trials_sz, [&](std::size_t t) {
        const LossMatrix matrix = task.sample_matrix(grid, n, seed + t);
        const CalibrationReport report = calibrate_rcps(matrix, bound, alpha);
        lambda_hats[t] = report.lambda_hat;
        saturated[t] = report.saturated ? 1 : 0;
    });

    ValiditySummary out;
    out.trials = trials;
    out.min_lambda_hat = kInf;
    out.max_lambda_hat = -kInf;
    for (std::size_t t = 0; t < trials_sz; ++t) {
        const double risk = task.exact_risk(lambda_hats[t]);
        out.max_exact_risk = std::max(out.max_exact_risk, risk);
        out.min_lambda_hat = std::min(out.min_lambda_hat, lambda_hats[t]);
        out.max_lambda_hat = std::max(out.max_lambda_hat, lambda_hats[t]);
        if (saturated[t]) {
            ++out.saturated;
        } else if (risk > alpha) {
            ++out.violations;
        }
    }
    out.violation_rate = static_cast<double>(out.violations) / static_cast<double>(trials);
    return out;
}

} // namespace rcps
