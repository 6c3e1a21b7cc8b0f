#pragma once
// Upper confidence bounds for the mean of a loss sample.
//
// Every bound here returns a (1 - delta) UCB for E[L] computed from n observed
// losses (or from the empirical mean alone, for the bounds that only need it).
// Finite-sample bounds for losses in [0,1]: simple Hoeffding, Hoeffding-Bentkus,
// exact binomial (binary losses), empirical Bernstein (Maurer & Pontil 2009),
// and the hedged-capital bound of Waudby-Smith & Ramdas. For nonnegative
// unbounded losses with a bounded coefficient of variation there is the
// Pinelis-Utev bound; for pairwise (order-two U-statistic) empirical risks a
// Hoeffding-Bentkus-Maurer bound; and an asymptotic CLT bound.
//
// Tail-probability bounds g(t; R) are inverted by bisection in R, which is
// justified because each g is nonincreasing in R on the search interval.
// All functions are pure and thread-safe.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace rcps {

struct UCBValue {
    double value = 0.0;
    bool finite = true;   // false when the bound is vacuous (+infinity)
    bool clamped = false; // true when capped at the loss range boundary
};

enum class BoundKind {
    SimpleHoeffding,
    HoeffdingBentkus,
    BinomialExact,
    EmpiricalBernstein,
    Wsr,
    Clt,
    PinelisUtev,
    UstatHbm,
};

// CLI-facing spelling: "simple-hoeffding", "hoeffding-bentkus", "binomial-exact",
// "empirical-bernstein", "wsr", "clt", "pinelis-utev", "ustat-hbm".
std::string_view bound_kind_name(BoundKind kind);
BoundKind bound_kind_from_name(std::string_view name);

struct BoundSpec {
    BoundKind kind = BoundKind::Wsr;
    double delta = 0.1;
    std::optional<double> cv; // Pinelis-Utev only: upper bound on sigma/mean
};

// Bernoulli KL divergence h1(t; r) = t log(t/r) + (1-t) log((1-t)/(1-r)),
// with the 0 log 0 = 0 convention. Domain: t in [0,1), r in (0,1).
double h1(double t, double r);

// P(Binom(n, p) <= k) via the regularized incomplete beta identity.
// Accurate to ~1e-13 relative for n up to 1e6.
double binom_cdf(std::int64_t k, std::int64_t n, double p);

// Standard normal quantile, accurate to well below 1e-9 absolute.
double normal_quantile(double p);

double mean(std::span<const double> values);
// Sample standard deviation with the n-1 denominator.
double sample_std(std::span<const double> values);

// ---- the bounds menu -------------------------------------------------------
// Domains: losses in [0,1] for the bounded bounds; nonnegative for Pinelis-Utev;
// finite for CLT. delta in (0,1) unless noted.

// mean + sqrt(log(1/delta) / 2n), clamped at 1. Accepts delta in (0,1].
UCBValue ucb_simple_hoeffding(std::span<const double> losses, double delta);

// sup{R : min(exp(-n h1(rhat;R)), e P(Binom(n,R) <= ceil(n rhat))) >= delta}.
UCBValue ucb_hoeffding_bentkus(double rhat, std::int64_t n, double delta);

// Binary losses only (n*rhat integral): sup{R : P(Binom(n,R) <= n rhat) >= delta}.
UCBValue ucb_binomial_exact(double rhat, std::int64_t n, double delta);

// mean + sd sqrt(2 log(2/delta)/n) + 7 log(2/delta)/(3(n-1)), clamped at 1. n >= 2.
UCBValue ucb_empirical_bernstein(std::span<const double> losses, double delta);

// Hedged-capital bound; order-sensitive, losses must be in observation order.
UCBValue ucb_wsr(std::span<const double> losses, double delta);

// mean + z_{1-delta} sd / sqrt(n); asymptotic, unclamped. n >= 2, delta <= 1/2.
UCBValue ucb_clt(std::span<const double> losses, double delta);

// Nonnegative losses with coefficient of variation bounded by cv; if cv is
// absent it is estimated as sd/mean from the same sample (mean must be > 0).
// Returns +infinity with finite=false when n <= (cv^2+1) log(1/delta).
// Accepts delta in (0,1].
UCBValue ucb_pinelis_utev(std::span<const double> losses, double delta,
                          std::optional<double> cv = std::nullopt);

// rhat is the mean pairwise loss over all n(n-1)/2 pairs of an i.i.d. sample
// of size n >= 4.
UCBValue ucb_ustat_hbm(double rhat, std::int64_t n, double delta);

// Dispatch on spec.kind. For HoeffdingBentkus/BinomialExact the empirical mean
// of `losses` is used. For UstatHbm, `losses` holds the n(n-1)/2 pairwise
// losses; pass the base sample size in ustat_n or leave it empty to infer it
// from the triangular length.
UCBValue compute_ucb(const BoundSpec& spec, std::span<const double> losses,
                     std::optional<std::int64_t> ustat_n = std::nullopt);

} // namespace rcps
