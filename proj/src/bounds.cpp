#include "rcps/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rcps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Guarded ceiling for k = ceil(n*t): products like 1000*0.1 can land a hair
// above the integer they represent.
std::int64_t guarded_ceil(double x, std::int64_t lo, std::int64_t hi) {
    auto k = static_cast<std::int64_t>(std::ceil(x - 1e-9));
    return std::clamp(k, lo, hi);
}

// Continued fraction for the regularized incomplete beta (Lentz's method).
// Long double throughout: with double lgamma the log-space prefactor alone
// costs ~1e-9 relative at n = 1e6, far above the 1e-12 target.
long double betacf(long double a, long double b, long double x) {
    constexpr int max_iter = 800;
    constexpr long double eps = 1e-19L;
    constexpr long double fp_min = 1e-4000L;

    const long double qab = a + b;
    const long double qap = a + 1.0L;
    const long double qam = a - 1.0L;
    long double c = 1.0L;
    long double d = 1.0L - qab * x / qap;
    if (std::fabs(d) < fp_min) d = fp_min;
    d = 1.0L / d;
    long double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        long double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0L + aa * d;
        if (std::fabs(d) < fp_min) d = fp_min;
        c = 1.0L + aa / c;
        if (std::fabs(c) < fp_min) c = fp_min;
        d = 1.0L / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0L + aa * d;
        if (std::fabs(d) < fp_min) d = fp_min;
        c = 1.0L + aa / c;
        if (std::fabs(c) < fp_min) c = fp_min;
        d = 1.0L / d;
        const long double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0L) < eps) break;
    }
    return h;
}

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a_in, double b_in, double x_in) {
    const long double a = a_in;
    const long double b = b_in;
    const long double x = x_in;
    if (x <= 0.0L) return 0.0;
    if (x >= 1.0L) return 1.0;
    const long double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                 a * std::log(x) + b * std::log1p(-x);
    const long double front = std::exp(ln_front);
    if (x < (a + 1.0L) / (a + b + 2.0L)) {
        return static_cast<double>(front * betacf(a, b, x) / a);
    }
    return static_cast<double>(1.0L - front * betacf(b, a, 1.0L - x) / b);
}

void check_delta(double delta, bool allow_one = false) {
    if (!(delta > 0.0) || delta > 1.0 || (!allow_one && delta == 1.0)) {
        throw std::domain_error("delta must lie in (0,1)");
    }
}

void check_losses_unit(std::span<const double> losses) {
    if (losses.empty()) throw std::invalid_argument("loss vector is empty");
    for (double v : losses) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::domain_error("loss outside [0,1]");
        }
    }
}

// h1 without the public-domain checks; tolerates r == t (0) and r == 1 (+inf).
double h1_raw(double t, double r) {
    const double a = (t == 0.0) ? 0.0 : t * std::log(t / r);
    const double b = (t == 1.0) ? 0.0 : (1.0 - t) * std::log((1.0 - t) / (1.0 - r));
    return a + b;
}

// Largest R in [lo, hi] with pred(R) true, where pred is true at lo and
// monotone true->false in R. Runs bisection essentially to double precision;
// the interval shrinks below any residual the callers care about long before
// the 200-iteration cap.
template <typename Pred>
double bisect_sup(double lo, double hi, Pred pred) {
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

} // namespace

std::string_view bound_kind_name(BoundKind kind) {
    switch (kind) {
        case BoundKind::SimpleHoeffding: return "simple-hoeffding";
        case BoundKind::HoeffdingBentkus: return "hoeffding-bentkus";
        case BoundKind::BinomialExact: return "binomial-exact";
        case BoundKind::EmpiricalBernstein: return "empirical-bernstein";
        case BoundKind::Wsr: return "wsr";
        case BoundKind::Clt: return "clt";
        case BoundKind::PinelisUtev: return "pinelis-utev";
        case BoundKind::UstatHbm: return "ustat-hbm";
    }
    throw std::logic_error("unreachable bound kind");
}

BoundKind bound_kind_from_name(std::string_view name) {
    if (name == "simple-hoeffding") return BoundKind::SimpleHoeffding;
    if (name == "hoeffding-bentkus") return BoundKind::HoeffdingBentkus;
    if (name == "binomial-exact") return BoundKind::BinomialExact;
    if (name == "empirical-bernstein") return BoundKind::EmpiricalBernstein;
    if (name == "wsr") return BoundKind::Wsr;
    if (name == "clt") return BoundKind::Clt;
    if (name == "pinelis-utev") return BoundKind::PinelisUtev;
    if (name == "ustat-hbm") return BoundKind::UstatHbm;
    throw std::invalid_argument("unknown bound kind: " + std::string(name));
}

double h1(double t, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("h1: r must lie in (0,1)");
    if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("h1: t must lie in [0,1)");
    return h1_raw(t, r);
}

double binom_cdf(std::int64_t k, std::int64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binom_cdf: p outside [0,1]");
    if (n < 0 || k < 0 || k > n) throw std::domain_error("binom_cdf: need 0 <= k <= n");
    if (k == n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    // P(X <= k) = I_{1-p}(n-k, k+1)
    return reg_inc_beta(static_cast<double>(n - k), static_cast<double>(k + 1), 1.0 - p);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");

    // Acklam's rational approximation ...
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // ... sharpened by one Halley step against erfc.
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of empty vector");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    const auto n = values.size();
    if (n < 2) throw std::invalid_argument("sample_std needs n >= 2");
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

UCBValue ucb_simple_hoeffding(std::span<const double> losses, double delta) {
    check_losses_unit(losses);
    check_delta(delta, /*allow_one=*/true);
    const double n = static_cast<double>(losses.size());
    const double v = mean(losses) + std::sqrt(std::log(1.0 / delta) / (2.0 * n));
    if (v > 1.0) return {1.0, true, true};
    return {v, true, false};
}

UCBValue ucb_hoeffding_bentkus(double rhat, std::int64_t n, double delta) {
    if (!(rhat >= 0.0 && rhat <= 1.0)) throw std::domain_error("rhat outside [0,1]");
    if (n < 1) throw std::domain_error("n must be >= 1");
    check_delta(delta);
    if (rhat >= 1.0) return {1.0, true, false};

    const std::int64_t k = guarded_ceil(static_cast<double>(n) * rhat, 0, n);
    const double nd = static_cast<double>(n);
    auto g_log = [&](double r) {
        const double hoeffding = -nd * h1_raw(rhat, r);
        const double bentkus = 1.0 + std::log(binom_cdf(k, n, r));
        return std::min(hoeffding, bentkus);
    };
    const double log_delta = std::log(delta);
    if (g_log(rhat) < log_delta) return {rhat, true, false}; // only possible for delta near 1
    const double r = bisect_sup(rhat, 1.0, [&](double x) { return g_log(x) >= log_delta; });
    return {r, true, false};
}

UCBValue ucb_binomial_exact(double rhat, std::int64_t n, double delta) {
    if (!(rhat >= 0.0 && rhat <= 1.0)) throw std::domain_error("rhat outside [0,1]");
    if (n < 1) throw std::domain_error("n must be >= 1");
    check_delta(delta);
    const double nrhat = static_cast<double>(n) * rhat;
    if (std::fabs(nrhat - std::round(nrhat)) > 1e-9) {
        throw std::domain_error("binomial-exact requires binary losses (n*rhat must be an integer)");
    }
    if (rhat >= 1.0) return {1.0, true, false};

    const auto k = static_cast<std::int64_t>(std::llround(nrhat));
    if (binom_cdf(k, n, rhat) < delta) return {rhat, true, false};
    const double r = bisect_sup(rhat, 1.0, [&](double x) { return binom_cdf(k, n, x) >= delta; });
    return {r, true, false};
}

UCBValue ucb_empirical_bernstein(std::span<const double> losses, double delta) {
    check_losses_unit(losses);
    check_delta(delta);
    const auto n = static_cast<double>(losses.size());
    if (losses.size() < 2) throw std::invalid_argument("empirical Bernstein needs n >= 2");
    const double log_term = std::log(2.0 / delta);
    const double v = mean(losses) + sample_std(losses) * std::sqrt(2.0 * log_term / n) +
                     7.0 * log_term / (3.0 * (n - 1.0));
    if (v > 1.0) return {1.0, true, true};
    return {v, true, false};
}

UCBValue ucb_wsr(std::span<const double> losses, double delta) {
    check_losses_unit(losses);
    check_delta(delta);
    const std::size_t n = losses.size();
    const double nd = static_cast<double>(n);
    const double log_inv_delta = std::log(1.0 / delta);

    // Predictable bet sizes: nu_i depends on the running mean/variance of the
    // first i-1 losses (shrunk toward 1/2 and 1/4 respectively).
    std::vector<double> nu(n);
    double sum = 0.0;
    double sum_sq_dev = 0.0;
    double var_prev = 0.25; // sigma_0^2
    for (std::size_t i = 0; i < n; ++i) {
        nu[i] = std::min(1.0, std::sqrt(2.0 * log_inv_delta / (nd * var_prev)));
        sum += losses[i];
        const double mu_i = (0.5 + sum) / (2.0 + static_cast<double>(i));
        const double dev = losses[i] - mu_i;
        sum_sq_dev += dev * dev;
        var_prev = (0.25 + sum_sq_dev) / (2.0 + static_cast<double>(i));
    }

    const double threshold = 1.0 / delta;
    // True iff max_i prod_{j<=i} (1 - nu_j (L_j - R)) exceeds 1/delta. The
    // running product is kept in [1e-280, 1e280] by power-of-ten rescaling so
    // that long losing streaks cannot underflow it to zero.
    auto capital_exceeds = [&](double r) {
        double prod = 1.0;
        int scale = 0; // value = prod * 1e280^scale
        for (std::size_t i = 0; i < n; ++i) {
            prod *= 1.0 - nu[i] * (losses[i] - r);
            if (prod == 0.0) return false; // absorbing
            if (scale == 0 && prod > threshold) return true;
            if (scale < 0 && prod > 1e280) {
                prod *= 1e-280;
                ++scale;
            } else if (prod < 1e-280) {
                prod *= 1e280;
                --scale;
            }
        }
        return false;
    };

    if (!capital_exceeds(1.0)) return {1.0, true, true};
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (capital_exceeds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {hi, true, false};
}

UCBValue ucb_clt(std::span<const double> losses, double delta) {
    if (losses.size() < 2) throw std::invalid_argument("CLT bound needs n >= 2");
    if (!(delta > 0.0 && delta <= 0.5)) {
        throw std::domain_error("CLT bound requires delta in (0, 1/2]");
    }
    for (double v : losses) {
        if (!std::isfinite(v)) throw std::domain_error("CLT bound requires finite losses");
    }
    const double n = static_cast<double>(losses.size());
    const double v = mean(losses) + normal_quantile(1.0 - delta) * sample_std(losses) / std::sqrt(n);
    return {v, true, false};
}

UCBValue ucb_pinelis_utev(std::span<const double> losses, double delta,
                          std::optional<double> cv) {
    if (losses.empty()) throw std::invalid_argument("loss vector is empty");
    for (double v : losses) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("Pinelis-Utev requires finite nonnegative losses");
    }
    check_delta(delta, /*allow_one=*/true);
    const double rhat = mean(losses);
    double c;
    if (cv) {
        if (!(*cv >= 0.0)) throw std::domain_error("cv must be nonnegative");
        c = *cv;
    } else {
        if (rhat <= 0.0) throw std::domain_error("cannot estimate cv: empirical mean is zero");
        c = sample_std(losses) / rhat;
    }
    if (delta == 1.0) return {rhat, true, false}; // the feasible set collapses to rhat
    const double scale = static_cast<double>(losses.size()) / (c * c + 1.0);
    const double log_delta = std::log(delta);
    // As R -> infinity the exponent tends to -scale; past that point the bound
    // can never pin down a finite R.
    if (-scale >= log_delta) return {kInf, false, false};
    if (rhat == 0.0) return {0.0, true, false};

    auto g_log = [&](double r) {
        return -scale * (1.0 + (rhat / r) * std::log(rhat / (M_E * r)));
    };
    double hi = rhat * 2.0;
    while (g_log(hi) >= log_delta) hi *= 2.0;
    double lo = rhat;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g_log(mid) >= log_delta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, true, false};
}

UCBValue ucb_ustat_hbm(double rhat, std::int64_t n, double delta) {
    if (!(rhat >= 0.0 && rhat <= 1.0)) throw std::domain_error("rhat outside [0,1]");
    if (n < 4) throw std::domain_error("U-statistic bound needs n >= 4");
    check_delta(delta);
    if (rhat >= 1.0) return {1.0, true, false};

    const std::int64_t m = n / 2;
    const std::int64_t k = guarded_ceil(static_cast<double>(m) * rhat, 0, m);
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);

    auto big_g = [](double nu) { return (std::expm1(nu) - nu) / nu; };
    // inf over nu of -(n nu / 2)(R/(1+2G(nu)) - rhat), by golden-section search.
    auto bennett_log = [&](double r) {
        auto f = [&](double nu) {
            return -(nd * nu / 2.0) * (r / (1.0 + 2.0 * big_g(nu)) - rhat);
        };
        constexpr double inv_phi = 0.6180339887498949;
        double a = 1e-6;
        double b = 20.0;
        double x1 = b - inv_phi * (b - a);
        double x2 = a + inv_phi * (b - a);
        double f1 = f(x1);
        double f2 = f(x2);
        while (b - a > 1e-8) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2);
            }
        }
        return std::min({f(0.5 * (a + b)), f(1e-6), f(20.0)});
    };
    auto g_log = [&](double r) {
        const double hoeffding = -md * h1_raw(rhat, r);
        const double bentkus = 1.0 + std::log(binom_cdf(k, m, r));
        return std::min({hoeffding, bentkus, bennett_log(r)});
    };
    const double log_delta = std::log(delta);
    if (g_log(rhat) < log_delta) return {rhat, true, false};
    const double r = bisect_sup(rhat, 1.0, [&](double x) { return g_log(x) >= log_delta; });
    return {r, true, false};
}

UCBValue compute_ucb(const BoundSpec& spec, std::span<const double> losses,
                     std::optional<std::int64_t> ustat_n) {
    switch (spec.kind) {
        case BoundKind::SimpleHoeffding:
            return ucb_simple_hoeffding(losses, spec.delta);
        case BoundKind::HoeffdingBentkus:
            check_losses_unit(losses);
            return ucb_hoeffding_bentkus(mean(losses), static_cast<std::int64_t>(losses.size()),
                                         spec.delta);
        case BoundKind::BinomialExact:
            check_losses_unit(losses);
            return ucb_binomial_exact(mean(losses), static_cast<std::int64_t>(losses.size()),
                                      spec.delta);
        case BoundKind::EmpiricalBernstein:
            return ucb_empirical_bernstein(losses, spec.delta);
        case BoundKind::Wsr:
            return ucb_wsr(losses, spec.delta);
        case BoundKind::Clt:
            return ucb_clt(losses, spec.delta);
        case BoundKind::PinelisUtev:
            return ucb_pinelis_utev(losses, spec.delta, spec.cv);
        case BoundKind::UstatHbm: {
            check_losses_unit(losses);
            std::int64_t base_n;
            if (ustat_n) {
                base_n = *ustat_n;
                const auto pairs = base_n * (base_n - 1) / 2;
                if (pairs != static_cast<std::int64_t>(losses.size())) {
                    throw std::invalid_argument("pairwise loss count does not match n(n-1)/2");
                }
            } else {
                // Infer n from the triangular length.
                const double len = static_cast<double>(losses.size());
                const double root = (1.0 + std::sqrt(1.0 + 8.0 * len)) / 2.0;
                base_n = static_cast<std::int64_t>(std::llround(root));
                if (base_n * (base_n - 1) / 2 != static_cast<std::int64_t>(losses.size())) {
                    throw std::invalid_argument(
                        "pairwise loss count is not triangular; pass the base sample size");
                }
            }
            return ucb_ustat_hbm(mean(losses), base_n, spec.delta);
        }
    }
    throw std::logic_error("unreachable bound kind");
}

} // namespace rcps
