#include "bicm/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "bicm/errors.hpp"
#include "bicm/parallel.hpp"

namespace bicm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double e1_series(double x) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;  // (-x)^k / k!
    for (int k = 1; k < 200; ++k) {
        term *= -x / k;
        const double add = term / k;
        sum += add;
        if (std::abs(add) < kEps * std::abs(sum)) break;
    }
    return -std::numbers::egamma - std::log(x) - sum;
}

// e^x E_n(x) = 1/(x+n- 1n/(x+n+2- 2(n+1)/(x+n+4- ...))), valid for x >= 1
double en_scaled_fraction(int n, double x) {
    constexpr double tiny = 1e-300;
    double b = x + n;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (n - 1 + i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) <= kEps) break;
    }
    return h;
}

void check_e1_arg(double x) {
    if (!(x > 0.0)) throw DomainError("E1 is defined only for x > 0, got " + std::to_string(x));
}

constexpr double kSeriesLimit = 1.0;

}  // namespace

double exp_integral_e1(double x) {
    check_e1_arg(x);
    if (x <= kSeriesLimit) return e1_series(x);
    return en_scaled_fraction(1, x) * std::exp(-x);
}

double exp_scaled_e1(double x) {
    check_e1_arg(x);
    if (x <= kSeriesLimit) return std::exp(x) * e1_series(x);
    return en_scaled_fraction(1, x);
}

namespace {

void check_rate_inputs(double power, double rho, double noise_var) {
    if (!(power > 0.0)) throw DomainError("input power must be positive");
    if (!(noise_var > 0.0)) throw DomainError("noise variance must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
}

}  // namespace

std::optional<double> lambda_k(double power, double rho, double noise_var) {
    check_rate_inputs(power, rho, noise_var);
    if (rho >= 1.0 - kRhoPerfectEps) return std::nullopt;
    return exp_scaled_e1(noise_var / (power * (1.0 - rho)));
}

std::optional<double> a_k(double power, double rho, double noise_var, double den_eps_rel) {
    const auto lambda = lambda_k(power, rho, noise_var);
    if (!lambda) return std::nullopt;
    const double spread = power * (1.0 - rho);
    const double x = noise_var / spread;
    // a = rho (lambda x - 1) / (lambda (x+1) - 1) after cancelling P (1 - rho). The
    // denominator is positive for every x, so it is guarded in a scale-free form.
    double num, den;
    if (x <= kSeriesLimit) {
        num = rho * (*lambda * x - 1.0);
        den = *lambda * (x + 1.0) - 1.0;
    } else {
        // For large x the differences shrink like 1/x and 1/x^2. With w = e^x E3(x),
        // lambda x - 1 = -(1 - 2w)/x and lambda (x+1) - 1 = (2w(x+1) - 1)/x^2;
        // both are scaled by x^2 here.
        const double w = en_scaled_fraction(3, x);
        num = -rho * (1.0 - 2.0 * w) * x;
        den = 2.0 * w * (x + 1.0) - 1.0;
    }
    if (!(std::abs(den) > den_eps_rel)) {
        std::ostringstream msg;
        msg << "a_k denominator " << den << " below guard (P=" << power << ", rho=" << rho
            << ", noise_var=" << noise_var << ")";
        throw DegenerateDraw(msg.str());
    }
    return num / den;
}

double eta_modified(cdouble h, cdouble h_hat, double a) {
    const double mag = std::abs(h_hat);
    if (mag == 0.0) throw DegenerateDraw("channel estimate is exactly zero");
    const double radius = std::abs(h - a * h_hat) / mag;
    return a >= 0.0 ? a - radius : a + radius;
}

RateParams RateParams::from_snr(double snr_db, int n_pilots, int m, double prior_var) {
    if (n_pilots < 1) throw ConfigError("at least one pilot symbol is required");
    RateParams rp;
    rp.power = 1.0;
    rp.noise_var = std::pow(10.0, -snr_db / 10.0);
    rp.m = m;
    rp.pp = PosteriorParams::make(prior_var, rp.noise_var / (n_pilots * rp.power), rp.noise_var);
    rp.validate();
    return rp;
}

void RateParams::validate() const {
    if (!(power > 0.0)) throw ConfigError("input power must be positive");
    if (!(noise_var > 0.0)) throw ConfigError("noise variance must be positive");
    if (m < 1) throw ConfigError("number of subcarriers must be at least 1");
    if (!(pp.rho >= 0.0 && pp.rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
}

namespace {

// log2(1 + P g / (sigma_z^2 + P (|H|^2 - g))) with g = |mu|^2
double gaussian_term(double h_norm, double g, const RateParams& rp, RateDiagnostics* diag) {
    if (g < 0.0) {
        g = 0.0;
        if (diag) ++diag->negative_floors;
    }
    const double den = rp.noise_var + rp.power * (h_norm - g);
    if (!(den > 0.0)) {
        if (diag) ++diag->denominator_violations;
        return 0.0;
    }
    return std::log2(1.0 + rp.power * g / den);
}

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw ConfigError("channel and estimate lengths differ");
}

}  // namespace

double rate_perfect(std::span<const cdouble> h, const RateParams& rp) {
    double r = 0.0;
    for (const auto& v : h) r += std::log2(1.0 + rp.power * std::norm(v) / rp.noise_var);
    return r;
}

double rate_perfect(const FadeVector& h, const RateParams& rp) { return rate_perfect(h.h, rp); }

double rate_modified_given_a(std::span<const cdouble> h, std::span<const cdouble> h_hat, double a,
                             const RateParams& rp, RateDiagnostics* diag) {
    check_sizes(h.size(), h_hat.size());
    double r = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double eta = eta_modified(h[k], h_hat[k], a);
        r += gaussian_term(std::norm(h[k]), eta * eta * std::norm(h_hat[k]), rp, diag);
    }
    return r;
}

double rate_modified(std::span<const cdouble> h, std::span<const cdouble> h_hat, const RateParams& rp,
                     RateDiagnostics* diag) {
    const auto a = a_k(rp.power, rp.pp.rho, rp.noise_var);
    if (!a) return rate_perfect(h, rp);
    return rate_modified_given_a(h, h_hat, *a, rp, diag);
}

double rate_modified(const FadeVector& h, const ChannelEstimate& ce, const RateParams& rp, RateDiagnostics* diag) {
    return rate_modified(h.h, ce.h_hat, rp, diag);
}

cdouble mu_mismatched(cdouble h, cdouble h_hat) {
    const double mag2 = std::norm(h_hat);
    if (mag2 == 0.0) return {};
    const double proj = (std::conj(h) * h_hat).real();
    return proj > 0.0 ? h_hat * (proj / mag2) : cdouble{};
}

double rate_mismatched(std::span<const cdouble> h, std::span<const cdouble> h_hat, const RateParams& rp,
                       RateDiagnostics* diag) {
    check_sizes(h.size(), h_hat.size());
    double r = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
        r += gaussian_term(std::norm(h[k]), std::norm(mu_mismatched(h[k], h_hat[k])), rp, diag);
    return r;
}

double rate_mismatched(const FadeVector& h, const ChannelEstimate& ce, const RateParams& rp, RateDiagnostics* diag) {
    return rate_mismatched(h.h, ce.h_hat, rp, diag);
}

double empirical_quantile(std::vector<double> samples, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("outage probability must lie in (0, 1)");
    if (samples.empty()) throw ConfigError("quantile of an empty sample");
    const double n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(gamma * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
    return samples[rank - 1];
}

namespace {

constexpr int kMinInner = 100;

void check_outage_args(double gamma, int n_inner) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("outage probability must lie in (0, 1)");
    if (n_inner < kMinInner) throw ConfigError("at least 100 posterior draws are required per estimate");
}

void draw_posterior(std::span<const cdouble> h_hat, const PosteriorParams& pp, RngStream& rng,
                    std::vector<cdouble>& h) {
    const double var = pp.rho * pp.err_var;
    for (std::size_t k = 0; k < h_hat.size(); ++k) h[k] = pp.rho * h_hat[k] + rng.complex_normal(var);
}

}  // namespace

double outage_rate(const RateFn& rate_fn, const ChannelEstimate& ce, double gamma, int n_inner, RngStream& rng) {
    check_outage_args(gamma, n_inner);
    std::vector<double> rates(static_cast<std::size_t>(n_inner));
    std::vector<cdouble> h(ce.h_hat.size());
    for (auto& r : rates) {
        draw_posterior(ce.h_hat, ce.pp, rng, h);
        r = rate_fn(h, ce.h_hat);
    }
    return empirical_quantile(std::move(rates), gamma);
}

std::vector<OutageResult> expected_outage_rates(std::span<const MetricMode> decoders, const RateParams& rp,
                                                const OutageOptions& opt) {
    rp.validate();
    check_outage_args(opt.gamma, opt.n_inner);
    if (opt.n_outer < 1) throw ConfigError("at least one channel estimate draw is required");

    const std::optional<double> a = a_k(rp.power, rp.pp.rho, rp.noise_var);
    const auto m = static_cast<std::size_t>(rp.m);
    const auto n_outer = static_cast<std::size_t>(opt.n_outer);
    const std::size_t n_dec = decoders.size();
    const double est_var = rp.pp.prior_var + rp.pp.err_var;

    struct Draw {
        std::vector<double> outage;  // per decoder
        std::uint64_t rejects = 0;
        std::vector<RateDiagnostics> diag;  // per decoder
    };
    std::vector<Draw> draws(n_outer);

    parallel_for(n_outer, opt.threads, [&](std::size_t j) {
        Draw& d = draws[j];
        RngStream est_rng(opt.run_seed, j, StreamTag::estimate);
        std::vector<cdouble> h_hat(m);
        for (;;) {
            for (auto& v : h_hat) v = est_rng.complex_normal(est_var);
            if (std::none_of(h_hat.begin(), h_hat.end(), [](cdouble v) { return v == cdouble{}; })) break;
            ++d.rejects;
        }

        d.diag.resize(n_dec);
        RngStream post_rng(opt.run_seed, j, StreamTag::posterior);
        std::vector<std::vector<double>> rates(n_dec, std::vector<double>(static_cast<std::size_t>(opt.n_inner)));
        std::vector<cdouble> h(m);
        for (std::size_t i = 0; i < static_cast<std::size_t>(opt.n_inner); ++i) {
            draw_posterior(h_hat, rp.pp, post_rng, h);
            for (std::size_t q = 0; q < n_dec; ++q) {
                switch (decoders[q]) {
                    case MetricMode::perfect: rates[q][i] = rate_perfect(h, rp); break;
                    case MetricMode::mismatched: rates[q][i] = rate_mismatched(h, h_hat, rp, &d.diag[q]); break;
                    case MetricMode::modified:
                        rates[q][i] = a ? rate_modified_given_a(h, h_hat, *a, rp, &d.diag[q]) : rate_perfect(h, rp);
                        break;
                }
            }
        }
        d.outage.resize(n_dec);
        for (std::size_t q = 0; q < n_dec; ++q) d.outage[q] = empirical_quantile(std::move(rates[q]), opt.gamma);
    });

    std::vector<OutageResult> out(n_dec);
    for (std::size_t q = 0; q < n_dec; ++q) {
        OutageResult& r = out[q];
        r.decoder = decoders[q];
        r.gamma = opt.gamma;
        r.n_outer = opt.n_outer;
        r.n_inner = opt.n_inner;
        r.per_estimate.reserve(n_outer);
        double sum = 0.0;
        for (const Draw& d : draws) {
            r.per_estimate.push_back(d.outage[q]);
            sum += d.outage[q];
            r.rejects += d.rejects;
            r.diag.denominator_violations += d.diag[q].denominator_violations;
            r.diag.negative_floors += d.diag[q].negative_floors;
        }
        const double n = static_cast<double>(n_outer);
        r.rate_bits = sum / n;
        double ss = 0.0;
        for (double v : r.per_estimate) ss += (v - r.rate_bits) * (v - r.rate_bits);
        r.std_err = n_outer > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
    return out;
}

OutageResult expected_outage_rate(MetricMode decoder, const RateParams& rp, const OutageOptions& opt) {
    const MetricMode one[] = {decoder};
    return expected_outage_rates(one, rp, opt).front();
}

}  // namespace bicm
