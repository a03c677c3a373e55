#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bicm/channel.hpp"
#include "bicm/modem.hpp"

namespace bicm {

/// Exponential integral E1(x) = int_x^inf e^-u / u du for x > 0.
///
/// x <= 1 uses the power series -gamma - ln x - sum_k (-x)^k / (k k!);
/// x > 1 uses the continued fraction for e^x E1(x) (modified Lentz).
/// Throws DomainError for x <= 0 or NaN.
double exp_integral_e1(double x);

/// e^x E1(x), evaluated without overflow for large x.
double exp_scaled_e1(double x);

inline constexpr double kRhoPerfectEps = 1e-9;

/// lambda = e^x E1(x) with x = noise_var / (P (1 - rho)). Bounded by
/// 1/(x+1) < lambda < 1/x, so it lies in (0, 1) whenever x >= 1 (always the
/// case with pilot energy P, where x = N (sigma_h^2 + sigma_E^2)).
/// Returns nullopt when rho >= 1 - kRhoPerfectEps (the perfect-CSI limit).
std::optional<double> lambda_k(double power, double rho, double noise_var);

/// Center scale of the modified-metric constraint disk:
/// a = rho (lambda s2 - P (1 - rho)) / (lambda s2 - P (1 - rho)(1 - lambda)).
/// Returns nullopt in the perfect-CSI limit. The denominator equals
/// P (1 - rho)(lambda (x+1) - 1) > 0; it is evaluated without the P (1 - rho)
/// factor (and times x^2 when x > 1, through e^x E3(x)), and a DegenerateDraw is
/// thrown when that scale-free value is at most den_eps_rel or not finite.
std::optional<double> a_k(double power, double rho, double noise_var, double den_eps_rel = 1e-12);

/// Scale eta of the minimum-norm boundary point mu = eta * H_hat of the disk
/// {mu : |H - a H_hat| <= |mu - a H_hat|}. Throws DegenerateDraw if H_hat == 0.
double eta_modified(cdouble h, cdouble h_hat, double a);

/// Inputs of the Gaussian-input rate formulas.
struct RateParams {
    double power = 1.0;  // P, input power per subcarrier
    double noise_var = 1.0;
    PosteriorParams pp;
    int m = 16;

    /// P = 1, sigma_z^2 = 10^(-snr_db/10), pilot energy P and `n_pilots` pilots.
    static RateParams from_snr(double snr_db, int n_pilots, int m, double prior_var = 1.0);
    void validate() const;
};

/// Counters of numerical events seen while evaluating rates.
struct RateDiagnostics {
    std::uint64_t denominator_violations = 0;  // sigma_k^2 <= 0 (must stay zero)
    std::uint64_t negative_floors = 0;         // per-subcarrier terms floored at zero
};

/// Rate with perfect CSI: sum_k log2(1 + P |H_k|^2 / sigma_z^2).
double rate_perfect(std::span<const cdouble> h, const RateParams& rp);
double rate_perfect(const FadeVector& h, const RateParams& rp);

/// Rate achievable with the modified metric for one (H, H_hat) pair. Falls back
/// to rate_perfect in the perfect-CSI limit.
double rate_modified(std::span<const cdouble> h, std::span<const cdouble> h_hat, const RateParams& rp,
                     RateDiagnostics* diag = nullptr);
double rate_modified(const FadeVector& h, const ChannelEstimate& ce, const RateParams& rp,
                     RateDiagnostics* diag = nullptr);

/// Same with a precomputed a (skips the E1 evaluation).
double rate_modified_given_a(std::span<const cdouble> h, std::span<const cdouble> h_hat, double a,
                             const RateParams& rp, RateDiagnostics* diag = nullptr);

/// Minimum-norm mu for the Euclidean (mismatched) metric constraint, which is
/// the half-plane Re(conj(mu) H_hat) >= Re(conj(H) H_hat).
cdouble mu_mismatched(cdouble h, cdouble h_hat);

/// Rate achievable with the mismatched Euclidean metric.
double rate_mismatched(std::span<const cdouble> h, std::span<const cdouble> h_hat, const RateParams& rp,
                       RateDiagnostics* diag = nullptr);
double rate_mismatched(const FadeVector& h, const ChannelEstimate& ce, const RateParams& rp,
                       RateDiagnostics* diag = nullptr);

/// Empirical gamma-quantile: the order statistic of 1-based rank ceil(gamma n).
/// The product gamma n is rounded down when within 1e-9 of an integer.
double empirical_quantile(std::vector<double> samples, double gamma);

using RateFn = std::function<double(std::span<const cdouble> h, std::span<const cdouble> h_hat)>;

/// Outage rate of one estimate: draws n_inner channels from the posterior given
/// h_hat and returns the gamma-quantile of rate_fn over them.
double outage_rate(const RateFn& rate_fn, const ChannelEstimate& ce, double gamma, int n_inner, RngStream& rng);

struct OutageResult {
    MetricMode decoder = MetricMode::perfect;
    double gamma = 0.01;
    double rate_bits = 0.0;  // mean over estimates of the per-estimate outage rate
    double std_err = 0.0;
    int n_outer = 0;
    int n_inner = 0;
    std::uint64_t rejects = 0;  // redrawn degenerate estimates
    RateDiagnostics diag;
    std::vector<double> per_estimate;  // outage rate for each estimate, in draw order
};

struct OutageOptions {
    double gamma = 0.01;
    int n_outer = 200;
    int n_inner = 2000;
    std::uint64_t run_seed = 1;
    unsigned threads = 1;
};

/// Expected outage rates for several decoders on shared draws: estimate j uses
/// stream (run_seed, j, estimate) and its posterior channels stream
/// (run_seed, j, posterior). Deterministic for any thread count.
std::vector<OutageResult> expected_outage_rates(std::span<const MetricMode> decoders, const RateParams& rp,
                                                const OutageOptions& opt);

OutageResult expected_outage_rate(MetricMode decoder, const RateParams& rp, const OutageOptions& opt);

}  // namespace bicm
