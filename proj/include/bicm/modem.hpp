#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace bicm {

using cdouble = std::complex<double>;

/// Which decoding metric the demapper applies.
///  - Perfect:    Gaussian likelihood around the true channel, |y - h s|^2 / sigma_z^2.
///  - Mismatched: the same likelihood with the estimate plugged in for h.
///  - Modified:   likelihood averaged over the posterior of h given the estimate.
enum class MetricMode { perfect, mismatched, modified };

std::string_view to_string(MetricMode mode);
MetricMode metric_mode_from_string(std::string_view name);

inline constexpr std::array<MetricMode, 3> kAllModes{MetricMode::perfect, MetricMode::mismatched,
                                                     MetricMode::modified};

/// Statistics of the true channel given its pilot estimate.
struct PosteriorParams {
    double rho = 1.0;        // prior_var / (prior_var + err_var)
    double err_var = 0.0;    // estimation-error variance
    double prior_var = 1.0;  // Rayleigh variance of H
    double noise_var = 1.0;  // AWGN variance

    /// Builds a consistent set; throws ConfigError on non-positive variances.
    static PosteriorParams make(double prior_var, double err_var, double noise_var);

    /// Variance of H given the estimate: rho * err_var == (1 - rho) * prior_var.
    double posterior_var() const noexcept { return (1.0 - rho) * prior_var; }
};

/// Square 16-QAM with a fixed Gray labeling.
///
/// A symbol's four bits (d1 d2 d3 d4, d1 first in the bit stream) split into an
/// in-phase pair (d1 d2) and a quadrature pair (d3 d4). Each pair selects an
/// amplitude level through the Gray table
///
///     00 -> -3    01 -> -1    11 -> +1    10 -> +3
///
/// and the point is (I + jQ) * sqrt(Es / 10). Thus 0000 maps to (-3 - 3j)/sqrt(10)
/// for Es = 1, and horizontally or vertically adjacent points differ in one bit.
class QamConstellation {
public:
    explicit QamConstellation(double symbol_energy = 1.0);

    static constexpr int kOrder = 16;
    static constexpr int kBitsPerSymbol = 4;

    int order() const noexcept { return kOrder; }
    int bits_per_symbol() const noexcept { return kBitsPerSymbol; }
    double symbol_energy() const noexcept { return energy_; }

    /// Point for a label; the label's bit 3 (MSB) is the first bit in the stream.
    cdouble point(unsigned label) const { return points_[label]; }
    const std::array<cdouble, kOrder>& points() const noexcept { return points_; }

    /// Bit l (0 = first in the stream) of a label.
    static int label_bit(unsigned label, int l) noexcept {
        return static_cast<int>((label >> (kBitsPerSymbol - 1 - l)) & 1U);
    }

private:
    double energy_;
    std::array<cdouble, kOrder> points_{};
};

/// Groups of four bits to constellation points. Throws InputError if the
/// length is not a multiple of four.
std::vector<cdouble> qam_map(std::span<const std::uint8_t> bits, const QamConstellation& c);

/// Decision metric D(s, y) to be minimized over s.
///  - Perfect / Mismatched: |y - h s|^2 (h is the true channel or the estimate).
///  - Modified: ln v + |y - rho h s|^2 / v with v = sigma_z^2 + prior_var (1 - rho) |s|^2.
double symbol_metric(cdouble y, cdouble s, cdouble h, MetricMode mode, const PosteriorParams& pp);

/// Negative log-likelihood -ln p(y | h, s) up to an s-independent constant.
/// For the Euclidean modes this is |y - h s|^2 / sigma_z^2; for Modified it
/// equals symbol_metric.
double neg_log_likelihood(cdouble y, cdouble s, cdouble h, MetricMode mode, const PosteriorParams& pp);

struct DemapOptions {
    bool max_log = false;  // replace log-sum-exp with max (not the reference path)
};

/// Per-bit log-likelihood ratios (positive favors 0) for one received sample.
///
/// llr_l = ln sum_{s: bit l = 0} w_l(s) exp(-nll(s)) - ln sum_{s: bit l = 1} w_l(s) exp(-nll(s)).
/// With a-priori llrs the weight w_l(s) is the prior of s's other bits, so the
/// result is extrinsic with respect to bit l's own prior. Throws InputError on
/// non-finite y or h.
std::array<double, 4> bit_metrics(cdouble y, cdouble h, const QamConstellation& c, MetricMode mode,
                                  const PosteriorParams& pp,
                                  std::optional<std::span<const double>> apriori = std::nullopt,
                                  const DemapOptions& opt = {});

/// Demaps a sequence of samples where sample i saw channel h[i % h.size()].
/// Output has 4 llrs per sample in stream order.
std::vector<double> demap(std::span<const cdouble> y, std::span<const cdouble> h,
                          const QamConstellation& c, MetricMode mode, const PosteriorParams& pp,
                          std::optional<std::span<const double>> apriori = std::nullopt,
                          const DemapOptions& opt = {});

}  // namespace bicm
