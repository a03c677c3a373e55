#include "bicm/modem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bicm/errors.hpp"

namespace bicm {

std::string_view to_string(MetricMode mode) {
    switch (mode) {
        case MetricMode::perfect: return "perfect";
        case MetricMode::mismatched: return "mismatched";
        case MetricMode::modified: return "modified";
    }
    return "unknown";
}

MetricMode metric_mode_from_string(std::string_view name) {
    for (MetricMode m : kAllModes)
        if (to_string(m) == name) return m;
    throw ConfigError("unknown decoder '" + std::string(name) + "' (expected perfect, mismatched or modified)");
}

PosteriorParams PosteriorParams::make(double prior_var, double err_var, double noise_var) {
    if (!(prior_var > 0.0)) throw ConfigError("channel prior variance must be positive");
    if (!(err_var >= 0.0)) throw ConfigError("estimation error variance must be non-negative");
    if (!(noise_var > 0.0)) throw ConfigError("noise variance must be positive");
    return PosteriorParams{prior_var / (prior_var + err_var), err_var, prior_var, noise_var};
}

QamConstellation::QamConstellation(double symbol_energy) : energy_(symbol_energy) {
    if (!(symbol_energy > 0.0)) throw ConfigError("symbol energy must be positive");
    // indexed by the bit pair value (b0 << 1 | b1)
    constexpr std::array<double, 4> gray_level{-3.0, -1.0, 3.0, 1.0};
    const double scale = std::sqrt(symbol_energy / 10.0);
    for (unsigned label = 0; label < kOrder; ++label) {
        const double i = gray_level[(label >> 2) & 3U];
        const double q = gray_level[label & 3U];
        points_[label] = cdouble(i * scale, q * scale);
    }
}

std::vector<cdouble> qam_map(std::span<const std::uint8_t> bits, const QamConstellation& c) {
    constexpr auto B = static_cast<std::size_t>(QamConstellation::kBitsPerSymbol);
    if (bits.size() % B != 0)
        throw InputError("bit count " + std::to_string(bits.size()) + " is not a multiple of 4");
    std::vector<cdouble> out(bits.size() / B);
    for (std::size_t k = 0; k < out.size(); ++k) {
        unsigned label = 0;
        for (std::size_t l = 0; l < B; ++l) label = (label << 1) | (bits[k * B + l] & 1U);
        out[k] = c.point(label);
    }
    return out;
}

namespace {

double modified_var(cdouble s, const PosteriorParams& pp) {
    const double v = pp.noise_var + pp.prior_var * (1.0 - pp.rho) * std::norm(s);
    if (!(v > 0.0)) throw std::logic_error("modified metric variance is not positive");
    return v;
}

// nll(s) = log_var[s] + |y - gain * h * s|^2 * inv_var[s]
struct MetricTable {
    double gain = 1.0;
    std::array<double, QamConstellation::kOrder> log_var{};
    std::array<double, QamConstellation::kOrder> inv_var{};

    MetricTable(const QamConstellation& c, MetricMode mode, const PosteriorParams& pp) {
        if (!(pp.noise_var > 0.0)) throw ConfigError("noise variance must be positive");
        if (mode == MetricMode::modified) {
            gain = pp.rho;
            for (unsigned s = 0; s < QamConstellation::kOrder; ++s) {
                const double v = modified_var(c.point(s), pp);
                log_var[s] = std::log(v);
                inv_var[s] = 1.0 / v;
            }
        } else {
            log_var.fill(0.0);
            inv_var.fill(1.0 / pp.noise_var);
        }
    }
};

void check_finite(cdouble v, const char* what) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw InputError(std::string("non-finite ") + what);
}

double log_sum_exp(std::span<const double> x, bool max_log) {
    const double m = *std::max_element(x.begin(), x.end());
    if (max_log || m == -std::numeric_limits<double>::infinity()) return m;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - m);
    return m + std::log(acc);
}

std::array<double, 4> bit_metrics_with(const MetricTable& tab, cdouble y, cdouble h, const QamConstellation& c,
                                       const double* apriori, bool max_log) {
    constexpr int B = QamConstellation::kBitsPerSymbol;
    constexpr int S = QamConstellation::kOrder;
    check_finite(y, "received sample");
    check_finite(h, "channel coefficient");

    std::array<double, S> logp{};
    const cdouble gh = tab.gain * h;
    for (unsigned s = 0; s < S; ++s)
        logp[s] = -(tab.log_var[s] + std::norm(y - gh * c.point(s)) * tab.inv_var[s]);

    // half-llr prior weight: +L/2 for bit 0, -L/2 for bit 1
    std::array<double, S> prior{};
    if (apriori) {
        for (unsigned s = 0; s < S; ++s) {
            double w = 0.0;
            for (int l = 0; l < B; ++l)
                w += QamConstellation::label_bit(s, l) ? -0.5 * apriori[l] : 0.5 * apriori[l];
            prior[s] = w;
        }
    }

    std::array<double, 4> llr{};
    std::array<double, S / 2> zero{}, one{};
    for (int l = 0; l < B; ++l) {
        std::size_t n0 = 0, n1 = 0;
        for (unsigned s = 0; s < S; ++s) {
            const int bit = QamConstellation::label_bit(s, l);
            double v = logp[s];
            if (apriori) v += prior[s] - (bit ? -0.5 * apriori[l] : 0.5 * apriori[l]);
            (bit ? one[n1++] : zero[n0++]) = v;
        }
        llr[static_cast<std::size_t>(l)] = log_sum_exp(zero, max_log) - log_sum_exp(one, max_log);
    }
    return llr;
}

}  // namespace

double symbol_metric(cdouble y, cdouble s, cdouble h, MetricMode mode, const PosteriorParams& pp) {
    if (mode != MetricMode::modified) return std::norm(y - h * s);
    const double v = modified_var(s, pp);
    return std::log(v) + std::norm(y - pp.rho * h * s) / v;
}

double neg_log_likelihood(cdouble y, cdouble s, cdouble h, MetricMode mode, const PosteriorParams& pp) {
    if (mode == MetricMode::modified) return symbol_metric(y, s, h, mode, pp);
    if (!(pp.noise_var > 0.0)) throw ConfigError("noise variance must be positive");
    return std::norm(y - h * s) / pp.noise_var;
}

std::array<double, 4> bit_metrics(cdouble y, cdouble h, const QamConstellation& c, MetricMode mode,
                                  const PosteriorParams& pp, std::optional<std::span<const double>> apriori,
                                  const DemapOptions& opt) {
    if (apriori && apriori->size() != static_cast<std::size_t>(QamConstellation::kBitsPerSymbol))
        throw InputError("a-priori input must hold one llr per bit of the symbol");
    const MetricTable tab(c, mode, pp);
    return bit_metrics_with(tab, y, h, c, apriori ? apriori->data() : nullptr, opt.max_log);
}

std::vector<double> demap(std::span<const cdouble> y, std::span<const cdouble> h, const QamConstellation& c,
                          MetricMode mode, const PosteriorParams& pp,
                          std::optional<std::span<const double>> apriori, const DemapOptions& opt) {
    constexpr auto B = static_cast<std::size_t>(QamConstellation::kBitsPerSymbol);
    if (h.empty()) throw InputError("empty channel vector");
    if (apriori && apriori->size() != y.size() * B)
        throw InputError("a-priori frame length does not match the sample count");
    const MetricTable tab(c, mode, pp);
    std::vector<double> out(y.size() * B);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double* ap = apriori ? apriori->data() + i * B : nullptr;
        const auto llr = bit_metrics_with(tab, y[i], h[i % h.size()], c, ap, opt.max_log);
        std::copy(llr.begin(), llr.end(), out.begin() + static_cast<std::ptrdiff_t>(i * B));
    }
    return out;
}

}  // namespace bicm
