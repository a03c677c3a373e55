#include "bicm/channel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bicm/errors.hpp"

namespace bicm {

void FadeVector::validate() const {
    if (h.empty()) throw ConfigError("fade vector has no subcarriers");
    if (!(var > 0.0)) throw ConfigError("fade variance must be positive");
    for (const auto& v : h)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ConfigError("fade vector contains a non-finite coefficient");
}

LinkBudget LinkBudget::from_ebn0(double ebn0_db, double code_rate, int bits_per_symbol, double symbol_energy) {
    if (!(code_rate > 0.0) || bits_per_symbol < 1) throw ConfigError("invalid code rate or bits per symbol");
    LinkBudget lb;
    lb.ebn0_db = ebn0_db;
    lb.symbol_energy = symbol_energy;
    lb.pilot_energy = symbol_energy;
    lb.noise_var = symbol_energy / (code_rate * bits_per_symbol * std::pow(10.0, ebn0_db / 10.0));
    lb.validate();
    return lb;
}

void LinkBudget::validate() const {
    if (!(noise_var > 0.0)) throw ConfigError("noise variance must be positive");
    if (!(symbol_energy > 0.0)) throw ConfigError("symbol energy must be positive");
    if (!(pilot_energy > 0.0)) throw ConfigError("pilot energy must be positive");
}

FadeVector draw_rayleigh(int m, double var, RngStream& rng) {
    if (m < 1) throw ConfigError("number of subcarriers must be at least 1");
    if (!(var > 0.0)) throw ConfigError("fade variance must be positive");
    FadeVector fv;
    fv.var = var;
    fv.h.resize(static_cast<std::size_t>(m));
    for (auto& v : fv.h) v = rng.complex_normal(var);
    return fv;
}

std::vector<cdouble> apply_channel(std::span<const cdouble> s, const FadeVector& fv, double noise_var,
                                   RngStream& rng) {
    if (s.size() != fv.size())
        throw ConfigError("symbol vector length " + std::to_string(s.size()) + " does not match " +
                          std::to_string(fv.size()) + " subcarriers");
    return apply_channel_frame(s, fv, noise_var, rng);
}

std::vector<cdouble> apply_channel_frame(std::span<const cdouble> s, const FadeVector& fv, double noise_var,
                                         RngStream& rng) {
    const std::size_t m = fv.size();
    if (m == 0 || s.size() % m != 0)
        throw ConfigError("frame of " + std::to_string(s.size()) + " symbols does not fill whole OFDM symbols");
    if (!(noise_var >= 0.0)) throw ConfigError("noise variance must be non-negative");
    std::vector<cdouble> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) y[i] = fv.h[i % m] * s[i] + rng.complex_normal(noise_var);
    return y;
}

std::vector<std::vector<cdouble>> receive_pilots(const FadeVector& fv, int n_pilots, double pilot_energy,
                                                 double noise_var, RngStream& rng) {
    if (n_pilots < 1) throw ConfigError("at least one pilot symbol is required");
    if (!(pilot_energy > 0.0)) throw ConfigError("pilot energy must be positive");
    const double p = std::sqrt(pilot_energy);
    std::vector<std::vector<cdouble>> rx(static_cast<std::size_t>(n_pilots), std::vector<cdouble>(fv.size()));
    for (auto& row : rx)
        for (std::size_t k = 0; k < fv.size(); ++k) row[k] = fv.h[k] * p + rng.complex_normal(noise_var);
    return rx;
}

ChannelEstimate estimate_from_pilots(const std::vector<std::vector<cdouble>>& rx, double prior_var,
                                     double pilot_energy, double noise_var) {
    if (rx.empty()) throw ConfigError("at least one pilot symbol is required");
    if (!(pilot_energy > 0.0)) throw ConfigError("pilot energy must be positive");
    const std::size_t m = rx.front().size();
    const double n = static_cast<double>(rx.size());
    const double p = std::sqrt(pilot_energy);
    ChannelEstimate ce;
    ce.h_hat.assign(m, cdouble{});
    for (const auto& row : rx) {
        if (row.size() != m) throw ConfigError("pilot rows have inconsistent lengths");
        for (std::size_t k = 0; k < m; ++k) ce.h_hat[k] += p * row[k];
    }
    for (auto& v : ce.h_hat) v /= n * pilot_energy;
    ce.n_pilots = static_cast<int>(rx.size());
    ce.pilot_energy = pilot_energy;
    ce.pp = PosteriorParams::make(prior_var, noise_var / (n * pilot_energy), noise_var);
    return ce;
}

ChannelEstimate estimate_channel(const FadeVector& fv, int n_pilots, double pilot_energy, double noise_var,
                                 RngStream& rng) {
    fv.validate();
    if (!(noise_var > 0.0)) throw ConfigError("noise variance must be positive");
    return estimate_from_pilots(receive_pilots(fv, n_pilots, pilot_energy, noise_var, rng), fv.var,
                                pilot_energy, noise_var);
}

PosteriorMoments posterior_of_true_channel(const ChannelEstimate& ce, std::size_t k) {
    return {ce.pp.rho * ce.h_hat.at(k), ce.pp.rho * ce.pp.err_var};
}

std::vector<FadeVector> read_fade_vectors(std::istream& in, int expected_m, double var) {
    std::vector<FadeVector> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::vector<double> vals;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size())
                throw ParseError("not a number: '" + tok + "'", lineno);
            if (!std::isfinite(v)) throw ParseError("non-finite value '" + tok + "'", lineno);
            vals.push_back(v);
        }
        if (vals.empty()) continue;
        if (vals.size() % 2 != 0) throw ParseError("odd number of values (need re/im pairs)", lineno);
        const auto m = static_cast<int>(vals.size() / 2);
        if (expected_m > 0 && m != expected_m)
            throw ParseError("expected " + std::to_string(expected_m) + " subcarriers, found " + std::to_string(m),
                             lineno);
        FadeVector fv;
        fv.var = var;
        fv.h.resize(static_cast<std::size_t>(m));
        for (std::size_t k = 0; k < fv.h.size(); ++k) fv.h[k] = {vals[2 * k], vals[2 * k + 1]};
        out.push_back(std::move(fv));
    }
    return out;
}

std::vector<FadeVector> import_fade_vectors(const std::filesystem::path& path, int expected_m, double var) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open channel file " + path.string());
    return read_fade_vectors(in, expected_m, var);
}

void write_fade_vectors(std::ostream& out, std::span<const FadeVector> vectors) {
    out << std::setprecision(17);
    for (const auto& fv : vectors) {
        for (std::size_t k = 0; k < fv.h.size(); ++k) {
            if (k) out << ' ';
            out << fv.h[k].real() << ' ' << fv.h[k].imag();
        }
        out << '\n';
    }
}

void export_fade_vectors(const std::filesystem::path& path, std::span<const FadeVector> vectors) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write channel file " + path.string());
    out << "# fade vectors: one realization per line, re/im pairs per subcarrier\n";
    write_fade_vectors(out, vectors);
    if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace bicm
