#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "bicm/modem.hpp"
#include "bicm/rng.hpp"

namespace bicm {

/// One block-fading realization: a complex gain per subcarrier.
struct FadeVector {
    std::vector<cdouble> h;
    double var = 1.0;  // prior variance of each H_k

    std::size_t size() const noexcept { return h.size(); }
    /// Throws ConfigError unless non-empty, finite and var > 0.
    void validate() const;
};

/// Pilot-based ML estimate and the posterior statistics it implies.
struct ChannelEstimate {
    std::vector<cdouble> h_hat;
    PosteriorParams pp;
    int n_pilots = 1;
    double pilot_energy = 1.0;

    std::size_t size() const noexcept { return h_hat.size(); }
};

/// Scalar energies of one operating point.
struct LinkBudget {
    double noise_var = 1.0;
    double symbol_energy = 1.0;
    double pilot_energy = 1.0;
    double ebn0_db = 0.0;

    /// Eb/N0 = Es / (R * B * sigma_z^2); pilot energy equals Es.
    static LinkBudget from_ebn0(double ebn0_db, double code_rate, int bits_per_symbol,
                                double symbol_energy = 1.0);
    void validate() const;
};

/// I.i.d. CN(0, var) gains on `m` subcarriers.
FadeVector draw_rayleigh(int m, double var, RngStream& rng);

/// y_k = H_k s_k + z_k with z_k ~ CN(0, noise_var). `s` must have one entry per subcarrier.
std::vector<cdouble> apply_channel(std::span<const cdouble> s, const FadeVector& fv, double noise_var,
                                   RngStream& rng);

/// Same as apply_channel over consecutive OFDM symbols; s.size() must be a multiple of M.
std::vector<cdouble> apply_channel_frame(std::span<const cdouble> s, const FadeVector& fv, double noise_var,
                                         RngStream& rng);

/// Simulated pilot observations: `n_pilots` OFDM symbols carrying the constant
/// pilot sqrt(P_T) on every subcarrier. Row n holds M samples.
std::vector<std::vector<cdouble>> receive_pilots(const FadeVector& fv, int n_pilots, double pilot_energy,
                                                 double noise_var, RngStream& rng);

/// ML estimate from pilot observations: H_k = sum_n conj(p) y_{n,k} / (N P_T).
ChannelEstimate estimate_from_pilots(const std::vector<std::vector<cdouble>>& rx, double prior_var,
                                     double pilot_energy, double noise_var);

/// Simulates pilot reception and returns the ML estimate with its posterior parameters.
ChannelEstimate estimate_channel(const FadeVector& fv, int n_pilots, double pilot_energy, double noise_var,
                                 RngStream& rng);

struct PosteriorMoments {
    cdouble mean;
    double var;
};

/// Posterior of H_k given the estimate: CN(rho * H_hat_k, rho * sigma_E^2).
PosteriorMoments posterior_of_true_channel(const ChannelEstimate& ce, std::size_t k);

/// Fade-vector text format: one realization per line, 2M whitespace-separated
/// decimals (re1 im1 re2 im2 ...). Blank lines and text after '#' are ignored.
/// With expected_m > 0 every line must carry exactly that many subcarriers.
std::vector<FadeVector> read_fade_vectors(std::istream& in, int expected_m = 0, double var = 1.0);
std::vector<FadeVector> import_fade_vectors(const std::filesystem::path& path, int expected_m = 0,
                                            double var = 1.0);
void write_fade_vectors(std::ostream& out, std::span<const FadeVector> vectors);
void export_fade_vectors(const std::filesystem::path& path, std::span<const FadeVector> vectors);

}  // namespace bicm
