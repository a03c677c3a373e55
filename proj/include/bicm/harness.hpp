#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bicm/capacity.hpp"
#include "bicm/channel.hpp"
#include "bicm/fec.hpp"
#include "bicm/modem.hpp"

namespace bicm {

/// Frame layout and receiver settings for BER simulation.
struct FrameConfig {
    int m = 100;          // data subcarriers
    int tau = 100;        // OFDM symbols per frame
    int n_pilots = 2;     // pilot OFDM symbols per frame
    double channel_var = 1.0;
    double symbol_energy = 1.0;
    int demap_iterations = 1;
    bool max_log = false;
    unsigned threads = 1;
    ConvCode code = ConvCode::standard();

    static constexpr int kBitsPerSymbol = QamConstellation::kBitsPerSymbol;

    double code_rate() const { return 1.0 / code.num_outputs(); }
    /// tau * M * B coded bits per frame.
    std::size_t coded_bits() const;
    /// Coded bits / n_outputs - tail; the coded frame is filled exactly.
    std::size_t info_bits() const;
    void validate() const;
};

/// Per point: stop once max_bits information bits or max_errors bit errors are reached.
struct StopRule {
    std::uint64_t max_bits = 2'000'000;
    std::uint64_t max_errors = 200;
};

struct BerPoint {
    double ebn0_db = 0.0;
    int n_pilots = 0;
    MetricMode decoder = MetricMode::perfect;
    std::uint64_t n_bits = 0;
    std::uint64_t n_errors = 0;
    std::uint64_t n_frames = 0;

    double ber() const { return n_bits ? static_cast<double>(n_errors) / static_cast<double>(n_bits) : 0.0; }
    /// Binomial standard deviation of the BER estimate.
    double ber_sigma() const;
};

/// Per-frame counts for each decoder in the order requested.
struct FrameOutcome {
    std::vector<std::uint64_t> errors;
    std::uint64_t info_bits = 0;
};

/// Simulates frame `frame_index` once and decodes it with every mode. All
/// random quantities come from streams derived from (run_seed, frame_index),
/// so the result does not depend on which other frames or modes run.
/// With `imported` set, frame i uses imported[i] instead of a Rayleigh draw.
FrameOutcome simulate_frame(const FrameConfig& cfg, const LinkBudget& lb, std::span<const MetricMode> modes,
                            std::uint64_t run_seed, std::uint64_t frame_index,
                            const std::vector<FadeVector>* imported = nullptr);

/// BER of several decoders at one operating point on shared frames.
std::vector<BerPoint> run_ber_points(const FrameConfig& cfg, const LinkBudget& lb, std::span<const MetricMode> modes,
                                     const StopRule& stop, std::uint64_t run_seed,
                                     const std::vector<FadeVector>* imported = nullptr);

BerPoint run_ber_point(const FrameConfig& cfg, const LinkBudget& lb, MetricMode mode, const StopRule& stop,
                       std::uint64_t run_seed, const std::vector<FadeVector>* imported = nullptr);

/// Provenance written at the top of every output file as '#' lines.
struct RunManifest {
    std::uint64_t run_seed = 0;
    std::string version;
    std::vector<std::pair<std::string, std::string>> config;
    std::string created;  // wall-clock stamp; omitted when empty

    void write(std::ostream& out) const;
};

std::string version_tag();

struct BerSweep {
    std::vector<double> ebn0_db;
    std::vector<int> pilots;
    std::vector<MetricMode> decoders;
    StopRule stop;
};

/// One point per (Eb/N0, N, decoder), written as CSV with columns
/// ebn0_db,N,decoder,n_bits,n_errors,ber. Returns the points.
std::vector<BerPoint> run_ber_sweep(const FrameConfig& cfg, const BerSweep& sweep, std::uint64_t run_seed,
                                    const RunManifest& manifest, std::ostream& csv,
                                    const std::vector<FadeVector>* imported = nullptr);

struct OutageSweep {
    std::vector<double> snr_db;
    int n_pilots = 1;
    int m = 16;
    double prior_var = 1.0;
    std::vector<MetricMode> decoders;
    OutageOptions opt;
};

struct OutagePoint {
    double snr_db = 0.0;
    OutageResult result;
};

/// Columns snr_db,decoder,mean_rate_bits,std_err,n_outer,n_inner,rejects.
std::vector<OutagePoint> run_outage_sweep(const OutageSweep& sweep, const RunManifest& manifest, std::ostream& csv);

/// Everything a run needs, assembled from a key=value file and flag overrides.
struct SimConfig {
    FrameConfig frame;
    BerSweep ber{{}, {2}, {kAllModes.begin(), kAllModes.end()}, {}};
    OutageSweep outage{{}, 1, 16, 1.0, {kAllModes.begin(), kAllModes.end()}, {}};
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> channels;

    /// Ordered key/value snapshot for the run manifest.
    std::vector<std::pair<std::string, std::string>> snapshot() const;
};

/// Accepted keys: M, tau, N, seed, ebn0, snr, decoders, gamma, n_outer, n_inner,
/// max_bits, max_errors, iters, threads, channel_var, symbol_energy, max_log, channels.
/// Applies one setting; `where` (e.g. "line 3" or "flag --seed") prefixes errors.
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value, const std::string& where);

/// Reads key=value lines ('#' comments) on top of the current values.
/// Unknown keys, type mismatches and constraint violations throw ConfigError
/// naming the key and line.
void read_config(SimConfig& cfg, std::istream& in);
SimConfig parse_config(const std::filesystem::path& path);

/// Range grammar: "START:STEP:STOP" (inclusive), a single number, or a comma list.
std::vector<double> parse_range(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<MetricMode> parse_decoders(const std::string& text);

/// Eb/N0 at which BER crosses `target`, by linear interpolation of log10 BER
/// between the first bracketing pair. Points must share one decoder and be
/// sorted by Eb/N0. nullopt when the curve never crosses.
std::optional<double> ebn0_at_ber(std::span<const BerPoint> curve, double target);

/// SNR at which a (snr, rate) curve reaches `target` rate, linear in rate.
std::optional<double> snr_at_rate(std::span<const double> snr_db, std::span<const double> rate, double target);

}  // namespace bicm
