// Command-line front end: BER sweeps, outage-rate sweeps, metric dumps and
// fade-vector export.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bicm/channel.hpp"
#include "bicm/errors.hpp"
#include "bicm/harness.hpp"
#include "bicm/modem.hpp"

namespace {

using bicm::cdouble;

struct RunFlags {
    std::optional<std::string> config, seed, ebn0, snr, pilots, decoders, channels, gamma, m, iters, tau, n_outer,
        n_inner, max_bits, max_errors, threads;
    std::optional<std::string> out, json;
    bool timestamp = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool ber) {
    cmd->add_option("--config", f.config, "key=value configuration file");
    cmd->add_option("--seed", f.seed, "64-bit run seed");
    cmd->add_option("--decoders", f.decoders, "comma list of perfect,mismatched,modified");
    cmd->add_option("--pilots", f.pilots, "pilot symbols per frame, N[,N...]");
    cmd->add_option("--m-subcarriers", f.m, "data subcarriers M");
    cmd->add_option("--threads", f.threads, "worker threads (results do not depend on it)");
    cmd->add_option("--out", f.out, "output CSV path (default stdout)");
    cmd->add_option("--json", f.json, "also write a JSON mirror to this path");
    cmd->add_flag("--timestamp", f.timestamp, "record wall-clock time in the manifest");
    if (ber) {
        cmd->add_option("--ebn0", f.ebn0, "Eb/N0 sweep in dB, START:STEP:STOP");
        cmd->add_option("--channels", f.channels, "import fade vectors instead of drawing Rayleigh");
        cmd->add_option("--iters", f.iters, "demapping passes (1 = non-iterative)");
        cmd->add_option("--tau", f.tau, "OFDM symbols per frame");
        cmd->add_option("--max-bits", f.max_bits, "information bits per point before stopping");
        cmd->add_option("--max-errors", f.max_errors, "bit errors per point before stopping");
    } else {
        cmd->add_option("--snr", f.snr, "SNR sweep in dB, START:STEP:STOP");
        cmd->add_option("--gamma", f.gamma, "outage probability");
        cmd->add_option("--n-outer", f.n_outer, "channel-estimate draws per SNR");
        cmd->add_option("--n-inner", f.n_inner, "posterior channel draws per estimate");
    }
}

bicm::SimConfig assemble(const RunFlags& f) {
    bicm::SimConfig cfg = f.config ? bicm::parse_config(*f.config) : bicm::SimConfig{};
    const std::pair<const std::optional<std::string>*, std::pair<const char*, const char*>> map[] = {
        {&f.seed, {"seed", "--seed"}},
        {&f.ebn0, {"ebn0", "--ebn0"}},
        {&f.snr, {"snr", "--snr"}},
        {&f.pilots, {"N", "--pilots"}},
        {&f.decoders, {"decoders", "--decoders"}},
        {&f.channels, {"channels", "--channels"}},
        {&f.gamma, {"gamma", "--gamma"}},
        {&f.m, {"M", "--m-subcarriers"}},
        {&f.iters, {"iters", "--iters"}},
        {&f.tau, {"tau", "--tau"}},
        {&f.n_outer, {"n_outer", "--n-outer"}},
        {&f.n_inner, {"n_inner", "--n-inner"}},
        {&f.max_bits, {"max_bits", "--max-bits"}},
        {&f.max_errors, {"max_errors", "--max-errors"}},
        {&f.threads, {"threads", "--threads"}},
    };
    for (const auto& [value, names] : map)
        if (*value) bicm::apply_setting(cfg, names.first, **value, std::string("flag ") + names.second);
    cfg.frame.validate();
    return cfg;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

bicm::RunManifest manifest_for(const bicm::SimConfig& cfg, const RunFlags& f) {
    bicm::RunManifest m;
    m.run_seed = cfg.seed;
    m.version = bicm::version_tag();
    m.config = cfg.snapshot();
    if (f.timestamp) m.created = utc_now();
    return m;
}

// Writes to --out when given, stdout otherwise.
struct Sink {
    std::unique_ptr<std::ofstream> file;
    std::ostream& stream;

    static Sink open(const std::optional<std::string>& path) {
        if (!path) return Sink{nullptr, std::cout};
        auto f = std::make_unique<std::ofstream>(*path);
        if (!*f) throw bicm::ConfigError("cannot write " + *path);
        std::ostream& s = *f;
        return Sink{std::move(f), s};
    }
};

nlohmann::json manifest_json(const bicm::RunManifest& m) {
    nlohmann::json j;
    j["run_seed"] = m.run_seed;
    j["version"] = m.version;
    if (!m.created.empty()) j["created"] = m.created;
    for (const auto& [k, v] : m.config) j["config"][k] = v;
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw bicm::ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
}

int run_ber(const RunFlags& f) {
    bicm::SimConfig cfg = assemble(f);
    if (cfg.ber.ebn0_db.empty()) throw bicm::ConfigError("no Eb/N0 points given (use --ebn0)");
    std::vector<bicm::FadeVector> imported;
    if (cfg.channels) {
        imported = bicm::import_fade_vectors(*cfg.channels, cfg.frame.m, cfg.frame.channel_var);
        if (imported.empty()) throw bicm::ConfigError("channel file " + cfg.channels->string() + " holds no vectors");
    }
    const auto manifest = manifest_for(cfg, f);
    Sink sink = Sink::open(f.out);
    const auto points = bicm::run_ber_sweep(cfg.frame, cfg.ber, cfg.seed, manifest, sink.stream,
                                            cfg.channels ? &imported : nullptr);
    if (f.json) {
        nlohmann::json j;
        j["manifest"] = manifest_json(manifest);
        j["points"] = nlohmann::json::array();
        for (const auto& p : points)
            j["points"].push_back({{"ebn0_db", p.ebn0_db}, {"N", p.n_pilots}, {"decoder", bicm::to_string(p.decoder)},
                                   {"n_bits", p.n_bits}, {"n_errors", p.n_errors}, {"ber", p.ber()}});
        write_json(*f.json, j);
    }
    return 0;
}

int run_outage(const RunFlags& f) {
    bicm::SimConfig cfg = assemble(f);
    if (cfg.outage.snr_db.empty()) throw bicm::ConfigError("no SNR points given (use --snr)");
    const auto manifest = manifest_for(cfg, f);
    Sink sink = Sink::open(f.out);
    const auto points = bicm::run_outage_sweep(cfg.outage, manifest, sink.stream);
    if (f.json) {
        nlohmann::json j;
        j["manifest"] = manifest_json(manifest);
        j["points"] = nlohmann::json::array();
        for (const auto& p : points)
            j["points"].push_back({{"snr_db", p.snr_db}, {"decoder", bicm::to_string(p.result.decoder)},
                                   {"mean_rate_bits", p.result.rate_bits}, {"std_err", p.result.std_err},
                                   {"n_outer", p.result.n_outer}, {"n_inner", p.result.n_inner},
                                   {"rejects", p.result.rejects}});
        write_json(*f.json, j);
    }
    return 0;
}

cdouble parse_complex(const std::string& text, const char* what) {
    const auto vals = bicm::parse_range(text);
    if (vals.size() != 2) throw bicm::ConfigError(std::string(what) + " must be given as RE,IM");
    return {vals[0], vals[1]};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BICM-OFDM decoding with imperfect channel estimates"};
    app.require_subcommand(1);

    RunFlags ber_flags, outage_flags;
    auto* ber = app.add_subcommand("ber", "BER sweep over Eb/N0, pilot counts and decoders");
    add_run_flags(ber, ber_flags, true);
    auto* outage = app.add_subcommand("outage", "expected outage-rate sweep over SNR");
    add_run_flags(outage, outage_flags, false);

    std::string y_text = "0,0", hhat_text = "1,0";
    double rho = 1.0, noise_var = 1.0, prior_var = 1.0, energy = 1.0;
    std::optional<std::string> table_out;
    auto* table = app.add_subcommand("metric-table", "decision metrics of all 16 symbols as CSV");
    table->add_option("--y", y_text, "received sample RE,IM")->required();
    table->add_option("--hhat", hhat_text, "channel estimate RE,IM")->required();
    table->add_option("--rho", rho, "posterior shrinkage rho in [0, 1]")->required();
    table->add_option("--noise-var", noise_var, "noise variance")->required();
    table->add_option("--prior-var", prior_var, "channel prior variance");
    table->add_option("--energy", energy, "symbol energy");
    table->add_option("--out", table_out, "output CSV path (default stdout)");

    int count = 100, m_export = 100;
    std::uint64_t export_seed = 1;
    double export_var = 1.0;
    std::string export_out;
    auto* exporter = app.add_subcommand("export-channels", "write Rayleigh fade vectors in the import format");
    exporter->add_option("--count", count, "number of realizations (frames)");
    exporter->add_option("--m-subcarriers", m_export, "subcarriers per realization");
    exporter->add_option("--seed", export_seed, "run seed; line i equals the fade of frame i");
    exporter->add_option("--channel-var", export_var, "Rayleigh variance");
    exporter->add_option("--out", export_out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*ber) return run_ber(ber_flags);
        if (*outage) return run_outage(outage_flags);
        if (*table) {
            if (!(rho >= 0.0 && rho <= 1.0)) throw bicm::ConfigError("--rho must lie in [0, 1]");
            if (rho == 0.0) throw bicm::ConfigError("--rho must be positive");
            const cdouble y = parse_complex(y_text, "--y");
            const cdouble hhat = parse_complex(hhat_text, "--hhat");
            bicm::PosteriorParams pp{rho, prior_var * (1.0 - rho) / rho, prior_var, noise_var};
            if (!(noise_var > 0.0) || !(prior_var > 0.0)) throw bicm::ConfigError("variances must be positive");
            const bicm::QamConstellation qam(energy);
            Sink sink = Sink::open(table_out);
            auto& os = sink.stream;
            os << std::setprecision(12) << "label,bits,s_re,s_im,d_euclidean,d_modified\n";
            for (unsigned s = 0; s < 16; ++s) {
                const cdouble pt = qam.point(s);
                os << s << ',';
                for (int l = 0; l < 4; ++l) os << bicm::QamConstellation::label_bit(s, l);
                os << ',' << pt.real() << ',' << pt.imag() << ','
                   << bicm::symbol_metric(y, pt, hhat, bicm::MetricMode::mismatched, pp) << ','
                   << bicm::symbol_metric(y, pt, hhat, bicm::MetricMode::modified, pp) << '\n';
            }
            return 0;
        }
        if (*exporter) {
            if (count < 0) throw bicm::ConfigError("--count must be non-negative");
            std::vector<bicm::FadeVector> vecs;
            vecs.reserve(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) {
                bicm::RngStream rng(export_seed, static_cast<std::uint64_t>(i), bicm::StreamTag::fade);
                vecs.push_back(bicm::draw_rayleigh(m_export, export_var, rng));
            }
            bicm::export_fade_vectors(export_out, vecs);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
