#include "bicm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bicm/errors.hpp"
#include "bicm/parallel.hpp"

#ifndef BICM_VERSION
#define BICM_VERSION "dev"
#endif

namespace bicm {

std::string version_tag() { return BICM_VERSION; }

std::size_t FrameConfig::coded_bits() const {
    return static_cast<std::size_t>(tau) * static_cast<std::size_t>(m) * kBitsPerSymbol;
}

std::size_t FrameConfig::info_bits() const {
    const auto n_out = static_cast<std::size_t>(code.num_outputs());
    return coded_bits() / n_out - static_cast<std::size_t>(code.memory());
}

void FrameConfig::validate() const {
    if (m < 1) throw ConfigError("M must be at least 1");
    if (tau < 1) throw ConfigError("tau must be at least 1");
    if (n_pilots < 1) throw ConfigError("N must be at least 1");
    if (demap_iterations < 1) throw ConfigError("iters must be at least 1");
    if (!(channel_var > 0.0)) throw ConfigError("channel_var must be positive");
    if (!(symbol_energy > 0.0)) throw ConfigError("symbol_energy must be positive");
    const auto n_out = static_cast<std::size_t>(code.num_outputs());
    if (coded_bits() % n_out != 0)
        throw ConfigError("tau * M * B must be a multiple of the number of code outputs");
    if (coded_bits() / n_out <= static_cast<std::size_t>(code.memory()))
        throw ConfigError("frame too short to hold any information bits after the tail");
}

double BerPoint::ber_sigma() const {
    if (n_bits == 0) return 0.0;
    const double p = ber();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_bits));
}

FrameOutcome simulate_frame(const FrameConfig& cfg, const LinkBudget& lb, std::span<const MetricMode> modes,
                            std::uint64_t run_seed, std::uint64_t frame_index,
                            const std::vector<FadeVector>* imported) {
    FadeVector fv;
    if (imported) {
        if (frame_index >= imported->size())
            throw ConfigError("imported channel file exhausted after " + std::to_string(imported->size()) +
                              " frames");
        fv = (*imported)[frame_index];
        if (fv.size() != static_cast<std::size_t>(cfg.m))
            throw ConfigError("imported fade vector has " + std::to_string(fv.size()) + " subcarriers, expected " +
                              std::to_string(cfg.m));
        fv.var = cfg.channel_var;
    } else {
        RngStream fade_rng(run_seed, frame_index, StreamTag::fade);
        fv = draw_rayleigh(cfg.m, cfg.channel_var, fade_rng);
    }

    RngStream pilot_rng(run_seed, frame_index, StreamTag::pilot_noise);
    const ChannelEstimate ce = estimate_channel(fv, cfg.n_pilots, lb.pilot_energy, lb.noise_var, pilot_rng);

    const std::size_t n_info = cfg.info_bits();
    RngStream payload_rng(run_seed, frame_index, StreamTag::payload);
    Bits info(n_info);
    for (auto& b : info) b = static_cast<std::uint8_t>(payload_rng.bit());

    const Interleaver pi = Interleaver::for_frame(cfg.coded_bits(), run_seed, frame_index);
    const QamConstellation qam(lb.symbol_energy);
    const auto symbols = qam_map(interleave(conv_encode(info, cfg.code), pi), qam);

    RngStream noise_rng(run_seed, frame_index, StreamTag::data_noise);
    const auto y = apply_channel_frame(symbols, fv, lb.noise_var, noise_rng);

    FrameOutcome out;
    out.info_bits = n_info;
    out.errors.reserve(modes.size());
    const DemapOptions dopt{cfg.max_log};
    for (MetricMode mode : modes) {
        const std::span<const cdouble> h = mode == MetricMode::perfect ? std::span<const cdouble>(fv.h)
                                                                      : std::span<const cdouble>(ce.h_hat);
        std::optional<LlrFrame> apriori;
        Bits decided;
        for (int it = 1; it <= cfg.demap_iterations; ++it) {
            const auto llr = apriori ? demap(y, h, qam, mode, ce.pp, std::span<const double>(*apriori), dopt)
                                     : demap(y, h, qam, mode, ce.pp, std::nullopt, dopt);
            const LlrFrame coded = deinterleave_llrs(llr, pi);
            if (it == cfg.demap_iterations) {
                decided = trellis_decode(coded, cfg.code).info_bits;
            } else {
                const auto res = trellis_decode(coded, cfg.code, std::nullopt, true);
                apriori = interleave_llrs(*res.extrinsic, pi);
            }
        }
        std::uint64_t errs = 0;
        for (std::size_t i = 0; i < n_info; ++i) errs += decided[i] != info[i];
        out.errors.push_back(errs);
    }
    return out;
}

std::vector<BerPoint> run_ber_points(const FrameConfig& cfg, const LinkBudget& lb, std::span<const MetricMode> modes,
                                     const StopRule& stop, std::uint64_t run_seed,
                                     const std::vector<FadeVector>* imported) {
    cfg.validate();
    lb.validate();
    if (stop.max_bits == 0) throw ConfigError("max_bits must be positive");
    std::vector<BerPoint> points(modes.size());
    std::vector<bool> done(modes.size(), false);
    for (std::size_t q = 0; q < modes.size(); ++q) {
        points[q].ebn0_db = lb.ebn0_db;
        points[q].n_pilots = cfg.n_pilots;
        points[q].decoder = modes[q];
    }

    const std::size_t batch = std::max<std::size_t>(1, cfg.threads) * 2;
    std::uint64_t frame = 0;
    while (std::find(done.begin(), done.end(), false) != done.end()) {
        std::vector<MetricMode> active;
        std::vector<std::size_t> slot;
        for (std::size_t q = 0; q < modes.size(); ++q)
            if (!done[q]) {
                active.push_back(modes[q]);
                slot.push_back(q);
            }
        std::vector<FrameOutcome> outcomes(batch);
        parallel_for(batch, cfg.threads, [&](std::size_t i) {
            outcomes[i] = simulate_frame(cfg, lb, active, run_seed, frame + i, imported);
        });
        // frames are consumed strictly in index order, so results do not depend on batch size
        for (const FrameOutcome& fo : outcomes) {
            for (std::size_t a = 0; a < active.size(); ++a) {
                const std::size_t q = slot[a];
                if (done[q]) continue;
                BerPoint& p = points[q];
                p.n_bits += fo.info_bits;
                p.n_errors += fo.errors[a];
                ++p.n_frames;
                if (p.n_bits >= stop.max_bits || p.n_errors >= stop.max_errors) done[q] = true;
            }
        }
        frame += batch;
    }
    return points;
}

BerPoint run_ber_point(const FrameConfig& cfg, const LinkBudget& lb, MetricMode mode, const StopRule& stop,
                       std::uint64_t run_seed, const std::vector<FadeVector>* imported) {
    const MetricMode one[] = {mode};
    return run_ber_points(cfg, lb, one, stop, run_seed, imported).front();
}

void RunManifest::write(std::ostream& out) const {
    out << "# run_seed: " << run_seed << '\n';
    out << "# version: " << version << '\n';
    if (!created.empty()) out << "# created: " << created << '\n';
    for (const auto& [k, v] : config) out << "# " << k << ": " << v << '\n';
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(12) << v;
    return ss.str();
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
    return s;
}

}  // namespace

std::vector<BerPoint> run_ber_sweep(const FrameConfig& cfg, const BerSweep& sweep, std::uint64_t run_seed,
                                    const RunManifest& manifest, std::ostream& csv,
                                    const std::vector<FadeVector>* imported) {
    manifest.write(csv);
    csv << "ebn0_db,N,decoder,n_bits,n_errors,ber\n";
    std::vector<BerPoint> all;
    if (sweep.decoders.empty()) return all;
    for (int n : sweep.pilots) {
        FrameConfig c = cfg;
        c.n_pilots = n;
        for (double eb : sweep.ebn0_db) {
            const LinkBudget lb = LinkBudget::from_ebn0(eb, c.code_rate(), FrameConfig::kBitsPerSymbol, c.symbol_energy);
            for (const BerPoint& p : run_ber_points(c, lb, sweep.decoders, sweep.stop, run_seed, imported)) {
                csv << fmt_double(p.ebn0_db) << ',' << p.n_pilots << ',' << to_string(p.decoder) << ',' << p.n_bits
                    << ',' << p.n_errors << ',' << std::setprecision(12) << p.ber() << '\n';
                all.push_back(p);
            }
        }
    }
    csv.flush();
    return all;
}

std::vector<OutagePoint> run_outage_sweep(const OutageSweep& sweep, const RunManifest& manifest, std::ostream& csv) {
    manifest.write(csv);
    csv << "snr_db,decoder,mean_rate_bits,std_err,n_outer,n_inner,rejects\n";
    std::vector<OutagePoint> all;
    if (sweep.decoders.empty()) return all;
    for (double snr : sweep.snr_db) {
        const RateParams rp = RateParams::from_snr(snr, sweep.n_pilots, sweep.m, sweep.prior_var);
        for (OutageResult& r : expected_outage_rates(sweep.decoders, rp, sweep.opt)) {
            csv << fmt_double(snr) << ',' << to_string(r.decoder) << ',' << fmt_double(r.rate_bits) << ','
                << fmt_double(r.std_err) << ',' << r.n_outer << ',' << r.n_inner << ',' << r.rejects << '\n';
            all.push_back({snr, std::move(r)});
        }
    }
    csv.flush();
    return all;
}

std::vector<std::pair<std::string, std::string>> SimConfig::snapshot() const {
    std::vector<std::pair<std::string, std::string>> s;
    auto decoders = [](const std::vector<MetricMode>& d) {
        std::string out;
        for (std::size_t i = 0; i < d.size(); ++i) out += (i ? "," : "") + std::string(to_string(d[i]));
        return out;
    };
    std::string pilots;
    for (std::size_t i = 0; i < ber.pilots.size(); ++i) pilots += (i ? "," : "") + std::to_string(ber.pilots[i]);
    s.emplace_back("M", std::to_string(frame.m));
    s.emplace_back("tau", std::to_string(frame.tau));
    s.emplace_back("N", pilots);
    s.emplace_back("info_bits_per_frame", std::to_string(frame.info_bits()));
    s.emplace_back("code", "K=" + std::to_string(frame.code.constraint_length()) + " (5,7) octal, zero tail");
    s.emplace_back("channel_var", fmt_double(frame.channel_var));
    s.emplace_back("symbol_energy", fmt_double(frame.symbol_energy));
    s.emplace_back("iters", std::to_string(frame.demap_iterations));
    s.emplace_back("max_log", frame.max_log ? "true" : "false");
    s.emplace_back("ebn0", join_doubles(ber.ebn0_db));
    s.emplace_back("decoders", decoders(ber.decoders));
    s.emplace_back("max_bits", std::to_string(ber.stop.max_bits));
    s.emplace_back("max_errors", std::to_string(ber.stop.max_errors));
    s.emplace_back("snr", join_doubles(outage.snr_db));
    s.emplace_back("gamma", fmt_double(outage.opt.gamma));
    s.emplace_back("n_outer", std::to_string(outage.opt.n_outer));
    s.emplace_back("n_inner", std::to_string(outage.opt.n_inner));
    s.emplace_back("channels", channels ? channels->string() : "rayleigh");
    return s;
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    T v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError(what + ": '" + text + "' is not a valid number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError("empty range");
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) throw ConfigError("range '" + text + "' must be START:STEP:STOP");
        const double start = parse_number<double>(parts[0], "range start");
        const double step = parse_number<double>(parts[1], "range step");
        const double stop = parse_number<double>(parts[2], "range stop");
        if (step == 0.0 || (stop - start) / step < -1e-9)
            throw ConfigError("range '" + text + "' has a zero or wrong-signed step");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
        return out;
    }
    std::vector<double> out;
    for (const auto& p : split(t, ',')) out.push_back(parse_number<double>(p, "list value"));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& p : split(trim(text), ',')) out.push_back(parse_number<int>(p, "integer list value"));
    if (out.empty()) throw ConfigError("empty integer list");
    return out;
}

std::vector<MetricMode> parse_decoders(const std::string& text) {
    std::vector<MetricMode> out;
    const std::string t = trim(text);
    if (t.empty() || t == "none") return out;
    for (const auto& p : split(t, ',')) out.push_back(metric_mode_from_string(p));
    return out;
}

void apply_setting(SimConfig& cfg, const std::string& raw_key, const std::string& value, const std::string& where) {
    const std::string key = trim(raw_key);
    auto fail = [&](const std::string& why) { throw ConfigError(where + ": " + key + ": " + why); };
    auto positive_int = [&](int minimum) {
        int v = 0;
        try {
            v = parse_number<int>(value, "value");
        } catch (const ConfigError& e) {
            fail(e.what());
        }
        if (v < minimum) fail("must be at least " + std::to_string(minimum));
        return v;
    };
    auto u64 = [&]() {
        try {
            return parse_number<std::uint64_t>(value, "value");
        } catch (const ConfigError& e) {
            fail(e.what());
        }
        return std::uint64_t{0};
    };
    auto real = [&]() {
        try {
            return parse_number<double>(value, "value");
        } catch (const ConfigError& e) {
            fail(e.what());
        }
        return 0.0;
    };

    try {
        if (key == "M") {
            cfg.frame.m = positive_int(1);
            cfg.outage.m = cfg.frame.m;
        } else if (key == "tau") {
            cfg.frame.tau = positive_int(1);
        } else if (key == "N") {
            cfg.ber.pilots = parse_int_list(value);
            for (int n : cfg.ber.pilots)
                if (n < 1) fail("pilot counts must be at least 1");
            cfg.frame.n_pilots = cfg.ber.pilots.front();
            cfg.outage.n_pilots = cfg.ber.pilots.front();
        } else if (key == "seed") {
            cfg.seed = u64();
            cfg.outage.opt.run_seed = cfg.seed;
        } else if (key == "ebn0") {
            cfg.ber.ebn0_db = parse_range(value);
        } else if (key == "snr") {
            cfg.outage.snr_db = parse_range(value);
        } else if (key == "decoders") {
            cfg.ber.decoders = parse_decoders(value);
            cfg.outage.decoders = cfg.ber.decoders;
        } else if (key == "gamma") {
            const double g = real();
            if (!(g > 0.0 && g < 1.0)) fail("must lie in (0, 1)");
            cfg.outage.opt.gamma = g;
        } else if (key == "n_outer") {
            cfg.outage.opt.n_outer = positive_int(1);
        } else if (key == "n_inner") {
            cfg.outage.opt.n_inner = positive_int(100);
        } else if (key == "max_bits") {
            cfg.ber.stop.max_bits = u64();
            if (cfg.ber.stop.max_bits == 0) fail("must be positive");
        } else if (key == "max_errors") {
            cfg.ber.stop.max_errors = u64();
        } else if (key == "iters") {
            cfg.frame.demap_iterations = positive_int(1);
        } else if (key == "threads") {
            cfg.frame.threads = static_cast<unsigned>(positive_int(1));
            cfg.outage.opt.threads = cfg.frame.threads;
        } else if (key == "channel_var") {
            const double v = real();
            if (!(v > 0.0)) fail("must be positive");
            cfg.frame.channel_var = v;
            cfg.outage.prior_var = v;
        } else if (key == "symbol_energy") {
            const double v = real();
            if (!(v > 0.0)) fail("must be positive");
            cfg.frame.symbol_energy = v;
        } else if (key == "max_log") {
            const std::string v = trim(value);
            if (v == "true" || v == "1") cfg.frame.max_log = true;
            else if (v == "false" || v == "0") cfg.frame.max_log = false;
            else fail("expected true or false");
        } else if (key == "channels") {
            cfg.channels = std::filesystem::path(trim(value));
        } else {
            fail("unknown key");
        }
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(where, 0) == 0) throw;
        throw ConfigError(where + ": " + key + ": " + msg);
    }
}

void read_config(SimConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1), where);
    }
    cfg.frame.validate();
}

SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    SimConfig cfg;
    read_config(cfg, in);
    return cfg;
}

std::optional<double> ebn0_at_ber(std::span<const BerPoint> curve, double target) {
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const double b0 = curve[i].ber(), b1 = curve[i + 1].ber();
        if (b0 >= target && b1 < target) {
            const double x0 = curve[i].ebn0_db, x1 = curve[i + 1].ebn0_db;
            if (b1 <= 0.0) {
                // zero-error point: interpolate toward a one-error floor
                const double floor = 1.0 / static_cast<double>(std::max<std::uint64_t>(curve[i + 1].n_bits, 1));
                const double l1 = std::log10(std::min(floor, target));
                return x0 + (std::log10(target) - std::log10(b0)) / (l1 - std::log10(b0)) * (x1 - x0);
            }
            const double l0 = std::log10(b0), l1 = std::log10(b1);
            return x0 + (std::log10(target) - l0) / (l1 - l0) * (x1 - x0);
        }
    }
    return std::nullopt;
}

std::optional<double> snr_at_rate(std::span<const double> snr_db, std::span<const double> rate, double target) {
    for (std::size_t i = 0; i + 1 < std::min(snr_db.size(), rate.size()); ++i) {
        if (rate[i] <= target && rate[i + 1] > target)
            return snr_db[i] + (target - rate[i]) / (rate[i + 1] - rate[i]) * (snr_db[i + 1] - snr_db[i]);
    }
    return std::nullopt;
}

}  // namespace bicm
