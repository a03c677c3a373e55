#include "bicm/fec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bicm/errors.hpp"
#include "bicm/rng.hpp"

namespace bicm {

ConvCode::ConvCode(int constraint_length, std::vector<unsigned> generators)
    : constraint_length_(constraint_length), generators_(std::move(generators)) {
    if (constraint_length_ < 2 || constraint_length_ > 16)
        throw ConfigError("constraint length must be in [2, 16]");
    if (generators_.size() < 2)
        throw ConfigError("a convolutional code needs at least two generators");
    for (unsigned g : generators_) {
        if (g == 0) throw ConfigError("generator polynomials must be nonzero");
        if (std::bit_width(g) > static_cast<unsigned>(constraint_length_))
            throw ConfigError("generator degree must be below the constraint length");
    }
    const int states = num_states();
    outputs_.resize(static_cast<std::size_t>(states) * 2);
    for (int s = 0; s < states; ++s) {
        for (int in = 0; in < 2; ++in) {
            const unsigned reg = (static_cast<unsigned>(in) << memory()) | static_cast<unsigned>(s);
            unsigned word = 0;
            for (std::size_t j = 0; j < generators_.size(); ++j)
                word |= static_cast<unsigned>(std::popcount(reg & generators_[j]) & 1) << j;
            outputs_[static_cast<std::size_t>(s) * 2 + static_cast<std::size_t>(in)] = word;
        }
    }
}

Bits conv_encode(std::span<const std::uint8_t> info_bits, const ConvCode& code) {
    const auto n_out = static_cast<std::size_t>(code.num_outputs());
    Bits out;
    out.reserve(code.coded_length(info_bits.size()));
    int state = 0;
    auto step = [&](int in) {
        const unsigned word = code.output(state, in);
        for (std::size_t j = 0; j < n_out; ++j) out.push_back(static_cast<std::uint8_t>((word >> j) & 1U));
        state = code.next_state(state, in);
    };
    for (auto b : info_bits) step(b & 1);
    for (int t = 0; t < code.memory(); ++t) step(0);
    return out;
}

Interleaver::Interleaver(std::size_t length, std::uint64_t seed) : perm_(length), seed_(seed) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    RngStream rng(seed);
    for (std::size_t i = length; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm_[i - 1], perm_[j]);
    }
}

Interleaver Interleaver::identity(std::size_t length) {
    Interleaver pi;
    pi.perm_.resize(length);
    std::iota(pi.perm_.begin(), pi.perm_.end(), std::size_t{0});
    return pi;
}

Interleaver Interleaver::for_frame(std::size_t length, std::uint64_t run_seed, std::uint64_t frame_index) {
    return Interleaver(length, derive_seed(run_seed, frame_index, StreamTag::interleaver));
}

namespace {

void check_length(std::size_t got, const Interleaver& pi) {
    if (got != pi.length())
        throw ConfigError("interleaver length " + std::to_string(pi.length()) +
                          " does not match frame length " + std::to_string(got));
}

template <typename T>
std::vector<T> permute(std::span<const T> in, const Interleaver& pi) {
    check_length(in.size(), pi);
    std::vector<T> out(in.size());
    const auto& p = pi.permutation();
    for (std::size_t i = 0; i < in.size(); ++i) out[p[i]] = in[i];
    return out;
}

template <typename T>
std::vector<T> unpermute(std::span<const T> in, const Interleaver& pi) {
    check_length(in.size(), pi);
    std::vector<T> out(in.size());
    const auto& p = pi.permutation();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[p[i]];
    return out;
}

}  // namespace

Bits interleave(std::span<const std::uint8_t> bits, const Interleaver& pi) { return permute(bits, pi); }
Bits deinterleave(std::span<const std::uint8_t> bits, const Interleaver& pi) { return unpermute(bits, pi); }
LlrFrame interleave_llrs(std::span<const double> llrs, const Interleaver& pi) { return permute(llrs, pi); }
LlrFrame deinterleave_llrs(std::span<const double> llrs, const Interleaver& pi) { return unpermute(llrs, pi); }

LlrFrame clamp_llrs(std::span<const double> llrs, double limit) {
    LlrFrame out(llrs.size());
    for (std::size_t i = 0; i < llrs.size(); ++i) {
        if (!std::isfinite(llrs[i]))
            throw InputError("non-finite llr at position " + std::to_string(i));
        out[i] = std::clamp(llrs[i], -limit, limit);
    }
    return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Trellis {
    const ConvCode& code;
    std::size_t steps;
    std::size_t n_out;
    LlrFrame soft;  // llr + apriori, clamped

    // Correlation gain of emitting `word` at step t.
    double gain(std::size_t t, unsigned word) const {
        double g = 0.0;
        for (std::size_t j = 0; j < n_out; ++j) {
            const double l = soft[t * n_out + j];
            g += ((word >> j) & 1U) ? -l : l;
        }
        return 0.5 * g;
    }
};

Trellis make_trellis(std::span<const double> llrs, const ConvCode& code,
                     std::optional<std::span<const double>> apriori) {
    const auto n_out = static_cast<std::size_t>(code.num_outputs());
    if (llrs.size() % n_out != 0 || llrs.size() / n_out < static_cast<std::size_t>(code.memory()))
        throw ConfigError("llr frame length " + std::to_string(llrs.size()) +
                          " is not a terminated frame for this code");
    LlrFrame soft = clamp_llrs(llrs);
    if (apriori) {
        if (apriori->size() != llrs.size())
            throw ConfigError("a-priori frame length does not match llr frame length");
        const LlrFrame a = clamp_llrs(*apriori);
        for (std::size_t i = 0; i < soft.size(); ++i) soft[i] += a[i];
    }
    return Trellis{code, llrs.size() / n_out, n_out, std::move(soft)};
}

Bits viterbi(const Trellis& tr) {
    const ConvCode& code = tr.code;
    const int states = code.num_states();
    const int mem = code.memory();
    const auto mask = states - 1;

    std::vector<double> metric(static_cast<std::size_t>(states), kNegInf), next(metric.size());
    metric[0] = 0.0;
    // survivor[t * states + s] = dropped (oldest) register bit of the chosen predecessor
    std::vector<std::uint8_t> survivor(tr.steps * static_cast<std::size_t>(states));

    for (std::size_t t = 0; t < tr.steps; ++t) {
        for (int s = 0; s < states; ++s) {
            const int in = s >> (mem - 1);
            double best = kNegInf;
            std::uint8_t pick = 0;
            for (int d = 0; d < 2; ++d) {
                const int prev = ((s << 1) | d) & mask;
                if (metric[static_cast<std::size_t>(prev)] == kNegInf) continue;
                const double m = metric[static_cast<std::size_t>(prev)] + tr.gain(t, code.output(prev, in));
                if (m > best) {  // strict: equal metrics keep d = 0
                    best = m;
                    pick = static_cast<std::uint8_t>(d);
                }
            }
            next[static_cast<std::size_t>(s)] = best;
            survivor[t * static_cast<std::size_t>(states) + static_cast<std::size_t>(s)] = pick;
        }
        metric.swap(next);
    }

    Bits inputs(tr.steps);
    int s = 0;
    for (std::size_t t = tr.steps; t-- > 0;) {
        inputs[t] = static_cast<std::uint8_t>(s >> (mem - 1));
        const int d = survivor[t * static_cast<std::size_t>(states) + static_cast<std::size_t>(s)];
        s = ((s << 1) | d) & mask;
    }
    inputs.resize(tr.steps - static_cast<std::size_t>(mem));
    return inputs;
}

DecodeResult max_log_bcjr(const Trellis& tr, std::span<const double> intrinsic,
                          std::optional<std::span<const double>> apriori) {
    const ConvCode& code = tr.code;
    const auto states = static_cast<std::size_t>(code.num_states());
    const std::size_t T = tr.steps;

    std::vector<double> alpha((T + 1) * states, kNegInf), beta((T + 1) * states, kNegInf);
    alpha[0] = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < states; ++s) {
            const double a = alpha[t * states + s];
            if (a == kNegInf) continue;
            for (int in = 0; in < 2; ++in) {
                const auto ns = static_cast<std::size_t>(code.next_state(static_cast<int>(s), in));
                const double m = a + tr.gain(t, code.output(static_cast<int>(s), in));
                double& dst = alpha[(t + 1) * states + ns];
                dst = std::max(dst, m);
            }
        }
    }
    beta[T * states + 0] = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t s = 0; s < states; ++s) {
            double best = kNegInf;
            for (int in = 0; in < 2; ++in) {
                const auto ns = static_cast<std::size_t>(code.next_state(static_cast<int>(s), in));
                const double b = beta[(t + 1) * states + ns];
                if (b == kNegInf) continue;
                best = std::max(best, b + tr.gain(t, code.output(static_cast<int>(s), in)));
            }
            beta[t * states + s] = best;
        }
    }

    const std::size_t n_out = tr.n_out;
    const std::size_t info_len = T - static_cast<std::size_t>(code.memory());
    DecodeResult res;
    res.info_bits.resize(info_len);
    LlrFrame ext(T * n_out);
    std::vector<double> best0(n_out), best1(n_out);
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(best0.begin(), best0.end(), kNegInf);
        std::fill(best1.begin(), best1.end(), kNegInf);
        double in0 = kNegInf, in1 = kNegInf;
        for (std::size_t s = 0; s < states; ++s) {
            const double a = alpha[t * states + s];
            if (a == kNegInf) continue;
            for (int in = 0; in < 2; ++in) {
                const auto ns = static_cast<std::size_t>(code.next_state(static_cast<int>(s), in));
                const double b = beta[(t + 1) * states + ns];
                if (b == kNegInf) continue;
                const unsigned word = code.output(static_cast<int>(s), in);
                const double m = a + tr.gain(t, word) + b;
                (in ? in1 : in0) = std::max(in ? in1 : in0, m);
                for (std::size_t j = 0; j < n_out; ++j) {
                    double& slot = ((word >> j) & 1U) ? best1[j] : best0[j];
                    slot = std::max(slot, m);
                }
            }
        }
        if (t < info_len) res.info_bits[t] = in1 > in0 ? 1 : 0;
        for (std::size_t j = 0; j < n_out; ++j) {
            const std::size_t i = t * n_out + j;
            double app = best0[j] - best1[j];
            if (!std::isfinite(app)) app = std::copysign(2.0 * kLlrClamp, app);
            double e = app - std::clamp(intrinsic[i], -kLlrClamp, kLlrClamp);
            if (apriori) e -= std::clamp((*apriori)[i], -kLlrClamp, kLlrClamp);
            ext[i] = e;
        }
    }
    res.extrinsic = std::move(ext);
    return res;
}

}  // namespace

DecodeResult trellis_decode(std::span<const double> llrs, const ConvCode& code,
                            std::optional<std::span<const double>> apriori, bool want_extrinsic) {
    const Trellis tr = make_trellis(llrs, code, apriori);
    if (want_extrinsic) return max_log_bcjr(tr, llrs, apriori);
    return DecodeResult{viterbi(tr), std::nullopt};
}

}  // namespace bicm
