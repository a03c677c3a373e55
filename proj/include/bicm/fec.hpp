#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bicm {

using Bits = std::vector<std::uint8_t>;

/// LLR sign convention, shared by the demapper and the decoder:
/// llr = ln P(bit = 0) - ln P(bit = 1), so a positive value favors bit 0.
using LlrFrame = std::vector<double>;

inline constexpr double kLlrClamp = 50.0;

/// Feedforward convolutional code. Generators are given in octal-as-written
/// form (5 means binary 101); the most significant tap multiplies the current
/// input bit.
class ConvCode {
public:
    ConvCode(int constraint_length, std::vector<unsigned> generators);

    /// The rate-1/2, constraint-length-3 (5,7) code.
    static ConvCode standard() { return ConvCode(3, {05, 07}); }

    int constraint_length() const noexcept { return constraint_length_; }
    int memory() const noexcept { return constraint_length_ - 1; }
    int num_states() const noexcept { return 1 << memory(); }
    int num_outputs() const noexcept { return static_cast<int>(generators_.size()); }
    const std::vector<unsigned>& generators() const noexcept { return generators_; }

    /// Next state when `input` enters a register holding `state`
    /// (state bit memory-1 is the most recent input).
    int next_state(int state, int input) const noexcept {
        return ((input << memory()) | state) >> 1;
    }

    /// Coded output word for the transition; bit j (LSB first) is the output of generator j.
    unsigned output(int state, int input) const noexcept { return outputs_[state * 2 + input]; }

    /// Coded length for `info_len` information bits including the zero tail.
    std::size_t coded_length(std::size_t info_len) const noexcept {
        return static_cast<std::size_t>(num_outputs()) * (info_len + static_cast<std::size_t>(memory()));
    }

private:
    int constraint_length_;
    std::vector<unsigned> generators_;
    std::vector<unsigned> outputs_;
};

/// Zero-tailed encoding. Output per trellis step is c0 c1 ... in generator order.
Bits conv_encode(std::span<const std::uint8_t> info_bits, const ConvCode& code);

/// A fixed permutation of frame positions; interleave sends input[i] to output[perm[i]].
class Interleaver {
public:
    /// Fisher-Yates shuffle driven by RngStream(seed): for i = n-1 down to 1,
    /// swap perm[i] with perm[below(i + 1)].
    Interleaver(std::size_t length, std::uint64_t seed);

    static Interleaver identity(std::size_t length);

    /// Per-frame interleaver seeded from (run_seed, frame_index).
    static Interleaver for_frame(std::size_t length, std::uint64_t run_seed, std::uint64_t frame_index);

    std::size_t length() const noexcept { return perm_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::size_t>& permutation() const noexcept { return perm_; }

private:
    Interleaver() = default;
    std::vector<std::size_t> perm_;
    std::uint64_t seed_ = 0;
};

Bits interleave(std::span<const std::uint8_t> bits, const Interleaver& pi);
Bits deinterleave(std::span<const std::uint8_t> bits, const Interleaver& pi);
LlrFrame interleave_llrs(std::span<const double> llrs, const Interleaver& pi);
LlrFrame deinterleave_llrs(std::span<const double> llrs, const Interleaver& pi);

/// Clamp to [-kLlrClamp, kLlrClamp]; throws InputError on NaN or infinity.
LlrFrame clamp_llrs(std::span<const double> llrs, double limit = kLlrClamp);

struct DecodeResult {
    Bits info_bits;
    std::optional<LlrFrame> extrinsic;
};

/// Soft-input trellis decoding of a zero-tailed frame.
///
/// Without `want_extrinsic` this is a Viterbi search maximizing
/// sum_j (1 - 2 c_j) (llr_j + apriori_j); ties go to the predecessor whose
/// dropped bit is 0. With `want_extrinsic` the max-log BCJR recursion runs
/// instead and also returns a-posteriori - intrinsic - a-priori per coded bit.
///
/// Inputs are clamped to +-kLlrClamp; non-finite values throw InputError.
DecodeResult trellis_decode(std::span<const double> llrs, const ConvCode& code,
                            std::optional<std::span<const double>> apriori = std::nullopt,
                            bool want_extrinsic = false);

}  // namespace bicm
