#ifndef FEC_CODEC_HPP
#define FEC_CODEC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fec/errors.hpp"

namespace fec {

// State-transition table of a binary convolutional code. States are the
// shift-register contents with the most recent bit in the MSB position.
// Generators are octal tap vectors where the most significant tap multiplies
// the current input bit (802.11 / 3GPP polynomial convention, so 133 octal
// reads as 1+D^2+D^3+D^5+D^6).
//
// Feed-forward codes emit one bit per generator. Recursive codes (feedback
// taps present) emit the systematic bit followed by one parity bit per
// generator, which is the branch labelling the SISO decoders expect.
class Trellis {
  public:
    int constraint_length = 0;        // memory + 1
    int num_states = 0;               // 2^(constraint_length-1)
    int num_outputs = 0;              // bits per branch
    std::vector<uint32_t> generators; // parsed tap masks
    std::optional<uint32_t> feedback; // recursive systematic form when set

    int next_state(int state, int input) const { return next_[2 * state + input]; }
    // packed branch bits, MSB-first over num_outputs
    uint32_t branch_output(int state, int input) const { return out_[2 * state + input]; }
    int branch_bit(int state, int input, int pos) const {
        return (out_[2 * state + input] >> (num_outputs - 1 - pos)) & 1u;
    }
    int memory() const { return constraint_length - 1; }

    // For recursive codes, the actual register-input bit after feedback.
    // Needed to drive the encoder to the zero state on termination.
    int feedback_bit(int state, int input) const;

    std::vector<int> next_;      // [2*state + input] -> state
    std::vector<uint32_t> out_;  // [2*state + input] -> packed outputs
};

uint32_t parse_octal(const std::string& s);

Trellis build_trellis(const std::vector<uint32_t>& generators, int constraint_length,
                      std::optional<uint32_t> feedback = std::nullopt);

// Encoded parity streams plus the termination tail, if any.
struct CodewordStreams {
    std::vector<uint8_t> systematic;
    std::vector<uint8_t> parity0;
    std::vector<uint8_t> parity1;
    std::vector<uint8_t> tail; // serialized termination bits, empty if unterminated
};

// Feed-forward convolutional encoder. Returns the two output streams
// (z first, z' second in serialized order). terminate=true appends
// `memory` zero input bits, so each stream grows by `memory` positions
// and the final state is zero.
std::pair<std::vector<uint8_t>, std::vector<uint8_t>>
conv_encode(const std::vector<uint8_t>& bits, const Trellis& trellis, bool terminate);

// Quadratic permutation polynomial interleaver pi(i) = (f1*i + f2*i^2) mod K.
class QppInterleaver {
  public:
    int K = 0;
    long long f1 = 0, f2 = 0;
    std::vector<int> table;   // pi
    std::vector<int> inverse; // pi^-1

    // out[i] = in[pi(i)]
    template <typename T>
    std::vector<T> interleave(const std::vector<T>& in) const {
        std::vector<T> out(in.size());
        for (int i = 0; i < K; ++i) out[i] = in[table[i]];
        return out;
    }
    // inverse mapping: deinterleave(interleave(x)) == x
    template <typename T>
    std::vector<T> deinterleave(const std::vector<T>& in) const {
        std::vector<T> out(in.size());
        for (int i = 0; i < K; ++i) out[table[i]] = in[i];
        return out;
    }
};

QppInterleaver qpp_build(int K, long long f1, long long f2);

// Parallel concatenated encoder: systematic bits, parity from the recursive
// constituent on the input, parity from the same constituent on the
// interleaved input. terminate=true appends the 2*3*memory tail bits
// (sys+parity pairs per constituent) into streams.tail.
CodewordStreams turbo_encode(const std::vector<uint8_t>& bits, const QppInterleaver& interleaver,
                             const Trellis& constituent, bool terminate);

// Named trellis presets used throughout the harness.
Trellis wifi_cc_k7();
Trellis lte_turbo_constituent();

} // namespace fec

#endif
