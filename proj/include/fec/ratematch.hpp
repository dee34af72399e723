#ifndef FEC_RATEMATCH_HPP
#define FEC_RATEMATCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fec/codec.hpp"
#include "fec/errors.hpp"

namespace fec {

// Periodic bit-stealing mask for the rate-1/2 convolutional code.
// keep[stream][pos % period] == 1 means the bit is transmitted.
struct PuncturingPattern {
    std::string name;
    int rate_num = 1; // declared rate numerator
    int rate_den = 2;
    int period = 1;
    std::vector<std::vector<uint8_t>> keep; // [stream][period]

    int ones() const {
        int n = 0;
        for (const auto& row : keep)
            for (uint8_t b : row) n += b;
        return n;
    }
    // transmitted length for n_steps encoder steps
    int kept_count(int n_steps) const;
};

// Standard 802.11 patterns: "1/2", "2/3", "3/4", "5/6".
PuncturingPattern standard_pattern(const std::string& rate_name);

// De-rate-matched LLR plane for the convolutional code: per trellis step the
// (z, z') LLR pair plus the 0/1 puncture indicator (0 = punctured).
struct ConvLlrPlane {
    int steps = 0;
    std::vector<double> llr;        // steps x 2, row-major
    std::vector<uint8_t> indicator; // steps x 2
};

// Serialize-and-steal: z before z' per step, masked positions dropped.
std::vector<uint8_t> puncture_conv(const std::vector<uint8_t>& z, const std::vector<uint8_t>& zp,
                                   const PuncturingPattern& pattern);

// Same selection applied to an LLR-valued stream pair (used by tests and the
// channel pipeline to re-puncture).
std::vector<double> puncture_conv_llr(const std::vector<double>& z, const std::vector<double>& zp,
                                      const PuncturingPattern& pattern);

// Inverse: zeros and indicator 0 at stolen positions.
ConvLlrPlane derate_conv(const std::vector<double>& received, const PuncturingPattern& pattern,
                         int n_steps);

// LTE-style rate matching for the mother rate-1/3 turbo code: 32-column
// sub-block interleavers, circular buffer, redundancy version 0 only.
struct RateMatchPlan {
    int K = 0;
    int E = 0;
    int rows = 0;     // sub-block matrix rows
    int n_filler = 0; // leading dummy positions per stream
    int k0 = 0;       // circular-buffer read offset
    // for each transmitted position: source stream (0=systematic,1=parity0,
    // 2=parity1) and position within the stream
    std::vector<uint8_t> stream;
    std::vector<int> position;
};

struct TurboLlrs {
    std::vector<double> llr_s, llr_z, llr_zp;
    std::vector<uint8_t> p_s, p_z, p_zp;
};

RateMatchPlan turbo_rate_match_plan(int K, int E);

std::vector<uint8_t> turbo_rate_match(const CodewordStreams& streams, const RateMatchPlan& plan);

// Select LLR values for transmission order (channel pipeline helper).
std::vector<double> turbo_select_llr(const std::vector<double>& s, const std::vector<double>& z,
                                     const std::vector<double>& zp, const RateMatchPlan& plan);

// Inverse of the selection. Positions hit more than once (E > 3K) are
// combined by LLR summation; unselected positions get value 0, indicator 0.
TurboLlrs derate_turbo(const std::vector<double>& received, const RateMatchPlan& plan);

} // namespace fec

#endif
