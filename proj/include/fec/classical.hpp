#ifndef FEC_CLASSICAL_HPP
#define FEC_CLASSICAL_HPP

#include <cstdint>
#include <vector>

#include "fec/codec.hpp"
#include "fec/ratematch.hpp"

namespace fec {

// Soft-input Viterbi over the correlation metric sum(llr * (2c - 1)).
// Punctured positions carry LLR 0 and are metric-neutral. The encoder is
// known to start in state zero; with terminated=true the traceback also
// starts from state zero. traceback_depth selects continuous (windowed)
// operation: once the window fills, the oldest decision is committed from
// the current best state each step.
//
// Returns one decision per trellis step (the caller drops tail steps).
std::vector<uint8_t> viterbi_decode(const ConvLlrPlane& plane, const Trellis& trellis,
                                    int traceback_depth, bool terminated);

enum class SisoTermination { Unterminated, Terminated };

struct SisoBeliefs {
    std::vector<double> llr_app; // a-posteriori, positive favors 1
    std::vector<double> llr_ext; // llr_app - llr_prior - llr_sys
};

// Max-log-MAP soft-in soft-out pass over a recursive constituent trellis.
// Branch metric 0.5*(2u-1)*(llr_sys + llr_prior) + 0.5*(2p-1)*llr_par, so
// the a-posteriori decomposes exactly as app = sys + prior + ext. No
// extrinsic scaling is applied. Forward recursion starts peaked at state
// zero (the encoder always starts there); the backward boundary is peaked
// at state zero when terminated, uniform otherwise.
SisoBeliefs maxlog_siso(const std::vector<double>& llr_sys, const std::vector<double>& llr_par,
                        const std::vector<double>& llr_prior, const Trellis& trellis,
                        SisoTermination termination);

struct TurboDecodeResult {
    std::vector<uint8_t> bits;
    std::vector<std::vector<double>> llr_per_iteration; // deinterleaved a-posteriori
};

// Classical iterative decoder: two max-log SISO passes per iteration with
// extrinsic exchange through the interleaver. Decision from the sign of the
// final deinterleaved a-posteriori LLR of the second constituent.
TurboDecodeResult turbo_decode_classical(const std::vector<double>& llr_s,
                                         const std::vector<double>& llr_z,
                                         const std::vector<double>& llr_zp,
                                         const QppInterleaver& interleaver, const Trellis& constituent,
                                         int n_iter,
                                         SisoTermination termination = SisoTermination::Unterminated);

} // namespace fec

#endif
