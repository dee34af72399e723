#ifndef FEC_COSTMODEL_HPP
#define FEC_COSTMODEL_HPP

#include <string>
#include <vector>

#include "fec/cne.hpp"

namespace fec {

struct CostTerm {
    std::string name;
    long long value = 0;
};

// Complexity and latency summary for one decoder configuration.
//
// Two parameter accountings are reported. tied_parameters counts each
// distinct tensor once and equals the checkpoint's serialized element total.
// trainable_parameters follows the convention of the published complexity
// table, which counts the unrolled turbo decoder: one LSTM stack per
// iteration and one embedding/output head set per engine call. For the
// convolutional decoder the two numbers coincide.
//
// macs_per_decoded_bit counts multiply-accumulates of one forward pass per
// trellis step (turbo: times 2*n_iter engine calls). table_macs_per_decoded_bit
// additionally applies the published table's measurement convention for the
// turbo row (totals taken at sequence length 120 and divided by 100); for the
// convolutional decoder it equals macs_per_decoded_bit.
struct CostReport {
    std::string code;
    CneConfig cfg;
    long long trainable_parameters = 0;
    long long tied_parameters = 0;
    long long macs_per_decoded_bit = 0;
    long long table_macs_per_decoded_bit = 0;
    std::vector<CostTerm> parameter_terms;
    std::vector<CostTerm> mac_terms;
    std::vector<CostTerm> classical_ops; // evaluated classical op-count formulas
    std::vector<std::string> latency_terms;

    std::string to_text() const;
};

struct CostModelInput {
    std::string code = "conv"; // conv | turbo
    CneConfig cfg;
    int k = 120;      // block length for the classical op counts
    int bcjr_iters = 3;
};

CostReport cost_model(const CostModelInput& in);

} // namespace fec

#endif
