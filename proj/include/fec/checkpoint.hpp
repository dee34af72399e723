#ifndef FEC_CHECKPOINT_HPP
#define FEC_CHECKPOINT_HPP

#include <memory>
#include <optional>
#include <string>

#include "fec/cne.hpp"
#include "fec/training.hpp"

namespace fec {

// Versioned binary checkpoint: magic + JSON preamble (model config and the
// named parameter manifest with shapes) followed by row-major float32 data,
// the batch-norm running statistics, and optionally the Adam moments.
struct CheckpointMeta {
    std::string code = "conv"; // conv | turbo
    CneConfig cfg;
    int epoch = 0;
    uint64_t master_seed = 0;
    double val_ber = 1.0;
    int train_k = 0;
    bool terminate = false;
    std::vector<std::string> rates;
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    std::unique_ptr<CneParams<float>> params;
    std::unique_ptr<AdamState<float>> adam;
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, CneParams<float>& params,
                     const AdamState<float>* adam = nullptr);

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace fec

#endif
