#ifndef FEC_TRAINING_HPP
#define FEC_TRAINING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fec/channel.hpp"
#include "fec/classical.hpp"
#include "fec/cne.hpp"
#include "fec/codec.hpp"
#include "fec/ratematch.hpp"

namespace fec {

// Seed-stream domains. Training, validation, and test data never share a
// block seed because the domain tag enters the seed derivation.
enum SeedDomain : uint64_t {
    kSeedTrain = 0x7261696e01ULL,
    kSeedVal = 0x76616c0002ULL,
    kSeedTest = 0x7465737403ULL,
    kSeedSweep = 0x7377656570ULL,
    kSeedInit = 0x696e697400ULL,
};

// Balanced-BER training SNR: offset + 10*log10(2R). Rate 1/2 maps to the
// offset itself.
double bbt_snr(double rate, double offset_db);

// Cosine decay from lr_initial (epoch 0) to lr_final (last epoch).
double cosine_lr(int epoch, int total_epochs, double lr_initial, double lr_final);

// Reference binary cross-entropy in 64-bit, mean over bits (sigma(logit)
// against the target bit). For test comparison against the tape op.
double bce_loss_reference(const std::vector<double>& logits, const std::vector<uint8_t>& bits);

// Adam with bias correction.
template <typename T>
struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    std::vector<std::vector<T>> m, v;

    explicit AdamState(const std::vector<Parameter<T>*>& params) {
        m.reserve(params.size());
        v.reserve(params.size());
        for (auto* p : params) {
            m.emplace_back(p->size(), T(0));
            v.emplace_back(p->size(), T(0));
        }
    }

    void step(const std::vector<Parameter<T>*>& params, double lr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (size_t pi = 0; pi < params.size(); ++pi) {
            Parameter<T>& p = *params[pi];
            for (size_t i = 0; i < p.size(); ++i) {
                const double g = static_cast<double>(p.grad[i]);
                m[pi][i] = static_cast<T>(beta1 * m[pi][i] + (1.0 - beta1) * g);
                v[pi][i] = static_cast<T>(beta2 * v[pi][i] + (1.0 - beta2) * g * g);
                const double mhat = static_cast<double>(m[pi][i]) / bc1;
                const double vhat = static_cast<double>(v[pi][i]) / bc2;
                p.value[i] = static_cast<T>(p.value[i] - lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

struct RateSpec {
    std::string name; // "1/2"
    int num = 1, den = 2;
    double value() const { return static_cast<double>(num) / den; }
};
RateSpec parse_rate(const std::string& s);

struct TrainConfig {
    std::string phase = "pretrain"; // pretrain | finetune
    std::string code = "conv";      // conv | turbo
    int k = 64;
    std::vector<std::string> rates; // pretrain: single mother rate; finetune: BBT mix
    int epochs = 30;
    int batches_per_epoch = 64;
    int batch_size = 64;
    double lr_initial = 1e-3;
    double lr_final = 1e-6;
    double snr_offset_db = 2.5; // finetune BBT offset
    double fixed_snr_db = 0.0;  // pretrain SNR
    CneConfig model;
    bool terminate = true; // conv encoder termination
    uint64_t seed = 1;
    std::string init_checkpoint; // required for finetune
    std::string out_path = "checkpoint.bin";
    std::string log_path;
    int val_blocks = 32;
    int val_every = 1;
    // stop after this many completed epochs (0 = run to `epochs`); the
    // cosine schedule still spans `epochs`, so a stopped run resumed from
    // the .state file reproduces the uninterrupted trajectory
    int stop_after_epochs = 0;
};

// One encoded-and-received block, already de-rate-matched.
struct ConvSample {
    int steps = 0;
    std::vector<double> llr;        // steps x 2
    std::vector<uint8_t> indicator; // steps x 2
    std::vector<uint8_t> bits;      // K info bits
    double rate = 0.5;
    double snr_db = 0.0;
};

struct TurboSample {
    TurboLlrs llrs;
    std::vector<uint8_t> bits;
    double rate = 1.0 / 3.0;
    double snr_db = 0.0;
};

// Full data pipeline: random bits -> encode -> rate match -> BPSK -> AWGN ->
// demap -> normalize -> de-rate-match.
ConvSample make_conv_sample(int K, const PuncturingPattern& pattern, const Trellis& trellis,
                            bool terminate, double snr_db, Rng& rng);
TurboSample make_turbo_sample(int K, const RateMatchPlan& plan, const QppInterleaver& interleaver,
                              const Trellis& constituent, double snr_db, Rng& rng);

// Time-major assembled minibatch (row t*B + b).
struct ConvBatch {
    int steps = 0, B = 0, K = 0;
    std::vector<float> llr, indicator; // [steps*B*2]
    std::vector<float> targets;        // [steps*B], tail positions 0
    std::vector<float> mask;           // [steps*B], 1 on info positions
    std::vector<double> rates, snrs;   // per sample
};

struct TurboBatch {
    int K = 0, B = 0;
    std::vector<float> llr_s, llr_z, llr_zp; // [K*B]
    std::vector<float> p_s, p_z, p_zp;
    std::vector<float> targets;
    std::vector<double> rates, snrs;
};

// rate tag per sample: uniform over config.rates (finetune) or rates[0].
// snr per sample: bbt_snr(rate, offset) for finetune, fixed_snr_db otherwise.
ConvBatch make_conv_batch(const TrainConfig& cfg, uint64_t batch_index);
TurboBatch make_turbo_batch(const TrainConfig& cfg, uint64_t batch_index);

TrainConfig train_config_from_json_file(const std::string& path);

struct TrainLogRow {
    int epoch = 0;
    double loss = 0.0, lr = 0.0, val_ber = 1.0;
};

struct TrainResult {
    int epochs_run = 0;
    double final_loss = 0.0;
    double best_val_ber = 1.0;
    std::vector<TrainLogRow> log;
};

TrainResult train(const TrainConfig& cfg);

} // namespace fec

#endif
