#include "fec/training.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fec/checkpoint.hpp"
#include "fec/configio.hpp"

namespace fec {

double bbt_snr(double rate, double offset_db) {
    if (rate <= 0.0 || rate > 1.0) throw DomainError("bbt_snr: rate must be in (0, 1]");
    return offset_db + 10.0 * std::log10(2.0 * rate);
}

double cosine_lr(int epoch, int total_epochs, double lr_initial, double lr_final) {
    if (total_epochs <= 1 || epoch <= 0) return lr_initial;
    if (epoch >= total_epochs - 1) return lr_final;
    const double phase = M_PI * static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return lr_final + 0.5 * (lr_initial - lr_final) * (1.0 + std::cos(phase));
}

double bce_loss_reference(const std::vector<double>& logits, const std::vector<uint8_t>& bits) {
    if (logits.size() != bits.size()) throw ShapeError("bce_loss_reference: size mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = bits[i];
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return loss / static_cast<double>(logits.size());
}

RateSpec parse_rate(const std::string& s) {
    RateSpec r;
    r.name = s;
    const auto slash = s.find('/');
    if (slash == std::string::npos) throw ConfigError("rate '" + s + "' must look like 'num/den'");
    try {
        r.num = std::stoi(s.substr(0, slash));
        r.den = std::stoi(s.substr(slash + 1));
    } catch (const std::exception&) {
        throw ConfigError("rate '" + s + "' must look like 'num/den'");
    }
    if (r.num <= 0 || r.den <= 0 || r.num > r.den) throw ConfigError("rate '" + s + "' out of range");
    return r;
}

ConvSample make_conv_sample(int K, const PuncturingPattern& pattern, const Trellis& trellis,
                            bool terminate, double snr_db, Rng& rng) {
    ConvSample sample;
    sample.rate = static_cast<double>(pattern.rate_num) / pattern.rate_den;
    sample.snr_db = snr_db;
    sample.bits = rng.random_bits(K);
    auto [z, zp] = conv_encode(sample.bits, trellis, terminate);
    sample.steps = static_cast<int>(z.size());

    const std::vector<uint8_t> tx = puncture_conv(z, zp, pattern);
    std::vector<double> symbols(tx.size());
    for (size_t i = 0; i < tx.size(); ++i) symbols[i] = 2.0 * tx[i] - 1.0;
    const NoiseSpec noise = NoiseSpec::from_snr_db(snr_db);
    std::vector<double> received = awgn(symbols, noise, rng);
    std::vector<double> llr(received.size());
    for (size_t i = 0; i < received.size(); ++i) llr[i] = 2.0 * received[i] / noise.sigma2;
    llr = normalize_llr(llr);
    ConvLlrPlane plane = derate_conv(llr, pattern, sample.steps);
    sample.llr = std::move(plane.llr);
    sample.indicator = std::move(plane.indicator);
    return sample;
}

TurboSample make_turbo_sample(int K, const RateMatchPlan& plan, const QppInterleaver& interleaver,
                              const Trellis& constituent, double snr_db, Rng& rng) {
    TurboSample sample;
    sample.rate = static_cast<double>(K) / plan.E;
    sample.snr_db = snr_db;
    sample.bits = rng.random_bits(K);
    CodewordStreams cw = turbo_encode(sample.bits, interleaver, constituent, false);
    const std::vector<uint8_t> tx = turbo_rate_match(cw, plan);
    std::vector<double> symbols(tx.size());
    for (size_t i = 0; i < tx.size(); ++i) symbols[i] = 2.0 * tx[i] - 1.0;
    const NoiseSpec noise = NoiseSpec::from_snr_db(snr_db);
    std::vector<double> received = awgn(symbols, noise, rng);
    std::vector<double> llr(received.size());
    for (size_t i = 0; i < received.size(); ++i) llr[i] = 2.0 * received[i] / noise.sigma2;
    llr = normalize_llr(llr);
    sample.llrs = derate_turbo(llr, plan);
    return sample;
}

namespace {

struct RatePool {
    struct Entry {
        RateSpec spec;
        PuncturingPattern pattern;  // conv
        RateMatchPlan plan;         // turbo
    };
    std::vector<Entry> entries;
};

RatePool build_pool(const TrainConfig& cfg) {
    RatePool pool;
    std::vector<std::string> names = cfg.rates;
    if (names.empty()) names = {cfg.code == "turbo" ? "1/3" : "1/2"};
    for (const auto& name : names) {
        RatePool::Entry e;
        e.spec = parse_rate(name);
        if (cfg.code == "conv") {
            e.pattern = standard_pattern(name);
        } else {
            const int E = cfg.k * e.spec.den / e.spec.num;
            if (static_cast<long long>(E) * e.spec.num != static_cast<long long>(cfg.k) * e.spec.den)
                throw ConfigError("rate " + name + " does not divide K=" + std::to_string(cfg.k));
            e.plan = turbo_rate_match_plan(cfg.k, E);
        }
        pool.entries.push_back(std::move(e));
    }
    return pool;
}

double sample_snr(const TrainConfig& cfg, double rate) {
    return cfg.phase == "finetune" ? bbt_snr(rate, cfg.snr_offset_db) : cfg.fixed_snr_db;
}

} // namespace

ConvBatch make_conv_batch(const TrainConfig& cfg, uint64_t batch_index) {
    const RatePool pool = build_pool(cfg);
    const Trellis trellis = wifi_cc_k7();
    const int B = cfg.batch_size;
    ConvBatch batch;
    batch.B = B;
    batch.K = cfg.k;
    for (int b = 0; b < B; ++b) {
        Rng rng = Rng::derive(cfg.seed, kSeedTrain, batch_index * static_cast<uint64_t>(B) + b);
        const size_t which =
            pool.entries.size() == 1 ? 0 : static_cast<size_t>(rng.below(pool.entries.size()));
        const auto& entry = pool.entries[which];
        const double snr = sample_snr(cfg, entry.spec.value());
        ConvSample s = make_conv_sample(cfg.k, entry.pattern, trellis, cfg.terminate, snr, rng);
        if (batch.steps == 0) {
            batch.steps = s.steps;
            batch.llr.assign(static_cast<size_t>(s.steps) * B * 2, 0.0f);
            batch.indicator.assign(static_cast<size_t>(s.steps) * B * 2, 0.0f);
            batch.targets.assign(static_cast<size_t>(s.steps) * B, 0.0f);
            batch.mask.assign(static_cast<size_t>(s.steps) * B, 0.0f);
        }
        for (int t = 0; t < s.steps; ++t) {
            const size_t row = static_cast<size_t>(t) * B + b;
            batch.llr[2 * row] = static_cast<float>(s.llr[2 * t]);
            batch.llr[2 * row + 1] = static_cast<float>(s.llr[2 * t + 1]);
            batch.indicator[2 * row] = static_cast<float>(s.indicator[2 * t]);
            batch.indicator[2 * row + 1] = static_cast<float>(s.indicator[2 * t + 1]);
            if (t < cfg.k) {
                batch.targets[row] = static_cast<float>(s.bits[t]);
                batch.mask[row] = 1.0f;
            }
        }
        batch.rates.push_back(entry.spec.value());
        batch.snrs.push_back(snr);
    }
    return batch;
}

TurboBatch make_turbo_batch(const TrainConfig& cfg, uint64_t batch_index) {
    const RatePool pool = build_pool(cfg);
    const Trellis trellis = lte_turbo_constituent();
    const QppInterleaver interleaver = qpp_for_k(cfg.k);
    const int B = cfg.batch_size;
    const int K = cfg.k;
    TurboBatch batch;
    batch.B = B;
    batch.K = K;
    const size_t n = static_cast<size_t>(K) * B;
    batch.llr_s.assign(n, 0.0f);
    batch.llr_z.assign(n, 0.0f);
    batch.llr_zp.assign(n, 0.0f);
    batch.p_s.assign(n, 0.0f);
    batch.p_z.assign(n, 0.0f);
    batch.p_zp.assign(n, 0.0f);
    batch.targets.assign(n, 0.0f);
    for (int b = 0; b < B; ++b) {
        Rng rng = Rng::derive(cfg.seed, kSeedTrain, batch_index * static_cast<uint64_t>(B) + b);
        const size_t which =
            pool.entries.size() == 1 ? 0 : static_cast<size_t>(rng.below(pool.entries.size()));
        const auto& entry = pool.entries[which];
        const double snr = sample_snr(cfg, entry.spec.value());
        TurboSample s = make_turbo_sample(K, entry.plan, interleaver, trellis, snr, rng);
        for (int t = 0; t < K; ++t) {
            const size_t row = static_cast<size_t>(t) * B + b;
            batch.llr_s[row] = static_cast<float>(s.llrs.llr_s[t]);
            batch.llr_z[row] = static_cast<float>(s.llrs.llr_z[t]);
            batch.llr_zp[row] = static_cast<float>(s.llrs.llr_zp[t]);
            batch.p_s[row] = static_cast<float>(s.llrs.p_s[t]);
            batch.p_z[row] = static_cast<float>(s.llrs.p_z[t]);
            batch.p_zp[row] = static_cast<float>(s.llrs.p_zp[t]);
            batch.targets[row] = static_cast<float>(s.bits[t]);
        }
        batch.rates.push_back(entry.spec.value());
        batch.snrs.push_back(snr);
    }
    return batch;
}

TrainConfig train_config_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad config '" + path + "': " + e.what());
    }
    TrainConfig cfg;
    cfg.phase = j.value("phase", cfg.phase);
    cfg.code = j.value("code", cfg.code);
    cfg.k = j.value("k", cfg.k);
    cfg.rates = j.value("rates", cfg.rates);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batches_per_epoch = j.value("batches_per_epoch", cfg.batches_per_epoch);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr_initial = j.value("lr_initial", cfg.lr_initial);
    cfg.lr_final = j.value("lr_final", cfg.lr_final);
    cfg.snr_offset_db = j.value("snr_offset_db", cfg.snr_offset_db);
    cfg.fixed_snr_db = j.value("fixed_snr_db", cfg.fixed_snr_db);
    cfg.terminate = j.value("terminate", cfg.terminate);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.init_checkpoint = j.value("init_checkpoint", cfg.init_checkpoint);
    cfg.out_path = j.value("out", cfg.out_path);
    cfg.log_path = j.value("log", cfg.log_path);
    cfg.val_blocks = j.value("val_blocks", cfg.val_blocks);
    cfg.val_every = j.value("val_every", cfg.val_every);
    cfg.stop_after_epochs = j.value("stop_after_epochs", cfg.stop_after_epochs);
    if (j.contains("model")) {
        const auto& m = j["model"];
        cfg.model.d_embed = m.value("d_embed", cfg.model.d_embed);
        cfg.model.d_hidden = m.value("d_hidden", cfg.model.d_hidden);
        cfg.model.n_layer = m.value("n_layer", cfg.model.n_layer);
        cfg.model.n_iter = m.value("n_iter", cfg.model.n_iter);
        cfg.model.puncture_embedding = m.value("puncture_embedding", cfg.model.puncture_embedding);
    }
    return cfg;
}

namespace {

// validation BER at the per-rate training SNR points, inference mode
double validation_ber(const TrainConfig& cfg, CneParams<float>& params) {
    const RatePool pool = build_pool(cfg);
    long long errors = 0, total = 0;
    if (cfg.code == "conv") {
        const Trellis trellis = wifi_cc_k7();
        for (const auto& entry : pool.entries) {
            const double snr = sample_snr(cfg, entry.spec.value());
            for (int blk = 0; blk < cfg.val_blocks; ++blk) {
                Rng rng = Rng::derive(cfg.seed, kSeedVal,
                                      static_cast<uint64_t>(blk) * 131 + entry.spec.num * 7919 +
                                          entry.spec.den);
                ConvSample s = make_conv_sample(cfg.k, entry.pattern, trellis, cfg.terminate, snr, rng);
                std::vector<double> logits = cne_decode_block(params, s.llr, s.indicator, s.steps);
                for (int i = 0; i < cfg.k; ++i) {
                    errors += (logits[i] > 0.0 ? 1 : 0) != s.bits[i];
                    ++total;
                }
            }
        }
    } else {
        const Trellis trellis = lte_turbo_constituent();
        const QppInterleaver interleaver = qpp_for_k(cfg.k);
        for (const auto& entry : pool.entries) {
            const double snr = sample_snr(cfg, entry.spec.value());
            for (int blk = 0; blk < cfg.val_blocks; ++blk) {
                Rng rng = Rng::derive(cfg.seed, kSeedVal,
                                      static_cast<uint64_t>(blk) * 131 + entry.spec.num * 7919 +
                                          entry.spec.den);
                TurboSample s = make_turbo_sample(cfg.k, entry.plan, interleaver, trellis, snr, rng);
                std::vector<double> logits =
                    cne_turbo_decode_block(params, s.llrs, interleaver, params.cfg.n_iter);
                for (int i = 0; i < cfg.k; ++i) {
                    errors += (logits[i] > 0.0 ? 1 : 0) != s.bits[i];
                    ++total;
                }
            }
        }
    }
    return total ? static_cast<double>(errors) / static_cast<double>(total) : 1.0;
}

} // namespace

TrainResult train(const TrainConfig& cfg) {
    if (cfg.phase != "pretrain" && cfg.phase != "finetune")
        throw ConfigError("train: phase must be pretrain or finetune");
    if (cfg.code != "conv" && cfg.code != "turbo") throw ConfigError("train: code must be conv or turbo");

    CneConfig model_cfg = cfg.model;
    model_cfg.d_in = 2;
    std::unique_ptr<CneParams<float>> params;
    std::unique_ptr<AdamState<float>> adam;
    int start_epoch = 0;

    if (cfg.phase == "finetune") {
        if (cfg.init_checkpoint.empty())
            throw ConfigError("train: finetune requires init_checkpoint");
        LoadedCheckpoint loaded = load_checkpoint(cfg.init_checkpoint);
        if (loaded.meta.code != cfg.code)
            throw CheckpointError("train: checkpoint code '" + loaded.meta.code + "' does not match config");
        if (!(loaded.meta.cfg == model_cfg))
            throw CheckpointError("train: checkpoint model dimensions do not match config");
        params = std::move(loaded.params);
    } else if (!cfg.init_checkpoint.empty()) {
        // resume an interrupted run: same phase, optimizer state included
        LoadedCheckpoint loaded = load_checkpoint(cfg.init_checkpoint);
        if (!(loaded.meta.cfg == model_cfg) || loaded.meta.code != cfg.code)
            throw CheckpointError("train: resume checkpoint does not match config");
        params = std::move(loaded.params);
        adam = std::move(loaded.adam);
        start_epoch = loaded.meta.epoch;
    }
    if (!params) {
        params = std::make_unique<CneParams<float>>(model_cfg);
        Rng init_rng = Rng::derive(cfg.seed, kSeedInit, 0);
        init_params(*params, init_rng);
    }
    auto plist = params->all();
    if (!adam) adam = std::make_unique<AdamState<float>>(plist);

    TrainResult result;
    result.best_val_ber = 1.0;
    std::unique_ptr<CneParams<float>> best;

    int epochs_completed = start_epoch;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_initial, cfg.lr_final);
        double epoch_loss = 0.0;
        for (int bi = 0; bi < cfg.batches_per_epoch; ++bi) {
            const uint64_t batch_index =
                static_cast<uint64_t>(epoch) * cfg.batches_per_epoch + static_cast<uint64_t>(bi);
            for (auto* p : plist) p->zero_grad();
            Tape<float> tape;
            Var loss;
            if (cfg.code == "conv") {
                ConvBatch batch = make_conv_batch(cfg, batch_index);
                Var x = tape.leaf(batch.steps * batch.B, 2, batch.llr);
                std::vector<float> ind(batch.indicator.begin(), batch.indicator.end());
                Var logits = cne_forward(tape, x, ind, *params, true, batch.steps, batch.B);
                loss = tape.bce_with_logits(logits, batch.targets, batch.mask);
            } else {
                TurboBatch batch = make_turbo_batch(cfg, batch_index);
                const QppInterleaver interleaver = qpp_for_k(cfg.k);
                Var s = tape.leaf(batch.K * batch.B, 1, batch.llr_s);
                Var z = tape.leaf(batch.K * batch.B, 1, batch.llr_z);
                Var zp = tape.leaf(batch.K * batch.B, 1, batch.llr_zp);
                Var logits = cne_turbo_decode(tape, s, z, zp, batch.p_s, batch.p_z, batch.p_zp,
                                              interleaver, *params, model_cfg.n_iter, true, batch.B);
                loss = tape.bce_with_logits(logits, batch.targets);
            }
            epoch_loss += static_cast<double>(tape.value(loss)[0]);
            tape.backward(loss);
            adam->step(plist, lr);
        }
        epoch_loss /= cfg.batches_per_epoch;

        TrainLogRow row;
        row.epoch = epoch;
        row.loss = epoch_loss;
        row.lr = lr;
        if ((epoch + 1) % cfg.val_every == 0 || epoch + 1 == cfg.epochs) {
            row.val_ber = validation_ber(cfg, *params);
            if (row.val_ber <= result.best_val_ber) {
                result.best_val_ber = row.val_ber;
                best = std::make_unique<CneParams<float>>(*params);
            }
        }
        result.log.push_back(row);
        result.final_loss = epoch_loss;
        ++result.epochs_run;
        epochs_completed = epoch + 1;
        if (cfg.stop_after_epochs > 0 && epochs_completed >= cfg.stop_after_epochs) break;
    }

    if (!best) best = std::make_unique<CneParams<float>>(*params);

    CheckpointMeta meta;
    meta.code = cfg.code;
    meta.cfg = model_cfg;
    meta.epoch = epochs_completed;
    meta.master_seed = cfg.seed;
    meta.val_ber = result.best_val_ber;
    meta.train_k = cfg.k;
    meta.terminate = cfg.terminate;
    meta.rates = cfg.rates;
    // best-validation artifact for inference, plus the resumable final state
    save_checkpoint(cfg.out_path, meta, *best, nullptr);
    save_checkpoint(cfg.out_path + ".state", meta, *params, adam.get());

    if (!cfg.log_path.empty()) {
        std::ofstream log(cfg.log_path);
        log << "epoch,loss,lr,val_ber\n";
        for (const auto& row : result.log)
            log << row.epoch << ',' << row.loss << ',' << row.lr << ',' << row.val_ber << '\n';
    }
    return result;
}

} // namespace fec
