// Command-line front end: encode, simulate, sweep, train, evaluate, cost.
// Exit codes: 0 ok, 1 usage error, 2 unreadable/bad config, 3 checkpoint
// mismatch, 4 runtime failure.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fec/checkpoint.hpp"
#include "fec/configio.hpp"
#include "fec/costmodel.hpp"
#include "fec/harness.hpp"
#include "fec/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;
constexpr int kExitRuntime = 4;

struct EncodeOptions {
    std::string code = "conv";
    int k = 120;
    std::string rate = "1/2";
    uint64_t seed = 1;
    bool terminate = true;
    std::string out;
};

int cmd_encode(const EncodeOptions& opt) {
    fec::Rng rng(opt.seed);
    std::vector<uint8_t> bits = rng.random_bits(opt.k);
    std::vector<uint8_t> tx;
    if (opt.code == "conv") {
        auto [z, zp] = fec::conv_encode(bits, fec::wifi_cc_k7(), opt.terminate);
        tx = fec::puncture_conv(z, zp, fec::standard_pattern(opt.rate));
    } else if (opt.code == "turbo") {
        fec::RateSpec rate = fec::parse_rate(opt.rate);
        fec::QppInterleaver pi = fec::qpp_for_k(opt.k);
        fec::CodewordStreams cw = fec::turbo_encode(bits, pi, fec::lte_turbo_constituent(), false);
        tx = fec::turbo_rate_match(cw, fec::turbo_rate_match_plan(opt.k, opt.k * rate.den / rate.num));
    } else {
        throw fec::ConfigError("encode: code must be conv or turbo");
    }
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!opt.out.empty()) {
        file.open(opt.out);
        if (!file) throw fec::ConfigError("encode: cannot write '" + opt.out + "'");
        os = &file;
    }
    auto dump = [&](const char* name, const std::vector<uint8_t>& v) {
        *os << name << '=';
        for (uint8_t b : v) *os << static_cast<char>('0' + b);
        *os << '\n';
    };
    dump("info", bits);
    dump("tx", tx);
    return kExitOk;
}

void apply_sweep_overrides(fec::SweepConfig& cfg, const std::optional<uint64_t>& seed,
                           const std::string& out, const std::string& decoder,
                           const std::vector<double>& snrs, const std::vector<std::string>& rates,
                           const std::optional<long long>& blocks, const std::optional<int>& threads,
                           const std::string& checkpoint) {
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (!decoder.empty()) cfg.decoder = decoder;
    if (!snrs.empty()) cfg.snrs_db = snrs;
    if (!rates.empty()) cfg.rates = rates;
    if (blocks) cfg.blocks = *blocks;
    if (threads) cfg.threads = *threads;
    if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"channel-coding workbench: encoders, classical decoders, neural decoder, BER sweeps"};
    app.require_subcommand(1);

    EncodeOptions enc;
    CLI::App* encode = app.add_subcommand("encode", "encode a random block and print info/tx bits");
    encode->add_option("--code", enc.code, "conv|turbo");
    encode->add_option("--k", enc.k, "info block length");
    encode->add_option("--rate", enc.rate, "code rate, e.g. 3/4");
    encode->add_option("--seed", enc.seed, "rng seed");
    encode->add_flag("--terminate,!--no-terminate", enc.terminate, "conv trellis termination");
    encode->add_option("--out", enc.out, "output path (default stdout)");

    std::string config_path, out_override, decoder_override, checkpoint_override, plot_override;
    std::optional<uint64_t> seed_override;
    std::optional<long long> blocks_override;
    std::optional<int> threads_override;
    std::vector<double> snr_override;
    std::vector<std::string> rate_override;

    auto add_sweep_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option("--seed", seed_override, "master seed override");
        cmd->add_option("--out", out_override, "CSV output path override");
        cmd->add_option("--decoder", decoder_override, "decoder override: viterbi|bcjr|cne");
        cmd->add_option("--snr", snr_override, "SNR point override (dB)");
        cmd->add_option("--rate", rate_override, "rate override, e.g. 1/2");
        cmd->add_option("--blocks", blocks_override, "blocks per point override");
        cmd->add_option("--threads", threads_override, "worker threads");
        cmd->add_option("--checkpoint", checkpoint_override, "cne checkpoint override");
        cmd->add_option("--plot-data", plot_override, "plot-data output path");
    };

    CLI::App* sweep = app.add_subcommand("sweep", "run a BER sweep and write a CSV report");
    add_sweep_flags(sweep);
    CLI::App* simulate = app.add_subcommand("simulate", "run a sweep and print rows to stdout");
    add_sweep_flags(simulate);

    std::string train_config;
    std::string train_out;
    std::optional<uint64_t> train_seed;
    CLI::App* train_cmd = app.add_subcommand("train", "train the neural decoder");
    train_cmd->add_option("--config", train_config, "JSON train config")->required();
    train_cmd->add_option("--seed", train_seed, "seed override");
    train_cmd->add_option("--out", train_out, "checkpoint output override");

    std::string eval_checkpoint, eval_config, eval_out;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint over a test spec");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--config", eval_config, "JSON sweep-style test spec")->required();
    eval_cmd->add_option("--out", eval_out, "CSV output path");

    std::string cost_model_path;
    std::optional<int> cost_k, cost_iters;
    CLI::App* cost_cmd = app.add_subcommand("cost", "print the complexity/latency cost report");
    cost_cmd->add_option("--model", cost_model_path, "JSON model config")->required();
    cost_cmd->add_option("--k", cost_k, "block length for classical op counts");
    cost_cmd->add_option("--iterations", cost_iters, "bcjr iterations for op counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*encode) return cmd_encode(enc);
        if (*sweep || *simulate) {
            fec::SweepConfig cfg = fec::sweep_config_from_json_file(config_path);
            apply_sweep_overrides(cfg, seed_override, out_override, decoder_override, snr_override,
                                  rate_override, blocks_override, threads_override,
                                  checkpoint_override);
            if (!plot_override.empty()) cfg.plot_out = plot_override;
            if (*simulate) cfg.out.clear();
            fec::BerReport report = fec::run_sweep(cfg);
            if (*simulate || cfg.out.empty())
                std::cout << report.to_csv();
            else
                std::cout << "wrote " << report.rows.size() << " rows to " << cfg.out << '\n';
            return kExitOk;
        }
        if (*train_cmd) {
            fec::TrainConfig cfg = fec::train_config_from_json_file(train_config);
            if (train_seed) cfg.seed = *train_seed;
            if (!train_out.empty()) cfg.out_path = train_out;
            fec::TrainResult result = fec::train(cfg);
            std::cout << "epochs=" << result.epochs_run << " final_loss=" << result.final_loss
                      << " best_val_ber=" << result.best_val_ber << " checkpoint=" << cfg.out_path
                      << '\n';
            return kExitOk;
        }
        if (*eval_cmd) {
            fec::SweepConfig cfg = fec::sweep_config_from_json_file(eval_config);
            cfg.decoder = "cne";
            cfg.checkpoint = eval_checkpoint;
            if (!eval_out.empty()) cfg.out = eval_out;
            fec::BerReport report = fec::run_sweep(cfg);
            if (cfg.out.empty()) std::cout << report.to_csv();
            return kExitOk;
        }
        if (*cost_cmd) {
            std::ifstream is(cost_model_path);
            if (!is) throw fec::ConfigError("cannot read config '" + cost_model_path + "'");
            nlohmann::json j;
            try {
                is >> j;
            } catch (const std::exception& e) {
                throw fec::ConfigError("bad config '" + cost_model_path + "': " + e.what());
            }
            fec::CostModelInput in;
            in.code = j.value("code", in.code);
            if (j.contains("model")) {
                const auto& m = j["model"];
                in.cfg.d_embed = m.value("d_embed", in.cfg.d_embed);
                in.cfg.d_hidden = m.value("d_hidden", in.cfg.d_hidden);
                in.cfg.n_layer = m.value("n_layer", in.cfg.n_layer);
                in.cfg.n_iter = m.value("n_iter", in.cfg.n_iter);
                in.cfg.puncture_embedding = m.value("puncture_embedding", in.cfg.puncture_embedding);
            }
            in.k = cost_k.value_or(j.value("k", in.k));
            in.bcjr_iters = cost_iters.value_or(j.value("bcjr_iterations", in.bcjr_iters));
            std::cout << fec::cost_model(in).to_text();
            return kExitOk;
        }
    } catch (const fec::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kExitCheckpoint;
    } catch (const fec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
