#include "fec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "fec/checkpoint.hpp"
#include "fec/configio.hpp"

namespace fec {

using json = nlohmann::json;

void BerReport::sort_rows() {
    std::sort(rows.begin(), rows.end(), [](const BerRow& a, const BerRow& b) {
        if (a.decoder != b.decoder) return a.decoder < b.decoder;
        if (a.rate != b.rate) return a.rate < b.rate;
        if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
        return a.K < b.K;
    });
}

std::string BerReport::to_csv() const {
    std::ostringstream os;
    os << "code,K,rate,channel,snr_db,eb_n0_db,blocks,bit_errors,ber,ci_low,ci_high,decoder,seed\n";
    for (const auto& r : rows) {
        os << r.code << ',' << r.K << ',' << r.rate << ',' << r.channel << ',' << r.snr_db << ','
           << r.eb_n0_db << ',' << r.blocks << ',' << r.bit_errors << ',' << r.ber << ',' << r.ci_low
           << ',' << r.ci_high << ',' << r.decoder << ',' << r.seed << '\n';
    }
    return os.str();
}

void BerReport::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write report to '" + path + "'");
    os << to_csv();
}

void BerReport::write_plot_data(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write plot data to '" + path + "'");
    os << "x,y,series\n";
    for (const auto& r : rows)
        os << r.eb_n0_db << ',' << r.ber << ',' << r.decoder << '/' << r.rate << '\n';
}

SweepConfig sweep_config_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad config '" + path + "': " + e.what());
    }
    SweepConfig cfg;
    cfg.code = j.value("code", cfg.code);
    cfg.decoder = j.value("decoder", cfg.decoder);
    cfg.lengths = j.value("lengths", cfg.lengths);
    cfg.rates = j.value("rates", cfg.rates);
    cfg.snrs_db = j.value("snrs_db", cfg.snrs_db);
    cfg.snr_is_ebn0 = j.value("snr_is_ebn0", cfg.snr_is_ebn0);
    cfg.blocks = j.value("blocks", cfg.blocks);
    cfg.early_stop_errors = j.value("early_stop_errors", cfg.early_stop_errors);
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.traceback = j.value("traceback", cfg.traceback);
    cfg.terminate_conv = j.value("terminate_conv", cfg.terminate_conv);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.checkpoint = j.value("checkpoint", cfg.checkpoint);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.out = j.value("out", cfg.out);
    cfg.plot_out = j.value("plot_out", cfg.plot_out);
    if (j.contains("channel")) {
        const json& c = j["channel"];
        cfg.channel.type = c.value("type", cfg.channel.type);
        cfg.channel.taps = c.value("taps", cfg.channel.taps);
        cfg.channel.tx = c.value("tx", cfg.channel.tx);
        cfg.channel.rx = c.value("rx", cfg.channel.rx);
        cfg.channel.fft_size = c.value("fft_size", cfg.channel.fft_size);
        cfg.channel.modulation = c.value("modulation", cfg.channel.modulation);
        cfg.channel.pilot = c.value("pilot", cfg.channel.pilot);
        cfg.channel.perfect_csi = c.value("perfect_csi", cfg.channel.perfect_csi);
    }
    return cfg;
}

namespace {

// Everything one worker needs to process one block of one sweep cell.
struct CellContext {
    const SweepConfig* cfg = nullptr;
    int K = 0;
    RateSpec rate;
    double esn0_db = 0.0;
    Trellis trellis;
    PuncturingPattern pattern;  // conv
    QppInterleaver interleaver; // turbo
    RateMatchPlan plan;         // turbo
    CneParams<float>* cne = nullptr;
    Constellation constellation = Constellation::bpsk();
    uint64_t cell_tag = 0;
};

// Transmit rate-matched bits through the configured channel; returns the
// demodulated LLR sequence in transmission order (not yet normalized).
std::vector<double> send_through_channel(const std::vector<uint8_t>& tx, const CellContext& ctx,
                                         Rng& rng) {
    const NoiseSpec noise = NoiseSpec::from_snr_db(ctx.esn0_db);
    if (ctx.cfg->channel.type == "awgn") {
        std::vector<double> symbols(tx.size());
        for (size_t i = 0; i < tx.size(); ++i) symbols[i] = 2.0 * tx[i] - 1.0;
        std::vector<double> received = awgn(symbols, noise, rng);
        std::vector<double> llr(received.size());
        for (size_t i = 0; i < received.size(); ++i) llr[i] = 2.0 * received[i] / noise.sigma2;
        return llr;
    }

    // Rayleigh MIMO link: modulate, split across antennas per subcarrier use,
    // LS-estimate per subcarrier (or perfect CSI), MMSE detect, demap.
    const ChannelConfig& ch = ctx.cfg->channel;
    const Constellation& con = ctx.constellation;
    const int bps = con.bits_per_symbol();
    std::vector<uint8_t> padded = tx;
    const size_t bits_per_use = static_cast<size_t>(ch.tx) * bps;
    while (padded.size() % bits_per_use != 0) padded.push_back(0);
    std::vector<cplx> symbols = modulate(padded, con);
    const int n_uses = static_cast<int>(symbols.size()) / ch.tx;

    ChannelRealization real = ChannelRealization::draw(ch.rx, ch.tx, ch.taps, ch.fft_size, rng);
    const CMatrix omega = dft_pilot_matrix(ch.tx);
    const double pilot_sigma = std::sqrt(noise.sigma2 / 2.0);

    std::vector<double> llr;
    llr.reserve(symbols.size() * bps);
    for (int u = 0; u < n_uses; ++u) {
        const CMatrix& h = real.freq[u % ch.fft_size];
        CMatrix h_hat;
        if (ch.perfect_csi) {
            h_hat = h;
        } else {
            CMatrix y_pilot = h * omega;
            for (int r = 0; r < ch.rx; ++r)
                for (int c = 0; c < ch.tx; ++c)
                    y_pilot(r, c) += cplx(pilot_sigma * rng.gaussian(), pilot_sigma * rng.gaussian());
            h_hat = ls_estimate(y_pilot, omega);
        }
        CVector x(ch.tx);
        for (int t = 0; t < ch.tx; ++t) x(t) = symbols[static_cast<size_t>(u) * ch.tx + t];
        CVector y = h * x;
        const double s = std::sqrt(noise.sigma2 / 2.0);
        for (int r = 0; r < ch.rx; ++r) y(r) += cplx(s * rng.gaussian(), s * rng.gaussian());
        CVector x_hat = mmse_detect(y, h_hat, noise.sigma2);
        std::vector<cplx> detected(ch.tx);
        for (int t = 0; t < ch.tx; ++t) detected[t] = x_hat(t);
        std::vector<double> part = demap_llr(detected, con, DemapMode::MaxLog, noise.sigma2);
        llr.insert(llr.end(), part.begin(), part.end());
    }
    llr.resize(tx.size()); // drop padding
    return llr;
}

// Returns bit errors for one block.
long long run_block(const CellContext& ctx, uint64_t block_index) {
    Rng rng = Rng::derive(ctx.cfg->seed, kSeedSweep, ctx.cell_tag * 0x100000000ULL + block_index);
    const int K = ctx.K;

    if (ctx.cfg->code == "conv") {
        std::vector<uint8_t> bits = rng.random_bits(K);
        auto [z, zp] = conv_encode(bits, ctx.trellis, ctx.cfg->terminate_conv);
        const int steps = static_cast<int>(z.size());
        std::vector<uint8_t> tx = puncture_conv(z, zp, ctx.pattern);
        std::vector<double> llr = send_through_channel(tx, ctx, rng);

        std::vector<uint8_t> decoded;
        if (ctx.cfg->decoder == "cne") {
            llr = normalize_llr(llr);
            ConvLlrPlane plane = derate_conv(llr, ctx.pattern, steps);
            std::vector<double> logits = cne_decode_block(*ctx.cne, plane.llr, plane.indicator, steps);
            decoded.resize(K);
            for (int i = 0; i < K; ++i) decoded[i] = logits[i] > 0.0 ? 1 : 0;
        } else {
            ConvLlrPlane plane = derate_conv(llr, ctx.pattern, steps);
            std::vector<uint8_t> all =
                viterbi_decode(plane, ctx.trellis, ctx.cfg->traceback, ctx.cfg->terminate_conv);
            decoded.assign(all.begin(), all.begin() + K);
        }
        long long errors = 0;
        for (int i = 0; i < K; ++i) errors += decoded[i] != bits[i];
        return errors;
    }

    // turbo
    std::vector<uint8_t> bits = rng.random_bits(K);
    CodewordStreams cw = turbo_encode(bits, ctx.interleaver, ctx.trellis, false);
    std::vector<uint8_t> tx = turbo_rate_match(cw, ctx.plan);
    std::vector<double> llr = send_through_channel(tx, ctx, rng);

    std::vector<uint8_t> decoded(K);
    if (ctx.cfg->decoder == "cne") {
        llr = normalize_llr(llr);
        TurboLlrs planes = derate_turbo(llr, ctx.plan);
        std::vector<double> logits =
            cne_turbo_decode_block(*ctx.cne, planes, ctx.interleaver, ctx.cfg->iterations);
        for (int i = 0; i < K; ++i) decoded[i] = logits[i] > 0.0 ? 1 : 0;
    } else {
        TurboLlrs planes = derate_turbo(llr, ctx.plan);
        TurboDecodeResult res = turbo_decode_classical(planes.llr_s, planes.llr_z, planes.llr_zp,
                                                       ctx.interleaver, ctx.trellis,
                                                       ctx.cfg->iterations);
        decoded = res.bits;
    }
    long long errors = 0;
    for (int i = 0; i < K; ++i) errors += decoded[i] != bits[i];
    return errors;
}

} // namespace

BerRow run_cell(const SweepConfig& cfg, int K, const std::string& rate_name, double snr_db_input,
                CneParams<float>* cne) {
    CellContext ctx;
    ctx.cfg = &cfg;
    ctx.K = K;
    ctx.rate = parse_rate(rate_name);
    ctx.cne = cne;
    if (cfg.code == "conv") {
        ctx.trellis = wifi_cc_k7();
        ctx.pattern = standard_pattern(rate_name);
    } else {
        ctx.trellis = lte_turbo_constituent();
        ctx.interleaver = qpp_for_k(K);
        const int E = K * ctx.rate.den / ctx.rate.num;
        ctx.plan = turbo_rate_match_plan(K, E);
    }
    if (cfg.channel.type == "rayleigh") ctx.constellation = Constellation::qam16();
    const int bps = ctx.constellation.bits_per_symbol();
    const double r = ctx.rate.value();
    const bool real_channel = cfg.channel.type == "awgn";
    ctx.esn0_db =
        cfg.snr_is_ebn0 ? ebn0_to_esn0_db(snr_db_input, r, bps, real_channel) : snr_db_input;
    // deterministic per-cell tag so block seeds never collide across cells
    ctx.cell_tag = mix64(static_cast<uint64_t>(K) * 1315423911ULL ^
                         static_cast<uint64_t>(ctx.rate.num) * 2654435761ULL ^
                         static_cast<uint64_t>(ctx.rate.den) * 40503ULL ^
                         static_cast<uint64_t>(static_cast<int64_t>(snr_db_input * 4096.0)));

    long long errors = 0, blocks_done = 0;
    const int threads = std::max(1, cfg.threads);
    // early stopping is checked between chunks
    long long chunk = cfg.blocks;
    if (cfg.early_stop_errors > 0) chunk = std::min<long long>(cfg.blocks, 256 * threads);
    if (threads > 1) chunk = std::max<long long>(chunk, threads);
    while (blocks_done < cfg.blocks) {
        const long long want = std::min<long long>(chunk, cfg.blocks - blocks_done);
        if (threads == 1) {
            for (long long b = 0; b < want; ++b) errors += run_block(ctx, blocks_done + b);
        } else {
            std::vector<long long> partial(threads, 0);
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) {
                pool.emplace_back([&, w]() {
                    for (long long b = w; b < want; b += threads)
                        partial[w] += run_block(ctx, blocks_done + b);
                });
            }
            for (auto& t : pool) t.join();
            for (long long p : partial) errors += p;
        }
        blocks_done += want;
        if (cfg.early_stop_errors > 0 && errors >= cfg.early_stop_errors) break;
    }

    BerRow row;
    row.code = cfg.code;
    row.K = K;
    row.rate = rate_name;
    row.channel = cfg.channel.type;
    row.snr_db = ctx.esn0_db;
    row.eb_n0_db = esn0_to_ebn0_db(ctx.esn0_db, r, bps, real_channel);
    row.blocks = blocks_done;
    row.bit_errors = errors;
    const double n = static_cast<double>(blocks_done) * K;
    row.ber = errors / n;
    const double half = 1.96 * std::sqrt(std::max(row.ber * (1.0 - row.ber), 0.0) / n);
    row.ci_low = std::max(0.0, row.ber - half);
    row.ci_high = std::min(1.0, row.ber + half);
    row.decoder = cfg.decoder;
    row.seed = cfg.seed;
    return row;
}

BerReport run_sweep(const SweepConfig& cfg) {
    if (cfg.decoder != "viterbi" && cfg.decoder != "bcjr" && cfg.decoder != "cne")
        throw ConfigError("sweep: decoder must be viterbi, bcjr, or cne");
    if (cfg.decoder == "viterbi" && cfg.code != "conv")
        throw ConfigError("sweep: viterbi decodes the convolutional code only");
    if (cfg.decoder == "bcjr" && cfg.code != "turbo")
        throw ConfigError("sweep: bcjr decodes the turbo code only");

    std::unique_ptr<CneParams<float>> cne;
    if (cfg.decoder == "cne") {
        if (cfg.checkpoint.empty()) throw ConfigError("sweep: cne decoder requires a checkpoint");
        LoadedCheckpoint loaded = load_checkpoint(cfg.checkpoint);
        if (loaded.meta.code != cfg.code)
            throw CheckpointError("sweep: checkpoint trained for '" + loaded.meta.code +
                              "' does not match code '" + cfg.code + "'");
        cne = std::move(loaded.params);
    }

    BerReport report;
    for (int K : cfg.lengths)
        for (const auto& rate : cfg.rates)
            for (double snr : cfg.snrs_db) report.rows.push_back(run_cell(cfg, K, rate, snr, cne.get()));
    report.sort_rows();
    if (!cfg.out.empty()) report.write_csv(cfg.out);
    if (!cfg.plot_out.empty()) report.write_plot_data(cfg.plot_out);
    return report;
}

} // namespace fec
