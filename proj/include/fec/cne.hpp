#ifndef FEC_CNE_HPP
#define FEC_CNE_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "fec/autodiff.hpp"
#include "fec/codec.hpp"
#include "fec/ratematch.hpp"

namespace fec {

// Decoder dimensions. Defaults follow the ablation-study configuration
// (shared 2-layer Bi-LSTM, D_embed 64, D_hidden 256, 3 turbo iterations).
struct CneConfig {
    int d_in = 2;
    int d_embed = 64;
    int d_hidden = 256;
    int n_layer = 2;
    int n_iter = 3;
    bool puncture_embedding = true;

    bool operator==(const CneConfig&) const = default;
};

// All trainable state of one decoder engine. The turbo decoder reuses this
// single set for both constituent engines and across iterations.
template <typename T>
struct CneParams {
    CneConfig cfg;
    Parameter<T> w_proj, b_proj;
    Parameter<T> w_punc, b_punc;
    BatchNormState<T> bn;
    std::vector<std::array<LstmCellParams<T>, 2>> layers; // [layer][0=fwd,1=bwd]
    Parameter<T> w_out, b_out;

    explicit CneParams(const CneConfig& config) : cfg(config) {
        if (config.d_in < 1 || config.d_embed < 1 || config.d_hidden < 1 || config.n_layer < 1)
            throw ConfigError("cne: all dimensions must be >= 1");
        w_proj = Parameter<T>("proj.weight", {config.d_embed, config.d_in});
        b_proj = Parameter<T>("proj.bias", {config.d_embed});
        w_punc = Parameter<T>("punc.weight", {config.d_embed, config.d_in});
        b_punc = Parameter<T>("punc.bias", {config.d_embed});
        bn = BatchNormState<T>("bn", config.d_embed);
        layers.reserve(config.n_layer);
        for (int l = 0; l < config.n_layer; ++l) {
            const int d_in_layer = l == 0 ? config.d_embed : 2 * config.d_hidden;
            layers.push_back({LstmCellParams<T>("lstm" + std::to_string(l) + ".fwd", d_in_layer,
                                                config.d_hidden),
                              LstmCellParams<T>("lstm" + std::to_string(l) + ".bwd", d_in_layer,
                                                config.d_hidden)});
        }
        w_out = Parameter<T>("out.weight", {1, 2 * config.d_hidden});
        b_out = Parameter<T>("out.bias", {1});
    }

    // trainable parameters in checkpoint manifest order
    std::vector<Parameter<T>*> all() {
        std::vector<Parameter<T>*> v;
        v.push_back(&w_proj);
        v.push_back(&b_proj);
        if (cfg.puncture_embedding) {
            v.push_back(&w_punc);
            v.push_back(&b_punc);
        }
        v.push_back(&bn.gamma);
        v.push_back(&bn.beta);
        for (auto& layer : layers)
            for (auto& cell : layer) {
                v.push_back(&cell.w_ih);
                v.push_back(&cell.w_hh);
                v.push_back(&cell.b_ih);
                v.push_back(&cell.b_hh);
            }
        v.push_back(&w_out);
        v.push_back(&b_out);
        return v;
    }

    size_t parameter_count() {
        size_t n = 0;
        for (auto* p : all()) n += p->size();
        return n;
    }
};

// Uniform fan-in initialization; LSTM blocks use U(-1/sqrt(H), 1/sqrt(H));
// the forget-gate bias block is set to +1 (b_ih) and 0 (b_hh).
template <typename T>
void init_params(CneParams<T>& params, Rng& rng) {
    auto fill_uniform = [&](Parameter<T>& p, double bound) {
        for (auto& v : p.value) v = static_cast<T>(rng.uniform(-bound, bound));
    };
    const CneConfig& cfg = params.cfg;
    fill_uniform(params.w_proj, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
    fill_uniform(params.b_proj, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
    fill_uniform(params.w_punc, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
    fill_uniform(params.b_punc, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_hidden));
    for (auto& layer : params.layers) {
        for (auto& cell : layer) {
            fill_uniform(cell.w_ih, lstm_bound);
            fill_uniform(cell.w_hh, lstm_bound);
            fill_uniform(cell.b_ih, lstm_bound);
            fill_uniform(cell.b_hh, lstm_bound);
            const int H = cfg.d_hidden;
            for (int i = H; i < 2 * H; ++i) { // forget-gate block
                cell.b_ih.value[i] = T(1);
                cell.b_hh.value[i] = T(0);
            }
        }
    }
    fill_uniform(params.w_out, 1.0 / std::sqrt(2.0 * cfg.d_hidden));
    fill_uniform(params.b_out, 1.0 / std::sqrt(2.0 * cfg.d_hidden));
    std::fill(params.bn.gamma.value.begin(), params.bn.gamma.value.end(), T(1));
    std::fill(params.bn.beta.value.begin(), params.bn.beta.value.end(), T(0));
}

template <typename T>
CneParams<T> make_cne(const CneConfig& cfg, Rng& rng) {
    CneParams<T> p(cfg);
    init_params(p, rng);
    return p;
}

// Gated-embedding forward pass over a time-major batch. l_m is [K*B, d_in]
// (row t*B + b is step t of batch element b); indicator holds the matching
// 0/1 puncture entries. Returns per-position logits [K*B, 1]; positive
// favors bit 1.
//
// With the puncture embedding disabled the gate path is skipped entirely and
// the projected LLRs feed batch normalization directly (ablation mode).
template <typename T>
Var cne_forward(Tape<T>& tape, Var l_m, const std::vector<T>& indicator, CneParams<T>& params,
                bool training, int K, int B) {
    const CneConfig& cfg = params.cfg;
    if (tape.cols(l_m) != cfg.d_in) throw ShapeError("cne_forward: input width != d_in");
    if (tape.rows(l_m) != K * B) throw ShapeError("cne_forward: rows != K*B");

    Var embed = tape.affine(l_m, tape.param(params.w_proj), tape.param(params.b_proj));
    if (cfg.puncture_embedding) {
        if (indicator.size() != static_cast<size_t>(K) * B * cfg.d_in)
            throw ShapeError("cne_forward: indicator size mismatch");
        Var p = tape.leaf(K * B, cfg.d_in, indicator);
        Var gate = tape.sigmoid(tape.affine(p, tape.param(params.w_punc), tape.param(params.b_punc)));
        embed = tape.mul(embed, gate);
    }
    Var normed = tape.batchnorm(embed, params.bn, training);

    Var seq = normed;
    for (int l = 0; l < cfg.n_layer; ++l) {
        Var fwd = lstm_layer(tape, seq, K, B, params.layers[l][0], false);
        Var bwd = lstm_layer(tape, seq, K, B, params.layers[l][1], true);
        seq = tape.concat_cols(fwd, bwd);
    }
    return tape.affine(seq, tape.param(params.w_out), tape.param(params.b_out));
}

// Iterative turbo decoding with a single shared engine. All six inputs are
// time-major [K*B] columns. Per iteration:
//   step 1: engine 0 on [llr_s + ext, llr_z] with indicators [p_s, p_z]
//   step 2: interleave(engine0 output - ext)
//   step 3: engine 1 on [step2, llr_z'] with indicators [pi(p_s), p_z']
//   step 4: ext = deinterleave(engine1 output - step2)
// The final output deinterleaves the last engine-1 output directly, so the
// intrinsic component stays in.
template <typename T>
Var cne_turbo_decode(Tape<T>& tape, Var llr_s, Var llr_z, Var llr_zp, const std::vector<T>& p_s,
                     const std::vector<T>& p_z, const std::vector<T>& p_zp,
                     const QppInterleaver& interleaver, CneParams<T>& params, int n_iter,
                     bool training, int B) {
    const int K = interleaver.K;
    if (tape.rows(llr_s) != K * B || tape.cols(llr_s) != 1)
        throw ShapeError("cne_turbo_decode: llr_s must be [K*B, 1]");
    if (static_cast<size_t>(K) * B != p_s.size()) throw ShapeError("cne_turbo_decode: p_s size");

    // interleaved systematic indicator (plain data, no gradient)
    std::vector<T> p_s_int(p_s.size());
    for (int k = 0; k < K; ++k)
        for (int b = 0; b < B; ++b)
            p_s_int[static_cast<size_t>(k) * B + b] = p_s[static_cast<size_t>(interleaver.table[k]) * B + b];

    auto stack2 = [&](const std::vector<T>& a, const std::vector<T>& b) {
        std::vector<T> out(a.size() * 2);
        for (size_t i = 0; i < a.size(); ++i) {
            out[2 * i] = a[i];
            out[2 * i + 1] = b[i];
        }
        return out;
    };
    const std::vector<T> ind0 = stack2(p_s, p_z);
    const std::vector<T> ind1 = stack2(p_s_int, p_zp);

    Var ext = tape.zeros(K * B, 1); // extrinsic prior starts at zero
    Var out1 = ext;
    for (int it = 0; it < n_iter; ++it) {
        Var in0 = tape.concat_cols(tape.add(llr_s, ext), llr_z);
        Var dec0 = cne_forward(tape, in0, ind0, params, training, K, B);
        Var inter0 = tape.permute_row_blocks(tape.sub(dec0, ext), interleaver.table, B);
        Var in1 = tape.concat_cols(inter0, llr_zp);
        out1 = cne_forward(tape, in1, ind1, params, training, K, B);
        ext = tape.permute_row_blocks(tape.sub(out1, inter0), interleaver.inverse, B);
    }
    return tape.permute_row_blocks(out1, interleaver.inverse, B);
}

// Convenience single-block inference helpers (B = 1, column-major trivial).

template <typename T>
std::vector<double> cne_decode_block(CneParams<T>& params, const std::vector<double>& llr,
                                     const std::vector<uint8_t>& indicator, int K) {
    Tape<T> tape;
    std::vector<T> l(llr.size());
    std::vector<T> ind(indicator.size());
    for (size_t i = 0; i < llr.size(); ++i) l[i] = static_cast<T>(llr[i]);
    for (size_t i = 0; i < indicator.size(); ++i) ind[i] = static_cast<T>(indicator[i]);
    Var x = tape.leaf(K, params.cfg.d_in, std::move(l));
    Var y = cne_forward(tape, x, ind, params, false, K, 1);
    std::vector<double> out(K);
    for (int i = 0; i < K; ++i) out[i] = static_cast<double>(tape.value(y)[i]);
    return out;
}

template <typename T>
std::vector<double> cne_turbo_decode_block(CneParams<T>& params, const TurboLlrs& in,
                                           const QppInterleaver& interleaver, int n_iter) {
    const int K = interleaver.K;
    Tape<T> tape;
    auto to_leaf = [&](const std::vector<double>& v) {
        std::vector<T> data(v.size());
        for (size_t i = 0; i < v.size(); ++i) data[i] = static_cast<T>(v[i]);
        return tape.leaf(K, 1, std::move(data));
    };
    auto to_t = [](const std::vector<uint8_t>& v) {
        std::vector<T> data(v.size());
        for (size_t i = 0; i < v.size(); ++i) data[i] = static_cast<T>(v[i]);
        return data;
    };
    Var y = cne_turbo_decode(tape, to_leaf(in.llr_s), to_leaf(in.llr_z), to_leaf(in.llr_zp),
                             to_t(in.p_s), to_t(in.p_z), to_t(in.p_zp), interleaver, params, n_iter,
                             false, 1);
    std::vector<double> out(K);
    for (int i = 0; i < K; ++i) out[i] = static_cast<double>(tape.value(y)[i]);
    return out;
}

} // namespace fec

#endif
