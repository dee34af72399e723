#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fec/channel.hpp"
#include "fec/classical.hpp"
#include "fec/codec.hpp"
#include "fec/configio.hpp"
#include "fec/rng.hpp"
#include "test_util.hpp"

using namespace fec;

namespace {

ConvLlrPlane plane_from_codeword(const std::vector<uint8_t>& z, const std::vector<uint8_t>& zp,
                                 double magnitude) {
    ConvLlrPlane plane;
    plane.steps = static_cast<int>(z.size());
    plane.llr.resize(2 * z.size());
    plane.indicator.assign(2 * z.size(), 1);
    for (size_t t = 0; t < z.size(); ++t) {
        plane.llr[2 * t] = magnitude * (2.0 * z[t] - 1.0);
        plane.llr[2 * t + 1] = magnitude * (2.0 * zp[t] - 1.0);
    }
    return plane;
}

} // namespace

TEST_CASE("viterbi decodes noiseless codewords") {
    Rng rng(21);
    Trellis t = wifi_cc_k7();
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<uint8_t> bits = rng.random_bits(64);
        auto [z, zp] = conv_encode(bits, t, true);
        ConvLlrPlane plane = plane_from_codeword(z, zp, 4.0);
        std::vector<uint8_t> decoded = viterbi_decode(plane, t, 120, true);
        decoded.resize(64);
        CHECK(decoded == bits);
    }
}

TEST_CASE("viterbi corrects a single flipped llr") {
    Rng rng(22);
    Trellis t = wifi_cc_k7();
    std::vector<uint8_t> bits = rng.random_bits(64);
    auto [z, zp] = conv_encode(bits, t, true);
    ConvLlrPlane plane = plane_from_codeword(z, zp, 1.0);
    plane.llr[37] = -plane.llr[37];
    std::vector<uint8_t> decoded = viterbi_decode(plane, t, 120, true);
    decoded.resize(64);
    CHECK(decoded == bits);
}

TEST_CASE("viterbi equals the exhaustive metric maximizer at K=12") {
    Rng rng(23);
    Trellis t = wifi_cc_k7();
    const int K = 12;
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        ConvLlrPlane plane;
        plane.steps = K;
        plane.llr.resize(2 * K);
        plane.indicator.assign(2 * K, 1);
        for (auto& v : plane.llr) v = rng.gaussian();
        std::vector<uint8_t> expect;
        if (!testutil::ref_viterbi_exhaustive(plane.llr, K, expect)) continue;
        ++compared;
        CHECK(viterbi_decode(plane, t, K, false) == expect);
    }
    CHECK(compared >= 30); // ties are rare with continuous llrs
}

TEST_CASE("puncture neutrality: zero llr equals excluding the branch term") {
    Rng rng(24);
    const int K = 10;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> llr(2 * K);
        for (auto& v : llr) v = rng.gaussian();
        const int zeroed = static_cast<int>(rng.below(2 * K));
        llr[zeroed] = 0.0;
        std::vector<uint8_t> with_zero, skipping;
        const bool u1 = testutil::ref_viterbi_exhaustive(llr, K, with_zero);
        const bool u2 = testutil::ref_viterbi_exhaustive(llr, K, skipping, zeroed);
        if (u1 && u2) CHECK(with_zero == skipping);

        ConvLlrPlane plane;
        plane.steps = K;
        plane.llr = llr;
        plane.indicator.assign(2 * K, 1);
        plane.indicator[zeroed] = 0;
        if (u1) CHECK(viterbi_decode(plane, wifi_cc_k7(), K, false) == with_zero);
    }
}

TEST_CASE("traceback depth covering the block equals full-block decoding") {
    Rng rng(25);
    Trellis t = wifi_cc_k7();
    const int K = 48;
    for (int trial = 0; trial < 5; ++trial) {
        ConvLlrPlane plane;
        plane.steps = K;
        plane.llr.resize(2 * K);
        plane.indicator.assign(2 * K, 1);
        for (auto& v : plane.llr) v = rng.gaussian();
        CHECK(viterbi_decode(plane, t, K, false) == viterbi_decode(plane, t, 3 * K, false));
    }
}

TEST_CASE("windowed traceback matches full block on clean input") {
    Rng rng(26);
    Trellis t = wifi_cc_k7();
    std::vector<uint8_t> bits = rng.random_bits(200);
    auto [z, zp] = conv_encode(bits, t, true);
    ConvLlrPlane plane = plane_from_codeword(z, zp, 2.0);
    // mild noise that stays decodable
    for (auto& v : plane.llr) v += 0.3 * rng.gaussian();
    std::vector<uint8_t> windowed = viterbi_decode(plane, t, 40, true);
    std::vector<uint8_t> full = viterbi_decode(plane, t, plane.steps, true);
    CHECK(windowed == full);
}

TEST_CASE("maxlog siso noiseless sign recovery") {
    Rng rng(27);
    Trellis rsc = lte_turbo_constituent();
    std::vector<uint8_t> bits = rng.random_bits(32);
    std::vector<uint8_t> parity = testutil::ref_rsc_parity(bits);
    std::vector<double> sys(32), par(32), prior(32, 0.0);
    for (int i = 0; i < 32; ++i) {
        sys[i] = 8.0 * (2.0 * bits[i] - 1.0);
        par[i] = 8.0 * (2.0 * parity[i] - 1.0);
    }
    SisoBeliefs beliefs = maxlog_siso(sys, par, prior, rsc, SisoTermination::Unterminated);
    for (int i = 0; i < 32; ++i) CHECK((beliefs.llr_app[i] > 0.0 ? 1 : 0) == bits[i]);
}

TEST_CASE("maxlog siso equals the exhaustive oracle at K=8") {
    Rng rng(28);
    Trellis rsc = lte_turbo_constituent();
    const int K = 8;
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> sys(K), par(K), prior(K);
        for (auto& v : sys) v = rng.gaussian();
        for (auto& v : par) v = rng.gaussian();
        for (auto& v : prior) v = 0.5 * rng.gaussian();
        SisoBeliefs b = maxlog_siso(sys, par, prior, rsc, SisoTermination::Unterminated);
        std::vector<double> oracle = testutil::ref_maxlog_app(sys, par, prior);
        for (int k = 0; k < K; ++k) CHECK(std::abs(b.llr_app[k] - oracle[k]) < 1e-9);
        // extrinsic decomposition
        for (int k = 0; k < K; ++k)
            CHECK(b.llr_ext[k] == doctest::Approx(b.llr_app[k] - prior[k] - sys[k]).epsilon(1e-12));
    }
}

TEST_CASE("maxlog homogeneity is exact") {
    Rng rng(29);
    Trellis rsc = lte_turbo_constituent();
    const int K = 24;
    std::vector<double> sys(K), par(K), prior(K);
    for (auto& v : sys) v = rng.gaussian();
    for (auto& v : par) v = rng.gaussian();
    for (auto& v : prior) v = rng.gaussian();
    SisoBeliefs a = maxlog_siso(sys, par, prior, rsc, SisoTermination::Unterminated);
    // doubling is exact in floating point, so max-log scales exactly
    std::vector<double> sys2(K), par2(K), prior2(K);
    for (int i = 0; i < K; ++i) {
        sys2[i] = 2.0 * sys[i];
        par2[i] = 2.0 * par[i];
        prior2[i] = 2.0 * prior[i];
    }
    SisoBeliefs b = maxlog_siso(sys2, par2, prior2, rsc, SisoTermination::Unterminated);
    for (int i = 0; i < K; ++i) CHECK(b.llr_app[i] == 2.0 * a.llr_app[i]);
}

TEST_CASE("classical turbo decoder on noiseless rate 1/3") {
    Rng rng(30);
    Trellis rsc = lte_turbo_constituent();
    QppInterleaver pi = qpp_for_k(40);
    std::vector<uint8_t> bits = rng.random_bits(40);
    CodewordStreams cw = turbo_encode(bits, pi, rsc, false);
    std::vector<double> s(40), z(40), zp(40);
    for (int i = 0; i < 40; ++i) {
        s[i] = 5.0 * (2.0 * cw.systematic[i] - 1.0);
        z[i] = 5.0 * (2.0 * cw.parity0[i] - 1.0);
        zp[i] = 5.0 * (2.0 * cw.parity1[i] - 1.0);
    }
    TurboDecodeResult res = turbo_decode_classical(s, z, zp, pi, rsc, 1);
    CHECK(res.bits == bits);
    CHECK(res.llr_per_iteration.size() == 1);
}

TEST_CASE("two turbo iterations equal hand-chained exhaustive sisos at K=8") {
    Rng rng(31);
    Trellis rsc = lte_turbo_constituent();
    QppInterleaver pi = qpp_build(8, 3, 4);
    const int K = 8;
    std::vector<double> s(K), z(K), zp(K);
    for (auto& v : s) v = rng.gaussian();
    for (auto& v : z) v = rng.gaussian();
    for (auto& v : zp) v = rng.gaussian();

    TurboDecodeResult res = turbo_decode_classical(s, z, zp, pi, rsc, 2);

    // oracle: chain ref_maxlog_app through the same extrinsic schedule
    std::vector<double> s_int = pi.interleave(s);
    std::vector<double> ext1(K, 0.0);
    std::vector<double> app1_deint(K);
    for (int it = 0; it < 2; ++it) {
        std::vector<double> app0 = testutil::ref_maxlog_app(s, z, ext1);
        std::vector<double> ext0(K), ext0_int(K);
        for (int i = 0; i < K; ++i) ext0[i] = app0[i] - ext1[i] - s[i];
        ext0_int = pi.interleave(ext0);
        std::vector<double> app1 = testutil::ref_maxlog_app(s_int, zp, ext0_int);
        std::vector<double> ext1_int(K);
        for (int i = 0; i < K; ++i) ext1_int[i] = app1[i] - ext0_int[i] - s_int[i];
        ext1 = pi.deinterleave(ext1_int);
        app1_deint = pi.deinterleave(app1);
    }
    for (int i = 0; i < K; ++i)
        CHECK(res.llr_per_iteration[1][i] == doctest::Approx(app1_deint[i]).epsilon(1e-9));
}

TEST_CASE("turbo iteration gain at low snr") {
    // BER after 3 iterations is below BER after 1 beyond two sigmas
    Trellis rsc = lte_turbo_constituent();
    QppInterleaver pi = qpp_for_k(120);
    RateMatchPlan plan = turbo_rate_match_plan(120, 360);
    const double esn0_db = ebn0_to_esn0_db(1.0, 1.0 / 3.0, 1);
    const NoiseSpec noise = NoiseSpec::from_snr_db(esn0_db);
    long long err1 = 0, err3 = 0, total = 0;
    const int blocks = 2000;
    for (int blk = 0; blk < blocks; ++blk) {
        Rng rng = Rng::derive(99, 1234, blk);
        std::vector<uint8_t> bits = rng.random_bits(120);
        CodewordStreams cw = turbo_encode(bits, pi, rsc, false);
        std::vector<uint8_t> tx = turbo_rate_match(cw, plan);
        std::vector<double> sym(tx.size());
        for (size_t i = 0; i < tx.size(); ++i) sym[i] = 2.0 * tx[i] - 1.0;
        std::vector<double> rx = awgn(sym, noise, rng);
        std::vector<double> llr(rx.size());
        for (size_t i = 0; i < rx.size(); ++i) llr[i] = 2.0 * rx[i] / noise.sigma2;
        TurboLlrs planes = derate_turbo(llr, plan);
        TurboDecodeResult res =
            turbo_decode_classical(planes.llr_s, planes.llr_z, planes.llr_zp, pi, rsc, 3);
        for (int i = 0; i < 120; ++i) {
            err3 += res.bits[i] != bits[i];
            err1 += ((res.llr_per_iteration[0][i] > 0.0 ? 1 : 0) != bits[i]);
            ++total;
        }
    }
    const double p1 = static_cast<double>(err1) / total;
    const double p3 = static_cast<double>(err3) / total;
    const double sigma = std::sqrt(p1 * (1 - p1) / total + p3 * (1 - p3) / total);
    CHECK(p3 < p1 - 2.0 * sigma);
}
