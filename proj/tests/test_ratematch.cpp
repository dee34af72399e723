#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "fec/configio.hpp"
#include "fec/ratematch.hpp"
#include "fec/rng.hpp"

using namespace fec;

TEST_CASE("standard patterns are rate exact") {
    for (int K : {120, 240, 480, 960}) {
        for (const char* name : {"1/2", "2/3", "3/4", "5/6"}) {
            PuncturingPattern p = standard_pattern(name);
            const int E = p.kept_count(K);
            // E * R == K exactly
            CHECK(static_cast<long long>(E) * p.rate_num == static_cast<long long>(K) * p.rate_den);
        }
    }
}

TEST_CASE("puncture_conv lengths and identity pattern") {
    Rng rng(2);
    std::vector<uint8_t> z = rng.random_bits(120), zp = rng.random_bits(120);

    PuncturingPattern half = standard_pattern("1/2");
    std::vector<uint8_t> tx = puncture_conv(z, zp, half);
    REQUIRE(tx.size() == 240);
    for (int t = 0; t < 120; ++t) {
        CHECK(tx[2 * t] == z[t]); // serialized z before z'
        CHECK(tx[2 * t + 1] == zp[t]);
    }

    CHECK(puncture_conv(z, zp, standard_pattern("3/4")).size() == 160);
    CHECK(puncture_conv(z, zp, standard_pattern("5/6")).size() == 144);
}

TEST_CASE("derate_conv marks stolen positions") {
    PuncturingPattern p23 = standard_pattern("2/3");
    const int K = 16;
    std::vector<double> rx(p23.kept_count(K));
    Rng rng(3);
    for (auto& v : rx) v = rng.gaussian();
    ConvLlrPlane plane = derate_conv(rx, p23, K);
    for (int t = 0; t < K; ++t) {
        CHECK(plane.indicator[2 * t] == 1); // z never stolen at rate 2/3
        if (t % 2 == 1) {
            CHECK(plane.indicator[2 * t + 1] == 0);
            CHECK(plane.llr[2 * t + 1] == 0.0);
        } else {
            CHECK(plane.indicator[2 * t + 1] == 1);
        }
    }

    PuncturingPattern half = standard_pattern("1/2");
    std::vector<double> rx2(2 * K);
    for (auto& v : rx2) v = rng.gaussian();
    ConvLlrPlane all = derate_conv(rx2, half, K);
    for (auto i : all.indicator) CHECK(i == 1);
    CHECK(all.llr == rx2);
}

TEST_CASE("puncture/derate round trip") {
    Rng rng(7);
    for (const char* name : {"1/2", "2/3", "3/4", "5/6"}) {
        PuncturingPattern p = standard_pattern(name);
        const int K = 60;
        std::vector<double> z(K), zp(K);
        for (auto& v : z) v = rng.gaussian();
        for (auto& v : zp) v = rng.gaussian();
        std::vector<double> tx = puncture_conv_llr(z, zp, p);
        ConvLlrPlane plane = derate_conv(tx, p, K);
        // indicator/value consistency
        for (size_t i = 0; i < plane.llr.size(); ++i)
            if (!plane.indicator[i]) CHECK(plane.llr[i] == 0.0);
        // re-puncturing restores the received values bit-exactly
        std::vector<double> z2(K), zp2(K);
        for (int t = 0; t < K; ++t) {
            z2[t] = plane.llr[2 * t];
            zp2[t] = plane.llr[2 * t + 1];
        }
        CHECK(puncture_conv_llr(z2, zp2, p) == tx);
    }
}

TEST_CASE("derate_conv length check") {
    PuncturingPattern p = standard_pattern("3/4");
    std::vector<double> rx(10);
    CHECK_THROWS_AS(derate_conv(rx, p, 12), FramingError);
}

TEST_CASE("turbo plan full buffer") {
    const int K = 120;
    RateMatchPlan plan = turbo_rate_match_plan(K, 3 * K);
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < plan.E; ++e) seen.insert({plan.stream[e], plan.position[e]});
    CHECK(static_cast<int>(seen.size()) == 3 * K); // every coded bit exactly once
}

TEST_CASE("turbo plan selection cardinality") {
    const int K = 120;
    RateMatchPlan plan = turbo_rate_match_plan(K, 2 * K);
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < plan.E; ++e) seen.insert({plan.stream[e], plan.position[e]});
    CHECK(static_cast<int>(seen.size()) == plan.E); // no repeats below the full buffer

    // rate 5/6: E = 1.2K selected, complement 1.8K punctured
    RateMatchPlan p56 = turbo_rate_match_plan(K, 6 * K / 5);
    std::set<std::pair<int, int>> sel;
    for (int e = 0; e < p56.E; ++e) sel.insert({p56.stream[e], p56.position[e]});
    CHECK(static_cast<int>(sel.size()) == 6 * K / 5);
    CHECK(3 * K - static_cast<int>(sel.size()) == 9 * K / 5);
}

TEST_CASE("derate_turbo indicators and combining") {
    const int K = 120;
    const int E = 3 * K / 2;
    RateMatchPlan plan = turbo_rate_match_plan(K, E);
    Rng rng(5);
    std::vector<double> rx(E);
    for (auto& v : rx) v = rng.gaussian();
    TurboLlrs out = derate_turbo(rx, plan);
    int ones = 0;
    for (int i = 0; i < K; ++i) ones += out.p_s[i] + out.p_z[i] + out.p_zp[i];
    CHECK(ones == E); // counting repeats once; E below buffer size has no repeats

    // zero input -> zero values, same indicators
    std::vector<double> zeros(E, 0.0);
    TurboLlrs zout = derate_turbo(zeros, plan);
    for (int i = 0; i < K; ++i) {
        CHECK(zout.llr_s[i] == 0.0);
        CHECK(zout.llr_z[i] == 0.0);
        CHECK(zout.llr_zp[i] == 0.0);
        CHECK(zout.p_s[i] == out.p_s[i]);
    }
    for (int i = 0; i < K; ++i) {
        if (!out.p_s[i]) CHECK(out.llr_s[i] == 0.0);
        if (!out.p_z[i]) CHECK(out.llr_z[i] == 0.0);
        if (!out.p_zp[i]) CHECK(out.llr_zp[i] == 0.0);
    }
}

TEST_CASE("turbo select/derate inversion") {
    const int K = 40;
    for (int E : {3 * K, 2 * K, 3 * K / 2, 6 * K / 5}) {
        RateMatchPlan plan = turbo_rate_match_plan(K, E);
        Rng rng(E);
        std::vector<double> rx(E);
        for (auto& v : rx) v = rng.gaussian();
        TurboLlrs out = derate_turbo(rx, plan);
        // re-selecting the de-rate-matched values restores the input exactly
        CHECK(turbo_select_llr(out.llr_s, out.llr_z, out.llr_zp, plan) == rx);
    }
}

TEST_CASE("repeated selection combines by summation") {
    const int K = 40;
    RateMatchPlan plan = turbo_rate_match_plan(K, 4 * K); // wraps past the full buffer
    std::vector<double> rx(plan.E, 1.0);
    TurboLlrs out = derate_turbo(rx, plan);
    double total = 0.0;
    for (int i = 0; i < K; ++i) total += out.llr_s[i] + out.llr_z[i] + out.llr_zp[i];
    CHECK(total == doctest::Approx(static_cast<double>(plan.E)));
}

TEST_CASE("turbo plan rejects E below K") {
    CHECK_THROWS_AS(turbo_rate_match_plan(120, 100), ConfigError);
}

TEST_CASE("derate_turbo length check") {
    RateMatchPlan plan = turbo_rate_match_plan(40, 60);
    std::vector<double> rx(59);
    CHECK_THROWS_AS(derate_turbo(rx, plan), FramingError);
}

TEST_CASE("pattern file round trip") {
    PuncturingPattern p = standard_pattern("5/6");
    const std::string path = "pattern_roundtrip_test.json";
    save_pattern_file(path, p);
    PuncturingPattern q = load_pattern_file(path);
    CHECK(q.name == p.name);
    CHECK(q.period == p.period);
    CHECK(q.keep == p.keep);
    CHECK(q.rate_num == p.rate_num);
    std::remove(path.c_str());
}
