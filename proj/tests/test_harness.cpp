#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "fec/costmodel.hpp"
#include "fec/harness.hpp"

using namespace fec;

TEST_CASE("viterbi at high snr is error free") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {120};
    cfg.rates = {"1/2"};
    cfg.snrs_db = {40.0};
    cfg.snr_is_ebn0 = false;
    cfg.blocks = 100;
    cfg.early_stop_errors = 0;
    BerReport report = run_sweep(cfg);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].bit_errors == 0);
    CHECK(report.rows[0].ber == 0.0);
}

TEST_CASE("sweeps are deterministic and worker-count independent") {
    SweepConfig cfg;
    cfg.code = "turbo";
    cfg.decoder = "bcjr";
    cfg.lengths = {40};
    cfg.rates = {"1/3"};
    cfg.snrs_db = {2.0};
    cfg.blocks = 300;
    cfg.early_stop_errors = 0;
    cfg.iterations = 2;
    cfg.seed = 5;
    BerReport a = run_sweep(cfg);
    BerReport b = run_sweep(cfg);
    cfg.threads = 2;
    BerReport c = run_sweep(cfg);
    CHECK(a.rows[0].bit_errors == b.rows[0].bit_errors);
    CHECK(a.rows[0].bit_errors == c.rows[0].bit_errors);
}

TEST_CASE("report rows recompute and are sorted") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {40, 120};
    cfg.rates = {"1/2", "3/4"};
    cfg.snrs_db = {2.0, 4.0};
    cfg.blocks = 20;
    cfg.early_stop_errors = 0;
    BerReport report = run_sweep(cfg);
    CHECK(report.rows.size() == 8); // |snrs| x |rates| x |lengths|
    for (const auto& r : report.rows) {
        CHECK(r.ber ==
              doctest::Approx(static_cast<double>(r.bit_errors) / (r.blocks * r.K)).epsilon(1e-12));
        // ci from the binomial normal approximation
        const double n = static_cast<double>(r.blocks) * r.K;
        const double half = 1.96 * std::sqrt(std::max(r.ber * (1.0 - r.ber), 0.0) / n);
        CHECK(r.ci_high == doctest::Approx(std::min(1.0, r.ber + half)).epsilon(1e-9));
        CHECK(r.ci_low == doctest::Approx(std::max(0.0, r.ber - half)).epsilon(1e-9));
    }
    for (size_t i = 1; i < report.rows.size(); ++i) {
        const auto& p = report.rows[i - 1];
        const auto& q = report.rows[i];
        const bool sorted = p.decoder < q.decoder || (p.decoder == q.decoder && p.rate < q.rate) ||
                            (p.decoder == q.decoder && p.rate == q.rate && p.snr_db <= q.snr_db);
        CHECK(sorted);
    }
}

TEST_CASE("early stopping halts after enough errors") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {120};
    cfg.rates = {"1/2"};
    cfg.snrs_db = {-10.0};
    cfg.snr_is_ebn0 = false;
    cfg.blocks = 100000;
    cfg.early_stop_errors = 200;
    BerReport report = run_sweep(cfg);
    CHECK(report.rows[0].blocks < 100000);
    CHECK(report.rows[0].bit_errors >= 200);
}

TEST_CASE("eb/n0 conversion on the real bpsk channel") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {40};
    cfg.rates = {"1/2"};
    cfg.snrs_db = {3.0};
    cfg.snr_is_ebn0 = true;
    cfg.blocks = 5;
    BerReport report = run_sweep(cfg);
    // Es/N0 = Eb/N0 + 10log10(2R) = 3 + 0 for rate 1/2 bpsk
    CHECK(report.rows[0].snr_db == doctest::Approx(3.0));
    CHECK(report.rows[0].eb_n0_db == doctest::Approx(3.0));
}

TEST_CASE("csv and plot outputs") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {40};
    cfg.rates = {"1/2"};
    cfg.snrs_db = {6.0};
    cfg.blocks = 10;
    cfg.out = "report_test.csv";
    cfg.plot_out = "plot_test.csv";
    run_sweep(cfg);
    std::ifstream is("report_test.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "code,K,rate,channel,snr_db,eb_n0_db,blocks,bit_errors,ber,ci_low,ci_high,decoder,seed");
    std::ifstream ps("plot_test.csv");
    std::getline(ps, header);
    CHECK(header == "x,y,series");
    std::remove("report_test.csv");
    std::remove("plot_test.csv");
}

TEST_CASE("config validation") {
    SweepConfig cfg;
    cfg.decoder = "bcjr";
    cfg.code = "conv";
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
    cfg.code = "turbo";
    cfg.decoder = "viterbi";
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
    cfg.decoder = "cne";
    cfg.checkpoint = "";
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
    cfg.checkpoint = "/nonexistent/file.bin";
    CHECK_THROWS_AS(run_sweep(cfg), CheckpointError);
}

TEST_CASE("rayleigh viterbi pipeline at high snr") {
    SweepConfig cfg;
    cfg.code = "conv";
    cfg.decoder = "viterbi";
    cfg.lengths = {40};
    cfg.rates = {"1/2"};
    cfg.snrs_db = {60.0};
    cfg.snr_is_ebn0 = false;
    cfg.blocks = 20;
    cfg.early_stop_errors = 0;
    cfg.channel.type = "rayleigh";
    BerReport report = run_sweep(cfg);
    CHECK(report.rows[0].bit_errors == 0);
    CHECK(report.rows[0].channel == "rayleigh");
}

TEST_CASE("cost model reproduces the published parameter counts") {
    CostModelInput conv;
    conv.code = "conv";
    CostReport rc = cost_model(conv);
    CHECK(rc.trainable_parameters == 2237441);
    CHECK(rc.tied_parameters == 2237441);
    CHECK(rc.macs_per_decoded_bit == 2245632);
    CHECK(rc.table_macs_per_decoded_bit == 2245632);

    CostModelInput turbo;
    turbo.code = "turbo";
    CostReport rt = cost_model(turbo);
    CHECK(rt.trainable_parameters == 6715398);
    CHECK(rt.tied_parameters == 2237441);
    CHECK(rt.macs_per_decoded_bit == 6LL * 2245632);
    CHECK(rt.table_macs_per_decoded_bit == 16168550);
}

TEST_CASE("cost model tiny config by hand enumeration") {
    CostModelInput in;
    in.code = "conv";
    in.cfg.d_embed = 1;
    in.cfg.d_hidden = 1;
    in.cfg.n_layer = 1;
    CostReport r = cost_model(in);
    // proj 1x2+1=3, punc 3, bn 2, out 2*1+1=3,
    // lstm per dir: w_ih 4*1*1=4, w_hh 4, b_ih 4, b_hh 4 -> 16; both dirs 32
    CHECK(r.trainable_parameters == 3 + 3 + 2 + 32 + 3);
}

TEST_CASE("tied parameter count equals the checkpoint element total") {
    CneConfig cfg;
    cfg.d_embed = 8;
    cfg.d_hidden = 12;
    cfg.n_layer = 2;
    Rng rng(1);
    CneParams<float> params = make_cne<float>(cfg, rng);
    CostModelInput in;
    in.code = "turbo";
    in.cfg = cfg;
    CHECK(cost_model(in).tied_parameters == static_cast<long long>(params.parameter_count()));
}

TEST_CASE("cost report text carries the breakdown") {
    CostModelInput in;
    in.code = "turbo";
    std::string text = cost_model(in).to_text();
    CHECK(text.find("6715398") != std::string::npos);
    CHECK(text.find("16168550") != std::string::npos);
    CHECK(text.find("T_CNE = T_proj + T_BN + T_LSTM + T_out") != std::string::npos);
    CHECK(text.find("lstm0") != std::string::npos);
}
