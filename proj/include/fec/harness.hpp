#ifndef FEC_HARNESS_HPP
#define FEC_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fec/channel.hpp"
#include "fec/classical.hpp"
#include "fec/cne.hpp"
#include "fec/training.hpp"

namespace fec {

struct BerRow {
    std::string code;
    int K = 0;
    std::string rate;
    std::string channel;
    double snr_db = 0.0;   // Es/N0
    double eb_n0_db = 0.0;
    long long blocks = 0;
    long long bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0, ci_high = 0.0; // binomial 95% normal approximation
    std::string decoder;
    uint64_t seed = 0;
};

struct BerReport {
    std::vector<BerRow> rows;
    void sort_rows();
    std::string to_csv() const;
    void write_csv(const std::string& path) const;
    // plot-data file: x=eb_n0_db, y=ber, series=decoder/rate
    void write_plot_data(const std::string& path) const;
};

struct ChannelConfig {
    std::string type = "awgn"; // awgn | rayleigh
    int taps = 3;
    int tx = 4, rx = 4;
    int fft_size = 64;
    std::string modulation = "bpsk"; // bpsk | qam16 (rayleigh uses qam16)
    std::string pilot = "dft";
    bool perfect_csi = false;
};

struct SweepConfig {
    std::string code = "conv";      // conv | turbo
    std::string decoder = "viterbi"; // viterbi | bcjr | cne
    std::vector<int> lengths{120};
    std::vector<std::string> rates{"1/2"};
    std::vector<double> snrs_db{0.0};
    bool snr_is_ebn0 = true;
    ChannelConfig channel;
    long long blocks = 1000;
    long long early_stop_errors = 500; // 0 disables early stopping
    int iterations = 3;                // bcjr / cne turbo
    int traceback = 120;
    bool terminate_conv = true;
    uint64_t seed = 1;
    std::string checkpoint; // cne decoder
    int threads = 1;
    std::string out;
    std::string plot_out;
};

SweepConfig sweep_config_from_json_file(const std::string& path);

BerReport run_sweep(const SweepConfig& cfg);

// Single (code, rate, K, snr) cell; used by `simulate` and the sweeps.
BerRow run_cell(const SweepConfig& cfg, int K, const std::string& rate, double snr_db_input,
                CneParams<float>* cne);

} // namespace fec

#endif
