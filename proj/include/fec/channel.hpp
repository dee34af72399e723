#ifndef FEC_CHANNEL_HPP
#define FEC_CHANNEL_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fec/errors.hpp"
#include "fec/rng.hpp"

namespace fec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Symbol-energy-referenced noise description: sigma2 = 10^(-snr_db/10) with
// unit average symbol energy. Complex channels split sigma2 equally across
// the real and imaginary parts.
struct NoiseSpec {
    double snr_db = 0.0;
    double sigma2 = 1.0;

    static NoiseSpec from_snr_db(double snr_db) {
        NoiseSpec n;
        n.snr_db = snr_db;
        n.sigma2 = std::pow(10.0, -snr_db / 10.0);
        return n;
    }
};

// Es/N0 here means Es/sigma2 with sigma2 the total noise variance. For the
// real-valued BPSK channel the physical N0 is 2*sigma2 (noise occupies one
// real dimension), so the standard Eb/N0 picks up a factor 2; complex
// channels use N0 = sigma2 directly.
inline double ebn0_to_esn0_db(double ebn0_db, double rate, int bits_per_symbol,
                              bool real_channel = true) {
    return ebn0_db + 10.0 * std::log10((real_channel ? 2.0 : 1.0) * rate * bits_per_symbol);
}
inline double esn0_to_ebn0_db(double esn0_db, double rate, int bits_per_symbol,
                              bool real_channel = true) {
    return esn0_db - 10.0 * std::log10((real_channel ? 2.0 : 1.0) * rate * bits_per_symbol);
}

// Gray-labeled constellation with unit average energy. Bit labels are
// MSB-first per symbol; partition(i, b) lists the points whose i-th bit is b.
class Constellation {
  public:
    static Constellation bpsk();
    static Constellation qam16();

    int order() const { return static_cast<int>(points_.size()); }
    int bits_per_symbol() const { return bits_; }
    cplx point(int label) const { return points_[label]; }
    const std::vector<cplx>& points() const { return points_; }
    const std::vector<int>& partition(int bit_index, int bit_value) const {
        return partitions_[2 * bit_index + bit_value];
    }
    const std::string& name() const { return name_; }

  private:
    std::string name_;
    int bits_ = 1;
    std::vector<cplx> points_;                 // indexed by label
    std::vector<std::vector<int>> partitions_; // [2*bit + value] -> labels
    void build_partitions();
};

// Map bits to symbols, MSB-first groups of log2(M) bits. BPSK: 0 -> -1, 1 -> +1.
std::vector<cplx> modulate(const std::vector<uint8_t>& bits, const Constellation& c);

// Real-valued AWGN: y = x + n with n ~ N(0, sigma2) i.i.d.
std::vector<double> awgn(const std::vector<double>& symbols, const NoiseSpec& noise, Rng& rng);

// Complex AWGN with total variance sigma2 (sigma2/2 per component).
std::vector<cplx> awgn_complex(const std::vector<cplx>& symbols, const NoiseSpec& noise, Rng& rng);

// L-tap Rayleigh MIMO channel; per-entry tap variance 1/L so the tap powers
// sum to one. Frequency response is the DFT of the taps per subcarrier.
struct ChannelRealization {
    int n_rx = 0, n_tx = 0, n_taps = 0, fft_size = 0;
    std::vector<CMatrix> taps;   // L matrices, n_rx x n_tx
    std::vector<CMatrix> freq;   // fft_size matrices, n_rx x n_tx

    static ChannelRealization draw(int n_rx, int n_tx, int n_taps, int fft_size, Rng& rng);
};

// Apply y_k = H_k x_k + n_k per subcarrier. x is one vector per subcarrier.
std::vector<CVector> rayleigh_mimo(const std::vector<CVector>& x, const ChannelRealization& ch,
                                   const NoiseSpec& noise, Rng& rng);

// Unit-modulus DFT pilot matrix (each antenna transmits unit-energy pilots).
CMatrix dft_pilot_matrix(int n_tx);

// Least-squares channel estimate: H_hat = Y * pinv(Omega).
CMatrix ls_estimate(const CMatrix& received_pilots, const CMatrix& pilots);

// MMSE detection through the extended matrix [H_hat; sigma2*I] with fixed
// regularization lambda = 1e-6.
CVector mmse_detect(const CVector& y, const CMatrix& h_hat, double sigma2);

enum class DemapMode { BpskExact, MaxLog };

// Per-bit LLRs, positive favors bit 1. BpskExact: 2*Re(y)/sigma2.
// MaxLog: min distance to the 0-partition minus min distance to the
// 1-partition of each bit.
std::vector<double> demap_llr(const std::vector<cplx>& symbols, const Constellation& c,
                              DemapMode mode, double sigma2);

// Magnitude standardization retaining the original signs:
// out = |(llr - mean)/sqrt(var + eps)| * sign(llr).
std::vector<double> normalize_llr(const std::vector<double>& llr, double eps = 1e-6);

} // namespace fec

#endif
