#include "fec/channel.hpp"

#include <algorithm>
#include <cmath>

namespace fec {

void Constellation::build_partitions() {
    partitions_.assign(static_cast<size_t>(2 * bits_), {});
    for (int label = 0; label < order(); ++label) {
        for (int i = 0; i < bits_; ++i) {
            int b = (label >> (bits_ - 1 - i)) & 1;
            partitions_[2 * i + b].push_back(label);
        }
    }
}

Constellation Constellation::bpsk() {
    Constellation c;
    c.name_ = "bpsk";
    c.bits_ = 1;
    c.points_ = {cplx(-1.0, 0.0), cplx(1.0, 0.0)};
    c.build_partitions();
    return c;
}

Constellation Constellation::qam16() {
    Constellation c;
    c.name_ = "qam16";
    c.bits_ = 4;
    c.points_.resize(16);
    // per-axis Gray code, two bits each: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    auto gray_level = [](int two_bits) {
        switch (two_bits) {
            case 0: return -3.0;
            case 1: return -1.0;
            case 3: return 1.0;
            default: return 3.0; // 2
        }
    };
    const double scale = 1.0 / std::sqrt(10.0); // unit average energy
    for (int label = 0; label < 16; ++label) {
        int ib = (label >> 2) & 3; // first two bits -> I
        int qb = label & 3;        // last two bits -> Q
        c.points_[label] = cplx(gray_level(ib) * scale, gray_level(qb) * scale);
    }
    c.build_partitions();
    return c;
}

std::vector<cplx> modulate(const std::vector<uint8_t>& bits, const Constellation& c) {
    const int bps = c.bits_per_symbol();
    if (bits.size() % bps != 0)
        throw FramingError("modulate: bit count not divisible by bits per symbol");
    std::vector<cplx> out;
    out.reserve(bits.size() / bps);
    for (size_t i = 0; i < bits.size(); i += bps) {
        int label = 0;
        for (int j = 0; j < bps; ++j) {
            if (bits[i + j] > 1) throw DomainError("modulate: input must be binary");
            label = (label << 1) | bits[i + j];
        }
        out.push_back(c.point(label));
    }
    return out;
}

std::vector<double> awgn(const std::vector<double>& symbols, const NoiseSpec& noise, Rng& rng) {
    std::vector<double> y(symbols.size());
    const double sigma = std::sqrt(noise.sigma2);
    for (size_t i = 0; i < symbols.size(); ++i) y[i] = symbols[i] + sigma * rng.gaussian();
    return y;
}

std::vector<cplx> awgn_complex(const std::vector<cplx>& symbols, const NoiseSpec& noise, Rng& rng) {
    std::vector<cplx> y(symbols.size());
    const double sigma = std::sqrt(noise.sigma2 / 2.0);
    for (size_t i = 0; i < symbols.size(); ++i) {
        y[i] = symbols[i] + cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
    }
    return y;
}

ChannelRealization ChannelRealization::draw(int n_rx, int n_tx, int n_taps, int fft_size, Rng& rng) {
    ChannelRealization ch;
    ch.n_rx = n_rx;
    ch.n_tx = n_tx;
    ch.n_taps = n_taps;
    ch.fft_size = fft_size;
    const double tap_sigma = std::sqrt(1.0 / (2.0 * n_taps)); // per component
    ch.taps.reserve(n_taps);
    for (int l = 0; l < n_taps; ++l) {
        CMatrix h(n_rx, n_tx);
        for (int r = 0; r < n_rx; ++r)
            for (int t = 0; t < n_tx; ++t)
                h(r, t) = cplx(tap_sigma * rng.gaussian(), tap_sigma * rng.gaussian());
        ch.taps.push_back(std::move(h));
    }
    ch.freq.reserve(fft_size);
    for (int k = 0; k < fft_size; ++k) {
        CMatrix hf = CMatrix::Zero(n_rx, n_tx);
        for (int l = 0; l < n_taps; ++l) {
            double phase = -2.0 * M_PI * k * l / fft_size;
            hf += ch.taps[l] * cplx(std::cos(phase), std::sin(phase));
        }
        ch.freq.push_back(std::move(hf));
    }
    return ch;
}

std::vector<CVector> rayleigh_mimo(const std::vector<CVector>& x, const ChannelRealization& ch,
                                   const NoiseSpec& noise, Rng& rng) {
    std::vector<CVector> y;
    y.reserve(x.size());
    const double sigma = std::sqrt(noise.sigma2 / 2.0);
    for (size_t k = 0; k < x.size(); ++k) {
        if (x[k].size() != ch.n_tx) throw FramingError("rayleigh_mimo: input vector size != n_tx");
        const CMatrix& hf = ch.freq[k % ch.fft_size];
        CVector yk = hf * x[k];
        for (int r = 0; r < ch.n_rx; ++r) yk(r) += cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
        y.push_back(std::move(yk));
    }
    return y;
}

CMatrix dft_pilot_matrix(int n_tx) {
    CMatrix omega(n_tx, n_tx);
    for (int m = 0; m < n_tx; ++m)
        for (int n = 0; n < n_tx; ++n) {
            double phase = -2.0 * M_PI * m * n / n_tx;
            omega(m, n) = cplx(std::cos(phase), std::sin(phase));
        }
    return omega;
}

CMatrix ls_estimate(const CMatrix& received_pilots, const CMatrix& pilots) {
    if (pilots.rows() != pilots.cols()) throw ConfigError("ls_estimate: pilot matrix must be square");
    CMatrix gram = pilots.adjoint() * pilots;
    Eigen::FullPivLU<CMatrix> lu(gram);
    if (!lu.isInvertible()) throw NumericalError("ls_estimate: singular pilot matrix");
    CMatrix pinv = lu.inverse() * pilots.adjoint();
    return received_pilots * pinv;
}

CVector mmse_detect(const CVector& y, const CMatrix& h_hat, double sigma2) {
    const int n_rx = static_cast<int>(h_hat.rows());
    const int n_tx = static_cast<int>(h_hat.cols());
    const double lambda = 1e-6;
    CMatrix ext(n_rx + n_tx, n_tx);
    ext.topRows(n_rx) = h_hat;
    ext.bottomRows(n_tx) = sigma2 * CMatrix::Identity(n_tx, n_tx);
    CMatrix gram = ext.adjoint() * ext + lambda * CMatrix::Identity(n_tx, n_tx);
    CMatrix w = gram.ldlt().solve(ext.adjoint()); // n_tx x (n_rx + n_tx)
    return w.leftCols(n_rx) * y;
}

std::vector<double> demap_llr(const std::vector<cplx>& symbols, const Constellation& c,
                              DemapMode mode, double sigma2) {
    const int bps = c.bits_per_symbol();
    std::vector<double> llr;
    llr.reserve(symbols.size() * bps);
    if (mode == DemapMode::BpskExact) {
        for (const cplx& y : symbols) llr.push_back(2.0 * y.real() / sigma2);
        return llr;
    }
    for (const cplx& y : symbols) {
        for (int i = 0; i < bps; ++i) {
            double d0 = std::numeric_limits<double>::infinity();
            double d1 = d0;
            for (int label : c.partition(i, 0)) d0 = std::min(d0, std::abs(y - c.point(label)));
            for (int label : c.partition(i, 1)) d1 = std::min(d1, std::abs(y - c.point(label)));
            llr.push_back(d0 - d1);
        }
    }
    return llr;
}

std::vector<double> normalize_llr(const std::vector<double>& llr, double eps) {
    if (llr.empty()) return {};
    double mean = 0.0;
    for (double v : llr) mean += v;
    mean /= static_cast<double>(llr.size());
    double var = 0.0;
    for (double v : llr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(llr.size());
    const double denom = std::sqrt(var + eps);
    std::vector<double> out(llr.size());
    for (size_t i = 0; i < llr.size(); ++i) {
        double sign = (llr[i] > 0.0) - (llr[i] < 0.0);
        out[i] = std::abs((llr[i] - mean) / denom) * sign;
    }
    return out;
}

} // namespace fec
