#ifndef FEC_TEST_UTIL_HPP
#define FEC_TEST_UTIL_HPP

// Independent reference implementations used as test oracles. These must
// stay free of the library's trellis/decoder code paths.

#include <cstdint>
#include <limits>
#include <vector>

namespace testutil {

// Direct-convolution 802.11 encoder: z_t = u_t ^ u_{t-2} ^ u_{t-3} ^ u_{t-5}
// ^ u_{t-6}, z'_t = u_t ^ u_{t-1} ^ u_{t-2} ^ u_{t-3} ^ u_{t-6}.
inline std::pair<std::vector<uint8_t>, std::vector<uint8_t>>
ref_conv_encode(const std::vector<uint8_t>& u) {
    auto at = [&](int i) -> int { return i >= 0 ? u[i] : 0; };
    std::vector<uint8_t> z(u.size()), zp(u.size());
    for (int t = 0; t < static_cast<int>(u.size()); ++t) {
        z[t] = static_cast<uint8_t>(at(t) ^ at(t - 2) ^ at(t - 3) ^ at(t - 5) ^ at(t - 6));
        zp[t] = static_cast<uint8_t>(at(t) ^ at(t - 1) ^ at(t - 2) ^ at(t - 3) ^ at(t - 6));
    }
    return {z, zp};
}

// Shift-register simulation of the recursive constituent, feedback
// 1 + D^2 + D^3, forward 1 + D + D^3.
inline std::vector<uint8_t> ref_rsc_parity(const std::vector<uint8_t>& u) {
    int r1 = 0, r2 = 0, r3 = 0;
    std::vector<uint8_t> p(u.size());
    for (size_t t = 0; t < u.size(); ++t) {
        const int a = u[t] ^ r2 ^ r3;
        p[t] = static_cast<uint8_t>(a ^ r1 ^ r3);
        r3 = r2;
        r2 = r1;
        r1 = a;
    }
    return p;
}

// Exhaustive soft Viterbi reference: the info sequence whose (unterminated)
// codeword maximizes sum llr * (2c - 1). Returns false when the maximizer is
// not unique. llr is steps x 2 row-major; optional skip_index excludes one
// flattened llr coordinate from the metric.
inline bool ref_viterbi_exhaustive(const std::vector<double>& llr, int K,
                                   std::vector<uint8_t>& best, int skip_index = -1) {
    double best_metric = -std::numeric_limits<double>::infinity();
    int n_best = 0;
    for (uint32_t word = 0; word < (1u << K); ++word) {
        std::vector<uint8_t> u(K);
        for (int i = 0; i < K; ++i) u[i] = (word >> i) & 1u;
        auto [z, zp] = ref_conv_encode(u);
        double metric = 0.0;
        for (int t = 0; t < K; ++t) {
            if (2 * t != skip_index) metric += llr[2 * t] * (2.0 * z[t] - 1.0);
            if (2 * t + 1 != skip_index) metric += llr[2 * t + 1] * (2.0 * zp[t] - 1.0);
        }
        if (metric > best_metric) {
            best_metric = metric;
            best = u;
            n_best = 1;
        } else if (metric == best_metric) {
            ++n_best;
        }
    }
    return n_best == 1;
}

// Exhaustive max-log a-posteriori reference over the recursive constituent:
// app[k] = max over sequences with u_k = 1 of the path metric minus the max
// with u_k = 0, metric 0.5*(2u-1)*(sys+prior) + 0.5*(2p-1)*par.
inline std::vector<double> ref_maxlog_app(const std::vector<double>& sys,
                                          const std::vector<double>& par,
                                          const std::vector<double>& prior) {
    const int K = static_cast<int>(sys.size());
    std::vector<double> m1(K, -std::numeric_limits<double>::infinity());
    std::vector<double> m0(K, -std::numeric_limits<double>::infinity());
    for (uint32_t word = 0; word < (1u << K); ++word) {
        std::vector<uint8_t> u(K);
        for (int i = 0; i < K; ++i) u[i] = (word >> i) & 1u;
        const std::vector<uint8_t> p = ref_rsc_parity(u);
        double metric = 0.0;
        for (int k = 0; k < K; ++k) {
            metric += 0.5 * (2.0 * u[k] - 1.0) * (sys[k] + prior[k]);
            metric += 0.5 * (2.0 * p[k] - 1.0) * par[k];
        }
        for (int k = 0; k < K; ++k) {
            if (u[k])
                m1[k] = std::max(m1[k], metric);
            else
                m0[k] = std::max(m0[k], metric);
        }
    }
    std::vector<double> app(K);
    for (int k = 0; k < K; ++k) app[k] = m1[k] - m0[k];
    return app;
}

} // namespace testutil

#endif
