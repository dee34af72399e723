#include "fec/classical.hpp"

#include <algorithm>
#include <limits>

namespace fec {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<uint8_t> viterbi_decode(const ConvLlrPlane& plane, const Trellis& trellis,
                                    int traceback_depth, bool terminated) {
    const int n_steps = plane.steps;
    const int S = trellis.num_states;
    if (traceback_depth < 1) traceback_depth = n_steps;

    std::vector<double> metric(S, kNegInf), next_metric(S, kNegInf);
    metric[0] = 0.0; // encoder starts in state zero
    // survivor[t][s]: (previous state << 1) | input bit
    std::vector<std::vector<int>> survivor(n_steps, std::vector<int>(S, -1));

    std::vector<uint8_t> decided;
    decided.reserve(n_steps);

    auto best_state = [&](const std::vector<double>& m) {
        int b = 0;
        for (int s = 1; s < S; ++s)
            if (m[s] > m[b]) b = s;
        return b;
    };

    for (int t = 0; t < n_steps; ++t) {
        const double l0 = plane.llr[2 * t];
        const double l1 = plane.llr[2 * t + 1];
        std::fill(next_metric.begin(), next_metric.end(), kNegInf);
        for (int s = 0; s < S; ++s) {
            if (metric[s] == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                uint32_t out = trellis.branch_output(s, u);
                double bm = l0 * (2.0 * ((out >> 1) & 1u) - 1.0) + l1 * (2.0 * (out & 1u) - 1.0);
                int ns = trellis.next_state(s, u);
                double cand = metric[s] + bm;
                if (cand > next_metric[ns]) {
                    next_metric[ns] = cand;
                    survivor[t][ns] = (s << 1) | u;
                }
            }
        }
        // renormalize so metrics stay finite on long blocks
        double mx = *std::max_element(next_metric.begin(), next_metric.end());
        for (double& m : next_metric) m -= mx;
        metric.swap(next_metric);

        // continuous mode: commit the oldest decision once the window fills
        if (t >= traceback_depth && t < n_steps - 1) {
            int s = best_state(metric);
            for (int back = t; back > t - traceback_depth; --back) s = survivor[back][s] >> 1;
            // s is now the state entered at step t - traceback_depth
            decided.push_back(static_cast<uint8_t>(survivor[t - traceback_depth][s] & 1));
        }
    }

    // flush: trace the full remaining window from the final state
    int s = terminated ? 0 : best_state(metric);
    const int already = static_cast<int>(decided.size());
    std::vector<uint8_t> tail_bits(n_steps - already);
    for (int t = n_steps - 1; t >= already; --t) {
        tail_bits[t - already] = static_cast<uint8_t>(survivor[t][s] & 1);
        s = survivor[t][s] >> 1;
    }
    decided.insert(decided.end(), tail_bits.begin(), tail_bits.end());
    return decided;
}

SisoBeliefs maxlog_siso(const std::vector<double>& llr_sys, const std::vector<double>& llr_par,
                        const std::vector<double>& llr_prior, const Trellis& trellis,
                        SisoTermination termination) {
    const int K = static_cast<int>(llr_sys.size());
    if (static_cast<int>(llr_par.size()) != K || static_cast<int>(llr_prior.size()) != K)
        throw FramingError("maxlog_siso: input lengths differ");
    const int S = trellis.num_states;

    // branch metrics gamma[t][2s+u]
    std::vector<double> gamma(static_cast<size_t>(K) * 2 * S);
    for (int t = 0; t < K; ++t) {
        const double ls = llr_sys[t] + llr_prior[t];
        const double lp = llr_par[t];
        for (int s = 0; s < S; ++s) {
            for (int u = 0; u < 2; ++u) {
                int p = trellis.branch_bit(s, u, 1);
                gamma[(static_cast<size_t>(t) * S + s) * 2 + u] =
                    0.5 * (2 * u - 1) * ls + 0.5 * (2 * p - 1) * lp;
            }
        }
    }

    std::vector<std::vector<double>> alpha(K + 1, std::vector<double>(S, kNegInf));
    std::vector<std::vector<double>> beta(K + 1, std::vector<double>(S, kNegInf));
    alpha[0][0] = 0.0;
    if (termination == SisoTermination::Terminated) {
        beta[K][0] = 0.0;
    } else {
        std::fill(beta[K].begin(), beta[K].end(), 0.0);
    }

    for (int t = 0; t < K; ++t) {
        double mx = kNegInf;
        for (int s = 0; s < S; ++s) {
            if (alpha[t][s] == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                int ns = trellis.next_state(s, u);
                double cand = alpha[t][s] + gamma[(static_cast<size_t>(t) * S + s) * 2 + u];
                if (cand > alpha[t + 1][ns]) alpha[t + 1][ns] = cand;
            }
        }
        for (int s = 0; s < S; ++s) mx = std::max(mx, alpha[t + 1][s]);
        for (int s = 0; s < S; ++s)
            if (alpha[t + 1][s] != kNegInf) alpha[t + 1][s] -= mx;
    }
    for (int t = K - 1; t >= 0; --t) {
        double mx = kNegInf;
        for (int s = 0; s < S; ++s) {
            for (int u = 0; u < 2; ++u) {
                int ns = trellis.next_state(s, u);
                if (beta[t + 1][ns] == kNegInf) continue;
                double cand = beta[t + 1][ns] + gamma[(static_cast<size_t>(t) * S + s) * 2 + u];
                if (cand > beta[t][s]) beta[t][s] = cand;
            }
        }
        for (int s = 0; s < S; ++s) mx = std::max(mx, beta[t][s]);
        for (int s = 0; s < S; ++s)
            if (beta[t][s] != kNegInf) beta[t][s] -= mx;
    }

    SisoBeliefs out;
    out.llr_app.resize(K);
    out.llr_ext.resize(K);
    for (int t = 0; t < K; ++t) {
        double m1 = kNegInf, m0 = kNegInf;
        for (int s = 0; s < S; ++s) {
            if (alpha[t][s] == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                int ns = trellis.next_state(s, u);
                if (beta[t + 1][ns] == kNegInf) continue;
                double v = alpha[t][s] + gamma[(static_cast<size_t>(t) * S + s) * 2 + u] + beta[t + 1][ns];
                if (u)
                    m1 = std::max(m1, v);
                else
                    m0 = std::max(m0, v);
            }
        }
        out.llr_app[t] = m1 - m0;
        out.llr_ext[t] = out.llr_app[t] - llr_prior[t] - llr_sys[t];
    }
    return out;
}

TurboDecodeResult turbo_decode_classical(const std::vector<double>& llr_s,
                                         const std::vector<double>& llr_z,
                                         const std::vector<double>& llr_zp,
                                         const QppInterleaver& interleaver, const Trellis& constituent,
                                         int n_iter, SisoTermination termination) {
    const int K = static_cast<int>(llr_s.size());
    if (interleaver.K != K) throw FramingError("turbo_decode_classical: interleaver length mismatch");

    const std::vector<double> llr_s_int = interleaver.interleave(llr_s);
    std::vector<double> ext1_deint(K, 0.0);

    TurboDecodeResult result;
    result.llr_per_iteration.reserve(n_iter);
    std::vector<double> app_deint(K, 0.0);

    for (int it = 0; it < n_iter; ++it) {
        SisoBeliefs d0 = maxlog_siso(llr_s, llr_z, ext1_deint, constituent, termination);
        std::vector<double> ext0_int = interleaver.interleave(d0.llr_ext);
        SisoBeliefs d1 = maxlog_siso(llr_s_int, llr_zp, ext0_int, constituent, termination);
        ext1_deint = interleaver.deinterleave(d1.llr_ext);
        app_deint = interleaver.deinterleave(d1.llr_app);
        result.llr_per_iteration.push_back(app_deint);
    }

    result.bits.resize(K);
    for (int i = 0; i < K; ++i) result.bits[i] = app_deint[i] > 0.0 ? 1 : 0;
    return result;
}

} // namespace fec
