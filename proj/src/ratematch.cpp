#include "fec/ratematch.hpp"

#include <array>
#include <sstream>

namespace fec {

namespace {

// bit-reversed column permutation of the 32-column sub-block interleaver
constexpr std::array<int, 32> kColumnPerm = {
    0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14, 30,
    1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31};

} // namespace

int PuncturingPattern::kept_count(int n_steps) const {
    int count = 0;
    for (int t = 0; t < n_steps; ++t) {
        int c = t % period;
        count += keep[0][c] + keep[1][c];
    }
    return count;
}

PuncturingPattern standard_pattern(const std::string& rate_name) {
    PuncturingPattern p;
    p.name = rate_name;
    auto set = [&](int num, int den, int period, std::string z, std::string zp) {
        p.rate_num = num;
        p.rate_den = den;
        p.period = period;
        p.keep.resize(2);
        p.keep[0].assign(z.begin(), z.end());
        p.keep[1].assign(zp.begin(), zp.end());
        for (auto& row : p.keep)
            for (auto& b : row) b = static_cast<uint8_t>(b - '0');
    };
    if (rate_name == "1/2")
        set(1, 2, 1, "1", "1");
    else if (rate_name == "2/3")
        set(2, 3, 2, "11", "10");
    else if (rate_name == "3/4")
        set(3, 4, 3, "110", "101");
    else if (rate_name == "5/6")
        set(5, 6, 5, "11010", "10101");
    else
        throw ConfigError("unknown puncturing pattern '" + rate_name + "'");
    return p;
}

std::vector<uint8_t> puncture_conv(const std::vector<uint8_t>& z, const std::vector<uint8_t>& zp,
                                   const PuncturingPattern& pattern) {
    if (z.size() != zp.size()) throw FramingError("puncture_conv: stream length mismatch");
    std::vector<uint8_t> out;
    out.reserve(z.size() * 2);
    for (size_t t = 0; t < z.size(); ++t) {
        int c = static_cast<int>(t % pattern.period);
        if (pattern.keep[0][c]) out.push_back(z[t]);
        if (pattern.keep[1][c]) out.push_back(zp[t]);
    }
    return out;
}

std::vector<double> puncture_conv_llr(const std::vector<double>& z, const std::vector<double>& zp,
                                      const PuncturingPattern& pattern) {
    if (z.size() != zp.size()) throw FramingError("puncture_conv: stream length mismatch");
    std::vector<double> out;
    out.reserve(z.size() * 2);
    for (size_t t = 0; t < z.size(); ++t) {
        int c = static_cast<int>(t % pattern.period);
        if (pattern.keep[0][c]) out.push_back(z[t]);
        if (pattern.keep[1][c]) out.push_back(zp[t]);
    }
    return out;
}

ConvLlrPlane derate_conv(const std::vector<double>& received, const PuncturingPattern& pattern,
                         int n_steps) {
    int expected = pattern.kept_count(n_steps);
    if (static_cast<int>(received.size()) != expected) {
        std::ostringstream os;
        os << "derate_conv: got " << received.size() << " LLRs, pattern over " << n_steps
           << " steps expects " << expected;
        throw FramingError(os.str());
    }
    ConvLlrPlane plane;
    plane.steps = n_steps;
    plane.llr.assign(static_cast<size_t>(n_steps) * 2, 0.0);
    plane.indicator.assign(static_cast<size_t>(n_steps) * 2, 0);
    size_t r = 0;
    for (int t = 0; t < n_steps; ++t) {
        int c = t % pattern.period;
        for (int s = 0; s < 2; ++s) {
            if (pattern.keep[s][c]) {
                plane.llr[2 * t + s] = received[r++];
                plane.indicator[2 * t + s] = 1;
            }
        }
    }
    return plane;
}

RateMatchPlan turbo_rate_match_plan(int K, int E) {
    if (K <= 0) throw ConfigError("turbo rate match: K must be positive");
    if (E < K) throw ConfigError("turbo rate match: unsupported rate, E must be >= K");

    const int cols = 32;
    const int rows = (K + cols - 1) / cols;
    const int kpi = rows * cols;
    const int n_filler = kpi - K;

    // sub-block permutations: value is the source position in the stream, or
    // -1 for filler
    auto source_at = [&](int y_index) { return y_index < n_filler ? -1 : y_index - n_filler; };

    std::vector<int> v0(kpi), v2(kpi);
    for (int k = 0; k < kpi; ++k) {
        int c = k / rows;
        int r = k % rows;
        v0[k] = source_at(r * cols + kColumnPerm[c]);                   // streams 0 and 1
        v2[k] = source_at((kColumnPerm[k / rows] + cols * (k % rows) + 1) % kpi); // stream 2
    }

    // circular buffer w: systematic block then interlaced parity blocks
    struct Src {
        int stream;
        int pos;
    };
    std::vector<Src> w(3 * kpi);
    for (int k = 0; k < kpi; ++k) {
        w[k] = {0, v0[k]};
        w[kpi + 2 * k] = {1, v0[k]};
        w[kpi + 2 * k + 1] = {2, v2[k]};
    }

    RateMatchPlan plan;
    plan.K = K;
    plan.E = E;
    plan.rows = rows;
    plan.n_filler = n_filler;
    plan.k0 = 2 * rows; // redundancy version 0
    plan.stream.reserve(E);
    plan.position.reserve(E);
    int idx = plan.k0;
    while (static_cast<int>(plan.stream.size()) < E) {
        const Src& s = w[idx];
        if (s.pos >= 0) {
            plan.stream.push_back(static_cast<uint8_t>(s.stream));
            plan.position.push_back(s.pos);
        }
        idx = (idx + 1) % (3 * kpi);
    }
    return plan;
}

std::vector<uint8_t> turbo_rate_match(const CodewordStreams& streams, const RateMatchPlan& plan) {
    if (static_cast<int>(streams.systematic.size()) != plan.K ||
        static_cast<int>(streams.parity0.size()) != plan.K ||
        static_cast<int>(streams.parity1.size()) != plan.K)
        throw FramingError("turbo_rate_match: stream lengths do not match plan");
    const std::vector<uint8_t>* src[3] = {&streams.systematic, &streams.parity0, &streams.parity1};
    std::vector<uint8_t> out(plan.E);
    for (int e = 0; e < plan.E; ++e) out[e] = (*src[plan.stream[e]])[plan.position[e]];
    return out;
}

std::vector<double> turbo_select_llr(const std::vector<double>& s, const std::vector<double>& z,
                                     const std::vector<double>& zp, const RateMatchPlan& plan) {
    if (static_cast<int>(s.size()) != plan.K || static_cast<int>(z.size()) != plan.K ||
        static_cast<int>(zp.size()) != plan.K)
        throw FramingError("turbo_select_llr: stream lengths do not match plan");
    const std::vector<double>* src[3] = {&s, &z, &zp};
    std::vector<double> out(plan.E);
    for (int e = 0; e < plan.E; ++e) out[e] = (*src[plan.stream[e]])[plan.position[e]];
    return out;
}

TurboLlrs derate_turbo(const std::vector<double>& received, const RateMatchPlan& plan) {
    if (static_cast<int>(received.size()) != plan.E)
        throw FramingError("derate_turbo: LLR count does not match plan E");
    TurboLlrs out;
    out.llr_s.assign(plan.K, 0.0);
    out.llr_z.assign(plan.K, 0.0);
    out.llr_zp.assign(plan.K, 0.0);
    out.p_s.assign(plan.K, 0);
    out.p_z.assign(plan.K, 0);
    out.p_zp.assign(plan.K, 0);
    std::vector<double>* llr[3] = {&out.llr_s, &out.llr_z, &out.llr_zp};
    std::vector<uint8_t>* ind[3] = {&out.p_s, &out.p_z, &out.p_zp};
    for (int e = 0; e < plan.E; ++e) {
        int st = plan.stream[e];
        int pos = plan.position[e];
        (*llr[st])[pos] += received[e];
        (*ind[st])[pos] = 1;
    }
    return out;
}

} // namespace fec
