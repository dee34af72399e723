#include "fec/codec.hpp"

#include <bit>
#include <sstream>

namespace fec {

uint32_t parse_octal(const std::string& s) {
    uint32_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '7') throw ConfigError("bad octal digit in generator '" + s + "'");
        v = v * 8 + static_cast<uint32_t>(c - '0');
    }
    return v;
}

namespace {

inline int parity(uint32_t x) { return std::popcount(x) & 1; }

} // namespace

int Trellis::feedback_bit(int state, int input) const {
    if (!feedback) return input;
    int m = memory();
    uint32_t fb_taps = *feedback & ((1u << m) - 1u); // delayed taps only
    return input ^ parity(fb_taps & static_cast<uint32_t>(state));
}

Trellis build_trellis(const std::vector<uint32_t>& generators, int constraint_length,
                      std::optional<uint32_t> feedback) {
    if (constraint_length < 2) throw ConfigError("constraint length must be >= 2");
    if (generators.empty()) throw ConfigError("at least one generator required");
    const uint32_t limit = 1u << constraint_length;
    for (uint32_t g : generators) {
        if (g >= limit) {
            std::ostringstream os;
            os << "generator 0" << std::oct << g << " wider than constraint length "
               << std::dec << constraint_length;
            throw ConfigError(os.str());
        }
    }
    if (feedback && *feedback >= limit) throw ConfigError("feedback taps wider than constraint length");
    if (feedback && !((*feedback >> (constraint_length - 1)) & 1u))
        throw ConfigError("feedback polynomial must include the current-input tap");

    Trellis t;
    t.constraint_length = constraint_length;
    t.num_states = 1 << (constraint_length - 1);
    t.generators = generators;
    t.feedback = feedback;
    t.num_outputs = static_cast<int>(generators.size()) + (feedback ? 1 : 0);
    t.next_.assign(2 * t.num_states, 0);
    t.out_.assign(2 * t.num_states, 0);

    const int m = constraint_length - 1;
    for (int s = 0; s < t.num_states; ++s) {
        for (int u = 0; u < 2; ++u) {
            // a is the bit entering the register: the input for feed-forward
            // codes, the feedback-node value for recursive ones.
            int a = u;
            if (feedback) {
                uint32_t fb_taps = *feedback & ((1u << m) - 1u);
                a = u ^ parity(fb_taps & static_cast<uint32_t>(s));
            }
            uint32_t window = (static_cast<uint32_t>(a) << m) | static_cast<uint32_t>(s);
            uint32_t out = 0;
            if (feedback) out = static_cast<uint32_t>(u); // systematic bit first
            for (uint32_t g : generators) out = (out << 1) | static_cast<uint32_t>(parity(window & g));
            int ns = (s >> 1) | (a << (m - 1));
            t.next_[2 * s + u] = ns;
            t.out_[2 * s + u] = out;
        }
    }
    return t;
}

std::pair<std::vector<uint8_t>, std::vector<uint8_t>>
conv_encode(const std::vector<uint8_t>& bits, const Trellis& trellis, bool terminate) {
    if (trellis.feedback) throw ConfigError("conv_encode expects a feed-forward trellis");
    if (trellis.num_outputs != 2) throw ConfigError("conv_encode expects a rate-1/2 trellis");
    std::vector<uint8_t> z, zp;
    const size_t n = bits.size() + (terminate ? static_cast<size_t>(trellis.memory()) : 0);
    z.reserve(n);
    zp.reserve(n);
    int state = 0;
    auto step = [&](int u) {
        uint32_t out = trellis.branch_output(state, u);
        z.push_back(static_cast<uint8_t>((out >> 1) & 1u));
        zp.push_back(static_cast<uint8_t>(out & 1u));
        state = trellis.next_state(state, u);
    };
    for (uint8_t b : bits) {
        if (b > 1) throw DomainError("conv_encode input must be binary");
        step(b);
    }
    if (terminate) {
        for (int i = 0; i < trellis.memory(); ++i) step(0);
    }
    return {std::move(z), std::move(zp)};
}

QppInterleaver qpp_build(int K, long long f1, long long f2) {
    if (K <= 0) throw ConfigError("interleaver length must be positive");
    QppInterleaver q;
    q.K = K;
    q.f1 = f1;
    q.f2 = f2;
    q.table.resize(K);
    q.inverse.assign(K, -1);
    for (long long i = 0; i < K; ++i) {
        long long v = (f1 % K) * i % K;
        v = (v + (f2 % K) * ((i * i) % K)) % K;
        int p = static_cast<int>(((v % K) + K) % K);
        if (q.inverse[p] != -1) {
            std::ostringstream os;
            os << "QPP(K=" << K << ",f1=" << f1 << ",f2=" << f2 << ") is not a bijection: pi("
               << q.inverse[p] << ") == pi(" << i << ") == " << p;
            throw ConfigError(os.str());
        }
        q.table[static_cast<int>(i)] = p;
        q.inverse[p] = static_cast<int>(i);
    }
    return q;
}

CodewordStreams turbo_encode(const std::vector<uint8_t>& bits, const QppInterleaver& interleaver,
                             const Trellis& constituent, bool terminate) {
    if (!constituent.feedback) throw ConfigError("turbo constituent must be recursive");
    if (interleaver.K != static_cast<int>(bits.size()))
        throw ConfigError("interleaver length does not match input length");
    for (uint8_t b : bits)
        if (b > 1) throw DomainError("turbo_encode input must be binary");

    auto run = [&](const std::vector<uint8_t>& in, std::vector<uint8_t>& parity,
                   std::vector<uint8_t>& tail) {
        int state = 0;
        parity.reserve(in.size());
        for (uint8_t u : in) {
            parity.push_back(static_cast<uint8_t>(constituent.branch_bit(state, u, 1)));
            state = constituent.next_state(state, u);
        }
        if (terminate) {
            // drive the feedback node to zero: pick the input that makes the
            // register shift in a zero
            for (int i = 0; i < constituent.memory(); ++i) {
                int u = constituent.feedback_bit(state, 0); // u ^ fb == 0  =>  u == fb(state, 0)
                tail.push_back(static_cast<uint8_t>(u));
                tail.push_back(static_cast<uint8_t>(constituent.branch_bit(state, u, 1)));
                state = constituent.next_state(state, u);
            }
        }
    };

    CodewordStreams cw;
    cw.systematic = bits;
    std::vector<uint8_t> tail0, tail1;
    run(bits, cw.parity0, tail0);
    auto interleaved = interleaver.interleave(bits);
    run(interleaved, cw.parity1, tail1);
    cw.tail = tail0;
    cw.tail.insert(cw.tail.end(), tail1.begin(), tail1.end());
    return cw;
}

Trellis wifi_cc_k7() { return build_trellis({parse_octal("133"), parse_octal("171")}, 7); }

Trellis lte_turbo_constituent() {
    return build_trellis({parse_octal("15")}, 4, parse_octal("13"));
}

} // namespace fec
