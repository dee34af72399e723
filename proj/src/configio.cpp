#include "fec/configio.hpp"

#include <fstream>

#include "json.hpp"

namespace fec {

using json = nlohmann::json;

const std::map<int, std::pair<long long, long long>>& qpp_defaults() {
    static const std::map<int, std::pair<long long, long long>> table = {
        {8, {1, 4}},    {16, {1, 4}},    {24, {1, 6}},    {32, {1, 8}},
        {40, {3, 10}},  {48, {7, 12}},   {64, {7, 16}},   {120, {103, 90}},
        {240, {29, 60}}, {480, {29, 120}}, {960, {17, 120}},
    };
    return table;
}

std::map<int, std::pair<long long, long long>> load_qpp_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read QPP file '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad QPP file '" + path + "': " + e.what());
    }
    std::map<int, std::pair<long long, long long>> table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const int k = std::stoi(it.key());
        const auto pair = it.value().get<std::vector<long long>>();
        if (pair.size() != 2) throw ConfigError("QPP entry for K=" + it.key() + " must be [f1, f2]");
        table[k] = {pair[0], pair[1]};
    }
    return table;
}

QppInterleaver qpp_for_k(int K) { return qpp_for_k(K, qpp_defaults()); }

QppInterleaver qpp_for_k(int K, const std::map<int, std::pair<long long, long long>>& table) {
    auto it = table.find(K);
    if (it == table.end())
        throw ConfigError("no QPP coefficients for K=" + std::to_string(K) +
                          " (add them to the parameter file)");
    return qpp_build(K, it->second.first, it->second.second);
}

Trellis trellis_by_name(const std::string& name) {
    if (name == "wifi-cc-k7") return wifi_cc_k7();
    if (name == "lte-turbo-constituent") return lte_turbo_constituent();
    throw ConfigError("unknown trellis '" + name + "'");
}

PuncturingPattern load_pattern_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read pattern file '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad pattern file '" + path + "': " + e.what());
    }
    PuncturingPattern p;
    p.name = j.at("name").get<std::string>();
    const std::string mother = j.value("mother_rate", "1/2");
    if (mother != "1/2") throw ConfigError("pattern file: only mother rate 1/2 supported");
    const auto rate = j.at("rate").get<std::vector<int>>();
    if (rate.size() != 2) throw ConfigError("pattern file: rate must be [num, den]");
    p.rate_num = rate[0];
    p.rate_den = rate[1];
    p.period = j.at("period").get<int>();
    const auto keep = j.at("keep").get<std::vector<std::string>>();
    if (keep.size() != 2) throw ConfigError("pattern file: expected keep masks for two streams");
    p.keep.resize(2);
    for (int s = 0; s < 2; ++s) {
        if (static_cast<int>(keep[s].size()) != p.period)
            throw ConfigError("pattern file: keep mask length != period");
        for (char c : keep[s]) {
            if (c != '0' && c != '1') throw ConfigError("pattern file: keep masks must be 0/1 strings");
            p.keep[s].push_back(static_cast<uint8_t>(c - '0'));
        }
    }
    bool any = false;
    for (int c = 0; c < p.period; ++c) any = any || p.keep[0][c] || p.keep[1][c];
    if (!any) throw ConfigError("pattern file: pattern keeps no bits");
    return p;
}

void save_pattern_file(const std::string& path, const PuncturingPattern& p) {
    json j;
    j["name"] = p.name;
    j["mother_rate"] = "1/2";
    j["rate"] = {p.rate_num, p.rate_den};
    j["period"] = p.period;
    std::vector<std::string> keep;
    for (const auto& row : p.keep) {
        std::string s;
        for (uint8_t b : row) s.push_back(static_cast<char>('0' + b));
        keep.push_back(s);
    }
    j["keep"] = keep;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write pattern file '" + path + "'");
    os << j.dump(2) << '\n';
}

} // namespace fec
