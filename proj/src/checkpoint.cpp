#include "fec/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace fec {

namespace {

constexpr char kMagic[8] = {'F', 'E', 'C', 'C', 'K', 'P', 'T', '1'};

using json = nlohmann::json;

json config_to_json(const CneConfig& c) {
    return json{{"d_in", c.d_in},       {"d_embed", c.d_embed}, {"d_hidden", c.d_hidden},
                {"n_layer", c.n_layer}, {"n_iter", c.n_iter},   {"puncture_embedding", c.puncture_embedding}};
}

CneConfig config_from_json(const json& j) {
    CneConfig c;
    c.d_in = j.at("d_in").get<int>();
    c.d_embed = j.at("d_embed").get<int>();
    c.d_hidden = j.at("d_hidden").get<int>();
    c.n_layer = j.at("n_layer").get<int>();
    c.n_iter = j.at("n_iter").get<int>();
    c.puncture_embedding = j.at("puncture_embedding").get<bool>();
    return c;
}

void write_floats(std::ofstream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::ifstream& is, std::vector<float>& v) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!is) throw CheckpointError("checkpoint: truncated data section");
}

} // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, CneParams<float>& params,
                     const AdamState<float>* adam) {
    json header;
    header["version"] = 1;
    header["code"] = meta.code;
    header["model"] = config_to_json(meta.cfg);
    header["epoch"] = meta.epoch;
    header["master_seed"] = meta.master_seed;
    header["val_ber"] = meta.val_ber;
    header["train_k"] = meta.train_k;
    header["terminate"] = meta.terminate;
    header["rates"] = meta.rates;
    header["has_optimizer"] = adam != nullptr;
    if (adam) header["adam_t"] = adam->t;
    json manifest = json::array();
    for (auto* p : params.all()) manifest.push_back(json{{"name", p->name}, {"shape", p->shape}});
    header["params"] = manifest;
    header["bn_features"] = params.bn.features();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    const std::string text = header.dump();
    const uint64_t len = text.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (auto* p : params.all()) write_floats(os, p->value);
    write_floats(os, params.bn.running_mean);
    write_floats(os, params.bn.running_var);
    if (adam) {
        for (const auto& m : adam->m) write_floats(os, m);
        for (const auto& v : adam->v) write_floats(os, v);
    }
    if (!os) throw CheckpointError("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("checkpoint: bad magic in '" + path + "'");
    uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!is || len > (1ull << 30)) throw CheckpointError("checkpoint: bad header length");
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) throw CheckpointError("checkpoint: truncated header");

    json header;
    try {
        header = json::parse(text);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: invalid header json: ") + e.what());
    }
    if (header.at("version").get<int>() != 1) throw CheckpointError("checkpoint: unsupported version");

    LoadedCheckpoint out;
    out.meta.code = header.at("code").get<std::string>();
    out.meta.cfg = config_from_json(header.at("model"));
    out.meta.epoch = header.at("epoch").get<int>();
    out.meta.master_seed = header.at("master_seed").get<uint64_t>();
    out.meta.val_ber = header.at("val_ber").get<double>();
    out.meta.train_k = header.value("train_k", 0);
    out.meta.terminate = header.value("terminate", false);
    out.meta.rates = header.value("rates", std::vector<std::string>{});

    out.params = std::make_unique<CneParams<float>>(out.meta.cfg);
    auto plist = out.params->all();
    const json& manifest = header.at("params");
    if (manifest.size() != plist.size())
        throw CheckpointError("checkpoint: manifest size does not match model config");
    for (size_t i = 0; i < plist.size(); ++i) {
        const auto& entry = manifest[i];
        if (entry.at("name").get<std::string>() != plist[i]->name ||
            entry.at("shape").get<std::vector<int>>() != plist[i]->shape)
            throw CheckpointError("checkpoint: parameter '" + plist[i]->name + "' does not match manifest");
    }
    for (auto* p : plist) read_floats(is, p->value);
    read_floats(is, out.params->bn.running_mean);
    read_floats(is, out.params->bn.running_var);
    if (header.value("has_optimizer", false)) {
        out.adam = std::make_unique<AdamState<float>>(plist);
        out.adam->t = header.at("adam_t").get<long long>();
        for (auto& m : out.adam->m) read_floats(is, m);
        for (auto& v : out.adam->v) read_floats(is, v);
    }
    return out;
}

} // namespace fec
