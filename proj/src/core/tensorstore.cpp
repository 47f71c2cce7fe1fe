#include "tensorstore.hpp"

#include <cstring>
#include <fstream>

#include "common.hpp"

namespace gloss {

using nlohmann::json;

std::vector<uint8_t> serialize_checkpoint(const TensorMap& map) {
    map.validate();

    json tensors = json::object();
    uint64_t offset = 0;
    for (const auto& [name, t] : map.entries) {
        uint64_t nbytes = static_cast<uint64_t>(t.data.size()) * sizeof(float);
        tensors[name] = {{"shape", t.shape}, {"offset", offset}, {"nbytes", nbytes}};
        offset += nbytes;
    }
    json header = {
        {"config",
         {{"n_layers", map.config.n_layers},
          {"d_model", map.config.d_model},
          {"d_ff", map.config.d_ff},
          {"vocab_size", map.config.vocab_size},
          {"n_heads", map.config.n_heads},
          {"max_seq", map.config.max_seq}}},
        {"meta", map.meta},
        {"tensors", tensors},
    };
    std::string hs = header.dump();

    std::vector<uint8_t> out;
    out.reserve(8 + hs.size() + offset);
    uint64_t hlen = hs.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((hlen >> (8 * i)) & 0xff));
    out.insert(out.end(), hs.begin(), hs.end());
    for (const auto& [name, t] : map.entries) {
        size_t base = out.size();
        out.resize(base + t.data.size() * sizeof(float));
        std::memcpy(out.data() + base, t.data.data(), t.data.size() * sizeof(float));
    }
    return out;
}

TensorMap deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8) fail(ERR_DATA, "malformed header: file shorter than length prefix");
    uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= static_cast<uint64_t>(bytes[static_cast<size_t>(i)]) << (8 * i);
    if (bytes.size() < 8 + hlen) fail(ERR_DATA, "malformed header: header shorter than declared");

    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<int64_t>(hlen));
    } catch (const json::exception& e) {
        fail(ERR_DATA, std::string("malformed header: ") + e.what());
    }
    if (!header.contains("config") || !header.contains("tensors"))
        fail(ERR_DATA, "malformed header: missing config or tensors section");

    TensorMap map;
    try {
        const json& c = header["config"];
        map.config.n_layers = c.at("n_layers").get<int64_t>();
        map.config.d_model = c.at("d_model").get<int64_t>();
        map.config.d_ff = c.at("d_ff").get<int64_t>();
        map.config.vocab_size = c.at("vocab_size").get<int64_t>();
        map.config.n_heads = c.at("n_heads").get<int64_t>();
        map.config.max_seq = c.at("max_seq").get<int64_t>();
    } catch (const json::exception& e) {
        fail(ERR_DATA, std::string("malformed header: bad config: ") + e.what());
    }
    if (header.contains("meta")) map.meta = header["meta"];

    const size_t payload_off = 8 + hlen;
    const size_t payload_len = bytes.size() - payload_off;
    for (auto it = header["tensors"].begin(); it != header["tensors"].end(); ++it) {
        const std::string& name = it.key();
        Tensor t;
        uint64_t off = 0, nbytes = 0;
        try {
            t.shape = it.value().at("shape").get<std::vector<int64_t>>();
            off = it.value().at("offset").get<uint64_t>();
            nbytes = it.value().at("nbytes").get<uint64_t>();
        } catch (const json::exception& e) {
            fail(ERR_DATA, "malformed header for tensor '" + name + "': " + e.what());
        }
        for (int64_t s : t.shape)
            if (s < 1) fail(ERR_DATA, "non-positive dimension in tensor '" + name + "'");
        if (nbytes != static_cast<uint64_t>(t.numel()) * sizeof(float))
            fail(ERR_DATA, "nbytes/shape mismatch for tensor '" + name + "'");
        if (off + nbytes > payload_len)
            fail(ERR_DATA, "payload shorter than header declares for tensor '" + name + "'");
        t.data.resize(static_cast<size_t>(t.numel()));
        std::memcpy(t.data.data(), bytes.data() + payload_off + off, nbytes);
        map.entries.emplace(name, std::move(t));
    }
    map.validate();
    return map;
}

void save_checkpoint(const TensorMap& map, const std::string& path) {
    auto bytes = serialize_checkpoint(map);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable path: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ERR_DATA, "write failed: " + path);
}

TensorMap load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ERR_DATA, "cannot open checkpoint: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

std::string checkpoint_hash(const TensorMap& map) {
    auto bytes = serialize_checkpoint(map);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace gloss
