#include "taskdenoise/checkpoint.hpp"

#include "taskdenoise/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace tdn::nn {
namespace {

using nlohmann::json;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::vector<unsigned char>& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return std::bit_cast<double>(v);
}

struct Tensor {
    std::string name;
    std::vector<double> values;
};

}  // namespace

std::vector<unsigned char> serialize_params(const ModelParams& p) {
    std::vector<Tensor> tensors;
    for (int b = 0; b < kBlockCount; ++b) {
        const auto blk = static_cast<Block>(b);
        tensors.push_back({std::string(to_string(blk)), p.block(blk).values});
    }
    if (p.arch() == Arch::BandPowerMLP) {
        const Vec& m = p.feature_mean();
        const Vec& s = p.feature_scale();
        tensors.push_back({"feature_mean", std::vector<double>(m.data(), m.data() + m.size())});
        tensors.push_back({"feature_scale", std::vector<double>(s.data(), s.data() + s.size())});
    }

    const auto& g = p.geometry();
    json desc;
    desc["arch"] = std::string(to_string(p.arch()));
    desc["channels"] = g.channels;
    desc["samples"] = g.samples;
    desc["fs"] = g.fs;
    desc["num_classes"] = g.num_classes;
    desc["power_floor"] = p.power_floor();
    desc["tensors"] = json::array();
    for (const auto& t : tensors) desc["tensors"].push_back({{"name", t.name}, {"count", t.values.size()}});
    const std::string text = desc.dump();

    std::vector<unsigned char> out(kModelMagic, kModelMagic + 8);
    put_u32(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& t : tensors)
        for (double v : t.values) put_f64(out, v);
    return out;
}

ModelParams deserialize_params(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 16) throw FormatError("checkpoint shorter than its 16-byte preamble");
    if (std::memcmp(bytes.data(), kModelMagic, 8) != 0) throw FormatError("bad checkpoint magic");
    const std::uint32_t version = get_u32(bytes.data() + 8);
    if (version != kModelVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::size_t len = get_u32(bytes.data() + 12);
    if (bytes.size() < 16 + len) throw FormatError("checkpoint descriptor truncated");

    json desc;
    try {
        desc = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint descriptor is not valid JSON: ") + e.what());
    }

    std::size_t expected = 16 + len;
    for (const auto& t : desc.at("tensors")) expected += 8 * t.at("count").get<std::size_t>();
    if (bytes.size() != expected) {
        throw FormatError("checkpoint size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }

    const Arch arch = parse_arch(desc.at("arch").get<std::string>());
    Geometry g{desc.at("channels").get<std::size_t>(), desc.at("samples").get<std::size_t>(),
               desc.at("fs").get<double>(), desc.at("num_classes").get<int>()};

    std::array<ParamBlock, kBlockCount> blocks;
    Vec mean;
    Vec scale;
    const unsigned char* cur = bytes.data() + 16 + len;
    for (const auto& t : desc.at("tensors")) {
        const auto name = t.at("name").get<std::string>();
        const auto n = t.at("count").get<std::size_t>();
        std::vector<double> vals(n);
        for (std::size_t i = 0; i < n; ++i, cur += 8) vals[i] = get_f64(cur);
        bool placed = false;
        for (int b = 0; b < kBlockCount; ++b) {
            if (name == to_string(static_cast<Block>(b))) {
                blocks[b].values = std::move(vals);
                placed = true;
                break;
            }
        }
        if (placed) continue;
        if (name == "feature_mean") {
            mean = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(n));
        } else if (name == "feature_scale") {
            scale = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(n));
        } else {
            throw FormatError("unknown checkpoint tensor '" + name + "'");
        }
    }
    return ModelParams::from_parts(arch, g, std::move(blocks), std::move(mean), std::move(scale),
                                   desc.at("power_floor").get<double>());
}

void save_params(const ModelParams& p, const std::filesystem::path& path) {
    const auto bytes = serialize_params(p);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_params(bytes);
}

}  // namespace tdn::nn
