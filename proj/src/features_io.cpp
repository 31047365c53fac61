#include "dbrn/features_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace dbrn {

namespace {

constexpr char kMagic[8] = {'D', 'B', 'R', 'N', 'F', 'T', '0', '1'};
constexpr std::uint32_t kMaxSide = 1u << 20;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw FormatError(std::string("feature file truncated: expected ") + what +
                              " at byte " + std::to_string(pos));
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes[pos + i]);
        pos += 4;
        return v;
    }
    float f32(const char* what) {
        return std::bit_cast<float>(u32(what));
    }
};

} // namespace

void save_features(const std::vector<FeatureMap>& maps, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(maps.size()));
    for (std::size_t m = 0; m < maps.size(); ++m) {
        const FeatureMap& fm = maps[m];
        put_u32(out, static_cast<std::uint32_t>(fm.width));
        put_u32(out, static_cast<std::uint32_t>(fm.height));
        put_u32(out, static_cast<std::uint32_t>(fm.dim));
        for (std::size_t i = 0; i < fm.data.size(); ++i) {
            float f = static_cast<float>(fm.data[i]);
            if (!std::isfinite(f)) {
                throw FormatError("save_features: map " + std::to_string(m) + " value " +
                                  std::to_string(i) + " not representable in single precision");
            }
            put_f32(out, f);
        }
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("save_features: cannot open '" + path + "' for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("save_features: write to '" + path + "' failed");
}

std::vector<FeatureMap> load_features(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("load_features: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader r{bytes};
    r.need(sizeof(kMagic), "magic");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("feature file: bad magic at byte 0 (want \"DBRNFT01\")");
    }
    r.pos = sizeof(kMagic);
    const std::uint32_t count = r.u32("map count");

    std::vector<FeatureMap> maps;
    maps.reserve(count);
    for (std::uint32_t m = 0; m < count; ++m) {
        const std::uint32_t w = r.u32("map width");
        const std::uint32_t h = r.u32("map height");
        const std::uint32_t d = r.u32("map dim");
        if (w == 0 || h == 0 || d == 0 || w > kMaxSide || h > kMaxSide || d > kMaxSide) {
            throw FormatError("feature file: implausible map header at byte " +
                              std::to_string(r.pos - 12));
        }
        const std::uint64_t n = static_cast<std::uint64_t>(w) * h * d;
        std::vector<double> data(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::size_t at = r.pos;
            float f = r.f32("map data");
            if (!std::isfinite(f)) {
                throw FormatError("feature file: non-finite value at byte " + std::to_string(at));
            }
            data[i] = static_cast<double>(f);
        }
        maps.emplace_back(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d),
                          std::move(data));
    }
    if (r.pos != bytes.size()) {
        throw FormatError("feature file: " + std::to_string(bytes.size() - r.pos) +
                          " trailing bytes at byte " + std::to_string(r.pos));
    }
    return maps;
}

} // namespace dbrn
