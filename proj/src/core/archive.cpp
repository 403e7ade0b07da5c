#include "core/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "core/error.hpp"

namespace fanet {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (in.gcount() != 4) {
        fail(ErrorKind::Format, "truncated archive " + path.string());
    }
    return v;
}

std::string get_bytes(std::istream& in, std::uint32_t n, const std::filesystem::path& path) {
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (in.gcount() != static_cast<std::streamsize>(n)) {
        fail(ErrorKind::Format, "truncated archive " + path.string());
    }
    return s;
}

}  // namespace

const ArchiveEntry* Archive::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) {
            return &e;
        }
    }
    return nullptr;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(archive.meta.size()));
    out.write(archive.meta.data(), static_cast<std::streamsize>(archive.meta.size()));
    put_u32(out, static_cast<std::uint32_t>(archive.entries.size()));
    for (const auto& e : archive.entries) {
        const auto count = std::accumulate(e.shape.begin(), e.shape.end(), std::size_t{1},
                                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
        require(count == e.values.size(), "archive entry " + e.name + ": shape does not match value count");
        put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) {
            put_u32(out, static_cast<std::uint32_t>(d));
        }
        out.write(reinterpret_cast<const char*>(e.values.data()),
                  static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    }
    if (!out) {
        fail(ErrorKind::Io, "write failed for " + path.string());
    }
}

Archive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open archive " + path.string());
    }
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        fail(ErrorKind::Format, path.string() + " is not a FANW archive");
    }
    const auto version = get_u32(in, path);
    if (version != kVersion) {
        fail(ErrorKind::Format, "unsupported archive version " + std::to_string(version) + " in " + path.string());
    }
    Archive a;
    a.meta = get_bytes(in, get_u32(in, path), path);
    const auto count = get_u32(in, path);
    a.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ArchiveEntry e;
        e.name = get_bytes(in, get_u32(in, path), path);
        const auto ndim = get_u32(in, path);
        if (ndim > 8) {
            fail(ErrorKind::Format, "archive entry " + e.name + " has implausible rank " + std::to_string(ndim));
        }
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            e.shape.push_back(static_cast<int>(get_u32(in, path)));
            n *= static_cast<std::size_t>(e.shape.back());
        }
        e.values.resize(n);
        in.read(reinterpret_cast<char*>(e.values.data()), static_cast<std::streamsize>(n * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
            fail(ErrorKind::Format, "truncated data for archive entry " + e.name);
        }
        a.entries.push_back(std::move(e));
    }
    return a;
}

}  // namespace fanet
