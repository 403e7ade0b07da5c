#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fanet {

/// One named tensor of an archive. Values are stored as little-endian f32.
struct ArchiveEntry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

/// Flat key -> tensor file:
///   "FANW" | u32 version (1) | u32 meta_len | meta bytes (UTF-8 JSON)
///   | u32 count | count x (u32 name_len | name | u32 ndim | ndim x u32 dim | f32 data)
/// All integers little-endian.
struct Archive {
    std::string meta = "{}";
    std::vector<ArchiveEntry> entries;

    const ArchiveEntry* find(const std::string& name) const;
};

void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

}  // namespace fanet
