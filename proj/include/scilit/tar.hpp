#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include "scilit/error.hpp"

namespace scilit::tar {

// Minimal POSIX ustar writer/reader, enough for WebDataset-style shards:
// regular files only, names up to 100 bytes, fixed zero mtime so identical
// inputs produce byte-identical archives.

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    ~Writer();

    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void add(std::string_view name, std::string_view data);
    void finish();  // writes the two terminating zero blocks

private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool finished_ = false;
};

struct Member {
    std::string name;
    std::string data;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    // Next member, or nullopt at end of archive. Header checksum and size
    // are validated; failures throw IoError.
    std::optional<Member> next();

    // Byte offset of the last returned member's data within the archive,
    // for random access re-reads.
    uint64_t last_data_offset() const { return last_data_offset_; }

private:
    std::ifstream in_;
    std::filesystem::path path_;
    bool done_ = false;
    uint64_t cursor_ = 0;
    uint64_t last_data_offset_ = 0;
};

}  // namespace scilit::tar
