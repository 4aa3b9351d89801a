#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scilit::binfile {

// All on-disk binary payloads share one envelope:
//   magic[8] | format_version u32 | payload_size u64 | crc32(payload) u32 | payload
// Everything little-endian. Readers verify magic, version, and checksum;
// payload interpretation is up to the caller.

inline constexpr uint32_t kFormatVersion = 1;

uint32_t crc32(const void* data, size_t len);

void write_envelope(const std::filesystem::path& path, const char magic[8],
                    const std::vector<std::byte>& payload);

// Reads the payload, verifying magic/version/crc. `chunk_size` bounds the
// size of each read syscall (0 means one read); the reconstructed payload is
// identical regardless of chunking.
std::vector<std::byte> read_envelope(const std::filesystem::path& path, const char magic[8],
                                     size_t chunk_size = 0);

// Little-endian scalar append/read helpers for payload assembly.
void put_u32(std::vector<std::byte>& out, uint32_t v);
void put_u64(std::vector<std::byte>& out, uint64_t v);
void put_f32(std::vector<std::byte>& out, float v);
void put_f64(std::vector<std::byte>& out, double v);

class Cursor {
public:
    explicit Cursor(const std::vector<std::byte>& buf) : buf_(buf) {}
    uint32_t u32();
    uint64_t u64();
    float f32();
    double f64();
    size_t remaining() const { return buf_.size() - pos_; }

private:
    const std::vector<std::byte>& buf_;
    size_t pos_ = 0;
};

// f32 row-major matrix with keys: the layout of the embeddings file and of
// vector-index storage. Header inside the payload: n u64 | d u64 | dtype u32
// (0 = f32), then n*d floats.
struct MatrixFile {
    uint64_t rows = 0;
    uint64_t cols = 0;
    std::vector<float> values;  // row-major
};

void write_matrix(const std::filesystem::path& path, uint64_t rows, uint64_t cols,
                  const std::vector<float>& values);
MatrixFile read_matrix(const std::filesystem::path& path, size_t chunk_size = 0);

}  // namespace scilit::binfile
