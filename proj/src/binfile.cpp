#include "scilit/binfile.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "scilit/error.hpp"

namespace scilit::binfile {

uint32_t crc32(const void* data, size_t len) {
    return static_cast<uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

void put_u32(std::vector<std::byte>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<std::byte>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::byte>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_f64(std::vector<std::byte>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

uint32_t Cursor::u32() {
    if (pos_ + 4 > buf_.size()) throw IoError("binfile: truncated payload (u32)");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint32_t>(static_cast<uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t Cursor::u64() {
    if (pos_ + 8 > buf_.size()) throw IoError("binfile: truncated payload (u64)");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<uint64_t>(static_cast<uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
}

float Cursor::f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double Cursor::f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_envelope(const std::filesystem::path& path, const char magic[8],
                    const std::vector<std::byte>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("binfile: cannot open for write: " + path.string());
    out.write(magic, 8);
    std::vector<std::byte> header;
    put_u32(header, kFormatVersion);
    put_u64(header, payload.size());
    put_u32(header, crc32(payload.data(), payload.size()));
    out.write(reinterpret_cast<const char*>(header.data()),
              static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("binfile: write failed: " + path.string());
}

std::vector<std::byte> read_envelope(const std::filesystem::path& path, const char magic[8],
                                     size_t chunk_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("binfile: cannot open for read: " + path.string());
    char got_magic[8];
    in.read(got_magic, 8);
    if (!in || std::memcmp(got_magic, magic, 8) != 0)
        throw VersionMismatch("binfile: bad magic in " + path.string());
    char header[16];
    in.read(header, 16);
    if (!in) throw IoError("binfile: truncated header in " + path.string());
    auto rd_u32 = [&](size_t off) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(header[off + i])) << (8 * i);
        return v;
    };
    auto rd_u64 = [&](size_t off) {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<uint8_t>(header[off + i])) << (8 * i);
        return v;
    };
    const uint32_t version = rd_u32(0);
    if (version != kFormatVersion)
        throw VersionMismatch("binfile: unsupported format version " + std::to_string(version) +
                              " in " + path.string());
    const uint64_t payload_size = rd_u64(4);
    const uint32_t expect_crc = rd_u32(12);

    std::vector<std::byte> payload(payload_size);
    const size_t step = chunk_size == 0 ? (payload_size == 0 ? 1 : payload_size) : chunk_size;
    size_t done = 0;
    while (done < payload_size) {
        const size_t want = std::min(step, static_cast<size_t>(payload_size) - done);
        in.read(reinterpret_cast<char*>(payload.data() + done),
                static_cast<std::streamsize>(want));
        if (!in) throw IoError("binfile: truncated payload in " + path.string());
        done += want;
    }
    if (crc32(payload.data(), payload.size()) != expect_crc)
        throw ChecksumMismatch("binfile: checksum mismatch in " + path.string());
    return payload;
}

namespace {
constexpr char kMatrixMagic[8] = {'S', 'L', 'M', 'A', 'T', 'F', '3', '2'};
}

void write_matrix(const std::filesystem::path& path, uint64_t rows, uint64_t cols,
                  const std::vector<float>& values) {
    if (values.size() != rows * cols)
        throw InvalidArgument("write_matrix: values size does not match rows*cols");
    std::vector<std::byte> payload;
    payload.reserve(20 + values.size() * 4);
    put_u64(payload, rows);
    put_u64(payload, cols);
    put_u32(payload, 0);  // dtype 0 = f32
    for (float v : values) put_f32(payload, v);
    write_envelope(path, kMatrixMagic, payload);
}

MatrixFile read_matrix(const std::filesystem::path& path, size_t chunk_size) {
    auto payload = read_envelope(path, kMatrixMagic, chunk_size);
    Cursor cur(payload);
    MatrixFile m;
    m.rows = cur.u64();
    m.cols = cur.u64();
    const uint32_t dtype = cur.u32();
    if (dtype != 0) throw VersionMismatch("read_matrix: unsupported dtype");
    const uint64_t n = m.rows * m.cols;
    if (cur.remaining() != n * 4) throw IoError("read_matrix: payload size mismatch");
    m.values.resize(n);
    for (uint64_t i = 0; i < n; ++i) m.values[i] = cur.f32();
    return m;
}

}  // namespace scilit::binfile
