#include "scilit/tar.hpp"

#include <array>
#include <cstring>

namespace scilit::tar {

namespace {

constexpr size_t kBlock = 512;

void put_octal(char* field, size_t width, uint64_t value) {
    // width includes the trailing NUL
    for (size_t i = 0; i + 1 < width; ++i) {
        field[width - 2 - i] = static_cast<char>('0' + (value & 7));
        value >>= 3;
    }
    field[width - 1] = '\0';
}

uint64_t parse_octal(const char* field, size_t width) {
    uint64_t value = 0;
    for (size_t i = 0; i < width; ++i) {
        const char c = field[i];
        if (c == '\0' || c == ' ') {
            if (value != 0 || i > 0) break;
            continue;
        }
        if (c < '0' || c > '7') throw IoError("tar: bad octal field");
        value = (value << 3) | static_cast<uint64_t>(c - '0');
    }
    return value;
}

struct Header {
    char name[100];
    char mode[8];
    char uid[8];
    char gid[8];
    char size[12];
    char mtime[12];
    char chksum[8];
    char typeflag;
    char linkname[100];
    char magic[6];
    char version[2];
    char uname[32];
    char gname[32];
    char devmajor[8];
    char devminor[8];
    char prefix[155];
    char pad[12];
};
static_assert(sizeof(Header) == kBlock);

uint32_t header_checksum(const Header& h) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(&h);
    uint32_t sum = 0;
    for (size_t i = 0; i < kBlock; ++i) {
        // checksum field counts as spaces
        if (i >= offsetof(Header, chksum) && i < offsetof(Header, chksum) + 8) sum += ' ';
        else sum += bytes[i];
    }
    return sum;
}

}  // namespace

Writer::Writer(const std::filesystem::path& path) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("tar: cannot open for write: " + path.string());
}

Writer::~Writer() {
    if (!finished_ && out_.is_open()) {
        try {
            finish();
        } catch (...) {
        }
    }
}

void Writer::add(std::string_view name, std::string_view data) {
    if (finished_) throw IoError("tar: writer already finished");
    if (name.size() >= sizeof(Header{}.name))
        throw InvalidArgument("tar: member name too long: " + std::string(name));

    Header h{};
    std::memcpy(h.name, name.data(), name.size());
    put_octal(h.mode, sizeof(h.mode), 0644);
    put_octal(h.uid, sizeof(h.uid), 0);
    put_octal(h.gid, sizeof(h.gid), 0);
    put_octal(h.size, sizeof(h.size), data.size());
    put_octal(h.mtime, sizeof(h.mtime), 0);
    h.typeflag = '0';
    std::memcpy(h.magic, "ustar", 6);
    h.version[0] = '0';
    h.version[1] = '0';
    const uint32_t sum = header_checksum(h);
    // six octal digits, NUL, space — the historical format
    for (int i = 0; i < 6; ++i) h.chksum[5 - i] = static_cast<char>('0' + ((sum >> (3 * i)) & 7));
    h.chksum[6] = '\0';
    h.chksum[7] = ' ';

    out_.write(reinterpret_cast<const char*>(&h), kBlock);
    out_.write(data.data(), static_cast<std::streamsize>(data.size()));
    const size_t padding = (kBlock - data.size() % kBlock) % kBlock;
    static const std::array<char, kBlock> zeros{};
    out_.write(zeros.data(), static_cast<std::streamsize>(padding));
    if (!out_) throw IoError("tar: write failed: " + path_.string());
}

void Writer::finish() {
    if (finished_) return;
    static const std::array<char, kBlock> zeros{};
    out_.write(zeros.data(), kBlock);
    out_.write(zeros.data(), kBlock);
    out_.close();
    if (out_.fail()) throw IoError("tar: close failed: " + path_.string());
    finished_ = true;
}

Reader::Reader(const std::filesystem::path& path) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw IoError("tar: cannot open for read: " + path.string());
}

std::optional<Member> Reader::next() {
    if (done_) return std::nullopt;
    Header h{};
    in_.read(reinterpret_cast<char*>(&h), kBlock);
    if (in_.gcount() == 0 && in_.eof()) {
        done_ = true;
        return std::nullopt;
    }
    if (in_.gcount() != kBlock) throw IoError("tar: truncated header in " + path_.string());

    // all-zero block terminates the archive
    const auto* bytes = reinterpret_cast<const unsigned char*>(&h);
    bool all_zero = true;
    for (size_t i = 0; i < kBlock; ++i) {
        if (bytes[i] != 0) {
            all_zero = false;
            break;
        }
    }
    if (all_zero) {
        done_ = true;
        return std::nullopt;
    }

    const uint64_t stored_sum = parse_octal(h.chksum, sizeof(h.chksum));
    if (stored_sum != header_checksum(h))
        throw IoError("tar: header checksum mismatch in " + path_.string());

    Member m;
    m.name.assign(h.name, strnlen(h.name, sizeof(h.name)));
    const uint64_t size = parse_octal(h.size, sizeof(h.size));
    last_data_offset_ = cursor_ + kBlock;
    m.data.resize(size);
    in_.read(m.data.data(), static_cast<std::streamsize>(size));
    if (static_cast<uint64_t>(in_.gcount()) != size)
        throw IoError("tar: truncated member " + m.name + " in " + path_.string());
    const size_t padding = (kBlock - size % kBlock) % kBlock;
    in_.ignore(static_cast<std::streamsize>(padding));
    cursor_ += kBlock + size + padding;
    return m;
}

}  // namespace scilit::tar
