#include "ercav/timetags.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "ercav/error.hpp"

namespace ercav {
namespace {

template <typename T>
void put_le(char* dst, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

template <typename T>
T get_le(const unsigned char* src) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(src[i]) << (8 * i);
    return v;
}

bool ordered(const TimeTagRecord& a, const TimeTagRecord& b) {
    return a.trial < b.trial || (a.trial == b.trial && a.time_ps <= b.time_ps);
}

}  // namespace

void write_timetags(const TimeTagStream& stream, std::ostream& os) {
    std::array<char, kTimeTagHeaderBytes> header{};
    std::memcpy(header.data(), kTimeTagMagic, 4);
    put_le<std::uint16_t>(header.data() + 4, kTimeTagVersion);
    put_le<std::uint64_t>(header.data() + 6, stream.records.size());
    os.write(header.data(), header.size());

    // Batch records to keep the write calls few for large streams.
    constexpr std::size_t kBatch = 4096;
    std::vector<char> buf;
    buf.reserve(kBatch * kTimeTagRecordBytes);
    for (std::size_t i = 0; i < stream.records.size(); ++i) {
        const auto& r = stream.records[i];
        char rec[kTimeTagRecordBytes];
        put_le<std::uint32_t>(rec, r.trial);
        rec[4] = static_cast<char>(r.channel);
        put_le<std::uint64_t>(rec + 5, r.time_ps);
        buf.insert(buf.end(), rec, rec + kTimeTagRecordBytes);
        if (buf.size() >= kBatch * kTimeTagRecordBytes) {
            os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    if (!buf.empty()) os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("write_timetags: stream write failed");
}

void write_timetags(const TimeTagStream& stream, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_timetags: cannot open " + path.string());
    write_timetags(stream, os);
}

TimeTagStream read_timetags(std::istream& is) {
    unsigned char header[kTimeTagHeaderBytes];
    is.read(reinterpret_cast<char*>(header), kTimeTagHeaderBytes);
    const auto got = static_cast<std::size_t>(is.gcount());
    for (std::size_t i = 0; i < std::min<std::size_t>(got, 4); ++i)
        if (header[i] != static_cast<unsigned char>(kTimeTagMagic[i]))
            throw FormatError("bad magic, expected ETTS", i);
    if (got < 6) throw FormatError("truncated header", got);
    const auto version = get_le<std::uint16_t>(header + 4);
    if (version != kTimeTagVersion)
        throw FormatError("unsupported version " + std::to_string(version), 4);
    if (got < kTimeTagHeaderBytes) throw FormatError("truncated header", got);
    const auto count = get_le<std::uint64_t>(header + 6);

    TimeTagStream out;
    // Guard the reservation against a corrupt count; the read loop catches the rest.
    out.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    unsigned char rec[kTimeTagRecordBytes];
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t offset = kTimeTagHeaderBytes + i * kTimeTagRecordBytes;
        is.read(reinterpret_cast<char*>(rec), kTimeTagRecordBytes);
        const auto n = static_cast<std::size_t>(is.gcount());
        if (n < kTimeTagRecordBytes)
            throw FormatError("length mismatch: header declares " + std::to_string(count) +
                                  " records, data ends inside record " + std::to_string(i),
                              offset + n);
        TimeTagRecord r{get_le<std::uint32_t>(rec), rec[4], get_le<std::uint64_t>(rec + 5)};
        if (!out.records.empty() && !ordered(out.records.back(), r))
            throw FormatError("records out of (trial, time) order at record " + std::to_string(i), offset);
        out.records.push_back(r);
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError("length mismatch: trailing bytes after " + std::to_string(count) + " records",
                          kTimeTagHeaderBytes + count * kTimeTagRecordBytes);
    return out;
}

TimeTagStream read_timetags(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("read_timetags: cannot open " + path.string());
    return read_timetags(is);
}

std::string check_stream_invariants(const TimeTagStream& stream, std::uint64_t window_ps,
                                    std::uint64_t dead_time_ps) {
    std::unordered_map<std::uint8_t, const TimeTagRecord*> last;
    for (std::size_t i = 0; i < stream.records.size(); ++i) {
        const auto& r = stream.records[i];
        const std::string where = "record " + std::to_string(i);
        if (i > 0 && !ordered(stream.records[i - 1], r)) return where + ": out of order";
        if (r.time_ps > window_ps) return where + ": time beyond detection window";
        if (stream.n_trials > 0 && r.trial >= stream.n_trials) return where + ": trial index beyond n_trials";
        auto it = last.find(r.channel);
        if (it != last.end() && it->second->trial == r.trial && r.time_ps - it->second->time_ps < dead_time_ps)
            return where + ": inside dead time of previous click";
        last[r.channel] = &r;
    }
    return {};
}

}  // namespace ercav
