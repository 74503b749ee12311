#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ercav {

/// One detection event. `time_ps` counts from the opening of the detection window.
struct TimeTagRecord {
    std::uint32_t trial = 0;
    std::uint8_t channel = 0;
    std::uint64_t time_ps = 0;

    friend bool operator==(const TimeTagRecord&, const TimeTagRecord&) = default;
};

/// Ordered records plus bookkeeping that only exists in memory; the binary
/// format carries the records alone.
struct TimeTagStream {
    std::vector<TimeTagRecord> records;
    std::uint64_t n_trials = 0;     // trial indices spanned, 0 if unknown
    std::uint64_t kept_trials = 0;  // trials surviving the duty cycle, 0 if unknown
};

inline constexpr char kTimeTagMagic[4] = {'E', 'T', 'T', 'S'};
inline constexpr std::uint16_t kTimeTagVersion = 1;
inline constexpr std::size_t kTimeTagHeaderBytes = 14;
inline constexpr std::size_t kTimeTagRecordBytes = 13;

/// Little-endian: magic `ETTS`, u16 version, u64 count, packed (u32, u8, u64) records.
void write_timetags(const TimeTagStream& stream, std::ostream& os);
void write_timetags(const TimeTagStream& stream, const std::filesystem::path& path);

/// Validates magic, version, length and (trial, time) ordering; throws FormatError with the offset.
[[nodiscard]] TimeTagStream read_timetags(std::istream& is);
[[nodiscard]] TimeTagStream read_timetags(const std::filesystem::path& path);

/// Checks ordering, window bound and per-channel dead time. Returns an empty string if all hold.
[[nodiscard]] std::string check_stream_invariants(const TimeTagStream& stream,
                                                  std::uint64_t window_ps,
                                                  std::uint64_t dead_time_ps);

}  // namespace ercav
