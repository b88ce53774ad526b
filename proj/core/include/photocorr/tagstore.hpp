#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace photocorr {

/// One detector click. Timestamps are integer picoseconds after the shot trigger.
struct TagRecord {
  std::uint8_t channel = 1;  // 1 or 2
  std::uint64_t time_ps = 0;

  friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

struct StreamHeader {
  std::uint64_t shot_duration_ps = 0;
  std::uint64_t bin_width_ps = 1000;
  std::uint64_t clock_resolution_ps = 1;
  // Optional detector efficiencies. They cancel in every normalised
  // correlator and are carried as metadata only.
  std::optional<std::array<double, 2>> efficiencies;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

/// Time tags of repeated shots stored shot-contiguously.
///
/// `offsets` has shot_count()+1 entries; shot i occupies
/// records[offsets[i], offsets[i+1]). Immutable once built, so it can be
/// shared read-only between workers.
class TagStream {
 public:
  TagStream() = default;
  explicit TagStream(StreamHeader header) : header_(header) {}

  const StreamHeader& header() const noexcept { return header_; }
  StreamHeader& header() noexcept { return header_; }

  std::size_t shot_count() const noexcept { return offsets_.size() - 1; }
  std::size_t tag_count() const noexcept { return records_.size(); }
  std::span<const TagRecord> shot(std::size_t i) const noexcept {
    return {records_.data() + offsets_[i], records_.data() + offsets_[i + 1]};
  }
  std::span<const TagRecord> records() const noexcept { return records_; }

  /// Appends a shot; records are copied as given (validate() checks order).
  void append_shot(std::span<const TagRecord> shot);
  /// Appends a shot, sorting it by time first.
  void append_shot_sorted(std::vector<TagRecord> shot);
  void reserve(std::size_t shots, std::size_t tags);

  /// Number of tags on channel 1 and 2.
  std::array<std::uint64_t, 2> channel_totals() const noexcept;

  /// Throws Error(validation) on the first violated invariant.
  void validate() const;

  friend bool operator==(const TagStream&, const TagStream&) = default;

 private:
  StreamHeader header_;
  std::vector<TagRecord> records_;
  std::vector<std::uint64_t> offsets_{0};
};

/// Bytes used by the on-disk format.
inline constexpr std::array<char, 4> kPtagMagic{'P', 'T', 'A', 'G'};
inline constexpr std::uint32_t kPtagVersion = 1;             // base header
inline constexpr std::uint32_t kPtagVersionEfficiency = 2;   // + two f64 efficiencies
inline constexpr std::size_t kPtagHeaderBytes = 40;
inline constexpr std::size_t kPtagRecordBytes = 9;

/// Reads and validates a PTAG file.
///
/// Layout (little-endian): "PTAG", u32 version, u64 shot count,
/// u64 shot duration, u64 bin width, u64 clock resolution, then, for
/// version 2 only, two f64 efficiencies. Each shot is a u64 record count
/// followed by that many (u8 channel, u64 time_ps) records.
TagStream read_stream(const std::filesystem::path& path);

/// Parses an in-memory PTAG image (same checks as read_stream).
TagStream parse_stream(std::span<const std::byte> bytes);

/// Validates, then writes. Nothing is written if validation fails.
void write_stream(const TagStream& stream, const std::filesystem::path& path);

/// Serialises to the PTAG byte image.
std::vector<std::byte> serialize_stream(const TagStream& stream);

struct BinnedCounts {
  std::uint64_t bin_width_ps = 0;
  std::vector<std::uint64_t> counts_ch1;
  std::vector<std::uint64_t> counts_ch2;
};

/// Per-bin totals over all shots. Tags on a bin edge go to the upper bin.
BinnedCounts bin_counts(const TagStream& stream, std::uint64_t bin_width_ps);

/// CSV with columns bin_start_ps,n1,n2.
void write_binned_csv(const BinnedCounts& counts, const std::filesystem::path& path);

}  // namespace photocorr
