#include "photocorr/tagstore.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "photocorr/csv.hpp"
#include "photocorr/error.hpp"

namespace photocorr {

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

  void raw(const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out_.push_back(static_cast<std::byte>(data[i]));
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::byte>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) fail(ErrorKind::format, std::string("truncated file while reading ") + what);
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(in_[pos_++]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::byte> take(std::size_t n) {
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

void check_header(const StreamHeader& h, ErrorKind kind) {
  require(h.bin_width_ps > 0, kind, "bin width must be positive");
  require(h.shot_duration_ps % h.bin_width_ps == 0, kind,
          "bin width " + std::to_string(h.bin_width_ps) + " ps does not divide shot duration " +
              std::to_string(h.shot_duration_ps) + " ps");
  if (h.efficiencies) {
    for (double e : *h.efficiencies)
      require(e > 0.0 && e <= 1.0, kind, "detector efficiency outside (0, 1]");
  }
}

}  // namespace

void TagStream::append_shot(std::span<const TagRecord> shot) {
  records_.insert(records_.end(), shot.begin(), shot.end());
  offsets_.push_back(records_.size());
}

void TagStream::append_shot_sorted(std::vector<TagRecord> shot) {
  std::stable_sort(shot.begin(), shot.end(),
                   [](const TagRecord& a, const TagRecord& b) { return a.time_ps < b.time_ps; });
  append_shot(shot);
}

void TagStream::reserve(std::size_t shots, std::size_t tags) {
  offsets_.reserve(shots + 1);
  records_.reserve(tags);
}

std::array<std::uint64_t, 2> TagStream::channel_totals() const noexcept {
  std::array<std::uint64_t, 2> totals{0, 0};
  for (const auto& r : records_) {
    if (r.channel == 1) ++totals[0];
    else if (r.channel == 2) ++totals[1];
  }
  return totals;
}

void TagStream::validate() const {
  check_header(header_, ErrorKind::validation);
  require(!offsets_.empty() && offsets_.front() == 0 && offsets_.back() == records_.size(),
          ErrorKind::validation, "shot offsets inconsistent with record count");
  for (std::size_t s = 0; s < shot_count(); ++s) {
    std::uint64_t previous = 0;
    for (const auto& r : shot(s)) {
      require(r.channel == 1 || r.channel == 2, ErrorKind::validation,
              "channel " + std::to_string(r.channel) + " in shot " + std::to_string(s));
      require(r.time_ps < header_.shot_duration_ps, ErrorKind::validation,
              "timestamp " + std::to_string(r.time_ps) + " ps beyond shot duration");
      require(r.time_ps >= previous, ErrorKind::validation,
              "records not time-ordered in shot " + std::to_string(s));
      previous = r.time_ps;
    }
  }
}

std::vector<std::byte> serialize_stream(const TagStream& stream) {
  stream.validate();
  const auto& h = stream.header();
  std::vector<std::byte> out;
  out.reserve(kPtagHeaderBytes + 16 + 8 * stream.shot_count() +
              kPtagRecordBytes * stream.tag_count());
  ByteWriter w(out);
  w.raw(kPtagMagic.data(), kPtagMagic.size());
  w.u32(h.efficiencies ? kPtagVersionEfficiency : kPtagVersion);
  w.u64(stream.shot_count());
  w.u64(h.shot_duration_ps);
  w.u64(h.bin_width_ps);
  w.u64(h.clock_resolution_ps);
  if (h.efficiencies) {
    w.f64((*h.efficiencies)[0]);
    w.f64((*h.efficiencies)[1]);
  }
  for (std::size_t s = 0; s < stream.shot_count(); ++s) {
    auto shot = stream.shot(s);
    w.u64(shot.size());
    for (const auto& r : shot) {
      w.u8(r.channel);
      w.u64(r.time_ps);
    }
  }
  return out;
}

void write_stream(const TagStream& stream, const std::filesystem::path& path) {
  const auto bytes = serialize_stream(stream);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(os), ErrorKind::io, "short write to " + path.string());
}

TagStream parse_stream(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  r.need(kPtagHeaderBytes, "header");
  auto magic = r.take(4);
  require(std::memcmp(magic.data(), kPtagMagic.data(), 4) == 0, ErrorKind::format,
          "bad magic, not a PTAG file");
  const std::uint32_t version = r.u32();
  require(version == kPtagVersion || version == kPtagVersionEfficiency, ErrorKind::format,
          "unsupported PTAG version " + std::to_string(version));

  StreamHeader h;
  const std::uint64_t shots = r.u64();
  h.shot_duration_ps = r.u64();
  h.bin_width_ps = r.u64();
  h.clock_resolution_ps = r.u64();
  if (version == kPtagVersionEfficiency) {
    r.need(16, "efficiencies");
    const double e1 = r.f64();
    const double e2 = r.f64();
    h.efficiencies = std::array<double, 2>{e1, e2};
  }
  check_header(h, ErrorKind::corruption);

  // Each shot needs at least its count prefix.
  require(shots <= r.remaining() / 8, ErrorKind::format, "shot count exceeds file size");

  TagStream stream(h);
  stream.reserve(shots, (r.remaining() - 8 * shots) / kPtagRecordBytes);
  std::vector<TagRecord> shot;
  for (std::uint64_t s = 0; s < shots; ++s) {
    r.need(8, "shot length");
    const std::uint64_t n = r.u64();
    require(n <= r.remaining() / kPtagRecordBytes, ErrorKind::format,
            "shot " + std::to_string(s) + " length exceeds file size");
    shot.resize(n);
    std::uint64_t previous = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      TagRecord rec;
      rec.channel = r.u8();
      rec.time_ps = r.u64();
      require(rec.channel == 1 || rec.channel == 2, ErrorKind::corruption,
              "invalid channel " + std::to_string(rec.channel) + " in shot " + std::to_string(s));
      require(rec.time_ps >= previous, ErrorKind::corruption,
              "unsorted tags in shot " + std::to_string(s));
      require(rec.time_ps < h.shot_duration_ps, ErrorKind::range,
              "timestamp " + std::to_string(rec.time_ps) + " ps >= shot duration in shot " +
                  std::to_string(s));
      previous = rec.time_ps;
      shot[i] = rec;
    }
    stream.append_shot(shot);
  }
  require(r.remaining() == 0, ErrorKind::format, "trailing bytes after last shot");
  return stream;
}

TagStream read_stream(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  const auto size = static_cast<std::size_t>(is.tellg());
  is.seekg(0);
  std::vector<std::byte> bytes(size);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  require(static_cast<bool>(is), ErrorKind::io, "short read from " + path.string());
  return parse_stream(bytes);
}

BinnedCounts bin_counts(const TagStream& stream, std::uint64_t bin_width_ps) {
  const std::uint64_t duration = stream.header().shot_duration_ps;
  require(bin_width_ps > 0 && duration % bin_width_ps == 0, ErrorKind::config,
          "bin width " + std::to_string(bin_width_ps) + " ps does not divide shot duration");
  BinnedCounts out;
  out.bin_width_ps = bin_width_ps;
  const std::size_t bins = duration / bin_width_ps;
  out.counts_ch1.assign(bins, 0);
  out.counts_ch2.assign(bins, 0);
  for (const auto& r : stream.records()) {
    auto& counts = r.channel == 1 ? out.counts_ch1 : out.counts_ch2;
    ++counts[r.time_ps / bin_width_ps];
  }
  return out;
}

void write_binned_csv(const BinnedCounts& counts, const std::filesystem::path& path) {
  CsvWriter csv(path, {"bin_start_ps", "n1", "n2"});
  for (std::size_t b = 0; b < counts.counts_ch1.size(); ++b)
    csv.row(b * counts.bin_width_ps, counts.counts_ch1[b], counts.counts_ch2[b]);
}

}  // namespace photocorr
