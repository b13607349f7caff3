#include "neurotouch/recording.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>

namespace neurotouch {

std::string_view to_string(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::Io: return "io";
    case DecodeErrorKind::BadMagic: return "bad_magic";
    case DecodeErrorKind::BadVersion: return "bad_version";
    case DecodeErrorKind::Truncated: return "truncated";
    case DecodeErrorKind::TrailingBytes: return "trailing_bytes";
    case DecodeErrorKind::BadHeader: return "bad_header";
    case DecodeErrorKind::NonMonotoneTimestamp: return "non_monotone_timestamp";
    case DecodeErrorKind::OutOfBounds: return "out_of_bounds";
    case DecodeErrorKind::BadLabel: return "bad_label";
  }
  return "unknown";
}

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
    }
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw DecodeError(DecodeErrorKind::Truncated,
                        "recording truncated at byte " + std::to_string(pos_));
    }
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kEventRecordSize = 2 + 2 + 8 + 1;

}  // namespace

std::vector<std::uint8_t> encode_recording(const Recording& rec) {
  const int w = rec.frames.empty() ? kSensorWidth : rec.frames.front().width;
  const int h = rec.frames.empty() ? kSensorHeight : rec.frames.front().height;

  std::vector<std::uint8_t> out;
  out.reserve(64 + rec.events.size() * kEventRecordSize +
              rec.frames.size() * (8 + static_cast<std::size_t>(w) * h));
  Writer wr(out);
  for (char c : kRecordingMagic) wr.put(static_cast<std::uint8_t>(c));
  wr.put(kRecordingVersion);

  const auto& g = rec.header.geometry;
  wr.put_f64(g.px_per_mm);
  wr.put_f64(g.gel_radius_mm);
  wr.put_f64(g.marker_pitch_mm);
  wr.put_f64(g.marker_diameter_mm);
  wr.put_f64(g.image_center.x);
  wr.put_f64(g.image_center.y);
  wr.put(static_cast<std::uint64_t>(g.marker_count));
  wr.put(static_cast<std::uint64_t>(rec.header.duration_us));
  wr.put(static_cast<std::uint64_t>(rec.header.seed));
  wr.put(static_cast<std::uint64_t>(w));
  wr.put(static_cast<std::uint64_t>(h));
  wr.put(static_cast<std::uint64_t>(rec.events.size()));
  wr.put(static_cast<std::uint64_t>(rec.frames.size()));
  wr.put(static_cast<std::uint64_t>(rec.labels.size()));

  for (const Event& e : rec.events) {
    wr.put(e.x);
    wr.put(e.y);
    wr.put(static_cast<std::uint64_t>(e.t));
    wr.put(static_cast<std::uint8_t>(e.polarity));
  }
  for (const Frame& f : rec.frames) {
    if (f.width != w || f.height != h || f.pixels.size() != static_cast<std::size_t>(w) * h) {
      throw std::invalid_argument("encode_recording: frame dimensions differ within stream");
    }
    wr.put(static_cast<std::uint64_t>(f.t));
    wr.put_bytes(f.pixels);
  }
  for (const GestureLabel& l : rec.labels) {
    if (l.contact_points.size() > 255) throw std::invalid_argument("encode_recording: too many contact points");
    wr.put(static_cast<std::uint64_t>(l.t));
    wr.put(static_cast<std::uint8_t>(l.type));
    wr.put(static_cast<std::uint8_t>(l.contact_points.size()));
    for (Vec2 p : l.contact_points) {
      wr.put_f64(p.x);
      wr.put_f64(p.y);
    }
    wr.put_f64(l.intensity_mm);
  }
  return out;
}

Recording decode_recording(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRecordingMagic, 4) != 0) {
    throw DecodeError(DecodeErrorKind::BadMagic, "not a recording: bad magic");
  }
  rd.get_bytes(4);
  const auto version = rd.get<std::uint16_t>();
  if (version != kRecordingVersion) {
    throw DecodeError(DecodeErrorKind::BadVersion, "unsupported recording version " + std::to_string(version));
  }

  Recording rec;
  auto& g = rec.header.geometry;
  g.px_per_mm = rd.get_f64();
  g.gel_radius_mm = rd.get_f64();
  g.marker_pitch_mm = rd.get_f64();
  g.marker_diameter_mm = rd.get_f64();
  g.image_center.x = rd.get_f64();
  g.image_center.y = rd.get_f64();
  const auto marker_count = rd.get<std::uint64_t>();
  rec.header.duration_us = rd.get<std::uint64_t>();
  rec.header.seed = rd.get<std::uint64_t>();
  const auto w = rd.get<std::uint64_t>();
  const auto h = rd.get<std::uint64_t>();
  const auto n_events = rd.get<std::uint64_t>();
  const auto n_frames = rd.get<std::uint64_t>();
  const auto n_labels = rd.get<std::uint64_t>();

  if (marker_count == 0 || marker_count > 100000) {
    throw DecodeError(DecodeErrorKind::BadHeader, "implausible marker count");
  }
  g.marker_count = static_cast<int>(marker_count);
  try {
    g.validate();
  } catch (const std::invalid_argument& ex) {
    throw DecodeError(DecodeErrorKind::BadHeader, ex.what());
  }
  if (w != kSensorWidth || h != kSensorHeight) {
    throw DecodeError(DecodeErrorKind::BadHeader, "frame dimensions must be 346x260");
  }
  // Reject counts that cannot fit in the remaining payload before allocating.
  if (n_events > rd.remaining() / kEventRecordSize || n_frames > rd.remaining() / (8 + w * h)) {
    throw DecodeError(DecodeErrorKind::Truncated, "section counts exceed payload size");
  }

  rec.events.resize(n_events);
  Timestamp last = 0;
  for (std::uint64_t i = 0; i < n_events; ++i) {
    Event& e = rec.events[i];
    e.x = rd.get<std::uint16_t>();
    e.y = rd.get<std::uint16_t>();
    e.t = rd.get<std::uint64_t>();
    const auto p = rd.get<std::uint8_t>();
    if (e.x >= kSensorWidth || e.y >= kSensorHeight) {
      throw DecodeError(DecodeErrorKind::OutOfBounds, "event " + std::to_string(i) + " outside sensor bounds");
    }
    if (p > 1) throw DecodeError(DecodeErrorKind::OutOfBounds, "event " + std::to_string(i) + " bad polarity");
    if (e.t < last) {
      throw DecodeError(DecodeErrorKind::NonMonotoneTimestamp, "event " + std::to_string(i) + " goes back in time");
    }
    e.polarity = static_cast<Polarity>(p);
    last = e.t;
  }

  rec.frames.reserve(n_frames);
  last = 0;
  for (std::uint64_t i = 0; i < n_frames; ++i) {
    Frame f;
    f.width = static_cast<int>(w);
    f.height = static_cast<int>(h);
    f.t = rd.get<std::uint64_t>();
    if (f.t < last) {
      throw DecodeError(DecodeErrorKind::NonMonotoneTimestamp, "frame " + std::to_string(i) + " goes back in time");
    }
    last = f.t;
    auto px = rd.get_bytes(w * h);
    f.pixels.assign(px.begin(), px.end());
    rec.frames.push_back(std::move(f));
  }

  rec.labels.reserve(std::min<std::uint64_t>(n_labels, rd.remaining() / 18));
  last = 0;
  for (std::uint64_t i = 0; i < n_labels; ++i) {
    GestureLabel l;
    l.t = rd.get<std::uint64_t>();
    const auto type = rd.get<std::uint8_t>();
    const auto n = rd.get<std::uint8_t>();
    if (type >= kGestureTypeCount || n > 3) {
      throw DecodeError(DecodeErrorKind::BadLabel, "label " + std::to_string(i) + " malformed");
    }
    if (l.t < last) {
      throw DecodeError(DecodeErrorKind::NonMonotoneTimestamp, "label " + std::to_string(i) + " goes back in time");
    }
    if (l.t > rec.header.duration_us) {
      throw DecodeError(DecodeErrorKind::BadLabel, "label " + std::to_string(i) + " after the recording end");
    }
    last = l.t;
    l.type = static_cast<GestureType>(type);
    for (int k = 0; k < n; ++k) {
      Vec2 p;
      p.x = rd.get_f64();
      p.y = rd.get_f64();
      l.contact_points.push_back(p);
    }
    l.intensity_mm = rd.get_f64();
    if (!(l.intensity_mm >= 0.0) ||
        (l.type == GestureType::NoGesture && (n != 0 || l.intensity_mm != 0.0))) {
      throw DecodeError(DecodeErrorKind::BadLabel, "label " + std::to_string(i) + " violates label invariants");
    }
    rec.labels.push_back(std::move(l));
  }

  if (rd.remaining() != 0) throw DecodeError(DecodeErrorKind::TrailingBytes, "trailing bytes after label section");
  return rec;
}

void write_recording(const Recording& rec, const std::filesystem::path& path) {
  const auto bytes = encode_recording(rec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Recording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(DecodeErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_recording(bytes);
}

void write_events_csv(const Recording& rec, std::ostream& out) {
  out << "t,x,y,p\n";
  for (const Event& e : rec.events) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << (e.polarity == Polarity::Positive ? 1 : 0) << '\n';
  }
}

}  // namespace neurotouch
