#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <random>

#include "neurotouch/gel_sim.hpp"
#include "neurotouch/recording.hpp"
#include "support.hpp"

using namespace neurotouch;

namespace {

Recording random_recording(std::mt19937_64& rng) {
  Recording r;
  r.header.seed = rng();
  std::uniform_int_distribution<int> n(0, 300);
  Timestamp t = 0;
  const int ev = n(rng);
  for (int i = 0; i < ev; ++i) {
    t += rng() % 50;
    r.events.push_back({static_cast<std::uint16_t>(rng() % kSensorWidth),
                        static_cast<std::uint16_t>(rng() % kSensorHeight), t,
                        (rng() & 1) ? Polarity::Positive : Polarity::Negative});
  }
  const int fr = static_cast<int>(rng() % 3);
  for (int i = 0; i < fr; ++i) {
    Frame f(kSensorWidth, kSensorHeight, static_cast<Timestamp>(i) * 40'000);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng());
    r.frames.push_back(std::move(f));
  }
  Timestamp lt = 0;
  const int lb = static_cast<int>(rng() % 20);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  for (int i = 0; i < lb; ++i) {
    lt += rng() % 1000;
    GestureLabel l;
    l.t = lt;
    l.type = static_cast<GestureType>(rng() % kGestureTypeCount);
    if (l.type != GestureType::NoGesture) {
      const int k = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < k; ++j) l.contact_points.push_back({u(rng), u(rng)});
      l.intensity_mm = u(rng) / 20.0;
    }
    r.labels.push_back(l);
  }
  r.header.duration_us = std::max(t, lt) + 1;
  return r;
}

Recording one_of_each() {
  Recording r;
  r.header.duration_us = 100;
  r.events.push_back({10, 20, 5, Polarity::Positive});
  r.frames.emplace_back(kSensorWidth, kSensorHeight, 0, 7);
  return r;
}

DecodeErrorKind decode_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_recording(bytes);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return DecodeErrorKind::Io;
}

// Byte offsets of the fixed layout.
constexpr std::size_t kHeaderSize = 4 + 2 + 6 * 8 + 8 * 8;
constexpr std::size_t kEventSize = 13;

void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST(Recording, EmptyRoundTrips) {
  Recording r;
  EXPECT_EQ(decode_recording(encode_recording(r)), r);
}

TEST(Recording, OneEventOneFrameRoundTrips) {
  const Recording r = one_of_each();
  EXPECT_EQ(decode_recording(encode_recording(r)), r);
}

TEST(Recording, FileRoundTrip) {
  testkit::TempDir dir;
  const Recording r = one_of_each();
  write_recording(r, dir / "a.ntrc");
  EXPECT_EQ(read_recording(dir / "a.ntrc"), r);
}

TEST(Recording, RandomizedRoundTrip) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 200; ++i) {
    const Recording r = random_recording(rng);
    const auto bytes = encode_recording(r);
    const Recording back = decode_recording(bytes);
    ASSERT_EQ(back, r) << "trial " << i;
    ASSERT_EQ(encode_recording(back), bytes);
  }
}

TEST(Recording, MillionEventSimulationReserializesByteIdentical) {
  sim::GelScene scene = sim::GelScene::make();
  scene.noise_rate = 12.0;  // ~1.08e6 noise events over one second
  const Recording r = sim::generate_labeled_recording(scene, {}, 1'000'000);
  ASSERT_GE(r.events.size(), 1'000'000u);
  const auto bytes = encode_recording(r);
  EXPECT_EQ(encode_recording(decode_recording(bytes)), bytes);
}

TEST(RecordingErrors, BadMagic) {
  auto b = encode_recording(one_of_each());
  b[0] = 'X';
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::BadMagic);
}

TEST(RecordingErrors, BadVersion) {
  auto b = encode_recording(one_of_each());
  b[4] = 9;
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::BadVersion);
}

TEST(RecordingErrors, Truncated) {
  auto b = encode_recording(one_of_each());
  b.resize(b.size() - 3);
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::Truncated);
}

TEST(RecordingErrors, TrailingBytes) {
  auto b = encode_recording(one_of_each());
  b.push_back(0);
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::TrailingBytes);
}

TEST(RecordingErrors, OutOfBoundsEvent) {
  auto b = encode_recording(one_of_each());
  b[kHeaderSize] = 0xFF;  // x = 0x..FF, low byte
  b[kHeaderSize + 1] = 0x01;
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::OutOfBounds);
}

TEST(RecordingErrors, NonMonotoneEvents) {
  Recording r = one_of_each();
  r.events.push_back({1, 1, 9, Polarity::Negative});
  auto b = encode_recording(r);
  put_u64(b, kHeaderSize + kEventSize + 4, 2);  // second event now precedes the first
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::NonMonotoneTimestamp);
}

TEST(RecordingErrors, BadHeaderGeometry) {
  auto b = encode_recording(one_of_each());
  put_u64(b, 6, std::bit_cast<std::uint64_t>(-1.0));  // px_per_mm
  EXPECT_EQ(decode_kind(b), DecodeErrorKind::BadHeader);
}

TEST(RecordingErrors, LabelInvariants) {
  Recording r = one_of_each();
  r.labels.push_back({50, GestureType::NoGesture, {}, 0.0});
  auto ok = encode_recording(r);
  EXPECT_NO_THROW(decode_recording(ok));

  r.labels.back().intensity_mm = 1.0;  // NoGesture must carry zero intensity
  EXPECT_EQ(decode_kind(encode_recording(r)), DecodeErrorKind::BadLabel);

  r.labels.back() = {200, GestureType::Push, {{1, 1}}, 1.0};  // past duration
  EXPECT_EQ(decode_kind(encode_recording(r)), DecodeErrorKind::BadLabel);
}

TEST(RecordingErrors, KindsAreDistinct) {
  EXPECT_NE(to_string(DecodeErrorKind::BadMagic), to_string(DecodeErrorKind::BadVersion));
  EXPECT_NE(to_string(DecodeErrorKind::NonMonotoneTimestamp), to_string(DecodeErrorKind::OutOfBounds));
}

TEST(RecordingErrors, MissingFileIsIoError) {
  try {
    read_recording("/nonexistent/definitely/missing.ntrc");
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.kind(), DecodeErrorKind::Io);
  }
}
