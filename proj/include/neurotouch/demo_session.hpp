#pragma once

#include <array>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "neurotouch/demo_protocol.hpp"
#include "neurotouch/gel_sim.hpp"
#include "neurotouch/pipeline.hpp"

namespace neurotouch::demo {

struct DemoConfig {
  PipelineConfig pipeline;
  double sigma_px = 20.0;            // Gaussian drag kernel
  double speed_cap_mm_s = 210.0;     // gel surface follows the finger no faster than this
  double max_drag_fraction = 0.8;    // of the largest fold-free drag, sigma * sqrt(e)
  double noise_rate = 0.0;           // background events per pixel per second
  std::uint64_t noise_seed = 1;
  std::size_t marker_stride = 4;     // snapshot decimation, 0 omits the snapshot
  std::size_t max_backlog = 256;     // queued pushes before a slow client is dropped

  void validate() const;
};

/// Normalized gel coordinates (y up, unit = gel radius) to image pixels and back.
Vec2 to_image(Vec2 normalized, const GeometryConfig& g);
Vec2 to_normalized(Vec2 image, const GeometryConfig& g);

/// One interactive session: finger inputs deform a virtual gel, which is rendered into events
/// and frames and fed to a private pipeline. Time is session time, advanced one batch per call.
class DemoSession {
 public:
  explicit DemoSession(DemoConfig config);
  ~DemoSession();
  DemoSession(const DemoSession&) = delete;
  DemoSession& operator=(const DemoSession&) = delete;

  /// Queues an input taking effect at session time `at_us` (clamped to be non-decreasing).
  void submit(const FingerInput& input, Timestamp at_us);
  /// Simulates the next batch window and returns its detection.
  DetectionPush advance();
  /// Overrides the snapshot decimation of subsequent pushes (backpressure).
  void set_marker_stride(std::size_t stride) { stride_ = stride; }

  Timestamp now_us() const { return now_; }
  const DemoConfig& config() const { return config_; }
  ServerHello hello() const;
  /// Current true displacement of every marker, px.
  std::span<const Vec2> displacement() const { return disp_; }

 private:
  struct Blob {
    Vec2 center;  // press position, px
    Vec2 drag;    // current surface drag, px
    Vec2 target;
    int finger = -1;  // -1 once released
  };
  void apply(const FingerInput& in);
  void step_deformation(double dt_s);

  DemoConfig config_;
  sim::GelScene scene_;
  std::unique_ptr<sim::EventSimulator> events_;
  std::unique_ptr<Pipeline> pipeline_;
  std::vector<Blob> blobs_;
  std::vector<Vec2> disp_;
  std::deque<std::pair<Timestamp, FingerInput>> pending_;
  Timestamp last_input_ = 0;
  Timestamp now_ = 0;
  Timestamp next_frame_ = 0;
  std::uint64_t frame_index_ = 0;
  std::size_t stride_ = 0;
  std::vector<Event> scratch_;
};

struct ReplayResult {
  std::vector<DetectionPush> pushes;
  double max_input_to_push_ms = 0.0;  // batch quantization plus processing time
  double mean_batch_ms = 0.0;         // wall time per advance()
};

/// Deterministic replay of an input trace: each input takes effect at its client timestamp.
/// Runs until `tail_ms` past the last input.
ReplayResult replay_trace(const DemoConfig& config, std::span<const FingerInput> trace, double tail_ms = 500.0);

/// Trace file: one finger message JSON object per line.
std::vector<FingerInput> read_trace(std::istream& in);

}  // namespace neurotouch::demo
