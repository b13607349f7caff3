#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "neurotouch/blob_tracker.hpp"
#include "neurotouch/core.hpp"
#include "neurotouch/gesture_engine.hpp"
#include "neurotouch/rest_detector.hpp"

namespace neurotouch {

struct PipelineConfig {
  Timestamp batch_window_us = 10'000;
  int reset_window_batches = 2;  // a resting verdict older than this many windows is ignored
  std::uint64_t seed = 1;         // mixed with the batch index for RANSAC
  bool threaded = false;          // run the frame lane on its own worker
  bool record_latency = true;     // false writes zero latencies (byte-stable output files)
  bool emit_diagnostics = false;  // adds transform and set sizes to output records
  GeometryConfig geometry;
  BlobParams tracker;
  EngineParams engine;
  RestParams rest;

  void validate() const;
};

struct StageLatency {
  double tracking_us = 0.0;
  double contact_us = 0.0;
  double classify_us = 0.0;
  double total_us() const { return tracking_us + contact_us + classify_us; }
};

struct PipelineOutput {
  std::uint64_t batch = 0;
  Timestamp t = 0;  // batch end
  GestureEstimate estimate;
  bool resting = false;
  bool reset = false;
  std::size_t events = 0;
  std::size_t associated = 0;
  StageLatency latency;
};

/// Two-lane pipeline. The event lane (the caller) owns the tracker and engine; the frame lane
/// evaluates resting verdicts, inline or on a worker thread. Verdicts for all frames at or
/// before a batch start are collected before that batch runs, so both modes produce the same
/// output stream.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Initializes the tracker and the resting reference from the launch frame.
  void start(const Frame& launch);
  void push_frame(Frame frame);
  /// Processes events in [start, end); `events` must all fall in that window.
  PipelineOutput process_batch(std::span<const Event> events, Timestamp start, Timestamp end);
  void stop();

  const BlobTracker& tracker() const { return tracker_; }
  const PipelineConfig& config() const { return config_; }
  std::size_t reset_count() const { return resets_; }
  std::uint64_t batch_count() const { return batch_; }
  /// Frame-lane processing times, microseconds per frame.
  const std::vector<double>& rest_latencies_us() const { return rest_latency_; }

 private:
  struct Verdict {
    RestVerdict v;
    std::shared_ptr<const Frame> frame;
    double latency_us = 0.0;
  };
  Verdict evaluate(std::shared_ptr<const Frame> frame) const;
  void frame_worker();
  void collect_verdicts(Timestamp upto);

  PipelineConfig config_;
  BlobTracker tracker_;
  RestDetector rest_;
  std::uint64_t batch_ = 0;
  std::size_t resets_ = 0;
  bool started_ = false;
  bool last_resting_ = false;
  std::optional<Verdict> candidate_;
  Timestamp last_reset_frame_t_ = 0;
  std::vector<double> rest_latency_;

  // frame lane
  std::deque<Timestamp> pending_;  // frames submitted, verdict not yet consumed
  std::deque<std::shared_ptr<const Frame>> inbox_;
  std::deque<Verdict> outbox_;
  std::mutex mu_;
  std::condition_variable cv_in_;
  std::condition_variable cv_out_;
  bool stopping_ = false;
  std::thread worker_;
};

using OutputSink = std::function<void(const PipelineOutput&)>;

/// Tiles the recording into batch windows and runs them in order. Returns the batch count.
/// Throws TrackerInitError when the launch frame is unusable, std::runtime_error when the
/// recording has events but no frame.
std::uint64_t run_pipeline(const Recording& rec, const PipelineConfig& config, const OutputSink& sink);

/// One JSON object per line.
void write_output_record(std::ostream& out, const PipelineOutput& o, const PipelineConfig& config);

struct StageStats {
  double mean = 0.0;
  double stddev = 0.0;
  double max = 0.0;
};

struct BenchReport {
  std::uint64_t events = 0;
  std::uint64_t batches = 0;
  std::uint64_t frames = 0;
  double wall_s = 0.0;
  double tracker_events_per_s = 0.0;
  double batches_per_s = 0.0;
  StageStats tracking_us;
  StageStats contact_us;
  StageStats classify_us;
  StageStats total_us;
  StageStats rest_us;
};

BenchReport bench_pipeline(const Recording& rec, PipelineConfig config);
void write_bench_report(std::ostream& out, const BenchReport& r);

}  // namespace neurotouch
