#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

struct Prediction {
  Timestamp t = 0;
  GestureType type = GestureType::NoGesture;
  std::vector<Vec2> points;
  double intensity_mm = 0.0;
};

/// Reads the per-batch records written by the pipeline (one JSON object per line).
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct AlignedPair {
  Prediction pred;
  GestureLabel truth;  // at pred.t
};

struct Alignment {
  std::vector<AlignedPair> pairs;
  std::size_t skipped = 0;  // predictions before the first label
};

/// Label at time t: type of the most recent label, points and intensity interpolated linearly
/// towards the next label. Points are paired by greedy nearest matching; unmatched ones hold.
GestureLabel interpolate_label(std::span<const GestureLabel> labels, Timestamp t);
Alignment align_labels(std::span<const Prediction> preds, std::span<const GestureLabel> labels);

/// Mean distance from each prediction to its nearest true point, after discarding the
/// worst |pred| - |true| predictions. nullopt when either set is empty. Units follow the input.
std::optional<double> distance_error(std::span<const Vec2> pred, std::span<const Vec2> truth);

inline constexpr double kIntensityBinMm = 0.6;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct IntensityBin {
  double lo_mm = 0.0;
  std::size_t count = 0;
  std::size_t type_correct = 0;
  std::size_t count_correct = 0;
  double type_accuracy() const { return count ? static_cast<double>(type_correct) / count : 0.0; }
  double count_accuracy() const { return count ? static_cast<double>(count_correct) / count : 0.0; }
};

using Matrix6 = std::array<std::array<double, kGestureTypeCount>, kGestureTypeCount>;

struct EvalReport {
  std::size_t observations = 0;
  std::size_t gesture_observations = 0;
  std::size_t skipped = 0;
  std::array<ClassMetrics, kGestureTypeCount> per_class{};
  double accuracy = 0.0;
  double gesture_accuracy = 0.0;  // over observations labeled with a gesture
  double count_accuracy = 0.0;
  double distance_error_mm = 0.0;
  std::size_t distance_pairs = 0;
  double intensity_mae_mm = 0.0;
  std::vector<IntensityBin> bins;  // gesture-labeled observations only
  Matrix6 confusion{};             // raw counts, rows truth, columns prediction
  Matrix6 balanced_confusion{};    // mean of row- and column-normalized

  /// Pooled type accuracy over bins whose lower edge is >= lo (and < hi).
  double binned_accuracy(double lo_mm, double hi_mm) const;
};

EvalReport evaluate(const Alignment& alignment, double px_per_mm);
void write_eval_report(std::ostream& out, const EvalReport& r);
/// Bin curve and confusion tables as CSV blocks for external plotting.
void write_eval_tables(std::ostream& out, const EvalReport& r);

}  // namespace neurotouch
