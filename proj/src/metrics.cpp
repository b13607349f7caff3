#include "neurotouch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>
#include <string>

namespace neurotouch {

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.t = j.at("t").get<Timestamp>();
      const auto type = gesture_type_from_string(j.at("type").get<std::string>());
      if (!type) throw std::runtime_error("unknown gesture type");
      p.type = *type;
      for (const auto& pt : j.at("points")) p.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      p.intensity_mm = j.at("intensity_mm").get<double>();
      if (!out.empty() && p.t < out.back().t) throw std::runtime_error("timestamps not sorted");
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_predictions(in);
}

GestureLabel interpolate_label(std::span<const GestureLabel> labels, Timestamp t) {
  const auto it = std::upper_bound(labels.begin(), labels.end(), t,
                                   [](Timestamp v, const GestureLabel& l) { return v < l.t; });
  if (it == labels.begin()) throw std::out_of_range("interpolate_label: time before first label");
  const GestureLabel& a = *(it - 1);
  GestureLabel out = a;
  out.t = t;
  if (it == labels.end() || a.t == t || a.type == GestureType::NoGesture) {
    if (a.type == GestureType::NoGesture) out.intensity_mm = 0.0;
    return out;
  }
  const GestureLabel& b = *it;
  const double alpha = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  out.intensity_mm = a.intensity_mm + alpha * (b.intensity_mm - a.intensity_mm);

  // Greedy nearest pairing of a's points onto b's.
  struct Cand {
    double d2;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < a.contact_points.size(); ++i) {
    for (std::size_t j = 0; j < b.contact_points.size(); ++j) {
      cands.push_back({squared_distance(a.contact_points[i], b.contact_points[j]), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return x.d2 != y.d2 ? x.d2 < y.d2 : (x.i != y.i ? x.i < y.i : x.j < y.j);
  });
  std::vector<char> used_a(a.contact_points.size(), 0), used_b(b.contact_points.size(), 0);
  for (const Cand& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    const Vec2 pa = a.contact_points[c.i];
    out.contact_points[c.i] = pa + (b.contact_points[c.j] - pa) * alpha;
  }
  return out;
}

Alignment align_labels(std::span<const Prediction> preds, std::span<const GestureLabel> labels) {
  Alignment al;
  for (const Prediction& p : preds) {
    if (labels.empty() || p.t < labels.front().t) {
      ++al.skipped;
      continue;
    }
    al.pairs.push_back({p, interpolate_label(labels, p.t)});
  }
  return al;
}

std::optional<double> distance_error(std::span<const Vec2> pred, std::span<const Vec2> truth) {
  if (pred.empty() || truth.empty()) return std::nullopt;
  std::vector<double> d;
  d.reserve(pred.size());
  for (Vec2 p : pred) {
    double best = std::numeric_limits<double>::infinity();
    for (Vec2 q : truth) best = std::min(best, distance(p, q));
    d.push_back(best);
  }
  std::sort(d.begin(), d.end());
  const std::size_t keep = std::min(pred.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < keep; ++i) sum += d[i];
  return sum / static_cast<double>(keep);
}

double EvalReport::binned_accuracy(double lo_mm, double hi_mm) const {
  std::size_t n = 0, c = 0;
  for (const auto& b : bins) {
    if (b.lo_mm < lo_mm - 1e-9 || b.lo_mm + kIntensityBinMm > hi_mm + 1e-9) continue;
    n += b.count;
    c += b.type_correct;
  }
  return n ? static_cast<double>(c) / static_cast<double>(n) : 0.0;
}

EvalReport evaluate(const Alignment& alignment, double px_per_mm) {
  EvalReport r;
  r.skipped = alignment.skipped;
  r.observations = alignment.pairs.size();
  std::array<std::array<std::size_t, kGestureTypeCount>, kGestureTypeCount> counts{};
  std::size_t correct = 0, gesture_correct = 0, count_ok = 0;
  double dist_sum = 0.0, mae_sum = 0.0;

  for (const auto& pr : alignment.pairs) {
    const int ti = static_cast<int>(pr.truth.type);
    const int pi = static_cast<int>(pr.pred.type);
    ++counts[ti][pi];
    const bool type_ok = ti == pi;
    correct += type_ok ? 1 : 0;
    const bool n_ok = pr.pred.points.size() == pr.truth.contact_points.size();
    count_ok += n_ok ? 1 : 0;
    if (const auto d = distance_error(pr.pred.points, pr.truth.contact_points)) {
      dist_sum += *d / px_per_mm;
      ++r.distance_pairs;
    }
    if (pr.truth.type != GestureType::NoGesture) {
      ++r.gesture_observations;
      gesture_correct += type_ok ? 1 : 0;
      mae_sum += std::abs(pr.pred.intensity_mm - pr.truth.intensity_mm);
      const auto bi = static_cast<std::size_t>(std::floor(pr.truth.intensity_mm / kIntensityBinMm));
      if (r.bins.size() <= bi) {
        const std::size_t old = r.bins.size();
        r.bins.resize(bi + 1);
        for (std::size_t k = old; k <= bi; ++k) r.bins[k].lo_mm = static_cast<double>(k) * kIntensityBinMm;
      }
      ++r.bins[bi].count;
      r.bins[bi].type_correct += type_ok ? 1 : 0;
      r.bins[bi].count_correct += n_ok ? 1 : 0;
    }
  }
  const auto n = static_cast<double>(r.observations);
  if (r.observations) {
    r.accuracy = correct / n;
    r.count_accuracy = count_ok / n;
  }
  if (r.gesture_observations) {
    r.gesture_accuracy = static_cast<double>(gesture_correct) / r.gesture_observations;
    r.intensity_mae_mm = mae_sum / r.gesture_observations;
  }
  if (r.distance_pairs) r.distance_error_mm = dist_sum / r.distance_pairs;

  for (int c = 0; c < kGestureTypeCount; ++c) {
    std::size_t row = 0, col = 0;
    for (int k = 0; k < kGestureTypeCount; ++k) {
      row += counts[c][k];
      col += counts[k][c];
    }
    auto& m = r.per_class[c];
    m.support = row;
    m.precision = col ? static_cast<double>(counts[c][c]) / col : 0.0;
    m.recall = row ? static_cast<double>(counts[c][c]) / row : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  for (int i = 0; i < kGestureTypeCount; ++i) {
    std::size_t row = 0;
    for (int k = 0; k < kGestureTypeCount; ++k) row += counts[i][k];
    for (int j = 0; j < kGestureTypeCount; ++j) {
      std::size_t col = 0;
      for (int k = 0; k < kGestureTypeCount; ++k) col += counts[k][j];
      r.confusion[i][j] = static_cast<double>(counts[i][j]);
      const double rn = row ? static_cast<double>(counts[i][j]) / row : 0.0;
      const double cn = col ? static_cast<double>(counts[i][j]) / col : 0.0;
      r.balanced_confusion[i][j] = 0.5 * (rn + cn);
    }
  }
  return r;
}

void write_eval_report(std::ostream& out, const EvalReport& r) {
  nlohmann::ordered_json j;
  j["observations"] = r.observations;
  j["gesture_observations"] = r.gesture_observations;
  j["skipped"] = r.skipped;
  j["accuracy"] = r.accuracy;
  j["gesture_accuracy"] = r.gesture_accuracy;
  j["count_accuracy"] = r.count_accuracy;
  j["distance_error_mm"] = r.distance_error_mm;
  j["distance_pairs"] = r.distance_pairs;
  j["intensity_mae_mm"] = r.intensity_mae_mm;
  j["accuracy_below_3mm"] = r.binned_accuracy(0.0, 3.0);
  j["accuracy_above_4_2mm"] = r.binned_accuracy(4.2, 1e9);
  j["accuracy_above_12mm"] = r.binned_accuracy(12.0, 1e9);
  auto classes = nlohmann::ordered_json::object();
  for (GestureType t : kAllGestureTypes) {
    const auto& m = r.per_class[static_cast<int>(t)];
    classes[std::string(to_string(t))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  j["per_class"] = std::move(classes);
  auto bins = nlohmann::ordered_json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"lo_mm", b.lo_mm},
                    {"count", b.count},
                    {"type_accuracy", b.type_accuracy()},
                    {"count_accuracy", b.count_accuracy()}});
  }
  j["bins"] = std::move(bins);
  j["confusion"] = r.confusion;
  j["balanced_confusion"] = r.balanced_confusion;
  out << j.dump(2) << '\n';
}

void write_eval_tables(std::ostream& out, const EvalReport& r) {
  out << "# accuracy_vs_intensity\nlo_mm,hi_mm,count,type_accuracy,count_accuracy\n";
  out << std::setprecision(6);
  for (const auto& b : r.bins) {
    out << b.lo_mm << ',' << b.lo_mm + kIntensityBinMm << ',' << b.count << ',' << b.type_accuracy() << ','
        << b.count_accuracy() << '\n';
  }
  out << "\n# balanced_confusion (rows truth, columns prediction)\ntruth";
  for (GestureType t : kAllGestureTypes) out << ',' << to_string(t);
  out << '\n';
  for (GestureType t : kAllGestureTypes) {
    out << to_string(t);
    for (int k = 0; k < kGestureTypeCount; ++k) out << ',' << r.balanced_confusion[static_cast<int>(t)][k];
    out << '\n';
  }
}

}  // namespace neurotouch
