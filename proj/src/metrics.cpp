#include "mvcp/metrics.hpp"

#include <stdexcept>

namespace mvcp {

OpeScores ope_from_series(std::vector<double> ious, std::vector<double> center_errors) {
  if (ious.size() != center_errors.size()) throw std::invalid_argument("ope_metrics: series length mismatch");
  if (ious.empty()) throw std::invalid_argument("ope_metrics: empty series");

  // Integer tallies keep perfect and zero tracks exactly at 100 and 0.
  std::size_t success_hits = 0, precision_hits = 0;
  for (int k = 0; k < kOpeSteps; ++k) {
    const double iou_threshold = static_cast<double>(k) / kOpeSteps;
    const double err_threshold = (k + 1) * kPrecisionMaxError / kOpeSteps;
    for (std::size_t f = 0; f < ious.size(); ++f) {
      if (ious[f] > iou_threshold) ++success_hits;
      if (center_errors[f] < err_threshold) ++precision_hits;
    }
  }
  const double denom = static_cast<double>(ious.size()) * kOpeSteps;
  OpeScores out;
  out.success = 100.0 * static_cast<double>(success_hits) / denom;
  out.precision = 100.0 * static_cast<double>(precision_hits) / denom;
  out.ious = std::move(ious);
  out.center_errors = std::move(center_errors);
  return out;
}

OpeScores ope_metrics(std::span<const Box3D> predicted, std::span<const Box3D> ground_truth) {
  if (predicted.size() != ground_truth.size()) throw std::invalid_argument("ope_metrics: series length mismatch");
  std::vector<double> ious, errs;
  ious.reserve(predicted.size());
  errs.reserve(predicted.size());
  for (std::size_t f = 0; f < predicted.size(); ++f) {
    ious.push_back(iou3d(predicted[f], ground_truth[f]));
    errs.push_back((predicted[f].center - ground_truth[f].center).norm());
  }
  return ope_from_series(std::move(ious), std::move(errs));
}

OpeScores ope_metrics(const TrackState& predicted, std::span<const Box3D> ground_truth) {
  const auto boxes = predicted.boxes();
  return ope_metrics(std::span<const Box3D>(boxes), ground_truth);
}

namespace {
double pct(std::size_t n, std::size_t total) { return total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / total; }
}  // namespace

double DensityHistogram::sparse_pct() const { return pct(sparse, total()); }
double DensityHistogram::medium_pct() const { return pct(medium, total()); }
double DensityHistogram::dense_pct() const { return pct(dense, total()); }

std::size_t count_in_box(const AugmentedCloud& cloud, const Box3D& box, bool include_virtual) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!include_virtual && cloud.origin[i] == PointOrigin::virtual_cue) continue;
    if (box.contains(cloud.points[i])) ++n;
  }
  return n;
}

DensityHistogram density_histogram(std::span<const AugmentedCloud> clouds, std::span<const std::vector<Box3D>> boxes,
                                   bool include_virtual) {
  if (clouds.size() != boxes.size()) throw std::invalid_argument("density_histogram: clouds/boxes length mismatch");
  DensityHistogram h;
  for (std::size_t f = 0; f < clouds.size(); ++f) {
    for (const Box3D& box : boxes[f]) {
      const std::size_t n = count_in_box(clouds[f], box, include_virtual);
      if (n < 50)
        ++h.sparse;
      else if (n <= 300)
        ++h.medium;
      else
        ++h.dense;
    }
  }
  return h;
}

double initial_range(const Box3D& box) { return box.center.norm(); }

DistanceBuckets distance_bucket_report(std::span<const TrajectoryResult> trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("distance_bucket_report: no trajectories");
  DistanceBuckets out;
  auto add = [](BucketScores& b, const TrajectoryResult& t) {
    ++b.count;
    b.success += t.success;
    b.precision += t.precision;
  };
  for (const auto& t : trajectories) {
    add(initial_range(t.initial) < kLongRangeThreshold ? out.near : out.far, t);
    add(out.all, t);
  }
  for (BucketScores* b : {&out.near, &out.far, &out.all}) {
    if (b->count == 0) continue;
    b->success /= static_cast<double>(b->count);
    b->precision /= static_cast<double>(b->count);
  }
  return out;
}

}  // namespace mvcp
