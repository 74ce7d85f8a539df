#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvcp/box.hpp"
#include "mvcp/cues.hpp"
#include "mvcp/track.hpp"

namespace mvcp {

/// One-pass evaluation scores, both in [0, 100].
///
/// Success is the area under the "fraction of frames with IoU > t" curve for
/// t = 0, 0.01, ..., 0.99 (left Riemann sum over [0, 1]). Precision is the
/// area under "fraction with centre error < e" for e = 0.02, ..., 2.00 m
/// (right Riemann sum over [0, 2]), normalised by 2 m.
struct OpeScores {
  double success = 0;
  double precision = 0;
  std::vector<double> ious;
  std::vector<double> center_errors;  // metres
};

inline constexpr int kOpeSteps = 100;
inline constexpr double kPrecisionMaxError = 2.0;

/// Throws std::invalid_argument on length mismatch or empty input.
OpeScores ope_metrics(std::span<const Box3D> predicted, std::span<const Box3D> ground_truth);
OpeScores ope_metrics(const TrackState& predicted, std::span<const Box3D> ground_truth);
/// Scores from precomputed per-frame series.
OpeScores ope_from_series(std::vector<double> ious, std::vector<double> center_errors);

/// Objects binned by in-box point count: [0, 50), [50, 300], (300, inf).
struct DensityHistogram {
  std::size_t sparse = 0;
  std::size_t medium = 0;
  std::size_t dense = 0;

  std::size_t total() const { return sparse + medium + dense; }
  /// Percentages of total; zeros when empty.
  double sparse_pct() const;
  double medium_pct() const;
  double dense_pct() const;
};

std::size_t count_in_box(const AugmentedCloud& cloud, const Box3D& box, bool include_virtual);

/// boxes[f] are the ground-truth boxes of clouds[f]. Virtual cues count only
/// when include_virtual is set.
DensityHistogram density_histogram(std::span<const AugmentedCloud> clouds, std::span<const std::vector<Box3D>> boxes,
                                   bool include_virtual);

struct TrajectoryResult {
  Box3D initial;
  double success = 0;
  double precision = 0;
};

struct BucketScores {
  std::size_t count = 0;
  double success = 0;    // mean over trajectories, 0 when count == 0
  double precision = 0;
};

inline constexpr double kLongRangeThreshold = 30.0;  // metres

/// Trajectories split by the range of their initial box centre:
/// near < 30 m, far >= 30 m. Means are unweighted.
struct DistanceBuckets {
  BucketScores near;
  BucketScores far;
  BucketScores all;
};

double initial_range(const Box3D& box);
DistanceBuckets distance_bucket_report(std::span<const TrajectoryResult> trajectories);

}  // namespace mvcp
