#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvcp/cues.hpp"
#include "mvcp/io.hpp"
#include "mvcp/metrics.hpp"
#include "mvcp/scenesim.hpp"
#include "mvcp/track.hpp"

namespace mvcp {

namespace fs = std::filesystem;

/// Everything a CLI run depends on. Paths are checked at load.
struct RunConfig {
  std::uint64_t seed = 0;
  VirtualCueConfig cue;
  ObjectClass cls = ObjectClass::car;  // class of the tracked targets
  int mask_downscale = 1;              // 1 = full-resolution masks
  fs::path out_dir = "out";
  std::optional<fs::path> scene;        // scene JSON for `sim`
  std::vector<fs::path> sequences;      // on-disk sequence directories
  int synthetic_sequences = 20;         // used when `sequences` is empty
  int synthetic_frames = 20;
  BevTrackerConfig tracker;

  /// Throws std::invalid_argument naming the field.
  void validate() const;
  io::json to_json() const;
  std::string hash() const { return io::config_hash(to_json()); }
};

RunConfig parse_run_config(const io::json& j, const std::string& source);
RunConfig load_run_config(const fs::path& path);

struct Sequence {
  std::string name;
  std::vector<FrameBundle> frames;
  std::size_t target = 0;  // index into each frame's gt_boxes
  ObjectClass cls = ObjectClass::car;

  std::vector<Box3D> target_boxes() const;
};

/// Sequences listed in the config, or the synthetic sparse benchmark when
/// none are listed. Depth images are not loaded.
std::vector<Sequence> load_sequences(const RunConfig& config);
std::vector<Sequence> synthetic_sequences(int num_sequences, int num_frames, std::uint64_t seed,
                                          bool with_depth = false);
Sequence sequence_from_spec(const SceneSpec& spec, std::size_t target, std::string name, bool with_depth = false);
std::string synthetic_name(std::size_t index);

/// Directory layout: sequence.json plus frame_NNNN/{cloud.csv, masks.pgm,
/// masks.json, depth.bin, calib.json, gt.json}.
void write_sequence(const fs::path& dir, const Sequence& seq, const RunConfig& config);
Sequence read_sequence(const fs::path& dir, bool with_depth = false);

/// Seed for one frame's cue sampling.
std::uint64_t frame_seed(std::uint64_t seed, std::size_t sequence, std::size_t frame);

struct ProcessedFrame {
  CueGeneration cues;
  AugmentedCloud augmented;
};

/// Cue generation and augmentation for one frame, with optional mask
/// degradation applied first.
ProcessedFrame process_frame(const FrameBundle& frame, const VirtualCueConfig& cue, int mask_downscale);

/// Augmented clouds for every frame of every sequence, indexed [seq][frame].
/// Frames run in parallel; results do not depend on thread count.
std::vector<std::vector<ProcessedFrame>> process_all(const std::vector<Sequence>& seqs, const RunConfig& config);

AugmentedCloud raw_cloud(const PointCloud& cloud);

struct DensityReport {
  DensityHistogram before;
  DensityHistogram after;
  /// Percentage-point drop of the [0, 50) bin.
  double sparse_shift() const { return before.sparse_pct() - after.sparse_pct(); }
};

DensityReport density_report(const std::vector<Sequence>& seqs,
                             const std::vector<std::vector<ProcessedFrame>>& processed);

struct EvalReport {
  std::vector<TrajectoryResult> raw;
  std::vector<TrajectoryResult> augmented;
  std::vector<OpeScores> raw_series;        // per trajectory, with per-frame IoU and error
  std::vector<OpeScores> augmented_series;
  DistanceBuckets raw_buckets;
  DistanceBuckets augmented_buckets;
};

/// Runs the tracker on raw and augmented clouds of every sequence.
EvalReport evaluate(const std::vector<Sequence>& seqs, const std::vector<std::vector<ProcessedFrame>>& processed,
                    const BevTrackerConfig& tracker);

struct AblationRow {
  BudgetStrategy strategy = BudgetStrategy::fixed;
  BucketScores scores;                // over all sequences
  double mean_budget_near = 0;        // mean per-mask budget, objects < 30 m
  double mean_budget_far = 0;         // objects >= 30 m
};

std::vector<AblationRow> ablate(const std::vector<Sequence>& seqs, const RunConfig& config);

// Text renderings used by the CLI. Each starts with a provenance line.
std::string provenance_line(const RunConfig& config);
io::json provenance_json(const RunConfig& config);
std::string render_density(const RunConfig& config, const DensityReport& report);
std::string render_eval(const RunConfig& config, const EvalReport& report);
std::string render_ablation(const RunConfig& config, std::span<const AblationRow> rows);

}  // namespace mvcp
