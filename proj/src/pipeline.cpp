#include "mvcp/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "mvcp/rng.hpp"

namespace mvcp {

using io::InputError;
using io::json;

void RunConfig::validate() const {
  cue.validate();
  if (mask_downscale < 1) throw std::invalid_argument("mask_downscale must be >= 1");
  if (synthetic_sequences < 1) throw std::invalid_argument("synthetic.sequences must be >= 1");
  if (synthetic_frames < 2) throw std::invalid_argument("synthetic.frames must be >= 2");
  if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
}

json RunConfig::to_json() const {
  json seqs = json::array();
  for (const auto& s : sequences) seqs.push_back(s.generic_string());
  json j = {{"seed", seed},
            {"cue",
             {{"lambda", cue.lambda},
              {"strategy", static_cast<int>(cue.strategy)},
              {"d_min", cue.d_min},
              {"d_max", cue.d_max},
              {"r_max", cue.r_max}}},
            {"class", std::string(to_string(cls))},
            {"mask_downscale", mask_downscale},
            {"sequences", seqs},
            {"synthetic", {{"sequences", synthetic_sequences}, {"frames", synthetic_frames}}},
            {"tracker",
             {{"cell", tracker.cell},
              {"search_xy", tracker.search_xy},
              {"search_yaw_deg", tracker.search_yaw_deg},
              {"yaw_step_deg", tracker.yaw_step_deg},
              {"ground_clearance", tracker.ground_clearance},
              {"roof_clearance", tracker.roof_clearance},
              {"template_margin", tracker.template_margin}}}};
  j["scene"] = scene ? json(scene->generic_string()) : json(nullptr);
  return j;
}

namespace {

template <class T>
T get_as(const json& j, const char* key, const std::string& src, const std::string& field, T fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_integer()) throw InputError(src, field, "expected an integer");
    if constexpr (std::is_same_v<T, std::uint64_t>)
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw InputError(src, field, "must be non-negative");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw InputError(src, field, "expected a number");
  } else {
    if (!v.is_string()) throw InputError(src, field, "expected a string");
  }
  return v.get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::string& source) {
  if (!j.is_object()) throw InputError(source, "<root>", "expected an object");
  RunConfig c;
  const fs::path base = fs::path(source).parent_path();
  c.seed = get_as<std::uint64_t>(j, "seed", source, "seed", c.seed);
  if (j.contains("cue")) {
    const json& q = j["cue"];
    if (!q.is_object()) throw InputError(source, "cue", "expected an object");
    c.cue.lambda = get_as<int>(q, "lambda", source, "cue.lambda", c.cue.lambda);
    const int s = get_as<int>(q, "strategy", source, "cue.strategy", static_cast<int>(c.cue.strategy));
    if (s < 1 || s > 3) throw InputError(source, "cue.strategy", "must be 1, 2 or 3");
    c.cue.strategy = static_cast<BudgetStrategy>(s);
    c.cue.d_min = get_as<double>(q, "d_min", source, "cue.d_min", c.cue.d_min);
    c.cue.d_max = get_as<double>(q, "d_max", source, "cue.d_max", c.cue.d_max);
    c.cue.r_max = get_as<double>(q, "r_max", source, "cue.r_max", c.cue.r_max);
  }
  if (j.contains("class")) {
    try {
      c.cls = parse_object_class(get_as<std::string>(j, "class", source, "class", ""));
    } catch (const std::invalid_argument& e) {
      throw InputError(source, "class", e.what());
    }
  }
  c.mask_downscale = get_as<int>(j, "mask_downscale", source, "mask_downscale", c.mask_downscale);
  if (j.contains("out_dir")) c.out_dir = get_as<std::string>(j, "out_dir", source, "out_dir", "");
  if (j.contains("scene") && !j["scene"].is_null()) {
    c.scene = resolve(base, get_as<std::string>(j, "scene", source, "scene", ""));
    if (!fs::is_regular_file(*c.scene)) throw InputError(source, "scene", "no such file: " + c.scene->string());
  }
  if (j.contains("sequences")) {
    const json& list = j["sequences"];
    if (!list.is_array()) throw InputError(source, "sequences", "expected an array of directories");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string field = fmt::format("sequences[{}]", k);
      if (!list[k].is_string()) throw InputError(source, field, "expected a string");
      fs::path dir = resolve(base, list[k].get<std::string>());
      if (!fs::is_regular_file(dir / "sequence.json"))
        throw InputError(source, field, "not a sequence directory: " + dir.string());
      c.sequences.push_back(std::move(dir));
    }
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    if (!s.is_object()) throw InputError(source, "synthetic", "expected an object");
    c.synthetic_sequences = get_as<int>(s, "sequences", source, "synthetic.sequences", c.synthetic_sequences);
    c.synthetic_frames = get_as<int>(s, "frames", source, "synthetic.frames", c.synthetic_frames);
  }
  if (j.contains("tracker")) {
    const json& t = j["tracker"];
    if (!t.is_object()) throw InputError(source, "tracker", "expected an object");
    c.tracker.cell = get_as<double>(t, "cell", source, "tracker.cell", c.tracker.cell);
    c.tracker.search_xy = get_as<double>(t, "search_xy", source, "tracker.search_xy", c.tracker.search_xy);
    c.tracker.search_yaw_deg = get_as<double>(t, "search_yaw_deg", source, "tracker.search_yaw_deg", c.tracker.search_yaw_deg);
    c.tracker.yaw_step_deg = get_as<double>(t, "yaw_step_deg", source, "tracker.yaw_step_deg", c.tracker.yaw_step_deg);
    c.tracker.ground_clearance =
        get_as<double>(t, "ground_clearance", source, "tracker.ground_clearance", c.tracker.ground_clearance);
    c.tracker.roof_clearance =
        get_as<double>(t, "roof_clearance", source, "tracker.roof_clearance", c.tracker.roof_clearance);
    c.tracker.template_margin =
        get_as<double>(t, "template_margin", source, "tracker.template_margin", c.tracker.template_margin);
    if (!(c.tracker.cell > 0)) throw InputError(source, "tracker.cell", "must be positive");
    if (!(c.tracker.yaw_step_deg > 0)) throw InputError(source, "tracker.yaw_step_deg", "must be positive");
    if (!(c.tracker.search_xy >= 0)) throw InputError(source, "tracker.search_xy", "must be non-negative");
    if (!(c.tracker.search_yaw_deg >= 0)) throw InputError(source, "tracker.search_yaw_deg", "must be non-negative");
  }
  c.cue.seed = c.seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw InputError(source, msg.substr(0, msg.find(' ')), msg);
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) { return parse_run_config(io::read_json(path), path.string()); }

std::vector<Box3D> Sequence::target_boxes() const {
  std::vector<Box3D> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.gt_boxes.at(target));
  return out;
}

Sequence sequence_from_spec(const SceneSpec& spec, std::size_t target, std::string name, bool with_depth) {
  Sequence seq;
  seq.name = std::move(name);
  seq.target = target;
  seq.cls = spec.objects.at(target).cls;
  seq.frames = make_sequence(spec, with_depth);
  return seq;
}

std::string synthetic_name(std::size_t index) { return fmt::format("seq_{:04d}", index); }

std::vector<Sequence> synthetic_sequences(int num_sequences, int num_frames, std::uint64_t seed, bool with_depth) {
  const auto bench = sparse_benchmark(num_sequences, num_frames, seed);
  std::vector<Sequence> out(bench.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < bench.size(); ++i)
    out[i] = sequence_from_spec(bench[i].spec, bench[i].target, synthetic_name(i), with_depth);
  return out;
}

std::vector<Sequence> load_sequences(const RunConfig& config) {
  std::vector<Sequence> all;
  if (config.sequences.empty()) {
    all = synthetic_sequences(config.synthetic_sequences, config.synthetic_frames, config.seed);
  } else {
    for (const auto& dir : config.sequences) all.push_back(read_sequence(dir));
  }
  std::vector<Sequence> out;
  for (auto& s : all)
    if (s.cls == config.cls) out.push_back(std::move(s));
  if (out.empty())
    throw std::invalid_argument(fmt::format("class: no sequence tracks a {} target", to_string(config.cls)));
  return out;
}

std::string provenance_line(const RunConfig& config) {
  return fmt::format("# mvcp config_hash={} seed={}\n", config.hash(), config.seed);
}

json provenance_json(const RunConfig& config) { return {{"config_hash", config.hash()}, {"seed", config.seed}}; }

void write_sequence(const fs::path& dir, const Sequence& seq, const RunConfig& config) {
  json meta = provenance_json(config);
  meta["name"] = seq.name;
  meta["target"] = seq.target;
  meta["class"] = std::string(to_string(seq.cls));
  meta["num_frames"] = seq.frames.size();
  io::write_text(dir / "sequence.json", meta.dump(2) + "\n");
  const std::string preamble = provenance_line(config);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const FrameBundle& b = seq.frames[f];
    const fs::path fd = dir / fmt::format("frame_{:04d}", f);
    io::write_text(fd / "cloud.csv", preamble + io::cloud_csv(b.cloud));
    io::write_masks(fd / "masks.pgm", fd / "masks.json", b.masks, b.intrinsics.width, b.intrinsics.height,
                    provenance_json(config));
    io::write_depth_image(fd / "depth.bin", b.depth);
    json calib = io::calibration_to_json({b.intrinsics, b.calibration});
    calib.update(provenance_json(config));
    io::write_text(fd / "calib.json", calib.dump(2) + "\n");
    json boxes = json::array(), classes = json::array();
    for (std::size_t k = 0; k < b.gt_boxes.size(); ++k) {
      boxes.push_back(io::box_to_json(b.gt_boxes[k]));
      classes.push_back(std::string(to_string(b.classes.at(k))));
    }
    json gt = provenance_json(config);
    gt["boxes"] = boxes;
    gt["classes"] = classes;
    io::write_text(fd / "gt.json", gt.dump(2) + "\n");
  }
}

Sequence read_sequence(const fs::path& dir, bool with_depth) {
  const fs::path meta_path = dir / "sequence.json";
  const std::string src = meta_path.string();
  const json meta = io::read_json(meta_path);
  if (!meta.is_object()) throw InputError(src, "<root>", "expected an object");
  Sequence seq;
  seq.name = meta.contains("name") && meta["name"].is_string() ? meta["name"].get<std::string>()
                                                                : dir.filename().string();
  if (!meta.contains("num_frames") || !meta["num_frames"].is_number_unsigned())
    throw InputError(src, "num_frames", "expected a non-negative integer");
  if (!meta.contains("target") || !meta["target"].is_number_unsigned())
    throw InputError(src, "target", "expected a non-negative integer");
  seq.target = meta["target"].get<std::size_t>();
  if (meta.contains("class")) {
    try {
      seq.cls = parse_object_class(meta["class"].get<std::string>());
    } catch (const std::exception& e) {
      throw InputError(src, "class", e.what());
    }
  }
  const auto n = meta["num_frames"].get<std::size_t>();
  if (n == 0) throw InputError(src, "num_frames", "must be positive");
  seq.frames.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    FrameBundle& b = seq.frames[f];
    const fs::path fd = dir / fmt::format("frame_{:04d}", f);
    b.cloud = io::read_cloud_csv(fd / "cloud.csv");
    const io::Calibration calib = io::load_calibration(fd / "calib.json");
    b.intrinsics = calib.intrinsics;
    b.calibration = calib.chain;
    b.masks = io::read_masks(fd / "masks.pgm", fd / "masks.json");
    for (std::size_t k = 0; k < b.masks.size(); ++k)
      if (!b.masks[k].is_valid(b.intrinsics.width, b.intrinsics.height))
        throw InputError((fd / "masks.json").string(), fmt::format("instances[{}]", k), "mask does not fit the camera image");
    if (with_depth && fs::exists(fd / "depth.bin")) b.depth = io::read_depth_image(fd / "depth.bin");
    const fs::path gt_path = fd / "gt.json";
    const json gt = io::read_json(gt_path);
    if (!gt.is_object() || !gt.contains("boxes") || !gt["boxes"].is_array())
      throw InputError(gt_path.string(), "boxes", "expected an array");
    for (std::size_t k = 0; k < gt["boxes"].size(); ++k) {
      b.gt_boxes.push_back(io::box_from_json(gt["boxes"][k], gt_path.string(), fmt::format("boxes[{}]", k)));
      ObjectClass cls = ObjectClass::car;
      if (gt.contains("classes") && gt["classes"].is_array() && k < gt["classes"].size()) {
        try {
          cls = parse_object_class(gt["classes"][k].get<std::string>());
        } catch (const std::exception& e) {
          throw InputError(gt_path.string(), fmt::format("classes[{}]", k), e.what());
        }
      }
      b.classes.push_back(cls);
    }
    if (seq.target >= b.gt_boxes.size()) throw InputError(src, "target", "index beyond the boxes in " + gt_path.string());
  }
  return seq;
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t sequence, std::size_t frame) {
  return mix_seed(mix_seed(seed, sequence), frame);
}

AugmentedCloud raw_cloud(const PointCloud& cloud) { return augment_cloud(cloud, {}); }

ProcessedFrame process_frame(const FrameBundle& frame, const VirtualCueConfig& cue, int mask_downscale) {
  std::vector<InstanceMask> masks;
  if (mask_downscale > 1) {
    for (const auto& m : frame.masks) {
      InstanceMask d = degrade_mask(m, mask_downscale);
      if (d.set_count() > 0) masks.push_back(std::move(d));
    }
  }
  const std::span<const InstanceMask> used = mask_downscale > 1 ? std::span<const InstanceMask>(masks)
                                                                 : std::span<const InstanceMask>(frame.masks);
  ProcessedFrame out;
  out.cues = generate_virtual_cues(frame.cloud, used, frame.intrinsics, frame.calibration, cue);
  out.augmented = augment_cloud(frame.cloud, out.cues.cues);
  return out;
}

std::vector<std::vector<ProcessedFrame>> process_all(const std::vector<Sequence>& seqs, const RunConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  std::vector<std::vector<ProcessedFrame>> out(seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    out[s].resize(seqs[s].frames.size());
    for (std::size_t f = 0; f < seqs[s].frames.size(); ++f) jobs.emplace_back(s, f);
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto [s, f] = jobs[i];
    VirtualCueConfig cue = config.cue;
    cue.seed = frame_seed(config.seed, s, f);
    out[s][f] = process_frame(seqs[s].frames[f], cue, config.mask_downscale);
  }
  return out;
}

DensityReport density_report(const std::vector<Sequence>& seqs,
                             const std::vector<std::vector<ProcessedFrame>>& processed) {
  std::vector<AugmentedCloud> clouds;
  std::vector<std::vector<Box3D>> boxes;
  DensityReport r;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (std::size_t f = 0; f < seqs[s].frames.size(); ++f) {
      const std::span<const AugmentedCloud> one(&processed[s][f].augmented, 1);
      const std::span<const std::vector<Box3D>> gt(&seqs[s].frames[f].gt_boxes, 1);
      const DensityHistogram b = density_histogram(one, gt, false), a = density_histogram(one, gt, true);
      r.before.sparse += b.sparse;
      r.before.medium += b.medium;
      r.before.dense += b.dense;
      r.after.sparse += a.sparse;
      r.after.medium += a.medium;
      r.after.dense += a.dense;
    }
  }
  return r;
}

namespace {

OpeScores track_one(const Sequence& seq, std::span<const AugmentedCloud> clouds, const BevTrackerConfig& cfg) {
  const auto gt = seq.target_boxes();
  return ope_metrics(run_tracker(clouds, gt.front(), seq.cls, cfg), gt);
}

}  // namespace

EvalReport evaluate(const std::vector<Sequence>& seqs, const std::vector<std::vector<ProcessedFrame>>& processed,
                    const BevTrackerConfig& tracker) {
  if (seqs.empty()) throw std::invalid_argument("evaluate: no sequences");
  EvalReport r;
  r.raw.resize(seqs.size());
  r.augmented.resize(seqs.size());
  r.raw_series.resize(seqs.size());
  r.augmented_series.resize(seqs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    std::vector<AugmentedCloud> raw, aug;
    for (std::size_t f = 0; f < seqs[s].frames.size(); ++f) {
      raw.push_back(raw_cloud(seqs[s].frames[f].cloud));
      aug.push_back(processed[s][f].augmented);
    }
    const Box3D initial = seqs[s].frames.front().gt_boxes.at(seqs[s].target);
    r.raw_series[s] = track_one(seqs[s], raw, tracker);
    r.augmented_series[s] = track_one(seqs[s], aug, tracker);
    r.raw[s] = {initial, r.raw_series[s].success, r.raw_series[s].precision};
    r.augmented[s] = {initial, r.augmented_series[s].success, r.augmented_series[s].precision};
  }
  r.raw_buckets = distance_bucket_report(r.raw);
  r.augmented_buckets = distance_bucket_report(r.augmented);
  return r;
}

std::vector<AblationRow> ablate(const std::vector<Sequence>& seqs, const RunConfig& config) {
  std::vector<AblationRow> rows;
  for (BudgetStrategy strategy : {BudgetStrategy::near_dense, BudgetStrategy::far_dense, BudgetStrategy::fixed}) {
    RunConfig c = config;
    c.cue.strategy = strategy;
    const auto processed = process_all(seqs, c);
    const EvalReport ev = evaluate(seqs, processed, c.tracker);
    AblationRow row;
    row.strategy = strategy;
    row.scores = ev.augmented_buckets.all;
    double near_sum = 0, far_sum = 0;
    std::size_t near_n = 0, far_n = 0;
    for (const auto& seq : processed)
      for (const auto& frame : seq)
        for (const auto& st : frame.cues.stats) {
          if (st.skipped) continue;
          if (st.distance < kLongRangeThreshold) {
            near_sum += st.budget;
            ++near_n;
          } else {
            far_sum += st.budget;
            ++far_n;
          }
        }
    row.mean_budget_near = near_n ? near_sum / static_cast<double>(near_n) : 0.0;
    row.mean_budget_far = far_n ? far_sum / static_cast<double>(far_n) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string render_density(const RunConfig& config, const DensityReport& r) {
  std::string s = provenance_line(config);
  s += fmt::format("{:<10}{:>10}{:>12}{:>10}{:>8}\n", "points", "[0,50)", "[50,300]", ">300", "total");
  auto row = [&](const char* name, const DensityHistogram& h) {
    s += fmt::format("{:<10}{:>9.2f}%{:>11.2f}%{:>9.2f}%{:>8}\n", name, h.sparse_pct(), h.medium_pct(), h.dense_pct(),
                     h.total());
  };
  row("before", r.before);
  row("after", r.after);
  s += fmt::format("[0,50) shift: {:.2f} pp\n", r.sparse_shift());
  return s;
}

std::string render_eval(const RunConfig& config, const EvalReport& r) {
  std::string s = provenance_line(config);
  s += fmt::format("{:<8}{:>4}  {:<16}{:<16}{}\n", "range", "n", "raw", "augmented", "delta");
  auto row = [&](const char* name, const BucketScores& raw, const BucketScores& aug) {
    const std::string delta = raw.count == 0 ? "-"
                                             : fmt::format("{:+.2f} / {:+.2f}", aug.success - raw.success,
                                                           aug.precision - raw.precision);
    s += fmt::format("{:<8}{:>4}  {:<16}{:<16}{}\n", name, raw.count, io::format_cell(raw.success, raw.precision),
                     io::format_cell(aug.success, aug.precision), delta);
  };
  row("<30m", r.raw_buckets.near, r.augmented_buckets.near);
  row(">=30m", r.raw_buckets.far, r.augmented_buckets.far);
  row("all", r.raw_buckets.all, r.augmented_buckets.all);
  s += "# cells are Success / Precision, unweighted means over trajectories\n";
  return s;
}

std::string render_ablation(const RunConfig& config, std::span<const AblationRow> rows) {
  std::string s = provenance_line(config);
  s += fmt::format("{:<10}{:<16}{:>12}{:>12}\n", "strategy", "success/prec", "budget<30m", "budget>=30m");
  for (const auto& r : rows)
    s += fmt::format("{:<10}{:<16}{:>12.2f}{:>12.2f}\n", static_cast<int>(r.strategy),
                     io::format_cell(r.scores.success, r.scores.precision), r.mean_budget_near, r.mean_budget_far);
  return s;
}

}  // namespace mvcp
