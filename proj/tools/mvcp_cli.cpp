// Command-line front end: simulation, cue generation, augmentation and the
// evaluation reports.
#include <cstdio>
#include <functional>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mvcp/pipeline.hpp"

namespace {

using namespace mvcp;
using io::json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> strategy;
  std::optional<int> lambda;
  std::optional<double> rmax;
  std::optional<int> mask_downscale;
  std::optional<std::string> out;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--strategy", f.strategy, "Cue budget strategy")->check(CLI::IsMember({1, 2, 3}));
  cmd->add_option("--lambda", f.lambda, "Base cue budget per object")->check(CLI::PositiveNumber);
  cmd->add_option("--rmax", f.rmax, "Depth association radius in pixels")->check(CLI::PositiveNumber);
  cmd->add_option("--mask-downscale", f.mask_downscale, "Mask degradation factor")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
}

RunConfig effective_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.strategy) c.cue.strategy = static_cast<BudgetStrategy>(*f.strategy);
  if (f.lambda) c.cue.lambda = *f.lambda;
  if (f.rmax) c.cue.r_max = *f.rmax;
  if (f.mask_downscale) c.mask_downscale = *f.mask_downscale;
  if (f.out) c.out_dir = *f.out;
  c.cue.seed = c.seed;
  c.validate();
  return c;
}

// Outputs go to a staging directory and are moved into place only after the
// whole command succeeded.
class Stage {
 public:
  explicit Stage(fs::path out) : out_(std::move(out)), tmp_(out_ / ".staging"), created_(!fs::exists(out_)) {
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~Stage() {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
    if (!committed_ && created_ && fs::is_empty(out_, ec)) fs::remove(out_, ec);
  }
  fs::path operator/(const fs::path& rel) const { return tmp_ / rel; }
  void commit() {
    for (const auto& e : fs::directory_iterator(tmp_)) {
      const fs::path dst = out_ / e.path().filename();
      fs::remove_all(dst);
      fs::rename(e.path(), dst);
    }
    committed_ = true;
  }

 private:
  fs::path out_;
  fs::path tmp_;
  bool created_;
  bool committed_ = false;
};

void write_config(const Stage& stage, const RunConfig& c) {
  json j = c.to_json();
  j.update(provenance_json(c));
  io::write_text(stage / "config.json", j.dump(2) + "\n");
}

json stats_json(const MaskCueStats& s) {
  return {{"instance_id", s.instance_id}, {"lidar_in_mask", s.lidar_in_mask}, {"distance", s.distance},
          {"budget", s.budget},           {"sampled", s.sampled},             {"accepted", s.accepted},
          {"rejected", s.rejected},       {"skipped", s.skipped}};
}

json scores_json(const BucketScores& b) {
  return {{"count", b.count}, {"success", b.success}, {"precision", b.precision}};
}

json buckets_json(const DistanceBuckets& d) {
  return {{"near", scores_json(d.near)}, {"far", scores_json(d.far)}, {"all", scores_json(d.all)}};
}

json series_json(const OpeScores& o) {
  return {{"success", o.success}, {"precision", o.precision}, {"iou", o.ious}, {"center_error", o.center_errors}};
}

json histogram_json(const DensityHistogram& h) {
  return {{"sparse", h.sparse},
          {"medium", h.medium},
          {"dense", h.dense},
          {"sparse_pct", h.sparse_pct()},
          {"medium_pct", h.medium_pct()},
          {"dense_pct", h.dense_pct()}};
}

void cmd_sim(const RunConfig& c, Stage& stage) {
  // One sequence in memory at a time: depth images are large.
  auto emit = [&](const Sequence& s) { write_sequence(stage / "sequences" / s.name, s, c); };
  if (c.scene) {
    SceneSpec spec = io::load_scene(*c.scene);
    spec.seed = c.seed;
    emit(sequence_from_spec(spec, 0, "scene", true));
    return;
  }
  const auto bench = sparse_benchmark(c.synthetic_sequences, c.synthetic_frames, c.seed);
  for (std::size_t i = 0; i < bench.size(); ++i)
    emit(sequence_from_spec(bench[i].spec, bench[i].target, synthetic_name(i), true));
}

void cmd_cues(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const auto processed = process_all(seqs, c);
  json report = provenance_json(c);
  json per_seq = json::array();
  std::size_t total_masks = 0, total_cues = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    json frames = json::array();
    for (std::size_t f = 0; f < processed[s].size(); ++f) {
      const CueGeneration& g = processed[s][f].cues;
      io::write_text(stage / "cues" / seqs[s].name / fmt::format("frame_{:04d}.csv", f),
                     provenance_line(c) + io::cues_csv(g.cues));
      json masks = json::array();
      for (const auto& st : g.stats) masks.push_back(stats_json(st));
      frames.push_back({{"frame", f}, {"masks", masks}, {"cues", g.cues.size()}});
      total_masks += g.stats.size();
      total_cues += g.cues.size();
    }
    per_seq.push_back({{"name", seqs[s].name}, {"frames", frames}});
  }
  report["total_masks"] = total_masks;
  report["total_cues"] = total_cues;
  report["sequences"] = per_seq;
  io::write_text(stage / "cue_stats.json", report.dump(2) + "\n");
}

void cmd_augment(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const auto processed = process_all(seqs, c);
  for (std::size_t s = 0; s < seqs.size(); ++s)
    for (std::size_t f = 0; f < processed[s].size(); ++f)
      io::write_text(stage / "augmented" / seqs[s].name / fmt::format("frame_{:04d}.csv", f),
                     provenance_line(c) + io::augmented_csv(processed[s][f].augmented));
}

void cmd_stats(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const DensityReport r = density_report(seqs, process_all(seqs, c));
  io::write_text(stage / "density.txt", render_density(c, r));
  json j = provenance_json(c);
  j["before"] = histogram_json(r.before);
  j["after"] = histogram_json(r.after);
  j["sparse_shift_pp"] = r.sparse_shift();
  io::write_text(stage / "density.json", j.dump(2) + "\n");
}

void cmd_track(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const auto processed = process_all(seqs, c);
  json out = provenance_json(c);
  json list = json::array();
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    std::vector<AugmentedCloud> raw, aug;
    for (std::size_t f = 0; f < seqs[s].frames.size(); ++f) {
      raw.push_back(raw_cloud(seqs[s].frames[f].cloud));
      aug.push_back(processed[s][f].augmented);
    }
    const auto gt = seqs[s].target_boxes();
    json entry = {{"name", seqs[s].name}};
    for (const auto& [key, clouds] : {std::pair{"raw", &raw}, std::pair{"augmented", &aug}}) {
      const TrackState st = run_tracker(*clouds, gt.front(), seqs[s].cls, c.tracker);
      const OpeScores ope = ope_metrics(st, gt);
      json boxes = json::array();
      for (const auto& b : st.boxes()) boxes.push_back(io::box_to_json(b));
      entry[key] = {{"boxes", boxes}, {"success", ope.success}, {"precision", ope.precision}};
    }
    list.push_back(entry);
  }
  out["sequences"] = list;
  io::write_text(stage / "tracks.json", out.dump(2) + "\n");
}

void cmd_eval(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const EvalReport r = evaluate(seqs, process_all(seqs, c), c.tracker);
  io::write_text(stage / "eval.txt", render_eval(c, r));
  json j = provenance_json(c);
  j["raw"] = buckets_json(r.raw_buckets);
  j["augmented"] = buckets_json(r.augmented_buckets);
  json per = json::array();
  for (std::size_t s = 0; s < seqs.size(); ++s)
    per.push_back({{"name", seqs[s].name},
                   {"initial_range", initial_range(r.raw[s].initial)},
                   {"raw", series_json(r.raw_series[s])},
                   {"augmented", series_json(r.augmented_series[s])}});
  j["sequences"] = per;
  io::write_text(stage / "eval.json", j.dump(2) + "\n");
}

void cmd_ablate(const RunConfig& c, Stage& stage) {
  const auto seqs = load_sequences(c);
  const auto rows = ablate(seqs, c);
  io::write_text(stage / "ablation.txt", render_ablation(c, rows));
  json j = provenance_json(c);
  json list = json::array();
  for (const auto& r : rows)
    list.push_back({{"strategy", static_cast<int>(r.strategy)},
                    {"success", r.scores.success},
                    {"precision", r.scores.precision},
                    {"mean_budget_near", r.mean_budget_near},
                    {"mean_budget_far", r.mean_budget_far}});
  j["rows"] = list;
  io::write_text(stage / "ablation.json", j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual cue generation and tracking experiments"};
  app.require_subcommand(1);
  Flags flags;
  using Command = std::function<void(const RunConfig&, Stage&)>;
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"sim", "Render synthetic sequences to disk", cmd_sim},
      {"cues", "Generate virtual cues per frame", cmd_cues},
      {"augment", "Write augmented point clouds", cmd_augment},
      {"stats", "In-box point density before and after augmentation", cmd_stats},
      {"track", "Run the tracker on raw and augmented clouds", cmd_track},
      {"eval", "Success / Precision, raw vs augmented", cmd_eval},
      {"ablate", "Compare cue budget strategies 1, 2 and 3", cmd_ablate},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, desc, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_flags(sub, flags);
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig config = effective_config(flags);
    for (const auto& [sub, fn] : subs) {
      if (!sub->parsed()) continue;
      Stage stage(config.out_dir);
      write_config(stage, config);
      fn(config, stage);
      stage.commit();
      std::printf("%s: wrote %s (config_hash=%s seed=%llu)\n", sub->get_name().c_str(),
                  config.out_dir.string().c_str(), config.hash().c_str(),
                  static_cast<unsigned long long>(config.seed));
    }
  } catch (const io::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
