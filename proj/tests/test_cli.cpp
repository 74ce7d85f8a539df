// Runs the mvcp_cli binary end to end.
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "mvcp/pipeline.hpp"

using namespace mvcp;
using io::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mvcp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(MVCP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2)); }

// Small synthetic run rendered to disk, plus a config that reads it back.
fs::path prepare(const fs::path& root) {
  write_json(root / "sim.json", {{"seed", 5}, {"synthetic", {{"sequences", 2}, {"frames", 3}}}});
  REQUIRE(run("sim --config " + (root / "sim.json").string() + " --out " + (root / "data").string()) == 0);
  json seqs = json::array();
  for (const auto& e : fs::directory_iterator(root / "data" / "sequences")) seqs.push_back(e.path().string());
  std::sort(seqs.begin(), seqs.end());
  write_json(root / "run.json", {{"seed", 5}, {"sequences", seqs}});
  return root / "run.json";
}

}  // namespace

TEST_CASE("cli subcommands produce their outputs") {
  const fs::path root = scratch("all");
  const fs::path cfg = prepare(root);
  CHECK(fs::exists(root / "data" / "sequences" / "seq_0000" / "frame_0002" / "masks.pgm"));
  CHECK(fs::exists(root / "data" / "config.json"));
  const std::string c = " --config " + cfg.string() + " --out " + (root / "out").string();
  CHECK(run("cues" + c) == 0);
  CHECK(run("augment" + c) == 0);
  CHECK(run("stats" + c) == 0);
  CHECK(run("track" + c) == 0);
  CHECK(run("eval" + c) == 0);
  CHECK(run("ablate" + c) == 0);
  const fs::path out = root / "out";
  for (const char* f : {"cue_stats.json", "density.txt", "density.json", "tracks.json", "eval.txt", "eval.json",
                        "ablation.txt", "ablation.json", "config.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK(fs::exists(out / "cues" / "seq_0000" / "frame_0000.csv"));
  CHECK(fs::exists(out / "augmented" / "seq_0001" / "frame_0002.csv"));
  CHECK_FALSE(fs::exists(out / ".staging"));

  const json eval = io::read_json(out / "eval.json");
  const RunConfig rc = load_run_config(cfg);
  CHECK(eval["config_hash"] == rc.hash());
  CHECK(eval["seed"] == 5);
  CHECK(slurp(out / "cues" / "seq_0000" / "frame_0000.csv").starts_with(provenance_line(rc)));
  const std::string aug = slurp(out / "augmented" / "seq_0000" / "frame_0000.csv");
  CHECK(aug.find("\nx,y,z,origin,instance_id\n") != std::string::npos);
  CHECK(aug.find(",1,") != std::string::npos);  // at least one virtual point
}

TEST_CASE("cli reruns are byte identical") {
  const fs::path root = scratch("rerun");
  const fs::path cfg = prepare(root);
  for (const char* cmd : {"cues", "stats", "eval", "ablate"}) {
    REQUIRE(run(std::string(cmd) + " --config " + cfg.string() + " --out " + (root / "a").string()) == 0);
    REQUIRE(run(std::string(cmd) + " --config " + cfg.string() + " --out " + (root / "b").string()) == 0);
  }
  for (const char* f : {"cue_stats.json", "density.txt", "eval.txt", "eval.json", "ablation.txt", "ablation.json"})
    CHECK_MESSAGE(slurp(root / "a" / f) == slurp(root / "b" / f), f);
  CHECK(slurp(root / "a" / "cues" / "seq_0001" / "frame_0001.csv") ==
        slurp(root / "b" / "cues" / "seq_0001" / "frame_0001.csv"));

  REQUIRE(run("sim --config " + (root / "sim.json").string() + " --out " + (root / "data2").string()) == 0);
  for (const char* f : {"cloud.csv", "masks.pgm", "masks.json", "depth.bin", "calib.json", "gt.json"})
    CHECK_MESSAGE(slurp(root / "data" / "sequences" / "seq_0000" / "frame_0001" / f) ==
                      slurp(root / "data2" / "sequences" / "seq_0000" / "frame_0001" / f),
                  f);
}

TEST_CASE("cli flags override the config") {
  const fs::path root = scratch("flags");
  const fs::path cfg = prepare(root);
  REQUIRE(run("cues --config " + cfg.string() + " --seed 9 --strategy 1 --lambda 32 --rmax 7.5 --mask-downscale 2"
              " --out " + (root / "o").string()) == 0);
  const json used = io::read_json(root / "o" / "config.json");
  CHECK(used["seed"] == 9);
  CHECK(used["cue"]["strategy"] == 1);
  CHECK(used["cue"]["lambda"] == 32);
  CHECK(used["cue"]["r_max"] == 7.5);
  CHECK(used["mask_downscale"] == 2);
  const json stats = io::read_json(root / "o" / "cue_stats.json");
  for (const auto& s : stats["sequences"])
    for (const auto& f : s["frames"])
      for (const auto& m : f["masks"]) {
        const int b = m["budget"];
        CHECK((b == 0 || (b >= 32 && b <= 64)));
      }
}

TEST_CASE("cli validation failures exit 2 and leave no outputs") {
  const fs::path root = scratch("bad");
  const fs::path out = root / "out";
  const std::string o = " --out " + out.string();
  write_json(root / "ok.json", {{"synthetic", {{"sequences", 1}, {"frames", 2}}}});
  const std::string ok = " --config " + (root / "ok.json").string();

  CHECK(run("cues --strategy 4" + ok + o) == 2);
  CHECK(run("cues --lambda 0" + ok + o) == 2);
  CHECK(run("cues --rmax -1" + ok + o) == 2);
  CHECK(run("cues --config " + (root / "missing.json").string() + o) == 2);
  CHECK(run("frobnicate" + o) == 2);
  CHECK(run("cues --seed banana" + ok + o) == 2);

  io::write_text(root / "broken.json", "{\"seed\": ");
  CHECK(run("cues --config " + (root / "broken.json").string() + o) == 2);
  write_json(root / "badfield.json", {{"cue", {{"d_min", 50}, {"d_max", 10}}}});
  CHECK(run("cues --config " + (root / "badfield.json").string() + o) == 2);
  write_json(root / "noseq.json", {{"sequences", {"does_not_exist"}}});
  CHECK(run("eval --config " + (root / "noseq.json").string() + o) == 2);

  // A sequence whose mask sidecar is corrupt is only discovered while loading.
  REQUIRE(run("sim" + ok + " --out " + (root / "data").string()) == 0);
  const fs::path seq = root / "data" / "sequences" / "seq_0000";
  io::write_text(seq / "frame_0001" / "masks.json", "{\"instances\": 3}");
  write_json(root / "corrupt.json", {{"sequences", {seq.string()}}});
  CHECK(run("stats --config " + (root / "corrupt.json").string() + o) == 2);

  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli failure keeps earlier outputs of the same directory intact") {
  const fs::path root = scratch("keep");
  write_json(root / "ok.json", {{"synthetic", {{"sequences", 1}, {"frames", 2}}}});
  REQUIRE(run("stats --config " + (root / "ok.json").string() + " --out " + (root / "out").string()) == 0);
  const std::string before = slurp(root / "out" / "density.txt");
  write_json(root / "corrupt.json", {{"sequences", {(root / "nowhere").string()}}});
  write_json(root / "empty_seq.json", json::object());
  fs::create_directories(root / "fake_seq");
  io::write_text(root / "fake_seq" / "sequence.json", "{}");
  write_json(root / "fake.json", {{"sequences", {(root / "fake_seq").string()}}});
  CHECK(run("stats --config " + (root / "fake.json").string() + " --out " + (root / "out").string()) == 2);
  CHECK(slurp(root / "out" / "density.txt") == before);
  CHECK_FALSE(fs::exists(root / "out" / ".staging"));
}

TEST_CASE("scene without visible objects yields empty cue files") {
  const fs::path root = scratch("empty");
  SceneSpec s = standard_rig();
  s.num_frames = 2;
  s.objects.push_back({Box3D{{-15, 0, -1}, {1.8, 4.4, 1.6}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});
  write_json(root / "scene.json", io::scene_to_json(s));
  write_json(root / "sim.json", {{"scene", "scene.json"}});
  REQUIRE(run("sim --config " + (root / "sim.json").string() + " --out " + (root / "data").string()) == 0);
  const fs::path seq = root / "data" / "sequences" / "scene";
  REQUIRE(fs::exists(seq / "frame_0001" / "cloud.csv"));
  write_json(root / "run.json", {{"sequences", {seq.string()}}});
  const std::string c = " --config " + (root / "run.json").string() + " --out " + (root / "out").string();
  REQUIRE(run("cues" + c) == 0);
  const std::string csv = slurp(root / "out" / "cues" / "scene" / "frame_0000.csv");
  CHECK(csv.ends_with("\nx,y,z,instance_id,u,v,depth\n"));
  const json stats = io::read_json(root / "out" / "cue_stats.json");
  CHECK(stats["total_masks"] == 0);
  CHECK(stats["total_cues"] == 0);
  REQUIRE(run("stats" + c) == 0);
  const json d = io::read_json(root / "out" / "density.json");
  CHECK(d["before"] == d["after"]);
  CHECK(d["sparse_shift_pp"] == 0.0);
}
