#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mvcp/box.hpp"
#include "mvcp/cues.hpp"
#include "mvcp/geometry.hpp"
#include "mvcp/scenesim.hpp"

namespace mvcp::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Malformed or missing input. what() names the file and the field.
class InputError : public std::runtime_error {
 public:
  InputError(std::string file, std::string field, const std::string& detail);
  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

struct Calibration {
  CameraIntrinsics intrinsics;
  TransformChain chain;
};

// Calibration JSON: {"intrinsics": {fx, fy, cx, cy, width, height},
//  "lidar_to_car": 4x4, "car_to_cam": 4x4, "ego_motion": 4x4}, matrices as
// row-major arrays of 16 numbers or 4 rows of 4.
Calibration parse_calibration(const json& j, const std::string& source);
json calibration_to_json(const Calibration& calib);
Calibration load_calibration(const fs::path& path);
void save_calibration(const fs::path& path, const Calibration& calib);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
struct LabelImage {
  int width = 0, height = 0;
  std::vector<std::uint16_t> labels;  // row-major, 0 = background
};
LabelImage read_label_pgm(const fs::path& path);
void write_label_pgm(const fs::path& path, const LabelImage& image);

/// Masks as a label PGM plus a JSON sidecar
/// {"width", "height", "instances": [{"instance_id", "bbox": [u, v, w, h]}]}.
/// Keys of `extra` are merged into the sidecar.
void write_masks(const fs::path& pgm_path, const fs::path& sidecar_path, std::span<const InstanceMask> masks,
                 int width, int height, const json& extra = json::object());
std::vector<InstanceMask> read_masks(const fs::path& pgm_path, const fs::path& sidecar_path);

/// CSV with header "x,y,z" (optionally ",intensity"). Leading lines starting
/// with '#' are skipped.
PointCloud read_cloud_csv(const fs::path& path);
void write_cloud_csv(const fs::path& path, const PointCloud& cloud);

/// CSV with header "x,y,z,instance_id,u,v,depth".
void write_cues_csv(const fs::path& path, std::span<const VirtualCue> cues);
std::string cues_csv(std::span<const VirtualCue> cues);

/// CSV with header "x,y,z,origin,instance_id"; origin is 0 real, 1 virtual.
void write_augmented_csv(const fs::path& path, const AugmentedCloud& cloud);
std::string augmented_csv(const AugmentedCloud& cloud);
std::string cloud_csv(const PointCloud& cloud);

/// 16-byte header: 8-byte magic "MVCPDEP1", uint32 width, uint32 height
/// (little-endian), then width*height float32 depths, row-major.
inline constexpr char kDepthMagic[8] = {'M', 'V', 'C', 'P', 'D', 'E', 'P', '1'};
void write_depth_image(const fs::path& path, const DepthImage& image);
DepthImage read_depth_image(const fs::path& path);

json box_to_json(const Box3D& box);
Box3D box_from_json(const json& j, const std::string& source, const std::string& field);

json scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const json& j, const std::string& source);
SceneSpec load_scene(const fs::path& path);

json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// FNV-1a over the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const json& config);

/// "SS.ss / PP.pp"
std::string format_cell(double success, double precision);

}  // namespace mvcp::io
