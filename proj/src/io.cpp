#include "mvcp/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace mvcp::io {

InputError::InputError(std::string file, std::string field, const std::string& detail)
    : std::runtime_error(fmt::format("{}: field '{}': {}", file, field, detail)),
      file_(std::move(file)),
      field_(std::move(field)) {}

namespace {

const json& require(const json& j, const std::string& key, const std::string& src, const std::string& prefix) {
  const std::string field = prefix.empty() ? key : prefix + "." + key;
  if (!j.is_object()) throw InputError(src, prefix.empty() ? "<root>" : prefix, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(src, field, "missing");
  return *it;
}

double number(const json& j, const std::string& key, const std::string& src, const std::string& prefix) {
  const json& v = require(j, key, src, prefix);
  if (!v.is_number()) throw InputError(src, prefix.empty() ? key : prefix + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InputError(src, prefix.empty() ? key : prefix + "." + key, "not finite");
  return d;
}

int integer(const json& j, const std::string& key, const std::string& src, const std::string& prefix) {
  const json& v = require(j, key, src, prefix);
  if (!v.is_number_integer()) throw InputError(src, prefix.empty() ? key : prefix + "." + key, "expected an integer");
  return v.get<int>();
}

Eigen::Vector3d vec3(const json& v, const std::string& src, const std::string& field) {
  if (!v.is_array() || v.size() != 3) throw InputError(src, field, "expected an array of 3 numbers");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw InputError(src, field, "expected an array of 3 numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  if (!out.allFinite()) throw InputError(src, field, "not finite");
  return out;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

RigidTransform transform(const json& v, const std::string& src, const std::string& field) {
  std::vector<double> flat;
  if (v.is_array() && v.size() == 4 && v[0].is_array()) {
    for (const auto& row : v) {
      if (!row.is_array() || row.size() != 4) throw InputError(src, field, "expected 4 rows of 4 numbers");
      for (const auto& x : row) {
        if (!x.is_number()) throw InputError(src, field, "non-numeric entry");
        flat.push_back(x.get<double>());
      }
    }
  } else if (v.is_array() && v.size() == 16) {
    for (const auto& x : v) {
      if (!x.is_number()) throw InputError(src, field, "non-numeric entry");
      flat.push_back(x.get<double>());
    }
  } else {
    throw InputError(src, field, "expected a 4x4 row-major matrix");
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = flat[static_cast<std::size_t>(r * 4 + c)];
  try {
    return RigidTransform::from_matrix(m);
  } catch (const std::invalid_argument& e) {
    throw InputError(src, field, e.what());
  }
}

json transform_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2), m(r, 3)}));
  return rows;
}

CameraIntrinsics intrinsics(const json& j, const std::string& src, const std::string& field) {
  CameraIntrinsics k;
  k.fx = number(j, "fx", src, field);
  k.fy = number(j, "fy", src, field);
  k.cx = number(j, "cx", src, field);
  k.cy = number(j, "cy", src, field);
  k.width = integer(j, "width", src, field);
  k.height = integer(j, "height", src, field);
  if (!(k.fx > 0)) throw InputError(src, field + ".fx", "must be positive");
  if (!(k.fy > 0)) throw InputError(src, field + ".fy", "must be positive");
  if (k.width <= 0) throw InputError(src, field + ".width", "must be positive");
  if (k.height <= 0) throw InputError(src, field + ".height", "must be positive");
  if (!(k.cx >= 0 && k.cx < k.width)) throw InputError(src, field + ".cx", "must lie in [0, width)");
  if (!(k.cy >= 0 && k.cy < k.height)) throw InputError(src, field + ".cy", "must lie in [0, height)");
  return k;
}

json intrinsics_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError(path.string(), "<file>", "cannot open for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& src, const std::string& field) {
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
    if (!std::isfinite(d)) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw InputError(src, field, "cannot parse '" + s + "' as a finite number");
  }
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

}  // namespace

Calibration parse_calibration(const json& j, const std::string& source) {
  Calibration c;
  c.intrinsics = intrinsics(require(j, "intrinsics", source, ""), source, "intrinsics");
  c.chain.lidar_to_car = transform(require(j, "lidar_to_car", source, ""), source, "lidar_to_car");
  c.chain.car_to_cam = transform(require(j, "car_to_cam", source, ""), source, "car_to_cam");
  c.chain.ego_motion = j.contains("ego_motion") ? transform(j["ego_motion"], source, "ego_motion") : RigidTransform::identity();
  return c;
}

json calibration_to_json(const Calibration& calib) {
  return {{"intrinsics", intrinsics_json(calib.intrinsics)},
          {"lidar_to_car", transform_json(calib.chain.lidar_to_car)},
          {"car_to_cam", transform_json(calib.chain.car_to_cam)},
          {"ego_motion", transform_json(calib.chain.ego_motion)}};
}

Calibration load_calibration(const fs::path& path) { return parse_calibration(read_json(path), path.string()); }

void save_calibration(const fs::path& path, const Calibration& calib) {
  write_text(path, calibration_to_json(calib).dump(2) + "\n");
}

json read_json(const fs::path& path) {
  auto in = open_in(path, false);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string(), "<document>", e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out << text;
}

LabelImage read_label_pgm(const fs::path& path) {
  const std::string src = path.string();
  auto in = open_in(path, true);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw InputError(src, "magic", "expected P5");
  auto next_int = [&](const char* field) {
    // Skip whitespace and '#' comments between header tokens.
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string ignored;
        std::getline(in, ignored);
        continue;
      }
      break;
    }
    long v = -1;
    if (!(in >> v) || v < 0) throw InputError(src, field, "malformed header value");
    return v;
  };
  LabelImage img;
  img.width = static_cast<int>(next_int("width"));
  img.height = static_cast<int>(next_int("height"));
  const long maxval = next_int("maxval");
  if (img.width <= 0 || img.height <= 0) throw InputError(src, "width/height", "must be positive");
  if (maxval != 65535) throw InputError(src, "maxval", "expected 65535");
  in.get();  // single whitespace before raster
  const auto n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(2 * n);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw InputError(src, "raster", "truncated pixel data");
  img.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) img.labels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return img;
}

void write_label_pgm(const fs::path& path, const LabelImage& image) {
  auto out = open_out(path, true);
  out << "P5\n" << image.width << " " << image.height << "\n65535\n";
  std::vector<unsigned char> raw(2 * image.labels.size());
  for (std::size_t i = 0; i < image.labels.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(image.labels[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(image.labels[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_masks(const fs::path& pgm_path, const fs::path& sidecar_path, std::span<const InstanceMask> masks,
                 int width, int height, const json& extra) {
  LabelImage img{width, height, std::vector<std::uint16_t>(static_cast<std::size_t>(width) * height, 0)};
  json instances = json::array();
  for (const auto& m : masks) {
    if (m.instance_id <= 0 || m.instance_id > 65535)
      throw std::invalid_argument("write_masks: instance_id must be in [1, 65535]");
    for (const auto& p : m.pixels())
      img.labels[static_cast<std::size_t>(p.v) * width + p.u] = static_cast<std::uint16_t>(m.instance_id);
    instances.push_back({{"instance_id", m.instance_id}, {"bbox", {m.bbox.u, m.bbox.v, m.bbox.w, m.bbox.h}}});
  }
  write_label_pgm(pgm_path, img);
  json side = extra.is_object() ? extra : json::object();
  side["width"] = width;
  side["height"] = height;
  side["instances"] = instances;
  write_text(sidecar_path, side.dump(2) + "\n");
}

std::vector<InstanceMask> read_masks(const fs::path& pgm_path, const fs::path& sidecar_path) {
  const LabelImage img = read_label_pgm(pgm_path);
  const std::string src = sidecar_path.string();
  const json side = read_json(sidecar_path);
  if (side.contains("width") && side["width"] != img.width) throw InputError(src, "width", "does not match PGM");
  if (side.contains("height") && side["height"] != img.height) throw InputError(src, "height", "does not match PGM");
  const json& list = require(side, "instances", src, "");
  if (!list.is_array()) throw InputError(src, "instances", "expected an array");

  std::vector<InstanceMask> masks;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string field = fmt::format("instances[{}]", k);
    InstanceMask m;
    m.instance_id = integer(list[k], "instance_id", src, field);
    const json& bb = require(list[k], "bbox", src, field);
    if (!bb.is_array() || bb.size() != 4 || !std::all_of(bb.begin(), bb.end(), [](const json& x) { return x.is_number_integer(); }))
      throw InputError(src, field + ".bbox", "expected [u, v, w, h] integers");
    m.bbox = {bb[0].get<int>(), bb[1].get<int>(), bb[2].get<int>(), bb[3].get<int>()};
    if (m.bbox.w <= 0 || m.bbox.h <= 0 || m.bbox.u < 0 || m.bbox.v < 0 || m.bbox.u + m.bbox.w > img.width ||
        m.bbox.v + m.bbox.h > img.height)
      throw InputError(src, field + ".bbox", "outside image bounds");
    m.bitmap.assign(static_cast<std::size_t>(m.bbox.w) * m.bbox.h, 0);
    for (int y = 0; y < m.bbox.h; ++y)
      for (int x = 0; x < m.bbox.w; ++x)
        if (img.labels[static_cast<std::size_t>(m.bbox.v + y) * img.width + m.bbox.u + x] == m.instance_id)
          m.bitmap[static_cast<std::size_t>(y) * m.bbox.w + x] = 1;
    if (m.set_count() == 0) throw InputError(src, field, "no pixels carry this instance_id inside the bbox");
    masks.push_back(std::move(m));
  }
  return masks;
}

PointCloud read_cloud_csv(const fs::path& path) {
  const std::string src = path.string();
  auto in = open_in(path, false);
  std::string line;
  do {
    if (!std::getline(in, line)) throw InputError(src, "header", "empty file");
  } while (!line.empty() && line[0] == '#');
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  const bool with_intensity = header.size() == 4 && header[3] == "intensity";
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "z" ||
      (header.size() == 4 && !with_intensity) || header.size() > 4)
    throw InputError(src, "header", "expected 'x,y,z' or 'x,y,z,intensity'");
  PointCloud cloud;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != header.size()) throw InputError(src, fmt::format("row {}", row), "wrong column count");
    cloud.points.emplace_back(parse_double(cols[0], src, fmt::format("row {}.x", row)),
                              parse_double(cols[1], src, fmt::format("row {}.y", row)),
                              parse_double(cols[2], src, fmt::format("row {}.z", row)));
    if (with_intensity)
      cloud.intensity.push_back(static_cast<float>(parse_double(cols[3], src, fmt::format("row {}.intensity", row))));
  }
  return cloud;
}

void write_cloud_csv(const fs::path& path, const PointCloud& cloud) { write_text(path, cloud_csv(cloud)); }

std::string cloud_csv(const PointCloud& cloud) {
  const bool with_intensity = !cloud.intensity.empty();
  std::string s = with_intensity ? "x,y,z,intensity\n" : "x,y,z\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    s += with_intensity ? fmt::format("{},{},{},{}\n", p.x(), p.y(), p.z(), cloud.intensity[i])
                        : fmt::format("{},{},{}\n", p.x(), p.y(), p.z());
  }
  return s;
}

std::string cues_csv(std::span<const VirtualCue> cues) {
  std::string s = "x,y,z,instance_id,u,v,depth\n";
  for (const auto& c : cues)
    s += fmt::format("{},{},{},{},{},{},{}\n", c.position.x(), c.position.y(), c.position.z(), c.instance_id,
                     c.pixel.u, c.pixel.v, c.depth);
  return s;
}

void write_cues_csv(const fs::path& path, std::span<const VirtualCue> cues) { write_text(path, cues_csv(cues)); }

void write_augmented_csv(const fs::path& path, const AugmentedCloud& cloud) { write_text(path, augmented_csv(cloud)); }

std::string augmented_csv(const AugmentedCloud& cloud) {
  std::string s = "x,y,z,origin,instance_id\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    s += fmt::format("{},{},{},{},{}\n", p.x(), p.y(), p.z(), static_cast<int>(cloud.origin[i]), cloud.instance_id[i]);
  }
  return s;
}

void write_depth_image(const fs::path& path, const DepthImage& image) {
  auto out = open_out(path, true);
  out.write(kDepthMagic, 8);
  const std::uint32_t w = to_le(static_cast<std::uint32_t>(image.width)), h = to_le(static_cast<std::uint32_t>(image.height));
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<std::uint32_t> raw(image.depth.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(image.depth[i])));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
}

DepthImage read_depth_image(const fs::path& path) {
  const std::string src = path.string();
  auto in = open_in(path, true);
  char magic[8];
  std::uint32_t w = 0, h = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kDepthMagic, 8) != 0) throw InputError(src, "magic", "expected MVCPDEP1");
  if (!in.read(reinterpret_cast<char*>(&w), 4) || !in.read(reinterpret_cast<char*>(&h), 4))
    throw InputError(src, "header", "truncated");
  DepthImage img;
  img.width = static_cast<int>(to_le(w));
  img.height = static_cast<int>(to_le(h));
  if (img.width <= 0 || img.height <= 0) throw InputError(src, "width/height", "must be positive");
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(img.width) * img.height);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4)))
    throw InputError(src, "data", "truncated depth grid");
  img.depth.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) img.depth[i] = std::bit_cast<float>(to_le(raw[i]));
  return img;
}

json box_to_json(const Box3D& box) {
  return {{"center", vec3_json(box.center)}, {"size", vec3_json(box.size)}, {"yaw", box.yaw}};
}

Box3D box_from_json(const json& j, const std::string& source, const std::string& field) {
  Box3D b;
  b.center = vec3(require(j, "center", source, field), source, field + ".center");
  b.size = vec3(require(j, "size", source, field), source, field + ".size");
  b.yaw = number(j, "yaw", source, field);
  if (!b.is_valid()) throw InputError(source, field, "size must be positive and yaw in (-pi, pi]");
  return b;
}

json scene_to_json(const SceneSpec& spec) {
  json objects = json::array();
  for (const auto& o : spec.objects)
    objects.push_back({{"box", box_to_json(o.box)}, {"velocity", vec3_json(o.velocity)}, {"class", std::string(to_string(o.cls))}});
  return {{"objects", objects},
          {"ground_z", spec.ground_z ? json(*spec.ground_z) : json(nullptr)},
          {"lidar",
           {{"beams", spec.lidar.beams},
            {"elevation_min_deg", spec.lidar.elevation_min_deg},
            {"elevation_max_deg", spec.lidar.elevation_max_deg},
            {"azimuth_resolution_deg", spec.lidar.azimuth_resolution_deg},
            {"max_range", spec.lidar.max_range},
            {"dropout", spec.lidar.dropout}}},
          {"camera", intrinsics_json(spec.camera)},
          {"lidar_to_car", transform_json(spec.lidar_to_car)},
          {"car_to_cam", transform_json(spec.car_to_cam)},
          {"frame_rate", spec.frame_rate},
          {"num_frames", spec.num_frames},
          {"seed", spec.seed}};
}

SceneSpec scene_from_json(const json& j, const std::string& source) {
  SceneSpec spec = standard_rig();
  const json& objects = require(j, "objects", source, "");
  if (!objects.is_array()) throw InputError(source, "objects", "expected an array");
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const std::string field = fmt::format("objects[{}]", k);
    SceneObject o;
    o.box = box_from_json(require(objects[k], "box", source, field), source, field + ".box");
    if (objects[k].contains("velocity")) o.velocity = vec3(objects[k]["velocity"], source, field + ".velocity");
    if (objects[k].contains("class")) {
      try {
        o.cls = parse_object_class(objects[k]["class"].get<std::string>());
      } catch (const std::exception& e) {
        throw InputError(source, field + ".class", e.what());
      }
    }
    spec.objects.push_back(o);
  }
  if (j.contains("ground_z")) spec.ground_z = j["ground_z"].is_null() ? std::nullopt : std::optional<double>(number(j, "ground_z", source, ""));
  if (j.contains("lidar")) {
    const json& l = j["lidar"];
    if (l.contains("beams")) spec.lidar.beams = integer(l, "beams", source, "lidar");
    if (l.contains("elevation_min_deg")) spec.lidar.elevation_min_deg = number(l, "elevation_min_deg", source, "lidar");
    if (l.contains("elevation_max_deg")) spec.lidar.elevation_max_deg = number(l, "elevation_max_deg", source, "lidar");
    if (l.contains("azimuth_resolution_deg"))
      spec.lidar.azimuth_resolution_deg = number(l, "azimuth_resolution_deg", source, "lidar");
    if (l.contains("max_range")) spec.lidar.max_range = number(l, "max_range", source, "lidar");
    if (l.contains("dropout")) spec.lidar.dropout = number(l, "dropout", source, "lidar");
  }
  if (j.contains("camera")) spec.camera = intrinsics(j["camera"], source, "camera");
  if (j.contains("lidar_to_car")) spec.lidar_to_car = transform(j["lidar_to_car"], source, "lidar_to_car");
  if (j.contains("car_to_cam")) spec.car_to_cam = transform(j["car_to_cam"], source, "car_to_cam");
  if (j.contains("frame_rate")) spec.frame_rate = number(j, "frame_rate", source, "");
  if (j.contains("num_frames")) spec.num_frames = integer(j, "num_frames", source, "");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw InputError(source, "seed", "expected an integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw InputError(source, msg.substr(0, msg.find_first_of(": ")), msg);
  }
  return spec;
}

SceneSpec load_scene(const fs::path& path) { return scene_from_json(read_json(path), path.string()); }

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string format_cell(double success, double precision) { return fmt::format("{:.2f} / {:.2f}", success, precision); }

}  // namespace mvcp::io
