#include "sldepth/config.hpp"

#include <initializer_list>
#include <set>

#include "json.hpp"
#include "sldepth/errors.hpp"
#include "sldepth/io.hpp"

namespace sldepth {

using nlohmann::json;

namespace {

void check_object(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!keys.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& dst, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T value{};
  read(j, key, value, where);
  dst = value;
}

Eigen::Vector3d vec3(const json& j, const std::string& where) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(where + " must be an array of 3 numbers");
  }
  if (v.size() != 3) throw ConfigError(where + " must be an array of 3 numbers");
  return {v[0], v[1], v[2]};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::optional<Aabb> parse_bounds(const json& s, const std::string& where) {
  if (!s.contains("bounds")) return std::nullopt;
  const auto& b = s.at("bounds");
  check_object(b, {"min", "max"}, where + ".bounds");
  Aabb box;
  if (b.contains("min")) box.min = vec3(b.at("min"), where + ".bounds.min");
  if (b.contains("max")) box.max = vec3(b.at("max"), where + ".bounds.max");
  return box;
}

Surface parse_surface(const json& s, const std::string& where) {
  if (!s.is_object() || !s.contains("type")) throw ConfigError(where + " needs a \"type\"");
  const std::string type = s.at("type").is_string() ? s.at("type").get<std::string>() : "";
  if (type == "plane") {
    check_object(s, {"type", "coefficients", "point", "normal", "bounds"}, where);
    PlaneSurface p;
    if (s.contains("coefficients")) {
      if (s.contains("point") || s.contains("normal")) throw ConfigError(where + ": give coefficients or point/normal");
      p.coefficients = vec3(s.at("coefficients"), where + ".coefficients");
    } else {
      if (!s.contains("point") || !s.contains("normal")) throw ConfigError(where + ": plane needs coefficients or point and normal");
      try {
        p.coefficients = plane_through(vec3(s.at("point"), where + ".point"), vec3(s.at("normal"), where + ".normal"));
      } catch (const GenerationError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
    p.bounds = parse_bounds(s, where);
    return p;
  }
  if (type == "sphere") {
    check_object(s, {"type", "center", "radius", "bounds"}, where);
    if (!s.contains("center") || !s.contains("radius")) throw ConfigError(where + ": sphere needs center and radius");
    SphereSurface sp;
    sp.center = vec3(s.at("center"), where + ".center");
    read(s, "radius", sp.radius, where);
    if (!(sp.radius > 0)) throw ConfigError(where + ".radius must be positive");
    sp.bounds = parse_bounds(s, where);
    return sp;
  }
  if (type == "relief") {
    check_object(s, {"type", "point", "normal", "direction", "amplitude", "wavelength", "bounds"}, where);
    for (const char* key : {"point", "normal", "direction"})
      if (!s.contains(key)) throw ConfigError(where + ": relief needs " + key);
    ReliefSurface r;
    r.point = vec3(s.at("point"), where + ".point");
    r.normal = vec3(s.at("normal"), where + ".normal");
    r.direction = vec3(s.at("direction"), where + ".direction");
    read(s, "amplitude", r.amplitude, where);
    read(s, "wavelength", r.wavelength, where);
    if (!(r.wavelength > 0) || !(r.normal.norm() > 0) || !(r.direction.norm() > 0))
      throw ConfigError(where + ": relief needs positive wavelength and non-zero normal and direction");
    r.bounds = parse_bounds(s, where);
    return r;
  }
  throw ConfigError(where + ": unknown surface type '" + type + "'");
}

json surface_to_json(const Surface& surface) {
  json j;
  std::optional<Aabb> bounds;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneSurface>) {
          j = {{"type", "plane"}, {"coefficients", to_json(s.coefficients)}};
        } else if constexpr (std::is_same_v<S, SphereSurface>) {
          j = {{"type", "sphere"}, {"center", to_json(s.center)}, {"radius", s.radius}};
        } else {
          j = {{"type", "relief"},          {"point", to_json(s.point)},
               {"normal", to_json(s.normal)}, {"direction", to_json(s.direction)},
               {"amplitude", s.amplitude},    {"wavelength", s.wavelength}};
        }
        bounds = s.bounds;
      },
      surface);
  if (bounds) j["bounds"] = {{"min", to_json(bounds->min)}, {"max", to_json(bounds->max)}};
  return j;
}

Pose parse_pose(const json& j, const std::string& where) {
  check_object(j, {"R", "T"}, where);
  Pose pose;
  if (j.contains("R")) {
    std::vector<double> r;
    read(j, "R", r, where);
    if (r.size() != 9) throw ConfigError(where + ".R must hold 9 numbers (row-major)");
    for (int i = 0; i < 9; ++i) pose.R(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
  }
  if (j.contains("T")) pose.T = vec3(j.at("T"), where + ".T");
  if (!pose.is_rigid(1e-6)) throw ConfigError(where + ".R is not a rotation");
  return pose;
}

}  // namespace

std::string to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::gaussian: return "gaussian";
    case FilterMode::bilateral: return "bilateral";
    case FilterMode::adaptive: return "adaptive";
  }
  return "";
}

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "gaussian") return FilterMode::gaussian;
  if (name == "bilateral") return FilterMode::bilateral;
  if (name == "adaptive") return FilterMode::adaptive;
  throw ConfigError("unknown filter mode '" + name + "'");
}

std::string to_string(WeightingMode mode) { return mode == WeightingMode::uniform ? "uniform" : "quartic"; }

WeightingMode parse_weighting_mode(const std::string& name) {
  if (name == "uniform") return WeightingMode::uniform;
  if (name == "quartic") return WeightingMode::inverse_quartic;
  throw ConfigError("unknown weighting mode '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_object(root, {"schema_version", "camera", "noise", "filter", "volume", "planes", "scene"}, "config");
  if (!root.contains("schema_version")) throw ConfigError("config lacks schema_version");
  int version = 0;
  read(root, "schema_version", version, "config");
  if (version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(version));

  ExperimentConfig cfg;
  if (root.contains("camera")) {
    const auto& c = root.at("camera");
    check_object(c, {"focal_length", "baseline", "cx", "cy", "width", "height", "disparity_step", "depth_step"},
                 "camera");
    read(c, "focal_length", cfg.camera.f, "camera");
    read(c, "baseline", cfg.camera.B, "camera");
    read(c, "width", cfg.width, "camera");
    read(c, "height", cfg.height, "camera");
    read(c, "disparity_step", cfg.camera.disparity_step, "camera");
    read(c, "depth_step", cfg.camera.depth_step, "camera");
    cfg.camera.u = (cfg.width - 1) / 2.0;
    cfg.camera.v = (cfg.height - 1) / 2.0;
    read(c, "cx", cfg.camera.u, "camera");
    read(c, "cy", cfg.camera.v, "camera");
  }
  if (cfg.width <= 0 || cfg.height <= 0) throw ConfigError("camera width and height must be positive");
  if (!cfg.camera.valid()) throw ConfigError("camera parameters must be positive and finite");

  cfg.noise = NoiseParams<double>::from_camera(cfg.camera);
  if (root.contains("noise")) {
    check_object(root.at("noise"), {"k"}, "noise");
    read(root.at("noise"), "k", cfg.noise.k, "noise");
    if (!(cfg.noise.k >= 0) || !std::isfinite(cfg.noise.k)) throw ConfigError("noise.k must be finite and >= 0");
  }

  cfg.filter.config = FilterConfig::adaptive_defaults(cfg.camera);
  if (root.contains("filter")) {
    const auto& f = root.at("filter");
    check_object(f, {"mode", "sigma_s", "radius", "sigma_d", "k"}, "filter");
    std::string mode = to_string(cfg.filter.mode);
    read(f, "mode", mode, "filter");
    cfg.filter.mode = parse_filter_mode(mode);
    if (cfg.filter.mode != FilterMode::adaptive) cfg.filter.config.k.reset();
    read(f, "sigma_s", cfg.filter.config.sigma_s, "filter");
    read(f, "radius", cfg.filter.config.radius, "filter");
    read(f, "sigma_d", cfg.filter.config.sigma_d, "filter");
    read(f, "k", cfg.filter.config.k, "filter");
  }
  validate(cfg.filter.config, cfg.filter.mode);

  if (root.contains("volume")) {
    const auto& v = root.at("volume");
    check_object(v, {"voxel_size", "padding_voxels", "weighting", "f_min", "f_max"}, "volume");
    read(v, "voxel_size", cfg.volume.voxel_size, "volume");
    read(v, "padding_voxels", cfg.volume.padding_voxels, "volume");
    std::string w = to_string(cfg.volume.weighting);
    read(v, "weighting", w, "volume");
    cfg.volume.weighting = parse_weighting_mode(w);
    read(v, "f_min", cfg.volume.f_min, "volume");
    read(v, "f_max", cfg.volume.f_max, "volume");
  }
  if (!(cfg.volume.voxel_size > 0) || cfg.volume.padding_voxels < 0) throw ConfigError("volume.voxel_size must be positive");
  if ((cfg.volume.f_min && !(*cfg.volume.f_min < 0)) || (cfg.volume.f_max && !(*cfg.volume.f_max > 0)))
    throw ConfigError("volume needs f_min < 0 < f_max");

  if (root.contains("planes")) {
    const auto& p = root.at("planes");
    check_object(p, {"sigma", "tau", "min_area", "disparity_threshold", "merge_angle_deg", "max_iterations", "tie_tolerance"},
                 "planes");
    read(p, "sigma", cfg.planes.segment.sigma, "planes");
    read(p, "tau", cfg.planes.segment.tau, "planes");
    read(p, "min_area", cfg.planes.segment.min_area, "planes");
    read(p, "disparity_threshold", cfg.planes.refine.disparity_threshold, "planes");
    read(p, "merge_angle_deg", cfg.planes.refine.merge_angle_deg, "planes");
    read(p, "max_iterations", cfg.planes.refine.max_iterations, "planes");
    read(p, "tie_tolerance", cfg.planes.refine.tie_tolerance, "planes");
  }
  if (!(cfg.planes.segment.sigma > 0) || !(cfg.planes.segment.tau > 0) || cfg.planes.segment.min_area < 1 ||
      cfg.planes.refine.max_iterations < 1 || !(cfg.planes.refine.tie_tolerance >= 0))
    throw ConfigError("planes: sigma, tau, min_area and max_iterations must be positive");

  if (root.contains("scene")) {
    const auto& s = root.at("scene");
    check_object(s, {"seed", "disparity_noise", "quantize", "pose", "surfaces"}, "scene");
    SceneSpec scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    read(s, "seed", scene.seed, "scene");
    read(s, "disparity_noise", scene.disparity_noise, "scene");
    read(s, "quantize", scene.quantize, "scene");
    if (!(scene.disparity_noise >= 0)) throw ConfigError("scene.disparity_noise must be >= 0");
    if (s.contains("pose")) scene.pose = parse_pose(s.at("pose"), "scene.pose");
    if (!s.contains("surfaces") || !s.at("surfaces").is_array() || s.at("surfaces").empty())
      throw ConfigError("scene.surfaces must be a non-empty array");
    int i = 0;
    for (const auto& item : s.at("surfaces"))
      scene.surfaces.push_back(parse_surface(item, "scene.surfaces[" + std::to_string(i++) + "]"));
    cfg.scene = std::move(scene);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["camera"] = {{"focal_length", cfg.camera.f}, {"baseline", cfg.camera.B},
                    {"cx", cfg.camera.u},           {"cy", cfg.camera.v},
                    {"width", cfg.width},           {"height", cfg.height},
                    {"disparity_step", cfg.camera.disparity_step}, {"depth_step", cfg.camera.depth_step}};
  root["noise"] = {{"k", cfg.noise.k}};
  json filter = {{"mode", to_string(cfg.filter.mode)},
                 {"sigma_s", cfg.filter.config.sigma_s},
                 {"radius", cfg.filter.config.radius}};
  if (cfg.filter.config.sigma_d) filter["sigma_d"] = *cfg.filter.config.sigma_d;
  if (cfg.filter.config.k) filter["k"] = *cfg.filter.config.k;
  root["filter"] = filter;
  json volume = {{"voxel_size", cfg.volume.voxel_size},
                 {"padding_voxels", cfg.volume.padding_voxels},
                 {"weighting", to_string(cfg.volume.weighting)}};
  if (cfg.volume.f_min) volume["f_min"] = *cfg.volume.f_min;
  if (cfg.volume.f_max) volume["f_max"] = *cfg.volume.f_max;
  root["volume"] = volume;
  root["planes"] = {{"sigma", cfg.planes.segment.sigma},
                    {"tau", cfg.planes.segment.tau},
                    {"min_area", cfg.planes.segment.min_area},
                    {"disparity_threshold", cfg.planes.refine.disparity_threshold},
                    {"merge_angle_deg", cfg.planes.refine.merge_angle_deg},
                    {"max_iterations", cfg.planes.refine.max_iterations},
                    {"tie_tolerance", cfg.planes.refine.tie_tolerance}};
  if (cfg.scene) {
    const auto& s = *cfg.scene;
    json surfaces = json::array();
    for (const auto& surface : s.surfaces) surfaces.push_back(surface_to_json(surface));
    json r = json::array();
    for (int i = 0; i < 9; ++i) r.push_back(s.pose.R(i / 3, i % 3));
    root["scene"] = {{"seed", s.seed},
                     {"disparity_noise", s.disparity_noise},
                     {"quantize", s.quantize},
                     {"pose", {{"R", r}, {"T", to_json(s.pose.T)}}},
                     {"surfaces", surfaces}};
  }
  return root.dump(2) + "\n";
}

}  // namespace sldepth
