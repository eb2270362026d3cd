#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sldepth/camera.hpp"
#include "sldepth/denoise.hpp"
#include "sldepth/planes.hpp"
#include "sldepth/synth.hpp"
#include "sldepth/tsdf.hpp"

namespace sldepth {

inline constexpr int kSchemaVersion = 1;

struct FilterSection {
  FilterMode mode = FilterMode::adaptive;
  FilterConfig config = FilterConfig::adaptive_defaults(Camera{});
};

struct VolumeSection {
  double voxel_size = 4;
  int padding_voxels = 6;
  WeightingMode weighting = WeightingMode::inverse_quartic;
  std::optional<double> f_min;
  std::optional<double> f_max;
};

/// Everything an experiment needs, read from one JSON document.
///
/// Every section and key is optional and falls back to the module default;
/// unknown keys and a missing or different "schema_version" are errors.
/// The scene section is only required by `simulate`.
struct ExperimentConfig {
  Camera camera;
  int width = 640;
  int height = 480;
  NoiseParams<double> noise = NoiseParams<double>::from_camera(Camera{});
  FilterSection filter;
  VolumeSection volume;
  PlaneExtractionParams planes;
  std::optional<SceneSpec> scene;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Full document with every default spelled out; parse_config inverts it.
std::string config_to_json(const ExperimentConfig& config);

std::string to_string(FilterMode mode);
FilterMode parse_filter_mode(const std::string& name);
std::string to_string(WeightingMode mode);
WeightingMode parse_weighting_mode(const std::string& name);

}  // namespace sldepth
