#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sldepth/geometry.hpp"
#include "sldepth/mesh.hpp"
#include "sldepth/noise_model.hpp"
#include "sldepth/planes.hpp"
#include "sldepth/raster.hpp"
#include "sldepth/tsdf.hpp"

namespace sldepth {

// Binary layouts are described in docs/formats.md. All multi-byte fields are
// little-endian.

enum class RasterEncoding : std::uint8_t {
  uint16_steps = 0,  // depth / depth_step as u16, 0 = invalid
  float64 = 1,       // depth in mm as IEEE double, 0 = invalid
};

struct DepthRaster {
  DepthMap map;
  double depth_step = 1;
  RasterEncoding encoding = RasterEncoding::uint16_steps;
};

/// u16 when every valid depth is a positive multiple of depth_step that fits,
/// float64 otherwise.
RasterEncoding choose_encoding(const DepthMap& map, double depth_step);

void write_depth_raster(std::ostream& out, const DepthMap& map, double depth_step);
DepthRaster read_depth_raster(std::istream& in);
void save_depth_raster(const std::filesystem::path& path, const DepthMap& map, double depth_step);
DepthRaster load_depth_raster(const std::filesystem::path& path);

void write_label_raster(std::ostream& out, const LabelImage& labels);
LabelImage read_label_raster(std::istream& in);
void save_label_raster(const std::filesystem::path& path, const LabelImage& labels);
LabelImage load_label_raster(const std::filesystem::path& path);

enum class PlyFormat { ascii, binary_little_endian };

void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyFormat format);
TriangleMesh read_ply(std::istream& in);
void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format);
TriangleMesh load_ply(const std::filesystem::path& path);

/// Raw accumulators F and W with the grid geometry.
void write_volume(std::ostream& out, const TsdfVolume& volume);
TsdfVolume read_volume(std::istream& in);
void save_volume(const std::filesystem::path& path, const TsdfVolume& volume);
TsdfVolume load_volume(const std::filesystem::path& path);

/// Columns z_mm, delta_z_mm.
void write_resolution_csv(std::ostream& out, const ResolutionAnalysis& analysis);
void save_resolution_csv(const std::filesystem::path& path, const ResolutionAnalysis& analysis);

/// JSON array of {"affine": {alpha, beta, gamma}, "world": [a, b, c], "support": n}.
std::string plane_list_to_json(const std::vector<PlaneModel>& planes);
std::vector<PlaneModel> plane_list_from_json(const std::string& text);
void save_plane_list(const std::filesystem::path& path, const std::vector<PlaneModel>& planes);

/// Three text lines "r00 r01 r02 t0" ... of the world-to-camera transform.
void write_pose(std::ostream& out, const Pose& pose);
Pose read_pose(std::istream& in);
void save_pose(const std::filesystem::path& path, const Pose& pose);
Pose load_pose(const std::filesystem::path& path);

struct ManifestEntry {
  std::filesystem::path raster;
  std::filesystem::path pose;
};

/// One "<raster> <pose>" pair per line, '#' starts a comment, relative paths
/// resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sldepth
