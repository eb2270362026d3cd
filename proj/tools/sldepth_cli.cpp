#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sldepth/config.hpp"
#include "sldepth/denoise.hpp"
#include "sldepth/errors.hpp"
#include "sldepth/io.hpp"
#include "sldepth/noise_model.hpp"
#include "sldepth/planes.hpp"
#include "sldepth/synth.hpp"
#include "sldepth/tsdf.hpp"

namespace fs = std::filesystem;
using namespace sldepth;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInsufficient = 3, kIo = 4 };

struct SimulateArgs {
  std::string scene, out, labels, truth, pose;
  bool quantize = false;
};

struct AnalyzeArgs {
  std::string in, camera, csv;
};

struct DenoiseArgs {
  std::string in, out, mode, reference;
  std::optional<double> sigma_s, sigma_d, k;
  std::optional<int> radius;
  double near_band = 800, far_band = 2000;
};

struct FuseArgs {
  std::string scans, mode = "quartic", out, camera, truth_scene, volume_out;
  double voxel = 4;
  double max_voxels = 5e7;
  bool binary = false, compare = false;
};

struct PlanesArgs {
  std::string in, camera, labels_out, json_out, truth_labels;
  std::optional<double> tau, sigma;
  std::optional<int> min_area;
};

ExperimentConfig camera_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

int run_simulate(const SimulateArgs& a) {
  const ExperimentConfig cfg = load_config(a.scene);
  if (!cfg.scene) throw ConfigError(a.scene + ": no scene section");
  SceneSpec spec = *cfg.scene;
  spec.quantize = spec.quantize || a.quantize;
  const SyntheticFrame frame = synth_scene(spec, cfg.camera);
  save_depth_raster(a.out, frame.depth, cfg.camera.depth_step);
  if (!a.labels.empty()) save_label_raster(a.labels, frame.labels);
  if (!a.truth.empty()) save_depth_raster(a.truth, frame.truth, cfg.camera.depth_step);
  if (!a.pose.empty()) save_pose(a.pose, spec.pose);
  const auto values = frame.depth.valid_values();
  std::printf("pixels: %ld valid of %ld\n", static_cast<long>(values.size()), static_cast<long>(frame.depth.size()));
  if (!values.empty())
    std::printf("depth range: %.3f .. %.3f mm\n", *std::min_element(values.begin(), values.end()),
                *std::max_element(values.begin(), values.end()));
  std::printf("quantized: %s\n", spec.quantize ? "yes" : "no");
  return kOk;
}

int run_analyze(const AnalyzeArgs& a) {
  const DepthRaster raster = load_depth_raster(a.in);
  const auto values = raster.map.valid_values();
  const ResolutionAnalysis r = analyze_depth_resolution(values);
  if (!a.csv.empty()) save_resolution_csv(a.csv, r);
  std::printf("unique depths: %zu\n", r.unique_depths.size());
  std::printf("slope: %.6f\n", r.slope);
  std::printf("intercept: %.6f\n", r.intercept);
  if (!a.camera.empty()) {
    const Camera cam = load_config(a.camera).camera;
    const double step = estimate_subpixel_resolution(raster.map, cam);
    std::printf("subpixel step: %.9f px (1/%.3f)\n", step, 1.0 / step);
    const auto levels = audit_disparity_levels(raster.map, cam, step);
    for (const auto& [n, count] : levels) std::printf("levels in [%ld, %ld): %d\n", n, n + 1, count);
  }
  return kOk;
}

double rms(const std::vector<double>& e) {
  if (e.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double v : e) s += v * v;
  return std::sqrt(s / static_cast<double>(e.size()));
}

int run_denoise(const DenoiseArgs& a) {
  const FilterMode mode = parse_filter_mode(a.mode);
  FilterConfig cfg;
  if (a.sigma_s) cfg.sigma_s = *a.sigma_s;
  if (a.radius) cfg.radius = *a.radius;
  cfg.sigma_d = a.sigma_d;
  cfg.k = a.k;
  validate(cfg, mode);

  const DepthRaster in = load_depth_raster(a.in);
  const DepthMap out = apply_filter(in.map, cfg, mode);
  save_depth_raster(a.out, out, in.depth_step);

  std::vector<double> change;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out.valid.data()[i]) change.push_back(out.values.data()[i] - in.map.values.data()[i]);
  std::printf("filter: %s, radius %d px\n", to_string(mode).c_str(), cfg.effective_radius());
  std::printf("rms change: %.6f mm over %zu pixels\n", rms(change), change.size());

  if (!a.reference.empty()) {
    const DepthRaster ref = load_depth_raster(a.reference);
    if (!ref.map.same_shape(in.map)) throw IoError(a.reference + ": size differs from input");
    struct Band {
      const char* name;
      std::vector<double> before, after;
    } bands[3] = {{"all", {}, {}}, {"near", {}, {}}, {"far", {}, {}}};
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (!out.valid.data()[i] || !ref.map.valid.data()[i]) continue;
      const double z = ref.map.values.data()[i];
      const double before = in.map.values.data()[i] - z, after = out.values.data()[i] - z;
      for (auto* b : {&bands[0], z <= a.near_band ? &bands[1] : nullptr, z > a.far_band ? &bands[2] : nullptr}) {
        if (!b) continue;
        b->before.push_back(before);
        b->after.push_back(after);
      }
    }
    for (const auto& b : bands)
      std::printf("rms to reference (%s): %.6f -> %.6f mm over %zu pixels\n", b.name, rms(b.before), rms(b.after),
                  b.after.size());
  }
  return kOk;
}

double rms_to_scene(const TriangleMesh& mesh, const std::vector<Surface>& surfaces) {
  std::vector<double> e;
  e.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : surfaces) best = std::min(best, surface_distance(s, v));
    e.push_back(best);
  }
  return rms(e);
}

int run_fuse(const FuseArgs& a) {
  const WeightingMode mode = parse_weighting_mode(a.mode);
  if (!(a.voxel > 0)) throw ConfigError("--voxel must be positive");
  const ExperimentConfig cfg = camera_config(a.camera);
  const auto entries = load_manifest(a.scans);
  if (entries.empty()) throw ConfigError(a.scans + ": manifest lists no scans");

  std::vector<Scan> scans;
  for (const auto& e : entries) scans.push_back({load_depth_raster(e.raster).map, load_pose(e.pose)});

  VolumeParams params = bounds_for_scans(scans, cfg.camera, a.voxel, cfg.volume.padding_voxels);
  const double voxels = params.dims.cast<double>().prod();
  if (voxels > a.max_voxels)
    throw ConfigError("volume needs " + std::to_string(static_cast<long long>(voxels)) +
                      " voxels, above --max-voxels; use a larger --voxel");
  params.f_min = cfg.volume.f_min;
  params.f_max = cfg.volume.f_max;
  const TsdfVolume volume = fuse_volume(scans, cfg.camera, params, mode);
  const TriangleMesh mesh = extract_mesh(volume);
  save_ply(a.out, mesh, a.binary ? PlyFormat::binary_little_endian : PlyFormat::ascii);
  if (!a.volume_out.empty()) save_volume(a.volume_out, volume);

  std::printf("scans: %zu\n", scans.size());
  std::printf("volume: %d x %d x %d voxels of %.3f mm, %zu observed\n", params.dims.x(), params.dims.y(),
              params.dims.z(), a.voxel, volume.observed_count());
  std::printf("mesh: %zu vertices, %zu triangles\n", mesh.vertices.size(), mesh.triangles.size());

  if (!a.truth_scene.empty()) {
    const ExperimentConfig truth = load_config(a.truth_scene);
    if (!truth.scene) throw ConfigError(a.truth_scene + ": no scene section");
    std::printf("rms to truth (%s): %.6f mm\n", to_string(mode).c_str(), rms_to_scene(mesh, truth.scene->surfaces));
    if (a.compare) {
      const WeightingMode other = mode == WeightingMode::uniform ? WeightingMode::inverse_quartic : WeightingMode::uniform;
      const TriangleMesh alt = extract_mesh(fuse_volume(scans, cfg.camera, params, other));
      std::printf("rms to truth (%s): %.6f mm\n", to_string(other).c_str(), rms_to_scene(alt, truth.scene->surfaces));
    }
  }
  return kOk;
}

int run_planes(const PlanesArgs& a) {
  const ExperimentConfig cfg = load_config(a.camera);
  PlaneExtractionParams params = cfg.planes;
  if (a.tau) params.segment.tau = *a.tau;
  if (a.sigma) params.segment.sigma = *a.sigma;
  if (a.min_area) params.segment.min_area = *a.min_area;
  if (!(params.segment.tau > 0) || !(params.segment.sigma > 0) || params.segment.min_area < 1)
    throw ConfigError("--tau, --sigma and --min-area must be positive");

  const DepthRaster raster = load_depth_raster(a.in);
  const PlaneSegmentation seg = extract_planes(depth_map_to_disparity_map(raster.map, cfg.camera), cfg.camera, params);
  if (!a.labels_out.empty()) save_label_raster(a.labels_out, seg.labels);
  if (!a.json_out.empty()) save_plane_list(a.json_out, seg.planes);

  std::printf("planes: %zu (%d iterations, %s)\n", seg.planes.size(), seg.iterations,
              seg.converged ? "converged" : "iteration limit");
  for (std::size_t i = 0; i < seg.planes.size(); ++i) {
    const auto& p = seg.planes[i];
    const Eigen::Vector3d n = p.world.unit_normal();
    std::printf("  %zu: normal (%.6f, %.6f, %.6f), distance %.3f mm, %zu px\n", i, n.x(), n.y(), n.z(),
                1.0 / p.world.abc.norm(), p.support);
  }
  if (!a.truth_labels.empty()) {
    const LabelImage truth = load_label_raster(a.truth_labels);
    if (truth.rows() != seg.labels.rows() || truth.cols() != seg.labels.cols())
      throw IoError(a.truth_labels + ": size differs from input");
    std::printf("label accuracy: %.6f\n", label_accuracy(seg.labels, truth));
  }
  return kOk;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const AnalysisError& e) {
    std::cerr << "error: insufficient data: " << e.what() << "\n";
    return kInsufficient;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-light depth noise toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Ray cast a synthetic scene into a depth raster");
  simulate->add_option("--scene", sim.scene, "Scene config (JSON)")->required();
  simulate->add_option("--out", sim.out, "Output depth raster")->required();
  simulate->add_option("--labels", sim.labels, "Output label raster (surface index per pixel)");
  simulate->add_option("--truth", sim.truth, "Output exact depth raster");
  simulate->add_option("--pose", sim.pose, "Output pose sidecar for fuse manifests");
  simulate->add_flag("--quantize", sim.quantize, "Apply the sensor disparity and depth quantizer");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze-noise", "Depth resolution law of a raster");
  analyze->add_option("--in", an.in, "Depth raster")->required();
  analyze->add_option("--camera", an.camera, "Camera config; enables the subpixel estimate");
  analyze->add_option("--csv", an.csv, "Write z_mm,delta_z_mm rows");

  DenoiseArgs dn;
  auto* denoise = app.add_subcommand("denoise", "Gaussian, bilateral or adaptive bilateral filtering");
  denoise->add_option("--in", dn.in, "Input depth raster")->required();
  denoise->add_option("--out", dn.out, "Output depth raster")->required();
  denoise->add_option("--mode", dn.mode, "gaussian | bilateral | adaptive")->required();
  denoise->add_option("--sigma-s", dn.sigma_s, "Spatial sigma in px (default 3)");
  denoise->add_option("--sigma-d", dn.sigma_d, "Range sigma in mm (bilateral)");
  denoise->add_option("--k", dn.k, "Range coefficient in 1/mm (adaptive)");
  denoise->add_option("--radius", dn.radius, "Window half-width in px (default ceil(3 sigma_s))");
  denoise->add_option("--reference", dn.reference, "Exact depth raster for residual reporting");
  denoise->add_option("--near-band", dn.near_band, "Near band upper depth in mm")->capture_default_str();
  denoise->add_option("--far-band", dn.far_band, "Far band lower depth in mm")->capture_default_str();

  FuseArgs fu;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse registered scans into a mesh");
  fuse_cmd->add_option("--scans", fu.scans, "Manifest of '<raster> <pose>' lines")->required();
  fuse_cmd->add_option("--mode", fu.mode, "uniform | quartic")->capture_default_str();
  fuse_cmd->add_option("--voxel", fu.voxel, "Voxel size in mm")->capture_default_str();
  fuse_cmd->add_option("--out", fu.out, "Output PLY mesh")->required();
  fuse_cmd->add_flag("--binary", fu.binary, "Write binary little-endian PLY");
  fuse_cmd->add_option("--camera", fu.camera, "Camera config (default Kinect)");
  fuse_cmd->add_option("--truth-scene", fu.truth_scene, "Scene config to measure the mesh against");
  fuse_cmd->add_option("--volume-out", fu.volume_out, "Write the raw F/W volume");
  fuse_cmd->add_option("--max-voxels", fu.max_voxels, "Refuse larger volumes")->capture_default_str();
  fuse_cmd->add_flag("--compare", fu.compare, "Also report the other weighting mode");

  PlanesArgs pl;
  auto* planes_cmd = app.add_subcommand("planes", "Disparity-space plane extraction");
  planes_cmd->add_option("--in", pl.in, "Depth raster")->required();
  planes_cmd->add_option("--camera", pl.camera, "Camera and plane parameters config")->required();
  planes_cmd->add_option("--tau", pl.tau, "LoG planarity threshold");
  planes_cmd->add_option("--sigma", pl.sigma, "LoG sigma in px");
  planes_cmd->add_option("--min-area", pl.min_area, "Smallest seed region in px");
  planes_cmd->add_option("--labels-out", pl.labels_out, "Output label raster");
  planes_cmd->add_option("--json-out", pl.json_out, "Output plane list");
  planes_cmd->add_option("--truth-labels", pl.truth_labels, "Label raster to score against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*simulate) return guarded([&] { return run_simulate(sim); });
  if (*analyze) return guarded([&] { return run_analyze(an); });
  if (*denoise) return guarded([&] { return run_denoise(dn); });
  if (*fuse_cmd) return guarded([&] { return run_fuse(fu); });
  if (*planes_cmd) return guarded([&] { return run_planes(pl); });
  return kUsage;
}
