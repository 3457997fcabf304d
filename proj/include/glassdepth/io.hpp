#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "glassdepth/image.hpp"
#include "glassdepth/scene.hpp"

namespace glassdepth {

// Raw raster codecs. Depth files are 16-bit single-channel PNG in integer
// millimeters (0 = invalid); masks and boundary labels are 8-bit PNG;
// normals and float fields are PFM (little-endian, bottom-up rows).
void write_png16(const std::filesystem::path& path, const Raster<uint16_t>& img);
Raster<uint16_t> read_png16(const std::filesystem::path& path);

void write_png8(const std::filesystem::path& path, const Raster<uint8_t>& img);
Raster<uint8_t> read_png8(const std::filesystem::path& path);

void write_png_rgb8(const std::filesystem::path& path,
                    const Raster<std::array<uint8_t, 3>>& img);

void write_pfm(const std::filesystem::path& path, const Raster<double>& img);
Raster<double> read_pfm(const std::filesystem::path& path);
void write_pfm3(const std::filesystem::path& path, const NormalMap& normals);
NormalMap read_pfm3(const std::filesystem::path& path);

// Depth <-> file units. Values above 65535 mm clamp with a warning on stderr.
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_depth_png(const std::filesystem::path& path);

// Masks: 0 = opaque, 255 = transparent.
void write_mask_png(const std::filesystem::path& path, const TransparencyMask& mask);
TransparencyMask read_mask_png(const std::filesystem::path& path);

// Boundary labels {0,1,2} as literal 8-bit values; occlusion probability as
// a side-car PFM only when it is not implied by the labels.
void write_boundary(const std::filesystem::path& label_path, const BoundaryMap& b);
BoundaryMap read_boundary(const std::filesystem::path& label_path);

// Scene directory: manifest.json plus the rasters above.
void save_scene(const std::filesystem::path& dir, const Scene& scene);
Scene load_scene(const std::filesystem::path& dir);

std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& text);

}  // namespace glassdepth
