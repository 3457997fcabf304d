#include "glassdepth/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "glassdepth/errors.hpp"

namespace glassdepth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr fp(std::fopen(path.string().c_str(), mode));
  if (!fp) throw IoError("cannot open " + path.string());
  return fp;
}

void write_png_impl(const fs::path& path, int width, int height, int bit_depth,
                    int color_type, const std::vector<png_bytep>& rows) {
  FilePtr fp = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows are host little-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

void read_png_impl(const fs::path& path, int expect_bit_depth,
                   int expect_color_type, int* width, int* height,
                   std::vector<png_bytep> (*make_rows)(void*, int, int),
                   void* target) {
  FilePtr fp = open_file(path, "rb");
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  r.info = r.png ? png_create_info_struct(r.png) : nullptr;
  if (!r.png || !r.info) throw IoError("libpng init failed for " + path.string());
  if (setjmp(png_jmpbuf(r.png)))
    throw IoError("png read failed: " + path.string());
  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);
  int w = png_get_image_width(r.png, r.info);
  int h = png_get_image_height(r.png, r.info);
  int depth = png_get_bit_depth(r.png, r.info);
  int color = png_get_color_type(r.png, r.info);
  if (depth != expect_bit_depth || color != expect_color_type)
    throw IoError(path.string() + ": unexpected png format (depth " +
                  std::to_string(depth) + ", color " + std::to_string(color) +
                  ")");
  if (depth == 16) png_set_swap(r.png);
  *width = w;
  *height = h;
  std::vector<png_bytep> rows = make_rows(target, w, h);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
}

}  // namespace

void write_png16(const fs::path& path, const Raster<uint16_t>& img) {
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<uint16_t*>(&img.at(0, y)));
  write_png_impl(path, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

Raster<uint16_t> read_png16(const fs::path& path) {
  Raster<uint16_t> img;
  read_png_impl(
      path, 16, PNG_COLOR_TYPE_GRAY, &img.width, &img.height,
      [](void* t, int w, int h) {
        auto* im = static_cast<Raster<uint16_t>*>(t);
        *im = Raster<uint16_t>(w, h);
        std::vector<png_bytep> rows(h);
        for (int y = 0; y < h; ++y)
          rows[y] = reinterpret_cast<png_bytep>(&im->at(0, y));
        return rows;
      },
      &img);
  return img;
}

void write_png8(const fs::path& path, const Raster<uint8_t>& img) {
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(&img.at(0, y));
  write_png_impl(path, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

Raster<uint8_t> read_png8(const fs::path& path) {
  Raster<uint8_t> img;
  read_png_impl(
      path, 8, PNG_COLOR_TYPE_GRAY, &img.width, &img.height,
      [](void* t, int w, int h) {
        auto* im = static_cast<Raster<uint8_t>*>(t);
        *im = Raster<uint8_t>(w, h);
        std::vector<png_bytep> rows(h);
        for (int y = 0; y < h; ++y) rows[y] = &im->at(0, y);
        return rows;
      },
      &img);
  return img;
}

void write_png_rgb8(const fs::path& path,
                    const Raster<std::array<uint8_t, 3>>& img) {
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.at(0, y).data());
  write_png_impl(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

// ---------------------------------------------------------------------------
// PFM

namespace {

void write_pfm_impl(const fs::path& path, int width, int height, int channels,
                    const float* data) {
  FilePtr fp = open_file(path, "wb");
  std::fprintf(fp.get(), "%s\n%d %d\n-1.0\n", channels == 3 ? "PF" : "Pf",
               width, height);
  // PFM rows are stored bottom-up.
  for (int y = height - 1; y >= 0; --y) {
    const float* row = data + static_cast<size_t>(y) * width * channels;
    if (std::fwrite(row, sizeof(float), static_cast<size_t>(width) * channels,
                    fp.get()) != static_cast<size_t>(width) * channels)
      throw IoError("pfm write failed: " + path.string());
  }
}

void read_pfm_impl(const fs::path& path, int expect_channels, int* width,
                   int* height, std::vector<float>* out) {
  FilePtr fp = open_file(path, "rb");
  char tag[3] = {0, 0, 0};
  int w = 0, h = 0;
  double scale = 0.0;
  if (std::fscanf(fp.get(), "%2s %d %d %lf", tag, &w, &h, &scale) != 4)
    throw IoError("pfm header parse failed: " + path.string());
  int channels = std::strcmp(tag, "PF") == 0 ? 3 : 1;
  if (std::strcmp(tag, "PF") != 0 && std::strcmp(tag, "Pf") != 0)
    throw IoError(path.string() + ": not a pfm file");
  if (channels != expect_channels)
    throw IoError(path.string() + ": unexpected pfm channel count");
  if (w <= 0 || h <= 0) throw IoError(path.string() + ": bad pfm dimensions");
  std::fgetc(fp.get());  // single whitespace after the scale line
  out->resize(static_cast<size_t>(w) * h * channels);
  for (int y = h - 1; y >= 0; --y) {
    float* row = out->data() + static_cast<size_t>(y) * w * channels;
    if (std::fread(row, sizeof(float), static_cast<size_t>(w) * channels,
                   fp.get()) != static_cast<size_t>(w) * channels)
      throw IoError("pfm read failed: " + path.string());
  }
  if (scale > 0.0) {
    // Big-endian file; byte-swap into host order.
    for (float& f : *out) {
      uint32_t v;
      std::memcpy(&v, &f, 4);
      v = __builtin_bswap32(v);
      std::memcpy(&f, &v, 4);
    }
  }
  *width = w;
  *height = h;
}

}  // namespace

void write_pfm(const fs::path& path, const Raster<double>& img) {
  std::vector<float> buf(img.size());
  for (size_t i = 0; i < img.size(); ++i) buf[i] = static_cast<float>(img[i]);
  write_pfm_impl(path, img.width, img.height, 1, buf.data());
}

Raster<double> read_pfm(const fs::path& path) {
  int w = 0, h = 0;
  std::vector<float> buf;
  read_pfm_impl(path, 1, &w, &h, &buf);
  Raster<double> img(w, h);
  for (size_t i = 0; i < img.size(); ++i) img[i] = buf[i];
  return img;
}

void write_pfm3(const fs::path& path, const NormalMap& normals) {
  std::vector<float> buf(normals.size() * 3);
  for (size_t i = 0; i < normals.size(); ++i) {
    buf[3 * i + 0] = static_cast<float>(normals[i].x());
    buf[3 * i + 1] = static_cast<float>(normals[i].y());
    buf[3 * i + 2] = static_cast<float>(normals[i].z());
  }
  write_pfm_impl(path, normals.width, normals.height, 3, buf.data());
}

NormalMap read_pfm3(const fs::path& path) {
  int w = 0, h = 0;
  std::vector<float> buf;
  read_pfm_impl(path, 3, &w, &h, &buf);
  NormalMap normals(w, h);
  for (size_t i = 0; i < normals.size(); ++i)
    normals[i] = Eigen::Vector3d(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  return normals;
}

// ---------------------------------------------------------------------------
// Domain rasters

void write_depth_png(const fs::path& path, const DepthImage& depth) {
  Raster<uint16_t> img(depth.width, depth.height);
  int clamped = 0;
  for (size_t i = 0; i < depth.size(); ++i) {
    double mm = std::round(depth[i] * 1000.0);
    if (mm < 0.0) mm = 0.0;
    if (mm > 65535.0) {
      mm = 65535.0;
      ++clamped;
    }
    img[i] = static_cast<uint16_t>(mm);
  }
  if (clamped > 0)
    std::fprintf(stderr, "warning: %s: %d depth pixels clamped to 65535 mm\n",
                 path.string().c_str(), clamped);
  write_png16(path, img);
}

DepthImage read_depth_png(const fs::path& path) {
  Raster<uint16_t> img = read_png16(path);
  DepthImage depth(img.width, img.height);
  for (size_t i = 0; i < img.size(); ++i) depth[i] = img[i] / 1000.0;
  return depth;
}

void write_mask_png(const fs::path& path, const TransparencyMask& mask) {
  Raster<uint8_t> img(mask.width, mask.height);
  for (size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255 : 0;
  write_png8(path, img);
}

TransparencyMask read_mask_png(const fs::path& path) {
  Raster<uint8_t> img = read_png8(path);
  TransparencyMask mask(img.width, img.height);
  for (size_t i = 0; i < img.size(); ++i) mask[i] = img[i] >= 128 ? 1 : 0;
  return mask;
}

void write_boundary(const fs::path& label_path, const BoundaryMap& b) {
  write_png8(label_path, b.labels);
  bool implied = true;
  for (size_t i = 0; i < b.occlusion_prob.size(); ++i) {
    double want = b.labels[i] == kOcclusion ? 1.0 : 0.0;
    if (b.occlusion_prob[i] != want) {
      implied = false;
      break;
    }
  }
  fs::path prob_path = label_path;
  prob_path.replace_extension(".prob.pfm");
  if (!implied)
    write_pfm(prob_path, b.occlusion_prob);
  else if (fs::exists(prob_path))
    fs::remove(prob_path);
}

BoundaryMap read_boundary(const fs::path& label_path) {
  Raster<uint8_t> labels = read_png8(label_path);
  BoundaryMap b(labels.width, labels.height);
  b.labels = labels;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > kContact)
      throw IoError(label_path.string() + ": boundary label out of range");
    b.occlusion_prob[i] = labels[i] == kOcclusion ? 1.0 : 0.0;
  }
  fs::path prob_path = label_path;
  prob_path.replace_extension(".prob.pfm");
  if (fs::exists(prob_path)) b.occlusion_prob = read_pfm(prob_path);
  return b;
}

// ---------------------------------------------------------------------------
// Scene manifest

namespace {

json vec3_to_json(const Eigen::Vector3d& v) { return json{v.x(), v.y(), v.z()}; }

Eigen::Vector3d vec3_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json intrinsics_to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx},       {"fy", k.fy},     {"cx", k.cx},
              {"cy", k.cy},       {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

const char* kind_name(Primitive::Kind k) {
  switch (k) {
    case Primitive::Kind::kPlane: return "plane";
    case Primitive::Kind::kSphere: return "sphere";
    case Primitive::Kind::kBox: return "box";
    case Primitive::Kind::kCylinder: return "cylinder";
  }
  return "plane";
}

json primitive_to_json(const Primitive& p) {
  json j{{"kind", kind_name(p.kind)}, {"transparent", p.transparent}};
  switch (p.kind) {
    case Primitive::Kind::kPlane:
      j["point"] = vec3_to_json(p.point);
      j["normal"] = vec3_to_json(p.normal);
      break;
    case Primitive::Kind::kSphere:
      j["center"] = vec3_to_json(p.center);
      j["radius"] = p.radius;
      break;
    case Primitive::Kind::kBox:
      j["center"] = vec3_to_json(p.center);
      j["half_extents"] = vec3_to_json(p.half_extents);
      j["rotation"] = json{p.rotation.w(), p.rotation.x(), p.rotation.y(),
                           p.rotation.z()};
      break;
    case Primitive::Kind::kCylinder:
      j["base"] = vec3_to_json(p.base);
      j["axis"] = vec3_to_json(p.axis);
      j["radius"] = p.radius;
      j["height"] = p.height;
      break;
  }
  return j;
}

Primitive primitive_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const bool transparent = j.value("transparent", false);
  if (kind == "plane")
    return Primitive::make_plane(vec3_from_json(j.at("point")),
                                 vec3_from_json(j.at("normal")), transparent);
  if (kind == "sphere")
    return Primitive::make_sphere(vec3_from_json(j.at("center")),
                                  j.at("radius").get<double>(), transparent);
  if (kind == "box") {
    const json& q = j.at("rotation");
    return Primitive::make_box(
        vec3_from_json(j.at("center")), vec3_from_json(j.at("half_extents")),
        Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                           q.at(2).get<double>(), q.at(3).get<double>()),
        transparent);
  }
  if (kind == "cylinder")
    return Primitive::make_cylinder(
        vec3_from_json(j.at("base")), vec3_from_json(j.at("axis")),
        j.at("radius").get<double>(), j.at("height").get<double>(),
        transparent);
  throw IoError("unknown primitive kind: " + kind);
}

json spec_to_json_obj(const SceneSpec& spec) {
  json prims = json::array();
  for (const auto& p : spec.primitives) prims.push_back(primitive_to_json(p));
  return json{{"intrinsics", intrinsics_to_json(spec.intrinsics)},
              {"primitives", prims},
              {"support_plane", spec.support_plane},
              {"seed", spec.seed},
              {"z_max", spec.z_max}};
}

SceneSpec spec_from_json_obj(const json& j) {
  SceneSpec spec;
  spec.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  for (const auto& p : j.at("primitives"))
    spec.primitives.push_back(primitive_from_json(p));
  spec.support_plane = j.at("support_plane").get<int>();
  spec.seed = j.at("seed").get<uint64_t>();
  spec.z_max = j.value("z_max", 10.0);
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json parse_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

std::string scene_spec_to_json(const SceneSpec& spec) {
  return spec_to_json_obj(spec).dump(2) + "\n";
}

SceneSpec scene_spec_from_json(const std::string& text) {
  try {
    return spec_from_json_obj(json::parse(text));
  } catch (const json::exception& e) {
    throw IoError(std::string("scene spec parse failed: ") + e.what());
  }
}

void save_scene(const fs::path& dir, const Scene& scene) {
  scene.check_dimensions();
  fs::create_directories(dir);
  json files = json::object();
  auto put = [&](const char* key, const std::string& name) {
    files[key] = name;
  };

  if (scene.gt_depth.width > 0) {
    write_depth_png(dir / "gt_depth.png", scene.gt_depth);
    put("gt_depth", "gt_depth.png");
  }
  if (scene.raw_depth.width > 0) {
    write_depth_png(dir / "raw_depth.png", scene.raw_depth);
    put("raw_depth", "raw_depth.png");
  }
  if (scene.gt_normals.width > 0) {
    write_pfm3(dir / "gt_normals.pfm", scene.gt_normals);
    put("gt_normals", "gt_normals.pfm");
  }
  if (scene.input_normals.width > 0) {
    write_pfm3(dir / "input_normals.pfm", scene.input_normals);
    put("input_normals", "input_normals.pfm");
  }
  if (scene.gt_mask.width > 0) {
    write_mask_png(dir / "gt_mask.png", scene.gt_mask);
    put("gt_mask", "gt_mask.png");
  }
  if (scene.input_mask.width > 0) {
    write_mask_png(dir / "input_mask.png", scene.input_mask);
    put("input_mask", "input_mask.png");
  }
  if (scene.gt_boundary.labels.width > 0) {
    write_boundary(dir / "gt_boundary.png", scene.gt_boundary);
    put("gt_boundary", "gt_boundary.png");
  }
  if (scene.input_boundary.labels.width > 0) {
    write_boundary(dir / "input_boundary.png", scene.input_boundary);
    put("input_boundary", "input_boundary.png");
  }

  json manifest{{"id", scene.id},
                {"seed", scene.seed},
                {"intrinsics", intrinsics_to_json(scene.intrinsics)},
                {"files", files}};
  if (scene.spec) manifest["spec"] = spec_to_json_obj(*scene.spec);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Scene load_scene(const fs::path& dir) {
  json manifest = parse_json_file(dir / "manifest.json");
  Scene scene;
  try {
    scene.id = manifest.at("id").get<std::string>();
    scene.seed = manifest.at("seed").get<uint64_t>();
    scene.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
    if (manifest.contains("spec"))
      scene.spec = spec_from_json_obj(manifest.at("spec"));
    const json& files = manifest.at("files");
    auto has = [&](const char* key) { return files.contains(key); };
    auto path = [&](const char* key) {
      return dir / files.at(key).get<std::string>();
    };
    if (has("gt_depth")) scene.gt_depth = read_depth_png(path("gt_depth"));
    if (has("raw_depth")) scene.raw_depth = read_depth_png(path("raw_depth"));
    if (has("gt_normals")) scene.gt_normals = read_pfm3(path("gt_normals"));
    if (has("input_normals"))
      scene.input_normals = read_pfm3(path("input_normals"));
    if (has("gt_mask")) scene.gt_mask = read_mask_png(path("gt_mask"));
    if (has("input_mask")) scene.input_mask = read_mask_png(path("input_mask"));
    if (has("gt_boundary")) scene.gt_boundary = read_boundary(path("gt_boundary"));
    if (has("input_boundary"))
      scene.input_boundary = read_boundary(path("input_boundary"));
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/manifest.json: " + e.what());
  }
  scene.check_dimensions();
  return scene;
}

}  // namespace glassdepth
