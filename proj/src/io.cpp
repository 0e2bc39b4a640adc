#include "mudikit/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include "json.hpp"

#include "mudikit/error.hpp"

namespace mudikit {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::io, "write failed for '" + path.string() + "'");
}

void write_text_file(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Little-endian byte streams

namespace {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, std::string what) : in_(in), what_(std::move(what)) {}

  bool has(std::size_t n) const { return in_.size() - pos_ >= n; }
  void need(std::size_t n) const {
    require(has(n), ErrorCode::truncated, what_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::string what_;
};

void expect_end(const ByteReader& r, const std::string& what) {
  require(r.remaining() == 0, ErrorCode::format,
          what + ": " + std::to_string(r.remaining()) + " trailing bytes");
}

}  // namespace

// ---------------------------------------------------------------------------
// Embeddings

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  ByteWriter w;
  w.bytes("MDIE");
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(set.subject_id().size()));
  w.bytes(set.subject_id());
  w.u32(static_cast<std::uint32_t>(set.count()));
  w.u32(static_cast<std::uint32_t>(set.dim()));
  for (double v : set.data()) w.f32(static_cast<float>(v));
  return w.take();
}

EmbeddingReadResult decode_embeddings(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "embedding file");
  require(r.has(4), ErrorCode::truncated, "embedding file: shorter than its magic");
  require(r.bytes(4) == "MDIE", ErrorCode::bad_magic, "embedding file: bad magic");
  const auto version = r.u32();
  require(version == kEmbeddingVersion, ErrorCode::version_mismatch,
          "embedding file: unsupported version " + std::to_string(version));
  const auto id = r.bytes(r.u32());
  const std::uint64_t count = r.u32(), dim = r.u32();
  require(count >= 1 && dim >= 1, ErrorCode::format, "embedding file: empty payload");
  require(r.remaining() >= count * dim * 4, ErrorCode::truncated,
          "embedding file: payload shorter than count x dim");
  std::vector<double> data(count * dim);
  for (double& v : data) {
    const float f = r.f32();
    require(std::isfinite(f), ErrorCode::non_finite, "embedding file: non-finite value");
    v = f;
  }
  expect_end(r, "embedding file");

  EmbeddingReadResult result;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::span<double> row(data.data() + i * dim, dim);
    double norm2 = 0.0;
    for (double v : row) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    require(norm > 0.0, ErrorCode::format, "embedding file: zero vector " + std::to_string(i));
    if (std::abs(norm - 1.0) <= 1e-6) continue;
    if (std::abs(norm - 1.0) > 1e-3)
      result.warnings.push_back("subject '" + id + "': vector " + std::to_string(i) +
                                " renormalized from norm " + std::to_string(norm));
    for (double& v : row) v /= norm;
  }
  result.set = EmbeddingSet(id, dim, std::move(data));
  return result;
}

void write_embeddings(const EmbeddingSet& set, const fs::path& path) {
  write_file_bytes(path, encode_embeddings(set));
}

EmbeddingReadResult read_embeddings(const fs::path& path) {
  return decode_embeddings(read_file_bytes(path));
}

std::vector<EmbeddingSet> read_embedding_dir(const fs::path& dir, std::vector<std::string>* warnings) {
  require(fs::is_directory(dir), ErrorCode::io, "not a directory: '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".mdie") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<EmbeddingSet> sets;
  for (const auto& f : files) {
    auto r = read_embeddings(f);
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    sets.push_back(std::move(r.set));
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Latents

std::vector<std::uint8_t> encode_latent(const LatentGrid& latent) {
  ByteWriter w;
  w.bytes("MDIL");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(latent.height()));
  w.u32(static_cast<std::uint32_t>(latent.width()));
  w.u32(static_cast<std::uint32_t>(latent.channels()));
  for (double v : latent.values()) w.f64(v);
  return w.take();
}

LatentGrid decode_latent(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "latent file");
  require(r.has(4), ErrorCode::truncated, "latent file: shorter than its magic");
  require(r.bytes(4) == "MDIL", ErrorCode::bad_magic, "latent file: bad magic");
  const auto version = r.u32();
  require(version == 1, ErrorCode::version_mismatch,
          "latent file: unsupported version " + std::to_string(version));
  const std::uint64_t h = r.u32(), w = r.u32(), c = r.u32();
  require(h >= 1 && w >= 1 && c >= 1, ErrorCode::format, "latent file: empty grid");
  require(r.remaining() >= h * w * c * 8, ErrorCode::truncated, "latent file: payload truncated");
  std::vector<double> data(h * w * c);
  for (double& v : data) {
    v = r.f64();
    require(std::isfinite(v), ErrorCode::non_finite, "latent file: non-finite value");
  }
  expect_end(r, "latent file");
  return LatentGrid(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(data));
}

void write_latent(const LatentGrid& latent, const fs::path& path) {
  write_file_bytes(path, encode_latent(latent));
}

LatentGrid read_latent(const fs::path& path) { return decode_latent(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// PNG

namespace {

struct RawPng {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

RawPng read_png(const fs::path& path, bool require_gray) {
  const auto bytes = read_file_bytes(path);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  require(png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) != 0,
          ErrorCode::format, "'" + path.string() + "': not a readable PNG (" + image.message + ")");
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (require_gray && color) {
    png_image_free(&image);
    fail(ErrorCode::format, "'" + path.string() + "': mask PNG must be single-channel");
  }
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  RawPng raw{static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1, {}};
  raw.pixels.resize(PNG_IMAGE_SIZE(image));
  const int ok = png_image_finish_read(&image, nullptr, raw.pixels.data(), 0, nullptr);
  require(ok != 0, ErrorCode::format, "'" + path.string() + "': PNG decode failed");
  return raw;
}

void write_png(const fs::path& path, int height, int width, int channels,
               std::span<const std::uint8_t> pixels) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  require(png_image_write_get_memory_size(image, size, 0, pixels.data(), 0, nullptr) != 0,
          ErrorCode::io, "PNG size query failed for '" + path.string() + "'");
  std::vector<std::uint8_t> out(size);
  require(png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr) != 0,
          ErrorCode::io, "PNG encode failed for '" + path.string() + "'");
  out.resize(size);
  write_file_bytes(path, out);
}

}  // namespace

Image load_image(const fs::path& path) {
  const RawPng raw = read_png(path, false);
  std::vector<float> data(raw.pixels.size());
  std::transform(raw.pixels.begin(), raw.pixels.end(), data.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return Image(raw.height, raw.width, raw.channels, std::move(data));
}

void save_image(const Image& image, const fs::path& path) {
  std::vector<std::uint8_t> pixels(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), pixels.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  write_png(path, image.height(), image.width(), image.channels(), pixels);
}

fs::path mask_sidecar_path(const fs::path& png_path) {
  fs::path p = png_path;
  return p.replace_extension(".json");
}

void save_mask(const Mask& mask, const MaskMetadata& metadata, const fs::path& path) {
  std::vector<std::uint8_t> pixels(mask.pixels().size());
  std::transform(mask.pixels().begin(), mask.pixels().end(), pixels.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  write_png(path, mask.height(), mask.width(), 1, pixels);
  const json sidecar = {{"subject", metadata.subject}, {"class", metadata.class_text},
                        {"source", metadata.source}};
  write_text_file(mask_sidecar_path(path), sidecar.dump(2) + "\n");
}

LoadedMask load_mask(const fs::path& path) {
  const fs::path sidecar = mask_sidecar_path(path);
  require(fs::exists(sidecar), ErrorCode::metadata,
          "mask '" + path.string() + "' has no sidecar '" + sidecar.string() + "'");
  const RawPng raw = read_png(path, true);
  std::vector<std::uint8_t> data(raw.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto v = raw.pixels[i];
    require(v == 0 || v == 255, ErrorCode::format,
            "mask '" + path.string() + "' holds value " + std::to_string(v) + " (only 0/255 allowed)");
    data[i] = v ? 1 : 0;
  }
  MaskMetadata meta;
  try {
    const json j = json::parse(read_text_file(sidecar));
    meta.subject = j.at("subject").get<std::string>();
    meta.class_text = j.at("class").get<std::string>();
    meta.source = j.at("source").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::metadata, "mask sidecar '" + sidecar.string() + "': " + e.what());
  }
  return LoadedMask{Mask(raw.height, raw.width, std::move(data)), std::move(meta)};
}

// ---------------------------------------------------------------------------
// Subject directories

void save_subject(const SegmentedSubject& subject, const fs::path& dir, const std::string& source) {
  fs::create_directories(dir);
  save_image(subject.image, dir / (subject.identifier + ".png"));
  save_mask(subject.mask, {subject.identifier, subject.class_text, source},
            dir / (subject.identifier + ".mask.png"));
}

std::vector<SegmentedSubject> load_subjects(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::io, "not a directory: '" + dir.string() + "'");
  std::vector<fs::path> masks;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 9 && name.ends_with(".mask.png")) masks.push_back(entry.path());
  }
  std::sort(masks.begin(), masks.end());
  std::vector<SegmentedSubject> subjects;
  for (const auto& mask_path : masks) {
    const std::string name = mask_path.filename().string();
    const std::string stem = name.substr(0, name.size() - 9);
    auto loaded = load_mask(mask_path);
    SegmentedSubject s{load_image(dir / (stem + ".png")), std::move(loaded.mask),
                       loaded.metadata.subject, loaded.metadata.class_text};
    s.validate();
    subjects.push_back(std::move(s));
  }
  require(!subjects.empty(), ErrorCode::validation, "no subjects found in '" + dir.string() + "'");
  return subjects;
}

// ---------------------------------------------------------------------------
// Layout JSON

std::string layout_to_json(const LlmLayout& layout) {
  json boxes = json::array();
  for (const auto& b : layout.boxes)
    boxes.push_back({{"subject", b.subject_index}, {"x", b.x}, {"y", b.y}, {"w", b.width}, {"h", b.height}});
  const json doc = {{"canvas", {layout.canvas_height, layout.canvas_width}}, {"boxes", boxes}};
  return doc.dump(2) + "\n";
}

LlmLayout parse_layout_json(const std::string& text, std::span<const std::string> identifiers) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, std::string("layout JSON: ") + e.what());
  }
  LlmLayout layout;
  try {
    const auto& canvas = doc.at("canvas");
    require(canvas.is_array() && canvas.size() == 2, ErrorCode::format,
            "layout JSON: canvas must be [H, W]");
    layout.canvas_height = canvas[0].get<int>();
    layout.canvas_width = canvas[1].get<int>();
    const auto& boxes = doc.at("boxes");
    require(boxes.is_array(), ErrorCode::format, "layout JSON: boxes must be an array");
    for (const auto& b : boxes) {
      LayoutBox box{0, b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(),
                    b.at("h").get<int>()};
      const auto& subject = b.at("subject");
      if (subject.is_number_integer()) {
        box.subject_index = subject.get<int>();
      } else if (subject.is_string()) {
        const auto name = subject.get<std::string>();
        const auto it = std::find(identifiers.begin(), identifiers.end(), name);
        require(it != identifiers.end(), ErrorCode::validation,
                "layout JSON: unknown subject identifier '" + name + "'");
        box.subject_index = static_cast<int>(it - identifiers.begin());
      } else {
        fail(ErrorCode::format, "layout JSON: subject must be an index or identifier");
      }
      layout.boxes.push_back(box);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("layout JSON: ") + e.what());
  }
  return layout;
}

LlmLayout read_layout_json(const fs::path& path, std::span<const std::string> identifiers) {
  return parse_layout_json(read_text_file(path), identifiers);
}

void write_layout_json(const LlmLayout& layout, const fs::path& path) {
  write_text_file(path, layout_to_json(layout));
}

// ---------------------------------------------------------------------------
// Detections JSON

std::string detections_to_json(const DetectionRecord& record) {
  json boxes = json::array();
  for (const auto& b : record.boxes)
    boxes.push_back({{"label", b.label}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1},
                     {"confidence", b.confidence}});
  const json doc = {{"image_id", record.image_id}, {"boxes", boxes}};
  return doc.dump(2) + "\n";
}

DetectionRecord parse_detections_json(const std::string& text) {
  DetectionRecord record;
  try {
    const json doc = json::parse(text);
    record.image_id = doc.at("image_id").get<std::string>();
    for (const auto& b : doc.at("boxes"))
      record.boxes.push_back(DetectionBox{b.at("label").get<std::string>(), b.at("x0").get<int>(),
                                          b.at("y0").get<int>(), b.at("x1").get<int>(),
                                          b.at("y1").get<int>(), b.at("confidence").get<double>()});
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("detections JSON: ") + e.what());
  }
  record.validate();
  return record;
}

DetectionRecord read_detections(const fs::path& path) {
  return parse_detections_json(read_text_file(path));
}

void write_detections(const DetectionRecord& record, const fs::path& path) {
  write_text_file(path, detections_to_json(record));
}

// ---------------------------------------------------------------------------
// Composite bundles

void write_bundle(const CompositeSample& sample, const fs::path& dir) {
  fs::create_directories(dir);
  save_image(sample.image, dir / "image.png");
  std::string joined;
  for (const auto& id : sample.subject_identifiers) joined += (joined.empty() ? "" : ",") + id;
  save_mask(sample.mask, {joined, "composite", "segmix"}, dir / "mask.png");
  json boxes = json::array();
  for (std::size_t i = 0; i < sample.layout.size(); ++i) {
    const auto& b = sample.layout[i];
    boxes.push_back({{"subject", sample.subject_identifiers.at(i)}, {"x", b.x}, {"y", b.y},
                     {"w", b.width}, {"h", b.height}});
  }
  const json layout = {{"canvas", {sample.image.height(), sample.image.width()}}, {"boxes", boxes}};
  write_text_file(dir / "layout.json", layout.dump(2) + "\n");
  write_text_file(dir / "prompt.txt", sample.prompt + "\n");
}

CompositeSample read_bundle(const fs::path& dir) {
  CompositeSample sample;
  sample.image = load_image(dir / "image.png");
  sample.mask = load_mask(dir / "mask.png").mask;
  try {
    const json layout = json::parse(read_text_file(dir / "layout.json"));
    int index = 0;
    for (const auto& b : layout.at("boxes")) {
      sample.subject_identifiers.push_back(b.at("subject").get<std::string>());
      sample.layout.push_back(LayoutBox{index++, b.at("x").get<int>(), b.at("y").get<int>(),
                                        b.at("w").get<int>(), b.at("h").get<int>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("bundle layout.json: ") + e.what());
  }
  std::string prompt = read_text_file(dir / "prompt.txt");
  if (!prompt.empty() && prompt.back() == '\n') prompt.pop_back();
  sample.prompt = std::move(prompt);
  return sample;
}

}  // namespace mudikit
