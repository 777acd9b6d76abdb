#include "rsrwkv/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rsrwkv::io {

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  is.seekg(0, std::ios::end);
  const auto size = is.tellg();
  is.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  is.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!is) throw IoError("short read on " + path);
  return bytes;
}

void write_binary_file(const std::string& path, const void* data,
                       std::size_t size) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!os) throw IoError("write failed on " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  write_binary_file(path, text.data(), text.size());
}

namespace {

// Reads the next PPM header token, skipping whitespace and '#' comments.
std::string next_ppm_token(std::istream& is) {
  std::string tok;
  int c = is.get();
  while (is) {
    if (c == '#') {
      while (is && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  while (is && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = is.get();
  }
  if (tok.empty()) throw IoError("ppm: truncated header");
  return tok;
}

std::size_t parse_ppm_int(const std::string& tok) {
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw IoError("ppm: malformed header field '" + tok + "'");
  return static_cast<std::size_t>(std::stoull(tok));
}

template <typename T>
Tensor<T> read_ppm_impl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  if (next_ppm_token(is) != "P6") throw IoError("ppm: not a binary P6 file");
  const std::size_t width = parse_ppm_int(next_ppm_token(is));
  const std::size_t height = parse_ppm_int(next_ppm_token(is));
  const std::size_t maxval = parse_ppm_int(next_ppm_token(is));
  if (width == 0 || height == 0) throw IoError("ppm: zero extent");
  if (maxval == 0 || maxval > 255) throw IoError("ppm: unsupported maxval");
  // the single whitespace after maxval was consumed by the tokenizer
  std::vector<std::uint8_t> raw(width * height * 3);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (!is) throw IoError("ppm: truncated pixel data");
  Tensor<T> img({3, height, width});
  const T scale = T(1) / static_cast<T>(maxval);
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        img.data[(c * height + i) * width + j] =
            static_cast<T>(raw[(i * width + j) * 3 + c]) * scale;
  return img;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"patch_size", cfg.patch_size},
                        {"embed_dim", cfg.embed_dim},
                        {"stage_depths", cfg.stage_depths},
                        {"hidden_rate", cfg.hidden_rate},
                        {"directions", cfg.directions},
                        {"num_classes", cfg.num_classes},
                        {"eca_kernel", cfg.eca_kernel}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.patch_size = j.at("patch_size").get<std::size_t>();
  cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
  const auto depths = j.at("stage_depths").get<std::vector<std::size_t>>();
  if (depths.size() != 4) throw IoError("checkpoint: stage_depths must have 4 entries");
  for (std::size_t i = 0; i < 4; ++i) cfg.stage_depths[i] = depths[i];
  cfg.hidden_rate = j.at("hidden_rate").get<std::size_t>();
  cfg.directions = j.at("directions").get<int>();
  cfg.num_classes = j.at("num_classes").get<std::size_t>();
  cfg.eca_kernel = j.at("eca_kernel").get<std::size_t>();
  return cfg;
}

}  // namespace

template <>
Tensor<float> read_ppm<float>(const std::string& path) {
  return read_ppm_impl<float>(path);
}
template <>
Tensor<double> read_ppm<double>(const std::string& path) {
  return read_ppm_impl<double>(path);
}

std::string checkpoint_manifest_json(
    const ModelConfig& cfg, Dtype dtype, const std::string& blob_name,
    const std::vector<std::pair<std::string, std::vector<std::size_t>>>& entries,
    const std::vector<std::size_t>& offsets) {
  nlohmann::json j;
  j["format"] = "rsrwkv.checkpoint/1";
  j["dtype"] = dtype_name(dtype);
  j["blob"] = blob_name;
  j["config"] = config_to_json(cfg);
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < entries.size(); ++i)
    params.push_back(nlohmann::json{{"name", entries[i].first},
                                    {"shape", entries[i].second},
                                    {"offset", offsets[i]}});
  j["params"] = std::move(params);
  return j.dump(2) + "\n";
}

CheckpointManifest parse_checkpoint_manifest(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad manifest json: ") + e.what());
  }
  if (j.value("format", "") != "rsrwkv.checkpoint/1")
    throw IoError("checkpoint: unknown manifest format");
  CheckpointManifest m;
  m.config = config_from_json(j.at("config"));
  const std::string dt = j.at("dtype").get<std::string>();
  if (dt == "f32")
    m.dtype = Dtype::F32;
  else if (dt == "f64")
    m.dtype = Dtype::F64;
  else
    throw IoError("checkpoint: unknown dtype " + dt);
  m.blob_name = j.at("blob").get<std::string>();
  for (const auto& p : j.at("params")) {
    ManifestEntry e;
    e.name = p.at("name").get<std::string>();
    e.shape = p.at("shape").get<std::vector<std::size_t>>();
    e.offset = p.at("offset").get<std::size_t>();
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace rsrwkv::io
