#include "pixcue/io.hpp"

#include <zlib.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pixcue {
namespace {

using nlohmann::json;

void append_u32le(std::string& buf, uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
  buf.push_back(static_cast<char>((v >> 16) & 0xFF));
  buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_f32le(std::string& buf, double x) {
  append_u32le(buf, std::bit_cast<uint32_t>(static_cast<float>(x)));
}

struct Reader {
  std::string data;
  size_t pos = 0;
  std::string name;

  void need(size_t n, const std::string& what) {
    if (pos + n > data.size())
      throw FormatError(name + ": truncated file, missing " + what);
  }
  uint32_t u32(const std::string& what) {
    need(4, what);
    uint32_t v = static_cast<uint8_t>(data[pos]) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(data[pos + 1])) << 8) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(data[pos + 2])) << 16) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(data[pos + 3])) << 24);
    pos += 4;
    return v;
  }
  uint8_t u8(const std::string& what) {
    need(1, what);
    return static_cast<uint8_t>(data[pos++]);
  }
  double f32(const std::string& what) {
    return static_cast<double>(std::bit_cast<float>(u32(what)));
  }
  std::string bytes(size_t n, const std::string& what) {
    need(n, what);
    std::string out = data.substr(pos, n);
    pos += n;
    return out;
  }
};

Reader read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r;
  r.data = ss.str();
  r.name = path.filename().string();
  return r;
}

void check_magic(Reader& r, const char* magic) {
  std::string m = r.bytes(4, "magic bytes");
  if (m != magic)
    throw FormatError(r.name + ": bad magic bytes (expected '" + magic + "')");
}

std::pair<int, int> read_dims(Reader& r) {
  uint32_t version = r.u32("version");
  if (version != 1)
    throw FormatError(r.name + ": unsupported version " + std::to_string(version));
  uint32_t rows = r.u32("rows");
  uint32_t cols = r.u32("cols");
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
    throw FormatError(r.name + ": implausible dimensions");
  return {static_cast<int>(rows), static_cast<int>(cols)};
}

std::string image_header(uint32_t rows, uint32_t cols, uint8_t dtype) {
  std::string buf = "PIXI";
  append_u32le(buf, 1);
  append_u32le(buf, rows);
  append_u32le(buf, cols);
  buf.push_back(static_cast<char>(dtype));
  return buf;
}

}  // namespace

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
  static std::atomic<uint64_t> counter{0};
  std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::filesystem::path tmp =
      path.string() + ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void save_image(const RealImage& img, const std::filesystem::path& path) {
  std::string buf = image_header(static_cast<uint32_t>(img.rows),
                                 static_cast<uint32_t>(img.cols), 0);
  for (double x : img.v) append_f32le(buf, x);
  atomic_write_file(path, buf);
}

void save_image(const ComplexImage& img, const std::filesystem::path& path) {
  std::string buf = image_header(static_cast<uint32_t>(img.rows),
                                 static_cast<uint32_t>(img.cols), 1);
  for (const cdouble& z : img.v) {
    append_f32le(buf, z.real());
    append_f32le(buf, z.imag());
  }
  atomic_write_file(path, buf);
}

void save_image(const KSpaceGrid& k, const std::filesystem::path& path) {
  ComplexImage img;
  img.rows = k.rows;
  img.cols = k.cols;
  img.v = k.v;
  save_image(img, path);
}

LoadedImage load_image(const std::filesystem::path& path) {
  Reader r = read_file(path);
  check_magic(r, "PIXI");
  auto [rows, cols] = read_dims(r);
  uint8_t dtype = r.u8("dtype");
  size_t n = static_cast<size_t>(rows) * cols;
  if (dtype == 0) {
    RealImage img(rows, cols);
    for (size_t i = 0; i < n; ++i) img.v[i] = r.f32("pixel data");
    return img;
  }
  if (dtype == 1) {
    ComplexImage img(rows, cols);
    for (size_t i = 0; i < n; ++i) {
      double re = r.f32("pixel data");
      double im = r.f32("pixel data");
      img.v[i] = cdouble{re, im};
    }
    return img;
  }
  throw FormatError(r.name + ": unknown dtype " + std::to_string(dtype));
}

RealImage load_real_image(const std::filesystem::path& path) {
  LoadedImage img = load_image(path);
  if (auto* real = std::get_if<RealImage>(&img)) return std::move(*real);
  throw FormatError(path.filename().string() + ": expected a real-valued image");
}

ComplexImage load_complex_image(const std::filesystem::path& path) {
  LoadedImage img = load_image(path);
  if (auto* cplx = std::get_if<ComplexImage>(&img)) return std::move(*cplx);
  throw FormatError(path.filename().string() + ": expected a complex-valued image");
}

void save_mask(const SamplingMask& m, const std::filesystem::path& path) {
  validate_mask(m);
  std::ostringstream out;
  out << m.n_lines << "\n";
  for (size_t i = 0; i < m.lines.size(); ++i) {
    if (i) out << ",";
    out << m.lines[i];
  }
  out << "\n";
  atomic_write_file(path, out.str());
}

SamplingMask load_mask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  SamplingMask m;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("mask file: missing grid size line");
  try {
    m.n_lines = std::stoi(line);
  } catch (const std::exception&) {
    throw FormatError("mask file: unparseable grid size '" + line + "'");
  }
  if (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) {
        try {
          m.lines.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          throw FormatError("mask file: unparseable line index '" + tok + "'");
        }
      }
  }
  validate_mask(m);
  return m;
}

void save_volume(const ProbabilityVolume& p, const std::filesystem::path& path) {
  std::string buf = "PIXP";
  append_u32le(buf, 1);
  append_u32le(buf, static_cast<uint32_t>(p.rows));
  append_u32le(buf, static_cast<uint32_t>(p.cols));
  append_u32le(buf, static_cast<uint32_t>(p.d));
  for (double x : p.p) append_f32le(buf, x);
  atomic_write_file(path, buf);
}

ProbabilityVolume load_volume(const std::filesystem::path& path) {
  Reader r = read_file(path);
  check_magic(r, "PIXP");
  auto [rows, cols] = read_dims(r);
  uint32_t d = r.u32("class count");
  if (d < 2 || d > (1u << 16)) throw FormatError(r.name + ": implausible class count");
  ProbabilityVolume p(rows, cols, static_cast<int>(d));
  for (size_t i = 0; i < p.p.size(); ++i) p.p[i] = r.f32("probability data");
  return p;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  NetParams params = c.params;  // param_tensors needs mutable access
  auto tensors = param_tensors(params);

  json header;
  header["format"] = "pxcu";
  header["arch"] = {{"iterations", c.params.arch.iterations},
                    {"hidden_channels", c.params.arch.hidden_channels},
                    {"classes", c.params.arch.classes}};
  json cfg;
  cfg["learning_rate"] = c.config.learning_rate;
  cfg["epochs"] = c.config.epochs;
  cfg["batch_size"] = c.config.batch_size;
  cfg["seed"] = c.config.seed;
  cfg["dropout_fraction"] = c.config.dropout_fraction;
  cfg["validation_fraction"] = c.config.validation_fraction;
  cfg["n_bits"] = c.config.n_bits;
  if (!c.config.mask_spec_json.empty()) {
    json parsed = json::parse(c.config.mask_spec_json, nullptr, false);
    cfg["mask_spec"] = parsed.is_discarded() ? json(c.config.mask_spec_json) : parsed;
  }
  header["config"] = cfg;
  header["best_val_loss"] = c.best_val_loss;
  header["best_epoch"] = c.best_epoch;
  header["train_loss"] = c.train_loss_history;
  header["val_loss"] = c.val_loss_history;
  header["train_image_ids"] = c.train_image_ids;
  header["val_image_ids"] = c.val_image_ids;
  header["dtype"] = "f32";
  json tensor_table = json::array();
  for (const TensorRef& t : tensors)
    tensor_table.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = tensor_table;

  std::string header_str = header.dump();
  std::string buf = "PXCU";
  append_u32le(buf, 1);
  append_u32le(buf, static_cast<uint32_t>(header_str.size()));
  buf += header_str;
  for (const TensorRef& t : tensors)
    for (double x : *t.data) append_f32le(buf, x);
  atomic_write_file(path, buf);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r = read_file(path);
  check_magic(r, "PXCU");
  uint32_t version = r.u32("version");
  if (version != 1)
    throw FormatError(r.name + ": unsupported version " + std::to_string(version));
  uint32_t header_len = r.u32("header length");
  std::string header_str = r.bytes(header_len, "JSON header");
  json header = json::parse(header_str, nullptr, false);
  if (header.is_discarded()) throw FormatError(r.name + ": unparseable JSON header");

  Checkpoint c;
  try {
    NetArch arch;
    arch.iterations = header.at("arch").at("iterations").get<int>();
    arch.hidden_channels = header.at("arch").at("hidden_channels").get<int>();
    arch.classes = header.at("arch").at("classes").get<int>();
    c.params = make_params(arch);

    const json& cfg = header.at("config");
    c.config.learning_rate = cfg.at("learning_rate").get<double>();
    c.config.epochs = cfg.at("epochs").get<int>();
    c.config.batch_size = cfg.at("batch_size").get<int>();
    c.config.seed = cfg.at("seed").get<uint64_t>();
    c.config.dropout_fraction = cfg.at("dropout_fraction").get<double>();
    c.config.validation_fraction = cfg.at("validation_fraction").get<double>();
    c.config.n_bits = cfg.at("n_bits").get<int>();
    c.config.arch = arch;
    if (cfg.contains("mask_spec")) c.config.mask_spec_json = cfg["mask_spec"].dump();

    c.best_val_loss = header.at("best_val_loss").get<double>();
    c.best_epoch = header.at("best_epoch").get<int>();
    c.train_loss_history = header.at("train_loss").get<std::vector<double>>();
    c.val_loss_history = header.at("val_loss").get<std::vector<double>>();
    c.train_image_ids = header.at("train_image_ids").get<std::vector<int>>();
    c.val_image_ids = header.at("val_image_ids").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw FormatError(r.name + ": malformed header: " + e.what());
  }

  auto tensors = param_tensors(c.params);
  const json& table = header.at("tensors");
  if (table.size() != tensors.size())
    throw FormatError(r.name + ": tensor table size mismatch");
  for (size_t i = 0; i < tensors.size(); ++i) {
    std::string name = table[i].at("name").get<std::string>();
    if (name != tensors[i].name)
      throw FormatError(r.name + ": unexpected tensor '" + name + "' (expected '" +
                        tensors[i].name + "')");
    std::vector<int> shape = table[i].at("shape").get<std::vector<int>>();
    if (shape != tensors[i].shape)
      throw FormatError(r.name + ": shape mismatch for tensor '" + name + "'");
    for (size_t j = 0; j < tensors[i].data->size(); ++j)
      (*tensors[i].data)[j] = r.f32("tensor '" + name + "'");
  }
  validate_params(c.params);
  return c;
}

void save_pgm(const RealImage& img, const std::filesystem::path& path) {
  require(img.size() > 0, "pgm: empty image");
  double lo = img.v[0], hi = img.v[0];
  for (double x : img.v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ostringstream out;
  out << "P2\n" << img.cols << " " << img.rows << "\n255\n";
  int per_line = 0;
  for (size_t i = 0; i < img.size(); ++i) {
    int v = static_cast<int>(std::lround((img.v[i] - lo) * scale));
    out << v;
    if (++per_line == 16 || i + 1 == img.size()) {
      out << "\n";
      per_line = 0;
    } else {
      out << " ";
    }
  }
  atomic_write_file(path, out.str());
}

uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for checksum");
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf),
                static_cast<uInt>(in.gcount()));
    if (in.eof()) break;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace pixcue
