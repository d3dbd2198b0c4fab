#include "noda/model_io.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "noda/errors.hpp"

namespace noda {

namespace {

constexpr char kMagic[4] = {'N', 'O', 'D', 'M'};
constexpr uint8_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Cursor {
  const std::string& bytes;
  const std::string& name;
  size_t pos = 0;

  const uint8_t* take(size_t n) {
    if (pos + n > bytes.size())
      throw FormatError(name + ": truncated at offset " + std::to_string(pos));
    const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes.data()) + pos;
    pos += n;
    return p;
  }
  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    const auto* b = take(2);
    return static_cast<uint16_t>(b[0] | b[1] << 8);
  }
  uint32_t u32() {
    const auto* b = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const auto* b = take(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

NamedBlob scalar_blob(const std::string& name, double v) { return {name, {}, {v}}; }

}  // namespace

void write_blob_file(const std::filesystem::path& path, const std::vector<NamedBlob>& blobs) {
  std::string out;
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<uint32_t>(blobs.size()));
  for (const auto& b : blobs) {
    put_u16(out, static_cast<uint16_t>(b.name.size()));
    out.append(b.name);
    put_u32(out, static_cast<uint32_t>(b.dims.size()));
    size_t count = 1;
    for (int d : b.dims) {
      put_u32(out, static_cast<uint32_t>(d));
      count *= static_cast<size_t>(d);
    }
    if (b.payload.size() != count)
      throw std::invalid_argument("write_blob_file: blob '" + b.name + "' payload size " +
                                  std::to_string(b.payload.size()) + " does not match dims");
    for (double v : b.payload) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

std::vector<NamedBlob> read_blob_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Cursor c{bytes, path.string()};
  char magic[4];
  std::memcpy(magic, c.take(4), 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic at offset 0");
  const uint8_t version = c.u8();
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  const uint32_t count = c.u32();
  std::vector<NamedBlob> blobs;
  blobs.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedBlob b;
    const uint16_t name_len = c.u16();
    b.name.assign(reinterpret_cast<const char*>(c.take(name_len)), name_len);
    const uint32_t rank = c.u32();
    size_t numel = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      b.dims.push_back(static_cast<int>(c.u32()));
      numel *= static_cast<size_t>(b.dims.back());
    }
    b.payload.resize(numel);
    for (auto& v : b.payload) v = c.f64();
    blobs.push_back(std::move(b));
  }
  if (c.pos != bytes.size())
    throw FormatError(path.string() + ": " + std::to_string(bytes.size() - c.pos) +
                      " trailing bytes");
  return blobs;
}

void save_model(const std::filesystem::path& path, const NodaParams& params) {
  std::vector<NamedBlob> blobs;
  const auto& pr = params.predictor;
  blobs.push_back(scalar_blob("meta.width", pr.width));
  blobs.push_back(scalar_blob("meta.kmax", pr.kmax));
  blobs.push_back(scalar_blob("meta.spatial_rank", pr.spatial_rank));
  blobs.push_back(scalar_blob("meta.coord_channels", pr.coord_channels ? 1.0 : 0.0));
  blobs.push_back(scalar_blob("meta.d", params.enet.d));
  blobs.push_back(scalar_blob("meta.e_hidden", params.enet.hidden));
  blobs.push_back(scalar_blob("meta.p", params.enet.p));
  blobs.push_back(scalar_blob("meta.cstar_learnable", params.gain.cstar_learnable ? 1.0 : 0.0));
  for_each_param(const_cast<NodaParams&>(params), [&](const std::string& name, Tensor& t) {
    blobs.push_back({name, t.shape, t.data});
  });
  write_blob_file(path, blobs);
}

NodaParams load_model(const std::filesystem::path& path) {
  auto blobs = read_blob_file(path);
  std::map<std::string, const NamedBlob*> by_name;
  for (const auto& b : blobs) by_name[b.name] = &b;
  auto meta = [&](const std::string& name) -> double {
    auto it = by_name.find("meta." + name);
    if (it == by_name.end() || it->second->payload.size() != 1)
      throw FormatError(path.string() + ": missing meta." + name);
    return it->second->payload[0];
  };
  NodaParams params = init_noda(
      static_cast<int>(meta("width")), static_cast<int>(meta("kmax")),
      static_cast<int>(meta("spatial_rank")), meta("coord_channels") != 0.0,
      static_cast<int>(meta("d")), static_cast<int>(meta("e_hidden")),
      static_cast<int>(meta("p")), meta("cstar_learnable") != 0.0, /*seed=*/0);
  for_each_param(params, [&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError(path.string() + ": missing parameter " + name);
    const NamedBlob& b = *it->second;
    if (b.dims != t.shape)
      throw FormatError(path.string() + ": parameter " + name + " has dims " +
                        shape_string(b.dims) + ", expected " + shape_string(t.shape));
    t.data = b.payload;
  });
  return params;
}

}  // namespace noda
