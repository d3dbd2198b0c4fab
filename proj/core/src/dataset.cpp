#include "noda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "noda/random.hpp"

namespace noda {

namespace {

constexpr char kTrajMagic[4] = {'N', 'O', 'D', 'A'};
constexpr uint8_t kTrajVersion = 1;
constexpr uint8_t kDtypeF64 = 0;

// All on-disk integers and doubles are little-endian, assembled explicitly.
void put_bytes(std::string& out, const void* p, size_t n) {
  out.append(reinterpret_cast<const char*>(p), n);
}
void put_u8(std::string& out, uint8_t v) { put_bytes(out, &v, 1); }
void put_u16(std::string& out, uint16_t v) {
  const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  put_bytes(out, b, 2);
}
void put_u32(std::string& out, uint32_t v) {
  const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  put_bytes(out, b, 4);
}
void put_u64(std::string& out, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  put_bytes(out, b, 8);
}
void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    const auto* b = take(2);
    return static_cast<uint16_t>(b[0]) | static_cast<uint16_t>(b[1]) << 8;
  }
  uint32_t u32() {
    const auto* b = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    const auto* b = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void raw(void* dst, size_t n) { std::memcpy(dst, take(n), n); }
  size_t offset() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size())
      throw FormatError(name_ + ": " + std::to_string(bytes_.size() - pos_) +
                        " trailing bytes at offset " + std::to_string(pos_));
  }

 private:
  const uint8_t* take(size_t n) {
    if (pos_ + n > bytes_.size())
      throw FormatError(name_ + ": truncated at offset " + std::to_string(pos_) + " (need " +
                        std::to_string(n) + " bytes, have " +
                        std::to_string(bytes_.size() - pos_) + ")");
    const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes_.data()) + pos_;
    pos_ += n;
    return p;
  }

  std::string bytes_;
  std::string name_;
  size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

// Header shared by trajectory and observation containers. ny/length_y are
// present only for 2-D payloads, which puts the 1-D header at exactly 40 bytes.
std::string encode_header(Equation eq, int ndims, int nx, int ny, uint32_t n_frames, double h,
                          double length_x, double length_y, uint64_t seed) {
  std::string out;
  put_bytes(out, kTrajMagic, 4);
  put_u8(out, kTrajVersion);
  put_u8(out, static_cast<uint8_t>(eq));
  put_u8(out, static_cast<uint8_t>(ndims));
  put_u8(out, kDtypeF64);
  put_u32(out, static_cast<uint32_t>(nx));
  if (ndims == 2) put_u32(out, static_cast<uint32_t>(ny));
  put_u32(out, n_frames);
  put_f64(out, h);
  put_f64(out, length_x);
  if (ndims == 2) put_f64(out, length_y);
  put_u64(out, seed);
  return out;
}

struct Header {
  Equation eq;
  int ndims, nx, ny;
  uint32_t n_frames;
  double h, length_x, length_y;
  uint64_t seed;
};

Header decode_header(Reader& r, const std::string& name) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kTrajMagic, 4) != 0)
    throw FormatError(name + ": bad magic at offset 0");
  Header h{};
  const uint8_t version = r.u8();
  if (version != kTrajVersion)
    throw FormatError(name + ": unsupported version " + std::to_string(version));
  const uint8_t eq = r.u8();
  if (eq < 1 || eq > 3) throw FormatError(name + ": unknown equation id " + std::to_string(eq));
  h.eq = static_cast<Equation>(eq);
  h.ndims = r.u8();
  if (h.ndims != 1 && h.ndims != 2)
    throw FormatError(name + ": unsupported ndims " + std::to_string(h.ndims));
  const uint8_t dtype = r.u8();
  if (dtype != kDtypeF64) throw FormatError(name + ": unsupported dtype " + std::to_string(dtype));
  h.nx = static_cast<int>(r.u32());
  h.ny = h.ndims == 2 ? static_cast<int>(r.u32()) : 1;
  h.n_frames = r.u32();
  h.h = r.f64();
  h.length_x = r.f64();
  h.length_y = h.ndims == 2 ? r.f64() : 0.0;
  h.seed = r.u64();
  return h;
}

}  // namespace

const char* equation_name(Equation eq) {
  switch (eq) {
    case Equation::KS: return "ks";
    case Equation::KdV: return "kdv";
    case Equation::NS: return "ns";
  }
  return "?";
}

Equation equation_from_name(const std::string& name) {
  if (name == "ks") return Equation::KS;
  if (name == "kdv") return Equation::KdV;
  if (name == "ns") return Equation::NS;
  throw std::invalid_argument("unknown equation '" + name + "' (expected ks|kdv|ns)");
}

MeasurementOperator MeasurementOperator::identity(int d) {
  MeasurementOperator op;
  op.kind = Kind::Identity;
  op.p = d;
  op.d = d;
  return op;
}

MeasurementOperator MeasurementOperator::dense_random(int p, int d, uint64_t seed) {
  if (p < 1 || d < 1) throw std::invalid_argument("dense_random: p and d must be positive");
  MeasurementOperator op;
  op.kind = Kind::DenseRandom;
  op.p = p;
  op.d = d;
  op.seed = seed;
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  op.matrix.resize(static_cast<size_t>(p) * d);
  for (auto& v : op.matrix) v = dist(rng);
  return op;
}

std::vector<double> MeasurementOperator::apply(std::span<const double> frame) const {
  if (static_cast<int>(frame.size()) != d)
    throw ShapeError("MeasurementOperator::apply: frame size " + std::to_string(frame.size()) +
                     " does not match d=" + std::to_string(d));
  if (kind == Kind::Identity) return {frame.begin(), frame.end()};
  std::vector<double> out(p, 0.0);
  for (int i = 0; i < p; ++i) {
    const double* row = matrix.data() + static_cast<size_t>(i) * d;
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += row[j] * frame[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> MeasurementOperator::apply_transpose(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != p)
    throw ShapeError("MeasurementOperator::apply_transpose: vector size " +
                     std::to_string(u.size()) + " does not match p=" + std::to_string(p));
  if (kind == Kind::Identity) return {u.begin(), u.end()};
  std::vector<double> out(d, 0.0);
  for (int i = 0; i < p; ++i) {
    const double* row = matrix.data() + static_cast<size_t>(i) * d;
    const double ui = u[i];
    for (int j = 0; j < d; ++j) out[j] += row[j] * ui;
  }
  return out;
}

std::vector<double> apply_measurement(const MeasurementOperator& op,
                                      std::span<const double> frame) {
  return op.apply(frame);
}

std::vector<double> add_noise_snr(std::span<const double> y_clean, double snr_db, uint64_t seed) {
  std::vector<double> out(y_clean.begin(), y_clean.end());
  if (std::isinf(snr_db) && snr_db > 0) return out;
  double power = 0.0;
  for (double v : y_clean) power += v * v;
  power /= static_cast<double>(y_clean.size());
  if (power == 0.0)
    throw std::invalid_argument("add_noise_snr: zero-power signal, finite SNR undefined");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& v : out) v += dist(rng);
  return out;
}

bool Schedule::corrects_at(int k) const {
  if (k < 1) return false;
  if (k <= t_h) return true;
  return std::binary_search(assim_times.begin(), assim_times.end(), k);
}

std::vector<int> Schedule::observed_frames() const {
  std::vector<int> frames;
  frames.reserve(t_h + assim_times.size());
  for (int k = 1; k <= t_h; ++k) frames.push_back(k);
  frames.insert(frames.end(), assim_times.begin(), assim_times.end());
  return frames;
}

Schedule sample_schedule(int t_h, int t_f_frames, double alpha, uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("sample_schedule: alpha must be in [0,1]");
  if (t_h < 0 || t_h >= t_f_frames)
    throw std::invalid_argument("sample_schedule: need 0 <= t_h < t_f_frames");
  Schedule s;
  s.t_h = t_h;
  s.alpha = alpha;
  const int horizon = t_f_frames - t_h;
  const int count = static_cast<int>(std::llround(alpha * horizon));
  std::vector<int> candidates(horizon);
  std::iota(candidates.begin(), candidates.end(), t_h + 1);
  Rng rng(seed);
  // partial Fisher-Yates: the first `count` entries are the sample
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, horizon - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  s.assim_times.assign(candidates.begin(), candidates.begin() + count);
  std::sort(s.assim_times.begin(), s.assim_times.end());
  return s;
}

std::optional<std::span<const double>> ObservationSet::for_frame(int k) const {
  auto it = std::lower_bound(times.begin(), times.end(), k);
  if (it == times.end() || *it != k) return std::nullopt;
  return at_index(static_cast<size_t>(it - times.begin()));
}

ObservationSet make_observations(const Trajectory& traj, const MeasurementOperator& op,
                                 std::vector<int> times, double snr_db, uint64_t noise_seed) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (int k : times)
    if (k < 0 || k >= traj.n_frames)
      throw std::invalid_argument("make_observations: frame " + std::to_string(k) +
                                  " outside trajectory of " + std::to_string(traj.n_frames));
  ObservationSet obs;
  obs.times = std::move(times);
  obs.p = op.p;
  obs.snr_db = snr_db;
  obs.op = op;
  obs.equation = traj.equation;
  obs.h = traj.h;
  obs.noise_seed = noise_seed;
  obs.y.reserve(obs.times.size() * op.p);
  for (int k : obs.times) {
    auto row = op.apply(traj.frame(k));
    obs.y.insert(obs.y.end(), row.begin(), row.end());
  }
  obs.y = add_noise_snr(obs.y, snr_db, noise_seed);
  return obs;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.n_frames < 1) throw std::invalid_argument("write_trajectory: no frames");
  std::string out = encode_header(traj.equation, traj.spatial_rank(), traj.nx, traj.ny,
                                  static_cast<uint32_t>(traj.n_frames), traj.h, traj.length_x,
                                  traj.length_y, traj.seed);
  out.reserve(out.size() + traj.frames.size() * 8);
  for (double v : traj.frames) put_f64(out, v);
  write_file(path, out);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  const Header h = decode_header(r, path.string());
  Trajectory traj;
  traj.equation = h.eq;
  traj.nx = h.nx;
  traj.ny = h.ny;
  traj.h = h.h;
  traj.length_x = h.length_x;
  traj.length_y = h.length_y;
  traj.seed = h.seed;
  traj.n_frames = static_cast<int>(h.n_frames);
  const size_t count = static_cast<size_t>(h.n_frames) * h.nx * h.ny;
  if (r.remaining() != count * 8)
    throw FormatError(path.string() + ": payload is " + std::to_string(r.remaining()) +
                      " bytes, expected " + std::to_string(count * 8));
  traj.frames.resize(count);
  for (auto& v : traj.frames) v = r.f64();
  r.expect_end();
  return traj;
}

// Observation container: the trajectory layout with p replacing the spatial
// dims (always 1-D), snr_db carried in the length_x slot, and a trailing u32
// table of the observed frame indices.
void write_observations(const std::filesystem::path& path, const ObservationSet& obs) {
  std::string out = encode_header(obs.equation, 1, obs.p, 1,
                                  static_cast<uint32_t>(obs.times.size()), obs.h, obs.snr_db, 0.0,
                                  obs.noise_seed);
  out.reserve(out.size() + obs.y.size() * 8 + obs.times.size() * 4);
  for (double v : obs.y) put_f64(out, v);
  for (int t : obs.times) put_u32(out, static_cast<uint32_t>(t));
  write_file(path, out);
}

ObservationSet read_observations(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  const Header h = decode_header(r, path.string());
  ObservationSet obs;
  obs.equation = h.eq;
  obs.p = h.nx;
  obs.h = h.h;
  obs.snr_db = h.length_x;
  obs.noise_seed = h.seed;
  const size_t rows = h.n_frames;
  if (r.remaining() != rows * h.nx * 8 + rows * 4)
    throw FormatError(path.string() + ": payload is " + std::to_string(r.remaining()) +
                      " bytes, expected " + std::to_string(rows * h.nx * 8 + rows * 4));
  obs.y.resize(rows * h.nx);
  for (auto& v : obs.y) v = r.f64();
  obs.times.resize(rows);
  for (auto& t : obs.times) t = static_cast<int>(r.u32());
  r.expect_end();
  for (size_t i = 1; i < obs.times.size(); ++i)
    if (obs.times[i] <= obs.times[i - 1])
      throw FormatError(path.string() + ": observation times not strictly increasing");
  return obs;
}

}  // namespace noda
