#include "tenf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tenf/errors.hpp"

namespace tenf {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'N', 'F', 'A', 'R', 'R', '\n'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFloat64 = 1;

void put_u32(std::ostream &out, uint32_t v)
{
  char b[4];
  for (int i = 0; i < 4; ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(b, 4);
}

void put_u64(std::ostream &out, uint64_t v)
{
  char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(b, 8);
}

uint32_t get_u32(std::istream &in)
{
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(b[i]) << (8 * i);
  }
  return v;
}

uint64_t get_u64(std::istream &in)
{
  unsigned char b[8];
  in.read(reinterpret_cast<char *>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<uint64_t>(b[i]) << (8 * i);
  }
  return v;
}

} // namespace

void save_tensor(const Tensor &t, const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, kFloat64);
  put_u32(out, static_cast<uint32_t>(t.rank()));
  for (Index e : t.shape()) {
    put_u64(out, static_cast<uint64_t>(e));
  }
  for (Index i = 0; i < t.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, &t[i], 8);
    put_u64(out, bits);
  }
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

Tensor load_tensor(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("bad magic bytes in " + path.string());
  }
  const uint32_t version = get_u32(in);
  const uint32_t etype = get_u32(in);
  const uint32_t modes = get_u32(in);
  if (!in || version != kVersion || etype != kFloat64) {
    throw IoError("unsupported format version/type in " + path.string());
  }
  if (modes < 1 || modes > static_cast<uint32_t>(kMaxModes)) {
    throw IoError("invalid mode count in " + path.string());
  }
  Shape shape(modes);
  for (uint32_t i = 0; i < modes; ++i) {
    shape[i] = static_cast<Index>(get_u64(in));
  }
  if (!in) {
    throw IoError("truncated header in " + path.string());
  }
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    const uint64_t bits = get_u64(in);
    if (!in) {
      throw IoError("truncated data in " + path.string());
    }
    std::memcpy(&t[i], &bits, 8);
  }
  return t;
}

void write_pgm16(const std::filesystem::path &path, const std::vector<double> &pixels, Index width,
                 Index height)
{
  if (static_cast<Index>(pixels.size()) != width * height) {
    throw std::invalid_argument("write_pgm16: pixel count does not match extents");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "P5\n" << width << " " << height << "\n65535\n";
  // Row-major scan; pixel (x, y) comes from pixels[x + width*y].
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const double v = std::clamp(pixels[x + width * y], 0.0, 1.0);
      const auto s = static_cast<uint16_t>(std::lround(v * 65535.0));
      const char b[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
      out.write(b, 2);
    }
  }
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

KeyValues read_key_values(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  KeyValues kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

uint64_t fnv1a(const void *data, size_t bytes, uint64_t seed)
{
  const auto *p = static_cast<const unsigned char *>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t tensor_hash(const Tensor &t)
{
  uint64_t h = fnv1a(t.shape().data(), t.shape().size() * sizeof(Index));
  return fnv1a(t.data(), static_cast<size_t>(t.size()) * sizeof(double), h);
}

} // namespace tenf
