#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "omnimatte/errors.hpp"
#include "omnimatte/videodata.hpp"

namespace omnimatte {

// Middlebury .flo: float32 magic 202021.25 ("PIEH"), int32 width, int32
// height, then h*w interleaved (u, v) float32 pairs, row-major. All fields
// little-endian.

namespace {

constexpr float kFloMagic = 202021.25f;

uint32_t load_le32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

void store_le32(unsigned char* p, uint32_t v) {
  p[0] = v & 0xff;
  p[1] = (v >> 8) & 0xff;
  p[2] = (v >> 16) & 0xff;
  p[3] = (v >> 24) & 0xff;
}

}  // namespace

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open .flo: " + path.string());

  unsigned char head[12];
  if (!in.read(reinterpret_cast<char*>(head), 12))
    throw IoError("truncated .flo header: " + path.string());

  float magic = std::bit_cast<float>(load_le32(head));
  if (magic != kFloMagic)
    throw ValidationError("invalid .flo magic in " + path.string());
  int32_t w = std::bit_cast<int32_t>(load_le32(head + 4));
  int32_t h = std::bit_cast<int32_t>(load_le32(head + 8));
  if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16)
    throw ValidationError("implausible .flo dimensions in " + path.string());

  size_t n = static_cast<size_t>(w) * h * 2;
  std::vector<unsigned char> buf(n * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw IoError("truncated .flo payload: " + path.string());

  FlowField f;
  f.uv = Image(w, h, 2);
  for (size_t i = 0; i < n; ++i)
    f.uv[i] = std::bit_cast<float>(load_le32(buf.data() + i * 4));
  return f;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  if (!flow.uv.all_finite())
    throw ValidationError("refusing to write non-finite flow: " + path.string());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());

  unsigned char head[12];
  store_le32(head, std::bit_cast<uint32_t>(kFloMagic));
  store_le32(head + 4, std::bit_cast<uint32_t>(int32_t(flow.width())));
  store_le32(head + 8, std::bit_cast<uint32_t>(int32_t(flow.height())));
  out.write(reinterpret_cast<char*>(head), 12);

  size_t n = flow.uv.size();
  std::vector<unsigned char> buf(n * 4);
  for (size_t i = 0; i < n; ++i)
    store_le32(buf.data() + i * 4, std::bit_cast<uint32_t>(float(flow.uv[i])));
  out.write(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace omnimatte
