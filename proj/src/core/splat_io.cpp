#include "splatop/core/splat_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>

namespace splatop {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

void put_f32(Bytes& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v * 255.0), 0, 255));
}

std::array<std::uint8_t, 4> encode_rotation_raw(const Quat& q) {
  const double c[4] = {q.w(), q.x(), q.y(), q.z()};
  std::array<std::uint8_t, 4> b{};
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(c[i] * 128.0 + 128.0), 0, 255));
  return b;
}

std::optional<Quat> decode_rotation_raw(const std::array<std::uint8_t, 4>& b) {
  const Quat v((b[0] - 128) / 128.0, (b[1] - 128) / 128.0, (b[2] - 128) / 128.0,
               (b[3] - 128) / 128.0);
  if (v.coeffs().isZero(0.0)) return std::nullopt;
  return v.normalized();
}

bool is_stable(const std::array<std::uint8_t, 4>& b) {
  const auto q = decode_rotation_raw(b);
  return q && encode_rotation_raw(*q) == b;
}

double alignment(const std::array<std::uint8_t, 4>& b, const Quat& q) {
  const auto d = decode_rotation_raw(b);
  return d ? std::abs(d->dot(q)) : -1.0;
}

std::optional<std::array<std::uint8_t, 4>> search_stable(const std::array<std::uint8_t, 4>& center,
                                                        const Quat& q, int radius) {
  std::optional<std::array<std::uint8_t, 4>> best;
  double best_align = -1.0;
  const int span = 2 * radius + 1;
  int total = span * span * span * span;
  for (int code = 0; code < total; ++code) {
    std::array<std::uint8_t, 4> cand{};
    int rem = code;
    bool in_range = true;
    for (int i = 0; i < 4; ++i) {
      const int v = center[i] + (rem % span) - radius;
      rem /= span;
      if (v < 0 || v > 255) in_range = false;
      cand[i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    if (!in_range || !is_stable(cand)) continue;
    const double a = alignment(cand, q);
    if (a > best_align) {
      best_align = a;
      best = cand;
    }
  }
  return best;
}

[[noreturn]] void fail(SplatFormatError::Code code, const std::string& msg) {
  throw SplatFormatError(code, msg);
}

void check_finite(double v, const char* field, std::size_t index) {
  if (!std::isfinite(v))
    fail(SplatFormatError::Code::NonFiniteValue,
         "non-finite " + std::string(field) + " in record " + std::to_string(index));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  constexpr double kLimit = 20.0;
  if (p <= 0.0) return -kLimit;
  if (p >= 1.0) return kLimit;
  return std::clamp(std::log(p / (1.0 - p)), -kLimit, kLimit);
}

struct PlyProperty {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::string type;
};

std::size_t ply_type_size(const std::string& t) {
  static const std::map<std::string, std::size_t> sizes = {
      {"char", 1},   {"uchar", 1},  {"int8", 1},   {"uint8", 1},  {"short", 2},
      {"ushort", 2}, {"int16", 2},  {"uint16", 2}, {"int", 4},    {"uint", 4},
      {"int32", 4},  {"uint32", 4}, {"float", 4},  {"float32", 4}, {"double", 8},
      {"float64", 8}};
  const auto it = sizes.find(t);
  return it == sizes.end() ? 0 : it->second;
}

double read_ply_scalar(const std::uint8_t* p, const std::string& type) {
  if (type == "float" || type == "float32") return get_f32(p);
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (type == "uchar" || type == "uint8") return p[0];
  if (type == "char" || type == "int8") return static_cast<std::int8_t>(p[0]);
  if (type == "short" || type == "int16") {
    std::int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    std::int32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

std::array<std::uint8_t, 4> encode_rotation_bytes(const Quat& q_in) {
  const Quat q = q_in.normalized();
  const auto first = encode_rotation_raw(q);
  if (is_stable(first)) return first;
  for (int radius = 1; radius <= 3; ++radius)
    if (auto found = search_stable(first, q, radius)) return *found;
  // Unreachable in practice: stable codes form a dense shell around radius 128.
  auto b = first;
  for (int i = 0; i < 16 && !is_stable(b); ++i) b = encode_rotation_raw(*decode_rotation_raw(b));
  return b;
}

Quat decode_rotation_bytes(const std::array<std::uint8_t, 4>& b) {
  const auto q = decode_rotation_raw(b);
  if (!q) fail(SplatFormatError::Code::ZeroQuaternion, "rotation decodes to the zero quaternion");
  return *q;
}

SplatScene load_splat_binary(std::span<const std::uint8_t> bytes, std::string frame_id) {
  if (bytes.size() % kSplatRecordSize != 0)
    fail(SplatFormatError::Code::TruncatedRecord,
         "splat byte length " + std::to_string(bytes.size()) + " is not a multiple of 32");
  const std::size_t count = bytes.size() / kSplatRecordSize;
  std::vector<Gaussian3D> gaussians;
  gaussians.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* r = bytes.data() + i * kSplatRecordSize;
    Gaussian3D g;
    for (int k = 0; k < 3; ++k) {
      g.mean[k] = get_f32(r + 4 * k);
      g.scale[k] = get_f32(r + 12 + 4 * k);
      check_finite(g.mean[k], "position", i);
      check_finite(g.scale[k], "scale", i);
    }
    if ((g.scale.array() <= 0.0).any())
      fail(SplatFormatError::Code::InvalidValue, "non-positive scale in record " + std::to_string(i));
    g.color = Vec3(r[24], r[25], r[26]) / 255.0;
    g.opacity = r[27] / 255.0;
    g.rotation = decode_rotation_bytes({r[28], r[29], r[30], r[31]});
    gaussians.push_back(g);
  }
  return SplatScene(std::move(gaussians), std::move(frame_id));
}

Bytes encode_splat_binary(const SplatScene& scene) {
  Bytes out;
  out.reserve(scene.size() * kSplatRecordSize);
  for (const auto& g : scene.gaussians()) {
    for (int k = 0; k < 3; ++k) put_f32(out, g.mean[k]);
    for (int k = 0; k < 3; ++k) put_f32(out, g.scale[k]);
    for (int k = 0; k < 3; ++k) out.push_back(quantize_unit(g.color[k]));
    out.push_back(quantize_unit(g.opacity));
    const auto rot = encode_rotation_bytes(g.rotation);
    out.insert(out.end(), rot.begin(), rot.end());
  }
  return out;
}

SplatScene load_ply(std::span<const std::uint8_t> bytes, std::string frame_id) {
  using Code = SplatFormatError::Code;
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::string_view terminator = "end_header\n";
  const auto end = text.find(terminator);
  if (text.substr(0, 4) != "ply\n" || end == std::string_view::npos)
    fail(Code::MalformedHeader, "missing ply magic or end_header");

  std::istringstream header{std::string(text.substr(0, end))};
  std::string line;
  std::getline(header, line);  // magic
  bool format_ok = false;
  bool in_vertex = false;
  bool seen_element = false;
  std::size_t vertex_count = 0;
  std::size_t stride = 0;
  std::vector<PlyProperty> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian") fail(Code::MalformedHeader, "unsupported ply format '" + fmt + "'");
      format_ok = true;
    } else if (keyword == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (!seen_element && name != "vertex")
        fail(Code::MalformedHeader, "first ply element must be 'vertex'");
      if (name == "vertex") {
        if (n < 0) fail(Code::MalformedHeader, "bad vertex count");
        vertex_count = static_cast<std::size_t>(n);
      }
      in_vertex = name == "vertex";
      seen_element = true;
    } else if (keyword == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ls >> type >> name;
      if (type == "list") fail(Code::MalformedHeader, "list properties are not supported on vertex");
      const std::size_t size = ply_type_size(type);
      if (size == 0 || name.empty()) fail(Code::MalformedHeader, "bad property line '" + line + "'");
      props.push_back({name, stride, size, type});
      stride += size;
    } else {
      fail(Code::MalformedHeader, "unexpected header line '" + line + "'");
    }
  }
  if (!format_ok) fail(Code::MalformedHeader, "missing format line");
  if (!seen_element) fail(Code::MalformedHeader, "missing vertex element");

  const char* required[] = {"x",       "y",       "z",       "f_dc_0",  "f_dc_1", "f_dc_2", "opacity",
                            "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",  "rot_2",  "rot_3"};
  std::vector<const PlyProperty*> slot;
  for (const char* name : required) {
    const auto it = std::find_if(props.begin(), props.end(), [&](const PlyProperty& p) { return p.name == name; });
    if (it == props.end()) fail(Code::MissingProperty, std::string("ply lacks property '") + name + "'");
    slot.push_back(&*it);
  }

  const std::size_t data_begin = end + terminator.size();
  if (bytes.size() - data_begin < vertex_count * stride)
    fail(Code::TruncatedRecord, "ply vertex data shorter than declared");

  std::vector<Gaussian3D> gaussians;
  gaussians.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const std::uint8_t* rec = bytes.data() + data_begin + i * stride;
    double v[14];
    for (int k = 0; k < 14; ++k) {
      v[k] = read_ply_scalar(rec + slot[k]->offset, slot[k]->type);
      check_finite(v[k], required[k], i);
    }
    Gaussian3D g;
    g.mean = Vec3(v[0], v[1], v[2]);
    for (int k = 0; k < 3; ++k) g.color[k] = std::clamp(0.5 + kShC0 * v[3 + k], 0.0, 1.0);
    g.opacity = sigmoid(v[6]);
    g.scale = Vec3(std::exp(v[7]), std::exp(v[8]), std::exp(v[9]));
    if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any())
      fail(Code::NonFiniteValue, "scale overflows in record " + std::to_string(i));
    Quat q(v[10], v[11], v[12], v[13]);
    const double n = q.norm();
    if (n == 0.0) fail(Code::ZeroQuaternion, "zero rotation in record " + std::to_string(i));
    // Already-unit quaternions are kept verbatim so save(load(x)) reproduces x.
    if (std::abs(n - 1.0) > 1e-6) q.coeffs() /= n;
    g.rotation = q;
    gaussians.push_back(g);
  }
  return SplatScene(std::move(gaussians), std::move(frame_id));
}

Bytes save_ply(const SplatScene& scene) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
  for (const char* name : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1",
                           "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    h << "property float " << name << "\n";
  h << "end_header\n";
  const std::string header = h.str();
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + scene.size() * 14 * 4);
  for (const auto& g : scene.gaussians()) {
    for (int k = 0; k < 3; ++k) put_f32(out, g.mean[k]);
    for (int k = 0; k < 3; ++k) put_f32(out, (g.color[k] - 0.5) / kShC0);
    put_f32(out, logit(g.opacity));
    for (int k = 0; k < 3; ++k) put_f32(out, std::log(g.scale[k]));
    put_f32(out, g.rotation.w());
    put_f32(out, g.rotation.x());
    put_f32(out, g.rotation.y());
    put_f32(out, g.rotation.z());
  }
  return out;
}

namespace {
std::string extension_of(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}
}  // namespace

SplatScene load_scene_file(const std::string& path) {
  const auto ext = extension_of(path);
  const Bytes bytes = read_file_bytes(path);
  if (ext == ".splat") return load_splat_binary(bytes);
  if (ext == ".ply") return load_ply(bytes);
  throw std::invalid_argument("unknown scene extension '" + ext + "' for " + path);
}

void save_scene_file(const SplatScene& scene, const std::string& path) {
  const auto ext = extension_of(path);
  if (ext == ".splat") return write_file_bytes(path, encode_splat_binary(scene));
  if (ext == ".ply") return write_file_bytes(path, save_ply(scene));
  throw std::invalid_argument("unknown scene extension '" + ext + "' for " + path);
}

Bytes read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace splatop
