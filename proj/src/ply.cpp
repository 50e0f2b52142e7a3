#include "dbenet/ply.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dbenet {

namespace {

[[noreturn]] void fail(const std::string& path, int64_t offset, const std::string& what) {
  throw FormatError("PLY error in " + path + " at byte " + std::to_string(offset) + ": " + what);
}

struct Property {
  std::string type;
  std::string name;
};

int type_size(const std::string& t) {
  if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
  if (t == "uchar" || t == "uint8" || t == "char" || t == "int8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "double" || t == "float64") return 8;
  return -1;
}

}  // namespace

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open PLY file: " + path);

  std::string line;
  int64_t offset = 0;
  auto read_line = [&]() -> std::string {
    std::string s;
    if (!std::getline(in, s)) fail(path, offset, "unexpected end of header");
    offset += static_cast<int64_t>(s.size()) + 1;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  };

  if (read_line() != "ply") fail(path, 0, "missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  int64_t vertex_count = -1;
  std::vector<Property> props;
  bool in_vertex_element = false;

  while (true) {
    line = read_line();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        fail(path, offset, "unsupported format '" + fmt + "'");
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      int64_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (vertex_count < 0) fail(path, offset, "vertex element must come first");
        in_vertex_element = false;  // trailing elements are ignored if empty
        if (count > 0) fail(path, offset, "unsupported element '" + name + "' with nonzero count");
      }
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      Property p;
      ls >> p.type;
      if (p.type == "list") fail(path, offset, "list properties are not supported on vertices");
      ls >> p.name;
      if (type_size(p.type) < 0) fail(path, offset, "unsupported property type '" + p.type + "'");
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    } else {
      fail(path, offset, "unrecognized header token '" + tok + "'");
    }
  }
  if (!have_format) fail(path, offset, "missing format line");
  if (vertex_count < 0) fail(path, offset, "missing vertex element");

  int xi = -1, yi = -1, zi = -1, ri = -1, gi = -1, bi = -1;
  for (size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") xi = static_cast<int>(i);
    if (props[i].name == "y") yi = static_cast<int>(i);
    if (props[i].name == "z") zi = static_cast<int>(i);
    if (props[i].name == "red") ri = static_cast<int>(i);
    if (props[i].name == "green") gi = static_cast<int>(i);
    if (props[i].name == "blue") bi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0) fail(path, offset, "vertex element lacks x/y/z properties");
  for (int idx : {xi, yi, zi})
    if (props[static_cast<size_t>(idx)].type != "float" && props[static_cast<size_t>(idx)].type != "float32")
      fail(path, offset, "coordinates must be float32");
  const bool has_rgb = ri >= 0 && gi >= 0 && bi >= 0;
  if (has_rgb)
    for (int idx : {ri, gi, bi})
      if (props[static_cast<size_t>(idx)].type != "uchar" && props[static_cast<size_t>(idx)].type != "uint8")
        fail(path, offset, "colors must be uchar");

  PointCloud cloud;
  cloud.aux_channels = has_rgb ? 3 : 0;
  cloud.points.reserve(static_cast<size_t>(vertex_count));

  if (binary) {
    int stride = 0;
    std::vector<int> prop_off(props.size());
    for (size_t i = 0; i < props.size(); ++i) {
      prop_off[i] = stride;
      stride += type_size(props[i].type);
    }
    std::vector<char> row(static_cast<size_t>(stride));
    for (int64_t v = 0; v < vertex_count; ++v) {
      in.read(row.data(), stride);
      if (in.gcount() != stride) fail(path, offset + in.gcount(), "truncated payload: expected " +
                                                                       std::to_string(vertex_count) + " vertices, got " +
                                                                       std::to_string(v));
      offset += stride;
      auto read_f32 = [&](int idx) {
        float f;
        std::memcpy(&f, row.data() + prop_off[static_cast<size_t>(idx)], 4);
        return f;
      };
      cloud.points.emplace_back(read_f32(xi), read_f32(yi), read_f32(zi));
      if (has_rgb)
        for (int idx : {ri, gi, bi}) {
          unsigned char u;
          std::memcpy(&u, row.data() + prop_off[static_cast<size_t>(idx)], 1);
          cloud.aux.push_back(u / 255.0);
        }
    }
  } else {
    for (int64_t v = 0; v < vertex_count; ++v) {
      if (!std::getline(in, line)) fail(path, offset, "truncated payload: expected " + std::to_string(vertex_count) +
                                                          " vertices, got " + std::to_string(v));
      offset += static_cast<int64_t>(line.size()) + 1;
      std::istringstream ls(line);
      std::vector<double> vals(props.size());
      for (size_t i = 0; i < props.size(); ++i)
        if (!(ls >> vals[i])) fail(path, offset, "malformed vertex line " + std::to_string(v));
      cloud.points.emplace_back(static_cast<float>(vals[static_cast<size_t>(xi)]),
                                static_cast<float>(vals[static_cast<size_t>(yi)]),
                                static_cast<float>(vals[static_cast<size_t>(zi)]));
      if (has_rgb)
        for (int idx : {ri, gi, bi}) cloud.aux.push_back(vals[static_cast<size_t>(idx)] / 255.0);
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, PlyEncoding encoding) {
  cloud.check_valid();
  const bool rgb = cloud.aux_channels >= 3;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open PLY file for writing: " + path);
  out << "ply\n";
  out << "format " << (encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (rgb) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";

  auto to_byte = [](double v) {
    const double scaled = std::round(v * 255.0);
    return static_cast<unsigned char>(std::min(255.0, std::max(0.0, scaled)));
  };

  for (int64_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[static_cast<size_t>(i)];
    const std::array<float, 3> xyz = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z())};
    if (encoding == PlyEncoding::BinaryLittleEndian) {
      out.write(reinterpret_cast<const char*>(xyz.data()), 12);
      if (rgb) {
        const std::array<unsigned char, 3> c = {to_byte(cloud.aux_at(i, 0)), to_byte(cloud.aux_at(i, 1)),
                                                to_byte(cloud.aux_at(i, 2))};
        out.write(reinterpret_cast<const char*>(c.data()), 3);
      }
    } else {
      std::ostringstream ls;
      ls.precision(9);
      ls << xyz[0] << ' ' << xyz[1] << ' ' << xyz[2];
      if (rgb)
        ls << ' ' << static_cast<int>(to_byte(cloud.aux_at(i, 0))) << ' ' << static_cast<int>(to_byte(cloud.aux_at(i, 1)))
           << ' ' << static_cast<int>(to_byte(cloud.aux_at(i, 2)));
      out << ls.str() << "\n";
    }
  }
  if (!out) throw FormatError("write failed for PLY file: " + path);
}

}  // namespace dbenet
