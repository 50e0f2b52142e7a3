#pragma once

#include <string>

#include "dbenet/geom.hpp"

namespace dbenet {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

// PLY subset: x,y,z as float32 plus optional red,green,blue uchar mapped to
// auxiliary channels in [0,1]. Binary write-then-read is value-exact.
// Parse failures throw FormatError naming the byte offset.
PointCloud read_ply(const std::string& path);
void write_ply(const PointCloud& cloud, const std::string& path, PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

}  // namespace dbenet
