#include "copse/ply.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace copse::geom {

namespace {

std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("ply: truncated header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const Cloud& pts, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ply: cannot open for writing: " + path.string());
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << pts.rows() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  if (binary) {
    std::vector<float> row(3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (int c = 0; c < 3; ++c) row[c] = static_cast<float>(pts(i, c));
      out.write(reinterpret_cast<const char*>(row.data()), 3 * sizeof(float));
    }
  } else {
    char buf[96];
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      // %.9g round-trips float exactly
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", static_cast<double>(static_cast<float>(pts(i, 0))),
                    static_cast<double>(static_cast<float>(pts(i, 1))),
                    static_cast<double>(static_cast<float>(pts(i, 2))));
      out << buf;
    }
  }
  if (!out) throw IoError("ply: write failed: " + path.string());
}

Cloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ply: cannot open: " + path.string());
  if (next_line(in) != "ply") throw IoError("ply: missing magic: " + path.string());

  bool binary = false;
  bool format_seen = false;
  long n_vertex = -1;
  int n_props = 0;
  const char* expected_props[3] = {"x", "y", "z"};
  bool in_vertex_element = false;

  for (;;) {
    std::string line = next_line(in);
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (ver != "1.0" || (fmt != "ascii" && fmt != "binary_little_endian"))
        throw IoError("ply: unsupported format '" + fmt + " " + ver + "'");
      binary = (fmt == "binary_little_endian");
      format_seen = true;
    } else if (tok == "element") {
      std::string name;
      long count = 0;
      ls >> name >> count;
      if (name != "vertex" || n_vertex >= 0)
        throw IoError("ply: expected a single vertex element");
      n_vertex = count;
      in_vertex_element = true;
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!in_vertex_element || n_props >= 3 || type != "float" || name != expected_props[n_props])
        throw IoError("ply: vertex properties must be float x, y, z");
      ++n_props;
    } else if (tok == "end_header") {
      break;
    } else {
      throw IoError("ply: unexpected header token '" + tok + "'");
    }
  }
  if (!format_seen || n_vertex < 0 || n_props != 3)
    throw IoError("ply: incomplete header: " + path.string());

  Cloud pts(n_vertex, 3);
  if (binary) {
    std::vector<float> buf(static_cast<std::size_t>(n_vertex) * 3);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("ply: truncated vertex data: " + path.string());
    for (long i = 0; i < n_vertex; ++i)
      for (int c = 0; c < 3; ++c) pts(i, c) = static_cast<double>(buf[3 * i + c]);
  } else {
    for (long i = 0; i < n_vertex; ++i) {
      float x, y, z;
      if (!(in >> x >> y >> z)) throw IoError("ply: truncated vertex data: " + path.string());
      pts(i, 0) = x;
      pts(i, 1) = y;
      pts(i, 2) = z;
    }
  }
  for (Eigen::Index i = 0; i < pts.size(); ++i)
    if (!std::isfinite(pts.data()[i])) throw IoError("ply: non-finite coordinate: " + path.string());
  return pts;
}

}  // namespace copse::geom
