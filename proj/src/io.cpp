#include "bcopt/io.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

namespace {

void write_field(std::ostream& out, const NamedField& f) {
  out << "SCALARS " << f.first << " double 1\nLOOKUP_TABLE default\n";
  for (double v : f.second) out << format_number(v) << '\n';
}

std::string expect_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw IoError(std::string("read_vtk: unexpected end of file, expected ") + what);
  return tok;
}

template <class T>
T read_value(std::istream& in, const char* what) {
  T v;
  if (!(in >> v)) throw IoError(std::string("unexpected or malformed input, expected ") + what);
  return v;
}

double read_double(std::istream& in, const char* what) {
  // operator>> rejects "nan"/"inf"; strtod parses everything we write
  std::string tok;
  if (!(in >> tok)) throw IoError(std::string("unexpected end of input, expected ") + what);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw IoError(std::string("malformed number '") + tok + "', expected " + what);
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

const std::vector<double>* VtkData::point_field(const std::string& name) const {
  for (const auto& f : point_data)
    if (f.first == name) return &f.second;
  return nullptr;
}

const std::vector<double>* VtkData::cell_field(const std::string& name) const {
  for (const auto& f : cell_data)
    if (f.first == name) return &f.second;
  return nullptr;
}

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& point_data,
               const std::vector<NamedField>& cell_data, const std::string& title) {
  for (const auto& f : point_data) {
    if (f.second.size() != mesh.num_vertices()) {
      throw InvalidArgument("write_vtk: point field '" + f.first + "' has the wrong length");
    }
  }
  for (const auto& f : cell_data) {
    if (f.second.size() != mesh.num_triangles()) {
      throw InvalidArgument("write_vtk: cell field '" + f.first + "' has the wrong length");
    }
  }
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& p : mesh.vertices()) out << format_number(p.x) << ' ' << format_number(p.y) << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const Triangle& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) out << "5\n";
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& f : point_data) write_field(out, f);
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << mesh.num_triangles() << '\n';
    for (const auto& f : cell_data) write_field(out, f);
  }
}

void write_vtk_file(const std::string& path, const Mesh& mesh,
                    const std::vector<NamedField>& point_data,
                    const std::vector<NamedField>& cell_data) {
  std::ofstream out = open_out(path);
  write_vtk(out, mesh, point_data, cell_data);
  if (!out) throw IoError("write failed for '" + path + "'");
}

VtkData read_vtk(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0) {
    throw IoError("read_vtk: missing VTK header");
  }
  std::getline(in, line);  // title
  if (expect_token(in, "ASCII") != "ASCII") throw IoError("read_vtk: only ASCII files are supported");
  if (expect_token(in, "DATASET") != "DATASET" || expect_token(in, "UNSTRUCTURED_GRID") != "UNSTRUCTURED_GRID") {
    throw IoError("read_vtk: expected DATASET UNSTRUCTURED_GRID");
  }
  VtkData data;
  std::vector<NamedField>* section = nullptr;
  std::size_t section_size = 0;
  std::string tok;
  while (in >> tok) {
    if (tok == "POINTS") {
      const auto n = read_value<std::size_t>(in, "point count");
      expect_token(in, "point type");
      data.vertices.resize(n);
      for (Point& p : data.vertices) {
        p.x = read_double(in, "x coordinate");
        p.y = read_double(in, "y coordinate");
        read_double(in, "z coordinate");
      }
    } else if (tok == "CELLS") {
      const auto n = read_value<std::size_t>(in, "cell count");
      read_value<std::size_t>(in, "cell list size");
      data.triangles.resize(n);
      for (Triangle& t : data.triangles) {
        if (read_value<int>(in, "cell vertex count") != 3) throw IoError("read_vtk: only triangles are supported");
        for (int& v : t) v = read_value<int>(in, "cell vertex index");
      }
    } else if (tok == "CELL_TYPES") {
      const auto n = read_value<std::size_t>(in, "cell type count");
      for (std::size_t c = 0; c < n; ++c) read_value<int>(in, "cell type");
    } else if (tok == "POINT_DATA") {
      section = &data.point_data;
      section_size = read_value<std::size_t>(in, "point data size");
    } else if (tok == "CELL_DATA") {
      section = &data.cell_data;
      section_size = read_value<std::size_t>(in, "cell data size");
    } else if (tok == "SCALARS") {
      if (!section) throw IoError("read_vtk: SCALARS outside a data section");
      NamedField f;
      f.first = expect_token(in, "field name");
      expect_token(in, "field type");
      std::getline(in, line);  // optional component count
      if (expect_token(in, "LOOKUP_TABLE") != "LOOKUP_TABLE") throw IoError("read_vtk: expected LOOKUP_TABLE");
      expect_token(in, "table name");
      f.second.resize(section_size);
      for (double& v : f.second) v = read_double(in, "field value");
      section->push_back(std::move(f));
    } else {
      throw IoError("read_vtk: unsupported keyword '" + tok + "'");
    }
  }
  return data;
}

VtkData read_vtk_file(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return read_vtk(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    out << format_number(mesh.vertex(i).x) << ' ' << format_number(mesh.vertex(i).y) << ' '
        << (mesh.is_boundary(i) ? 1 : 0) << '\n';
  }
  for (const Triangle& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

Mesh read_mesh(std::istream& in) {
  const auto nv = read_value<long long>(in, "vertex count");
  const auto nt = read_value<long long>(in, "triangle count");
  if (nv < 3 || nt < 1) throw IoError("read_mesh: need at least 3 vertices and 1 triangle");
  std::vector<Point> v(static_cast<std::size_t>(nv));
  std::vector<bool> flags(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i].x = read_double(in, "vertex x");
    v[i].y = read_double(in, "vertex y");
    const int flag = read_value<int>(in, "boundary flag");
    if (flag != 0 && flag != 1) throw IoError("read_mesh: boundary flag must be 0 or 1");
    flags[i] = flag == 1;
  }
  std::vector<Triangle> t(static_cast<std::size_t>(nt));
  for (Triangle& tri : t) {
    for (int& k : tri) {
      k = read_value<int>(in, "triangle vertex index");
      if (k < 0 || k >= nv) throw IoError("read_mesh: triangle vertex index out of range");
    }
  }
  return Mesh(std::move(v), std::move(t), std::move(flags));
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return read_mesh(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(const std::vector<double>& values) {
  if (values.size() != header_.size()) throw InvalidArgument("CsvTable: row length does not match header");
  rows_.push_back(values);
  return *this;
}

void CsvTable::write(std::ostream& out) const {
  for (std::size_t k = 0; k < header_.size(); ++k) out << (k ? "," : "") << header_[k];
  out << '\n';
  for (const auto& r : rows_) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format_number(r[k]);
    out << '\n';
  }
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream out = open_out(path);
  write(out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace bcopt
