#include "pumrom/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "pumrom/errors.hpp"

namespace pumrom {

namespace {
constexpr char kMagic[8] = {'P', 'U', 'M', 'R', 'O', 'M', '0', '1'};

static_assert(sizeof(double) == 8);

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_matrix: cannot open " + path);
  os.write(kMagic, 8);
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  // Row-major payload (Eigen stores column-major).
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!os) throw IoError("write_matrix: write failed for " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_matrix: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("read_matrix: bad magic in " + path);
  const std::uint64_t rows = get_u64(is);
  const std::uint64_t cols = get_u64(is);
  if (!is) throw IoError("read_matrix: truncated header in " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  if (!is) throw IoError("read_matrix: truncated payload in " + path);
  return m;
}

nlohmann::json discretization_descriptor(const Discretization& disc) {
  return {{"degree", disc.degree()},
          {"breakpoints_x", disc.grid_x().breakpoints},
          {"breakpoints_y", disc.grid_y().breakpoints}};
}

Discretization discretization_from_descriptor(const nlohmann::json& j) {
  Grid1D gx, gy;
  gx.breakpoints = j.at("breakpoints_x").get<std::vector<double>>();
  gy.breakpoints = j.at("breakpoints_y").get<std::vector<double>>();
  return Discretization(std::move(gx), std::move(gy), j.at("degree").get<int>());
}

void write_field(const std::string& path, const Discretization& disc,
                 const Field& u, const nlohmann::json& extra) {
  if (u.size() != disc.num_dofs())
    throw ConfigError("write_field: field size mismatch");
  write_matrix(path, u);
  nlohmann::json side = {{"discretization", discretization_descriptor(disc)}};
  if (!extra.is_null() && !extra.empty()) side["meta"] = extra;
  write_json(path + ".json", side);
}

Field read_field(const std::string& path, const Discretization& expected) {
  const nlohmann::json side = read_json(path + ".json");
  const Discretization disc =
      discretization_from_descriptor(side.at("discretization"));
  if (disc.num_dofs() != expected.num_dofs() ||
      disc.degree() != expected.degree())
    throw IoError("read_field: stored discretization does not match");
  const Eigen::MatrixXd m = read_matrix(path);
  if (m.cols() != 1 || m.rows() != expected.num_dofs())
    throw IoError("read_field: unexpected shape in " + path);
  return m.col(0);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("write_json: cannot open " + path);
  os << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_json: cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("read_json: parse error in " + path + ": " + e.what());
  }
}

}  // namespace pumrom
