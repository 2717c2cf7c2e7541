#pragma once

#include <string>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "pumrom/discretization.hpp"

namespace pumrom {

// Binary matrix container: magic "PUMROM01", u64 rows, u64 cols, then
// row-major float64 payload, all little-endian.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

// Fields are stored as single-column matrices with a JSON sidecar at
// path + ".json" describing the discretization they live on.
nlohmann::json discretization_descriptor(const Discretization& disc);
Discretization discretization_from_descriptor(const nlohmann::json& j);

void write_field(const std::string& path, const Discretization& disc,
                 const Field& u, const nlohmann::json& extra = {});
Field read_field(const std::string& path, const Discretization& expected);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace pumrom
