#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace epicausal {

/// Panel-shaped CSV helpers. Matrices are written as J data rows under a
/// `t1,...,tT` header; doubles use %.17g so values round-trip exactly.

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
void write_matrix_csv(const Eigen::MatrixXi& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXi read_imatrix_csv(const std::filesystem::path& path);

/// Single named column, one value per row.
void write_vector_csv(const Eigen::VectorXd& v, const std::string& name,
                      const std::filesystem::path& path);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);
std::string format_double(double x);  // %.17g

}  // namespace epicausal
