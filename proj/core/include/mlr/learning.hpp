#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "mlr/image.hpp"
#include "mlr/memory.hpp"

namespace mlr {

/// Column-major data matrix: column k is the k-th vectorized grayscale image.
using DataMatrix = Eigen::MatrixXd;

/// Learned eigenspace. `components` holds one orthonormal direction per
/// column (d x n), ordered by descending eigenvalue of phi * phi^T.
struct EigenModel {
  Eigen::VectorXd mean;             // d
  Eigen::VectorXd eigenvalues;      // n, lambda_i == singular_values_i^2 bit-for-bit
  Eigen::VectorXd singular_values;  // n
  Eigen::MatrixXd components;       // d x n
  int width = 0;
  int height = 0;
  std::string source_label;

  Eigen::Index dimension() const noexcept { return components.rows(); }
  Eigen::Index n_kept() const noexcept { return components.cols(); }
};

/// Which matrix gets eigendecomposed. `Auto` takes the t x t Gram matrix
/// whenever d > t and the d x d scatter matrix otherwise.
enum class EigenRoute { Auto, Direct, Gram };

/// Eigenvalues below this fraction of the largest are treated as rank loss.
inline constexpr double kRankTolerance = 1e-12;

/// RGB -> BT.601 luma rounded to an integer gray level, flattened row-major.
Eigen::VectorXd scale_image(const RgbImage& image);
/// As above, rejecting images whose geometry differs with ShapeError.
Eigen::VectorXd scale_image(const RgbImage& image, int width, int height);

DataMatrix build_data_matrix(std::span<const Eigen::VectorXd> vectors);
Eigen::VectorXd compute_mean(const DataMatrix& matrix);
DataMatrix center(const DataMatrix& matrix, const Eigen::VectorXd& mean);

/// Top `n_kept` eigenpairs of phi * phi^T. Mean and geometry are left empty.
/// Fewer than `n_kept` components come back when the data is rank deficient.
EigenModel fit_eigenspace(const DataMatrix& phi, std::size_t n_kept,
                          EigenRoute route = EigenRoute::Auto);

/// scale_image -> build_data_matrix -> compute_mean -> center -> fit_eigenspace.
EigenModel learn_session(const LoadedSession& session, std::size_t n_kept);

/// Loads and scales every image of a session into a data matrix.
DataMatrix session_data_matrix(const LoadedSession& session);

/// Copy of `model` restricted to its first `n` components.
EigenModel truncate(const EigenModel& model, std::size_t n);

/// Sum over columns of squared residuals after projecting onto the model.
double reconstruction_sse(const EigenModel& model, const DataMatrix& data);

/// `MLR-MODEL 1` text format.
std::string format_model(const EigenModel& model);
EigenModel parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const EigenModel& model);
EigenModel load_model(const std::filesystem::path& path);

}  // namespace mlr
