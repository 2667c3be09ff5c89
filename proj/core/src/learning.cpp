#include "mlr/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/symmetric_eigen.hpp"
#include "text_format.hpp"

namespace mlr {

namespace {

constexpr std::string_view kModelMagic = "MLR-MODEL";
constexpr int kModelVersion = 1;
constexpr double kSignTolerance = 1e-12;
constexpr double kLoadOrthonormalTolerance = 1e-5;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > kSignTolerance) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

}  // namespace

Eigen::VectorXd scale_image(const RgbImage& image) {
  const auto bytes = image.bytes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(image.pixel_count()));
  for (Eigen::Index p = 0; p < out.size(); ++p) {
    const auto at = static_cast<std::size_t>(p) * 3;
    const double luma = 0.299 * bytes[at] + 0.587 * bytes[at + 1] + 0.114 * bytes[at + 2];
    out(p) = std::clamp(std::round(luma), 0.0, 255.0);
  }
  return out;
}

Eigen::VectorXd scale_image(const RgbImage& image, int width, int height) {
  if (image.width() != width || image.height() != height) {
    throw Error(Errc::ShapeError, "image " + std::to_string(image.width()) + "x" +
                                      std::to_string(image.height()) + " does not match model " +
                                      std::to_string(width) + "x" + std::to_string(height));
  }
  return scale_image(image);
}

DataMatrix build_data_matrix(std::span<const Eigen::VectorXd> vectors) {
  if (vectors.size() < 2) {
    throw Error(Errc::InsufficientData, "need at least 2 samples, got " + std::to_string(vectors.size()));
  }
  const Eigen::Index d = vectors.front().size();
  if (d == 0) throw Error(Errc::ShapeError, "samples are empty");
  DataMatrix matrix(d, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].size() != d) {
      throw Error(Errc::ShapeError, "sample " + std::to_string(k) + " has dimension " +
                                        std::to_string(vectors[k].size()) + ", expected " + std::to_string(d));
    }
    matrix.col(static_cast<Eigen::Index>(k)) = vectors[k];
  }
  return matrix;
}

Eigen::VectorXd compute_mean(const DataMatrix& matrix) {
  if (matrix.cols() == 0 || matrix.rows() == 0) throw Error(Errc::InsufficientData, "empty data matrix");
  return matrix.rowwise().sum() / static_cast<double>(matrix.cols());
}

DataMatrix center(const DataMatrix& matrix, const Eigen::VectorXd& mean) {
  if (mean.size() != matrix.rows()) {
    throw Error(Errc::ShapeError, "mean has dimension " + std::to_string(mean.size()) + ", data has " +
                                      std::to_string(matrix.rows()));
  }
  return matrix.colwise() - mean;
}

EigenModel fit_eigenspace(const DataMatrix& phi, std::size_t n_kept, EigenRoute route) {
  const Eigen::Index d = phi.rows();
  const Eigen::Index t = phi.cols();
  if (t < 2) throw Error(Errc::InsufficientData, "need at least 2 samples");
  if (n_kept < 1 || n_kept > static_cast<std::size_t>(t - 1) || n_kept > static_cast<std::size_t>(d)) {
    throw Error(Errc::ConfigError, "n_kept=" + std::to_string(n_kept) + " outside [1, min(t-1, d)] with t=" +
                                       std::to_string(t) + ", d=" + std::to_string(d));
  }
  if (route == EigenRoute::Auto) route = d > t ? EigenRoute::Gram : EigenRoute::Direct;

  const Eigen::MatrixXd scatter =
      route == EigenRoute::Gram ? Eigen::MatrixXd(phi.transpose() * phi) : Eigen::MatrixXd(phi * phi.transpose());
  const linalg::SymmetricEigen eig = linalg::symmetric_eigen(scatter);

  const double top = eig.values.size() > 0 ? eig.values(0) : 0.0;
  if (!(top > 0.0)) throw Error(Errc::InsufficientVariance, "data has no variance");

  Eigen::Index usable = 0;
  while (usable < static_cast<Eigen::Index>(n_kept) && usable < eig.values.size() &&
         eig.values(usable) / top >= kRankTolerance) {
    ++usable;
  }

  EigenModel model;
  model.eigenvalues.resize(usable);
  model.singular_values.resize(usable);
  model.components.resize(d, usable);
  for (Eigen::Index k = 0; k < usable; ++k) {
    Eigen::VectorXd nu;
    if (route == EigenRoute::Gram) {
      nu = phi * eig.vectors.col(k);
      // One modified Gram-Schmidt sweep keeps small-eigenvalue directions
      // orthogonal to the dominant ones.
      for (Eigen::Index j = 0; j < k; ++j) nu -= model.components.col(j).dot(nu) * model.components.col(j);
      const double norm = nu.norm();
      if (!(norm > 0.0)) throw Error(Errc::NumericalError, "Gram route produced a null direction");
      nu /= norm;
    } else {
      nu = eig.vectors.col(k);
      nu.normalize();
    }
    fix_sign(nu);
    model.components.col(k) = nu;
    const double sigma = std::sqrt(eig.values(k));
    model.singular_values(k) = sigma;
    model.eigenvalues(k) = sigma * sigma;
  }
  return model;
}

DataMatrix session_data_matrix(const LoadedSession& session) {
  const auto& manifest = session.manifest();
  std::vector<Eigen::VectorXd> vectors;
  vectors.reserve(session.size());
  for (std::size_t k = 0; k < session.size(); ++k) {
    vectors.push_back(scale_image(session.read_image(k), manifest.image_width, manifest.image_height));
  }
  return build_data_matrix(vectors);
}

EigenModel learn_session(const LoadedSession& session, std::size_t n_kept) {
  if (session.size() >= 2 && n_kept > session.size() - 1) {
    throw Error(Errc::ConfigError, "n_kept=" + std::to_string(n_kept) + " exceeds t-1=" +
                                       std::to_string(session.size() - 1));
  }
  const DataMatrix data = session_data_matrix(session);
  const Eigen::VectorXd mean = compute_mean(data);
  EigenModel model = fit_eigenspace(center(data, mean), n_kept);
  model.mean = mean;
  model.width = session.manifest().image_width;
  model.height = session.manifest().image_height;
  model.source_label = session.label();
  return model;
}

EigenModel truncate(const EigenModel& model, std::size_t n) {
  if (n > static_cast<std::size_t>(model.n_kept())) {
    throw Error(Errc::ConfigError, "cannot keep " + std::to_string(n) + " of " + std::to_string(model.n_kept()) +
                                       " components");
  }
  EigenModel out = model;
  const auto k = static_cast<Eigen::Index>(n);
  out.eigenvalues = model.eigenvalues.head(k);
  out.singular_values = model.singular_values.head(k);
  out.components = model.components.leftCols(k);
  return out;
}

double reconstruction_sse(const EigenModel& model, const DataMatrix& data) {
  if (data.rows() != model.mean.size()) throw Error(Errc::ShapeError, "data dimension does not match model");
  const Eigen::MatrixXd phi = data.colwise() - model.mean;
  const Eigen::MatrixXd omegas = model.components.transpose() * phi;
  return (phi - model.components * omegas).squaredNorm();
}

std::string format_model(const EigenModel& model) {
  using detail::format_real17;
  const auto write_vector = [](std::ostringstream& out, const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_real17(v(i));
    out << '\n';
  };
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << model.width << '\n' << model.height << '\n' << model.dimension() << '\n' << model.n_kept() << '\n';
  out << model.source_label << '\n';
  write_vector(out, model.mean);
  write_vector(out, model.eigenvalues);
  write_vector(out, model.singular_values);
  for (Eigen::Index k = 0; k < model.n_kept(); ++k) write_vector(out, model.components.col(k));
  return out.str();
}

EigenModel parse_model(std::string_view text) {
  using detail::parse_int;
  using detail::parse_real;

  std::istringstream in{std::string(text)};
  std::string line;
  const auto next_line = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) throw Error(Errc::ParseError, std::string("model: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  const auto read_vector = [&](Eigen::Index size, const char* what) {
    std::istringstream row(next_line(what));
    Eigen::VectorXd v(size);
    std::string token;
    Eigen::Index i = 0;
    while (row >> token) {
      if (i == size) throw Error(Errc::ParseError, std::string("model: too many values in ") + what);
      v(i++) = parse_real(token, what);
    }
    if (i != size) throw Error(Errc::ParseError, std::string("model: too few values in ") + what);
    return v;
  };

  const std::string header = next_line("header");
  std::istringstream header_in(header);
  std::string magic;
  std::string version;
  header_in >> magic >> version;
  if (magic != kModelMagic) throw Error(Errc::ParseError, "model: bad header '" + header + "'");
  if (version != std::to_string(kModelVersion)) {
    throw Error(Errc::VersionError, "model: unsupported version '" + version + "'");
  }

  EigenModel model;
  model.width = parse_int<int>(next_line("width"), "width");
  model.height = parse_int<int>(next_line("height"), "height");
  const auto d = parse_int<Eigen::Index>(next_line("d"), "d");
  const auto n = parse_int<Eigen::Index>(next_line("n"), "n");
  model.source_label = next_line("source_label");
  if (model.width <= 0 || model.height <= 0 || d != Eigen::Index{model.width} * model.height) {
    throw Error(Errc::CorruptModel, "model: d does not equal width*height");
  }
  if (n < 1 || n > d) throw Error(Errc::CorruptModel, "model: n out of range");

  model.mean = read_vector(d, "mean");
  model.eigenvalues = read_vector(n, "eigenvalues");
  model.singular_values = read_vector(n, "singular values");
  model.components.resize(d, n);
  for (Eigen::Index k = 0; k < n; ++k) model.components.col(k) = read_vector(d, "component");

  for (Eigen::Index k = 0; k < n; ++k) {
    const double lambda = model.eigenvalues(k);
    const double sigma = model.singular_values(k);
    if (!(lambda >= 0.0) || !(sigma >= 0.0) || lambda != sigma * sigma) {
      throw Error(Errc::CorruptModel, "model: eigenvalue " + std::to_string(k) + " inconsistent with singular value");
    }
    if (k > 0 && lambda > model.eigenvalues(k - 1)) {
      throw Error(Errc::CorruptModel, "model: eigenvalues not descending");
    }
  }
  const Eigen::MatrixXd gram = model.components.transpose() * model.components;
  const double deviation = (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(deviation <= kLoadOrthonormalTolerance)) {
    throw Error(Errc::CorruptModel, "model: components not orthonormal");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const EigenModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  const std::string text = format_model(model);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

EigenModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model(text);
}

}  // namespace mlr
