#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mlr/error.hpp"
#include "mlr/learning.hpp"
#include "mlr/memory.hpp"
#include "mlr/recognition.hpp"
#include "test_support.hpp"

namespace mlr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mlr::Error thrown";
  return Errc::IoError;
}

MatrixXd columns(std::initializer_list<std::initializer_list<double>> cols) {
  std::vector<VectorXd> v;
  for (const auto& c : cols) {
    VectorXd x(static_cast<Eigen::Index>(c.size()));
    Eigen::Index i = 0;
    for (double value : c) x(i++) = value;
    v.push_back(x);
  }
  return build_data_matrix(v);
}

TEST(ScaleImage, Bt601Luma) {
  RgbImage image(3, 1);
  image.set(0, 0, 255, 0, 0);
  image.set(1, 0, 255, 255, 255);
  image.set(2, 0, 0, 0, 0);
  const VectorXd g = scale_image(image);
  ASSERT_EQ(g.size(), 3);
  EXPECT_EQ(g(0), 76.0);
  EXPECT_EQ(g(1), 255.0);
  EXPECT_EQ(g(2), 0.0);
}

TEST(ScaleImage, RowMajorFlattening) {
  RgbImage image(2, 2);
  image.set_gray(1, 0, 10);
  image.set_gray(0, 1, 20);
  const VectorXd g = scale_image(image);
  EXPECT_EQ(g(1), 10.0);
  EXPECT_EQ(g(2), 20.0);
}

TEST(ScaleImage, GeometryMismatchIsShapeError) {
  EXPECT_EQ(error_of([] { scale_image(RgbImage(4, 3), 3, 4); }), Errc::ShapeError);
}

TEST(DataMatrix, MeanAndCentering) {
  const MatrixXd data = columns({{2, 0}, {0, 2}, {1, 1}});
  const VectorXd mean = compute_mean(data);
  EXPECT_EQ(mean, (VectorXd(2) << 1, 1).finished());
  const MatrixXd phi = center(data, mean);
  EXPECT_EQ(phi, columns({{1, -1}, {-1, 1}, {0, 0}}));
}

TEST(DataMatrix, ShapeChecks) {
  EXPECT_EQ(error_of([] { columns({{1, 2}}); }), Errc::InsufficientData);
  EXPECT_EQ(error_of([] { columns({{1, 2}, {1, 2, 3}}); }), Errc::ShapeError);
}

TEST(FitEigenspace, HandWorkedExample) {
  const MatrixXd phi = columns({{1, -1}, {-1, 1}, {0, 0}});
  for (auto route : {EigenRoute::Direct, EigenRoute::Gram, EigenRoute::Auto}) {
    const EigenModel m = fit_eigenspace(phi, 1, route);
    ASSERT_EQ(m.n_kept(), 1);
    EXPECT_NEAR(m.eigenvalues(0), 4.0, 1e-12);
    EXPECT_NEAR(m.singular_values(0), 2.0, 1e-12);
    EXPECT_NEAR(m.components(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(m.components(1, 0), -1.0 / std::sqrt(2.0), 1e-12);
  }
}

TEST(FitEigenspace, RankLimitsComponents) {
  const MatrixXd data = columns({{0, 0, 0, 0}, {3, 1, 4, 1}});
  const MatrixXd phi = center(data, compute_mean(data));
  const EigenModel m = fit_eigenspace(phi, 1);
  EXPECT_EQ(m.n_kept(), 1);
  EXPECT_NEAR(m.eigenvalues(0), phi.squaredNorm(), 1e-9);
}

TEST(FitEigenspace, ErrorCases) {
  const MatrixXd phi3 = MatrixXd::Random(10, 3);
  EXPECT_EQ(error_of([&] { fit_eigenspace(phi3, 5); }), Errc::ConfigError);
  EXPECT_EQ(error_of([&] { fit_eigenspace(phi3, 0); }), Errc::ConfigError);
  EXPECT_EQ(error_of([&] { fit_eigenspace(MatrixXd::Random(10, 1), 1); }), Errc::InsufficientData);
  EXPECT_EQ(error_of([&] { fit_eigenspace(MatrixXd::Zero(10, 4), 2); }), Errc::InsufficientVariance);
}

// Property: both routes agree with the direct oracle, signs are canonical,
// lambda == Lambda^2 exactly and eigenvalues never ascend.
TEST(FitEigenspace, RoutesAgreeWithOracle) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> dim(2, 20);
  std::uniform_int_distribution<int> samples(3, 10);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = dim(rng);
    const int t = samples(rng);
    const MatrixXd data = testing::random_matrix(rng, d, t, 0.0, 255.0);
    const MatrixXd phi = center(data, compute_mean(data));
    const auto n = static_cast<std::size_t>(std::min(t - 1, d));
    const auto oracle = testing::direct_scatter_eigen(phi);
    for (auto route : {EigenRoute::Direct, EigenRoute::Gram}) {
      const EigenModel m = fit_eigenspace(phi, n, route);
      ASSERT_EQ(m.n_kept(), static_cast<Eigen::Index>(n));
      for (Eigen::Index k = 0; k < m.n_kept(); ++k) {
        EXPECT_NEAR(m.eigenvalues(k), oracle.values(k), 1e-8 * oracle.values(0));
        EXPECT_LT(testing::distance_up_to_sign(m.components.col(k), oracle.vectors.col(k)), 1e-8);
        EXPECT_EQ(m.eigenvalues(k), m.singular_values(k) * m.singular_values(k));
        if (k > 0) EXPECT_LE(m.eigenvalues(k), m.eigenvalues(k - 1));
        const VectorXd c = m.components.col(k);
        for (Eigen::Index i = 0; i < c.size(); ++i) {
          if (std::abs(c(i)) > 1e-12) {
            EXPECT_GT(c(i), 0.0);
            break;
          }
        }
      }
      EXPECT_LT((m.components.transpose() * m.components - MatrixXd::Identity(m.n_kept(), m.n_kept()))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-10);
    }
  }
}

// Property: the eigenvalues of a full-rank fit sum to ||phi||_F^2.
TEST(FitEigenspace, TraceIdentity) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd data = testing::random_matrix(rng, 300, 12, 0.0, 255.0);
    const MatrixXd phi = center(data, compute_mean(data));
    const EigenModel m = fit_eigenspace(phi, 11);
    EXPECT_NEAR(m.eigenvalues.sum(), phi.squaredNorm(), 1e-9 * phi.squaredNorm());
  }
}

EigenModel full_model(const MatrixXd& data, std::size_t n) {
  const VectorXd mean = compute_mean(data);
  EigenModel m = fit_eigenspace(center(data, mean), n);
  m.mean = mean;
  return m;
}

TEST(Reconstruction, FullRankIsExactAndSseMonotone) {
  std::mt19937 rng(21);
  const MatrixXd data = testing::random_matrix(rng, 400, 15, 0.0, 255.0);
  const EigenModel m = full_model(data, 14);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const VectorXd x = data.col(j);
    EXPECT_LT((reconstruct(m, project(m, x)) - x).cwiseAbs().maxCoeff(), 1e-6);
  }
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 14; ++n) {
    const double sse = reconstruction_sse(truncate(m, n), data);
    EXPECT_LE(sse, previous * (1 + 1e-12));
    previous = sse;
  }
  EXPECT_LT(previous, 1e-12 * data.squaredNorm());
  EXPECT_EQ(error_of([&] { truncate(m, 15); }), Errc::ConfigError);
}

EigenModel sample_model(std::mt19937& rng, int w, int h, int t, std::size_t n) {
  EigenModel m = full_model(testing::random_matrix(rng, w * h, t, 0.0, 255.0), n);
  m.width = w;
  m.height = h;
  m.source_label = "2024-01-01T10-00-00";
  return m;
}

TEST(ModelFile, RoundTripIsExactAndByteStable) {
  std::mt19937 rng(31);
  const EigenModel m = sample_model(rng, 8, 6, 10, 5);
  testing::TempDir dir;
  save_model(dir.path() / "a.model", m);
  const EigenModel back = load_model(dir.path() / "a.model");
  EXPECT_EQ(back.width, 8);
  EXPECT_EQ(back.height, 6);
  EXPECT_EQ(back.source_label, m.source_label);
  EXPECT_LE((back.mean - m.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((back.components - m.components).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.eigenvalues, m.eigenvalues);
  EXPECT_EQ(back.singular_values, m.singular_values);
  save_model(dir.path() / "b.model", back);
  EXPECT_EQ(format_model(back), format_model(m));
}

TEST(ModelFile, HeaderLayout) {
  std::mt19937 rng(32);
  const std::string text = format_model(sample_model(rng, 4, 3, 5, 2));
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u + 3u + 2u);
  EXPECT_EQ(lines[0], "MLR-MODEL 1");
  EXPECT_EQ(lines[1], "4");
  EXPECT_EQ(lines[2], "3");
  EXPECT_EQ(lines[3], "12");
  EXPECT_EQ(lines[4], "2");
  EXPECT_EQ(lines[5], "2024-01-01T10-00-00");
}

std::string replace_line(const std::string& text, std::size_t index, const std::string& with) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  for (std::size_t i = 0; std::getline(in, line); ++i) out << (i == index ? with : line) << '\n';
  return out.str();
}

TEST(ModelFile, Rejections) {
  std::mt19937 rng(33);
  const EigenModel m = sample_model(rng, 4, 3, 6, 3);
  const std::string text = format_model(m);

  EXPECT_EQ(error_of([&] { parse_model(replace_line(text, 0, "MLR-MODEL 2")); }), Errc::VersionError);
  EXPECT_EQ(error_of([&] { parse_model(replace_line(text, 0, "NOT-A-MODEL 1")); }), Errc::ParseError);
  EXPECT_EQ(error_of([&] { parse_model(replace_line(text, 3, "13")); }), Errc::CorruptModel);
  EXPECT_EQ(error_of([&] { parse_model(text.substr(0, text.size() / 2)); }), Errc::ParseError);

  EigenModel ascending = m;
  std::swap(ascending.eigenvalues(0), ascending.eigenvalues(2));
  std::swap(ascending.singular_values(0), ascending.singular_values(2));
  EXPECT_EQ(error_of([&] { parse_model(format_model(ascending)); }), Errc::CorruptModel);

  EigenModel mismatched = m;
  mismatched.eigenvalues(1) = std::nextafter(mismatched.eigenvalues(1), 0.0);
  EXPECT_EQ(error_of([&] { parse_model(format_model(mismatched)); }), Errc::CorruptModel);

  EigenModel skewed = m;
  skewed.components.col(1) += 1e-3 * skewed.components.col(0);
  EXPECT_EQ(error_of([&] { parse_model(format_model(skewed)); }), Errc::CorruptModel);

  testing::TempDir dir;
  EXPECT_EQ(error_of([&] { load_model(dir.path() / "absent.model"); }), Errc::IoError);
}

TEST(LearnSession, EndToEndOnRecordedImages) {
  testing::TempDir root;
  std::mt19937 rng(41);
  const std::string label = "2024-02-02T12-00-00";
  auto writer = SessionWriter::open(root.path(), label, 8, 6, 1.0);
  for (int i = 0; i < 12; ++i) writer.append(testing::random_image(rng, 8, 6), IrDistances{}, {}, {});
  const LoadedSession session = load_session(root.path(), label);

  const DataMatrix data = session_data_matrix(session);
  EXPECT_EQ(data.rows(), 48);
  EXPECT_EQ(data.cols(), 12);

  const EigenModel m = learn_session(session, 5);
  EXPECT_EQ(m.n_kept(), 5);
  EXPECT_EQ(m.width, 8);
  EXPECT_EQ(m.height, 6);
  EXPECT_EQ(m.source_label, label);
  EXPECT_LE((m.mean - compute_mean(data)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(error_of([&] { learn_session(session, 12); }), Errc::ConfigError);

  // Each stored sample shrinks from d gray levels to n coefficients.
  const ProjectedDataset ds = build_projected_dataset(m, session);
  ASSERT_EQ(ds.omegas.size(), 12u);
  EXPECT_EQ(ds.omegas.front().size(), 5);
  EXPECT_DOUBLE_EQ(static_cast<double>(data.size()) / static_cast<double>(12 * ds.omegas.front().size()),
                   48.0 / 5.0);
}

TEST(LearnSession, TwoImagesGiveOneComponent) {
  testing::TempDir root;
  const std::string label = "2024-02-02T12-00-01";
  auto writer = SessionWriter::open(root.path(), label, 4, 4, 1.0);
  writer.append(RgbImage(4, 4, 10), IrDistances{}, {}, {});
  writer.append(RgbImage(4, 4, 200), IrDistances{}, {}, {});
  const auto session = load_session(root.path(), label);
  const EigenModel m = learn_session(session, 1);
  EXPECT_EQ(m.n_kept(), 1);
  // Two points 190 apart in each of 16 pixels: lambda = 2 * (95^2 * 16).
  EXPECT_NEAR(m.eigenvalues(0), 2.0 * 95.0 * 95.0 * 16.0, 1e-6);
  EXPECT_EQ(error_of([&] { learn_session(session, 2); }), Errc::ConfigError);
}

TEST(LearnSession, CameraSizedShape) {
  std::mt19937 rng(51);
  const MatrixXd data = testing::random_matrix(rng, 64 * 48, 600, 0.0, 255.0);
  const VectorXd mean = compute_mean(data);
  const EigenModel m = fit_eigenspace(center(data, mean), 5);
  EXPECT_EQ(m.components.rows(), 3072);
  EXPECT_EQ(m.components.cols(), 5);
}

}  // namespace
}  // namespace mlr
