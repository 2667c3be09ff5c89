#include <gtest/gtest.h>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "test_support.hpp"

namespace mlr {
namespace {

TEST(Ppm, SingleWhitePixelLayout) {
  RgbImage image(1, 1, 255);
  const std::string bytes = encode_ppm(image);
  EXPECT_EQ(bytes, std::string("P6\n1 1\n255\n\xFF\xFF\xFF", 14));
}

TEST(Ppm, RowMajorInterleaved) {
  RgbImage image(2, 1);
  image.set(0, 0, 1, 2, 3);
  image.set(1, 0, 4, 5, 6);
  const std::string bytes = encode_ppm(image);
  EXPECT_EQ(bytes.substr(bytes.size() - 6), std::string("\x01\x02\x03\x04\x05\x06", 6));
}

TEST(Ppm, RandomRastersRoundTripByteIdentical) {
  std::mt19937 rng(7);
  testing::TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> side(1, 40);
    const RgbImage image = testing::random_image(rng, side(rng), side(rng));
    const auto path = dir.path() / "img.ppm";
    write_ppm(path, image);
    const RgbImage back = read_ppm(path);
    EXPECT_EQ(back, image);
    EXPECT_EQ(encode_ppm(back), encode_ppm(image));
  }
}

TEST(Ppm, PaperScaleImageAccepted) {
  RgbImage image(900, 700, 17);
  image.set(899, 699, 1, 2, 3);
  const RgbImage back = decode_ppm(encode_ppm(image));
  EXPECT_EQ(back.width(), 900);
  EXPECT_EQ(back.height(), 700);
  EXPECT_EQ(back, image);
}

TEST(Ppm, AcceptsCommentsAndLooseWhitespace) {
  const std::string text = std::string("P6 # comment\n 2\t1 \n# another\n255\n") + std::string(6, '\x7f');
  const RgbImage image = decode_ppm(text);
  EXPECT_EQ(image.width(), 2);
  EXPECT_EQ(image.bytes()[5], 0x7f);
}

TEST(Ppm, MalformedInputsRejected) {
  const auto expect_parse_error = [](const std::string& text) {
    try {
      decode_ppm(text);
      ADD_FAILURE() << "accepted: " << text.substr(0, 20);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ParseError);
    }
  };
  expect_parse_error("P5\n1 1\n255\n\x01");
  expect_parse_error("P6\n1\n");
  expect_parse_error("P6\n0 1\n255\n");
  expect_parse_error("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06");
  expect_parse_error("P6\n2 2\n255\n\x01\x02\x03");  // truncated payload
  expect_parse_error("");
}

TEST(Ppm, MissingFileIsIoError) {
  try {
    read_ppm("/nonexistent/dir/file.ppm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}

}  // namespace
}  // namespace mlr
