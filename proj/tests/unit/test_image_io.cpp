#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "batdiff/error.hpp"
#include "batdiff/image_io.hpp"
#include "helpers.hpp"

using namespace batdiff;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "batdiff_unit_io";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Image random_8bit(int h, int w, int c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  Image img(h, w, c);
  for (double& v : img.data()) v = u(rng) / 255.0;
  return img;
}

}  // namespace

TEST_SUITE("image_io") {
  TEST_CASE("2x2 8-bit PGM is normalized by 255") {
    const fs::path p = scratch_dir() / "tiny.pgm";
    write_bytes(p, std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
    const Image img = load_image(p);
    REQUIRE(img.channels() == 1);
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(0, 0, 1) == 1.0);
    CHECK(img.at(0, 1, 0) == 128.0 / 255.0);
    CHECK(img.at(0, 1, 1) == 64.0 / 255.0);
  }

  TEST_CASE("16-bit PGM with comments") {
    const fs::path p = scratch_dir() / "deep.pgm";
    write_bytes(p, std::string("P5\n# comment\n1 1\n65535\n") + std::string("\x80\x00", 2));
    CHECK(load_image(p).at(0, 0, 0) == 32768.0 / 65535.0);
  }

  TEST_CASE("1x1 PNG with value 255 loads as 1.0") {
    const fs::path p = scratch_dir() / "one.png";
    save_image(Image(1, 1, 1, 1.0), p);
    const Image img = load_image(p);
    CHECK(img.height() == 1);
    CHECK(img.at(0, 0, 0) == 1.0);
  }

  TEST_CASE("save then load is exact for 8-bit content, 100 random images") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dim(1, 23);
    const fs::path dir = scratch_dir();
    for (int k = 0; k < 100; ++k) {
      const int c = (k % 2) ? 3 : 1;
      const Image img = random_8bit(dim(rng), dim(rng), c, rng);
      for (const char* ext : {".png", c == 1 ? ".pgm" : ".ppm"}) {
        const fs::path p = dir / ("rt" + std::string(ext));
        save_image(img, p);
        const Image back = load_image(p);
        REQUIRE(back.same_shape(img));
        CHECK(back == img);
        save_image(back, dir / ("rt2" + std::string(ext)));
        CHECK(read_bytes(p) == read_bytes(dir / ("rt2" + std::string(ext))));
      }
    }
  }

  TEST_CASE("export clamps and rounds to nearest") {
    Image img(1, 4, 1);
    img.at(0, 0, 0) = -0.2;
    img.at(0, 0, 1) = 1.7;
    img.at(0, 0, 2) = 0.5;
    img.at(0, 0, 3) = 100.4 / 255.0;
    const Image q = quantize8(img);
    CHECK(q.at(0, 0, 0) == 0.0);
    CHECK(q.at(0, 0, 1) == 1.0);
    CHECK(q.at(0, 0, 2) == 128.0 / 255.0);
    CHECK(q.at(0, 0, 3) == 100.0 / 255.0);
    const fs::path p = scratch_dir() / "clamp.pgm";
    save_image(img, p);
    CHECK(load_image(p) == q);
  }

  TEST_CASE("errors are IoError") {
    const fs::path dir = scratch_dir();
    CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
    write_bytes(dir / "bad.png", "not a png at all");
    CHECK_THROWS_AS(load_image(dir / "bad.png"), IoError);
    write_bytes(dir / "trunc.pgm", "P5\n4 4\n255\nabc");
    CHECK_THROWS_AS(load_image(dir / "trunc.pgm"), IoError);
    write_bytes(dir / "ascii.pgm", "P2\n1 1\n255\n7\n");
    CHECK_THROWS_AS(load_image(dir / "ascii.pgm"), IoError);
    CHECK_THROWS_AS(save_image(Image(2, 2, 1), dir / "x.jpg"), IoError);
    CHECK_THROWS_AS(save_image(Image(2, 2, 3), dir / "x.pgm"), IoError);
  }
}
