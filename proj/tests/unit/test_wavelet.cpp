#include <doctest.h>

#include <filesystem>
#include <random>

#include "batdiff/error.hpp"
#include "batdiff/image_io.hpp"
#include "batdiff/synthetic.hpp"
#include "batdiff/wavelet.hpp"
#include "helpers.hpp"

using namespace batdiff;

namespace {

double variance(const Image& img) {
  double mean = 0.0;
  for (double v : img.data()) mean += v;
  mean /= static_cast<double>(img.element_count());
  double var = 0.0;
  for (double v : img.data()) var += (v - mean) * (v - mean);
  return var / static_cast<double>(img.element_count());
}

Image circular_shift(const Image& img, int dy, int dx) {
  Image out(img.height(), img.width(), img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        out.at(c, (y + dy) % img.height(), (x + dx) % img.width()) = img.at(c, y, x);
  return out;
}

}  // namespace

TEST_SUITE("wavelet") {
  TEST_CASE("level-1 kernel is the binomial row C(4,k)/16") {
    const auto k = dilated_b3_kernel(1);
    REQUIRE(k.size() == 5);
    const double binom[5] = {1, 4, 6, 4, 1};
    for (int i = 0; i < 5; ++i) CHECK(k[static_cast<std::size_t>(i)] == binom[i] / 16.0);
  }

  TEST_CASE("level-2 kernel inserts one hole between taps") {
    const auto k = dilated_b3_kernel(2);
    const std::vector<double> want = {1 / 16.0, 0, 4 / 16.0, 0, 6 / 16.0, 0, 4 / 16.0, 0, 1 / 16.0};
    CHECK(k == want);
  }

  TEST_CASE("every level has unit DC gain and support 4*2^(s-1)+1") {
    for (int s = 1; s <= 7; ++s) {
      const auto k = dilated_b3_kernel(s);
      CHECK(k.size() == static_cast<std::size_t>(4 * (1 << (s - 1)) + 1));
      double sum = 0.0;
      for (double v : k) sum += v;
      CHECK(sum == 1.0);
    }
    CHECK_THROWS_AS(dilated_b3_kernel(0), ArgumentError);
  }

  TEST_CASE("constant image has zero details and c^(S) equal to the input") {
    const Image img(20, 17, 2, 0.42);
    const AtrousPyramid p = atrous_decompose(img, 4);
    CHECK(p.levels() == 4);
    for (int s = 1; s <= 4; ++s) CHECK(test::max_abs(p.detail(s)) < 1e-15);
    CHECK(test::max_abs_diff(p.coarsest(), img) < 1e-15);
  }

  TEST_CASE("centered impulse at S=1 gives delta minus the 2D kernel") {
    const int n = 11;
    Image delta(n, n, 1, 0.0);
    delta.at(0, 5, 5) = 1.0;
    const AtrousPyramid p = atrous_decompose(delta, 1);
    const double k1[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        // Direct 2D convolution of the impulse with k (x) k.
        double conv = 0.0;
        for (int a = -2; a <= 2; ++a)
          for (int b = -2; b <= 2; ++b)
            conv += k1[a + 2] * k1[b + 2] *
                    delta.at(0, test::mirror(y - a, n), test::mirror(x - b, n));
        const double want = (y == 5 && x == 5 ? 1.0 : 0.0) - conv;
        CHECK(p.detail(1).at(0, y, x) == doctest::Approx(want).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("smooth planes follow c^(s) = c^(s-1) * k^(s)") {
    std::mt19937_64 rng(4);
    const Image img = test::random_image(19, 23, 1, rng);
    const AtrousPyramid p = atrous_decompose(img, 3);
    for (int s = 1; s <= 3; ++s) {
      const auto k = dilated_b3_kernel(s);
      const int r = static_cast<int>(k.size() / 2);
      const Image& prev = p.smooth[static_cast<std::size_t>(s - 1)];
      for (int y = 0; y < 19; y += 3) {
        for (int x = 0; x < 23; x += 4) {
          double acc = 0.0;
          for (int a = -r; a <= r; ++a)
            for (int b = -r; b <= r; ++b)
              acc += k[static_cast<std::size_t>(a + r)] * k[static_cast<std::size_t>(b + r)] *
                     prev.at(0, test::mirror(y + a, 19), test::mirror(x + b, 23));
          CHECK(p.smooth[static_cast<std::size_t>(s)].at(0, y, x) ==
                doctest::Approx(acc).epsilon(1e-13));
        }
      }
    }
  }

  TEST_CASE("perfect reconstruction over 100 random 16x16 images") {
    std::mt19937_64 rng(16);
    for (int k = 0; k < 100; ++k) {
      const Image img = test::random_image(16, 16, 1, rng);
      const Image back = reconstruct(atrous_decompose(img, 1 + k % 7));
      CHECK(test::max_abs_diff(back, img) <= 1e-12 * test::max_abs(img));
    }
  }

  TEST_CASE("c^(s-1) = c^(s) + w^(s)") {
    std::mt19937_64 rng(2);
    const AtrousPyramid p = atrous_decompose(test::random_image(33, 8, 3, rng), 5);
    for (int s = 1; s <= 5; ++s) {
      const Image sum = p.smooth[static_cast<std::size_t>(s)] + p.detail(s);
      CHECK(test::max_abs_diff(sum, p.smooth[static_cast<std::size_t>(s - 1)]) < 1e-15);
    }
  }

  TEST_CASE("shift covariance with periodic boundaries") {
    std::mt19937_64 rng(12);
    const Image img = test::random_image(32, 32, 1, rng);
    const AtrousPyramid a = atrous_decompose(img, 3, Boundary::kPeriodic);
    const AtrousPyramid b = atrous_decompose(circular_shift(img, 5, 11), 3, Boundary::kPeriodic);
    for (int s = 1; s <= 3; ++s) {
      CHECK(test::max_abs_diff(circular_shift(a.detail(s), 5, 11), b.detail(s)) < 1e-13);
    }
    CHECK(test::max_abs_diff(circular_shift(a.coarsest(), 5, 11), b.coarsest()) < 1e-13);
  }

  TEST_CASE("smoothing reduces variance on a structured image") {
    const AtrousPyramid p = atrous_decompose(checkerboard_stripes(64), 6);
    for (int s = 1; s <= 6; ++s) {
      CHECK(variance(p.smooth[static_cast<std::size_t>(s)]) <=
            variance(p.smooth[static_cast<std::size_t>(s - 1)]));
    }
  }

  TEST_CASE("partial targets") {
    std::mt19937_64 rng(30);
    const Image img = test::random_image(24, 24, 1, rng);
    const AtrousPyramid p = atrous_decompose(img, 4);

    const auto unit = partial_targets(p, 1.0);
    REQUIRE(unit.size() == 5);
    CHECK(unit[0] == p.coarsest());
    CHECK(test::max_abs_diff(unit[4], img) <= 1e-12);

    const auto scaled = partial_targets(p, 0.8);
    for (int s = 1; s <= 4; ++s) {
      const Image step = scaled[static_cast<std::size_t>(s)] - scaled[static_cast<std::size_t>(s - 1)];
      CHECK(test::max_abs_diff(step, p.detail(s) * 0.8) < 1e-14);
    }

    const auto flat = partial_targets(atrous_decompose(Image(12, 12, 1, 0.25), 3), 1.5);
    for (const auto& t : flat) {
      for (double v : t.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
    CHECK_THROWS_AS(partial_targets(p, 0.0), ArgumentError);
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(atrous_decompose(Image(4, 4, 1), 0), ArgumentError);
    WaveletConfig cfg;
    cfg.detail_gain = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  }

  TEST_CASE("subband dump writes one PNG per plane") {
    const auto dir = std::filesystem::temp_directory_path() / "batdiff_unit_subbands";
    std::filesystem::remove_all(dir);
    dump_subbands(atrous_decompose(checkerboard_stripes(32), 3), dir);
    for (const char* name : {"coarse.png", "detail_1.png", "detail_2.png", "detail_3.png"}) {
      const Image img = load_image(dir / name);
      CHECK(img.height() == 32);
      double lo = 1.0;
      double hi = 0.0;
      for (double v : img.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(lo == 0.0);
      CHECK(hi == 1.0);
    }
  }
}
