#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "batdiff/adam.hpp"
#include "batdiff/checkpoint.hpp"
#include "batdiff/denoiser.hpp"
#include "batdiff/error.hpp"
#include "batdiff/schedule.hpp"
#include "helpers.hpp"

using namespace batdiff;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig c;
  c.channels = 1;
  c.features = 3;
  c.blocks = 1;
  c.embed_dim = 4;
  c.levels = 2;
  c.timesteps = 10;
  return c;
}

// Random non-zero weights everywhere, including the head.
DenoiserParams random_params(const DenoiserConfig& c, std::mt19937_64& rng, double scale = 0.4) {
  DenoiserParams p = DenoiserParams::zeros(c);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t i = 0; i < p.weights.total_size(); ++i) p.weights.flat(i) = u(rng);
  return p;
}

std::vector<TrainingSample> tiny_batch(const DenoiserConfig& c, std::mt19937_64& rng) {
  std::vector<TrainingSample> batch;
  for (int k = 0; k < 3; ++k) {
    TrainingSample s;
    s.input.scale = k % (c.levels + 1);
    s.input.t = 1 + 3 * k;
    s.input.x_t = gaussian_image(5, 4, c.channels, rng);
    if (s.input.scale > 0) s.input.parent = gaussian_image(5, 4, c.channels, rng);
    s.target = gaussian_image(5, 4, c.channels, rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace

TEST_SUITE("denoiser") {
  TEST_CASE("layout and initialization") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(1);
    const DenoiserParams p = DenoiserParams::initialize(c, rng);
    CHECK(p.weights.same_layout(denoiser_layout(c)));
    CHECK(p.weights.all_finite());
    DenoiserInput in;
    in.x_t = gaussian_image(6, 6, 1, rng);
    in.t = 3;
    CHECK(test::max_abs(predict_noise(in, p)) == 0.0);
  }

  TEST_CASE("time embedding is sin then cos over geometric frequencies") {
    const auto e = time_embedding(7, 10, 4);
    REQUIRE(e.size() == 4);
    const double pos = 700.0;
    CHECK(e[0] == doctest::Approx(std::sin(pos)).epsilon(1e-14));
    CHECK(e[1] == doctest::Approx(std::sin(pos / 100.0)).epsilon(1e-14));
    CHECK(e[2] == doctest::Approx(std::cos(pos)).epsilon(1e-14));
    CHECK(e[3] == doctest::Approx(std::cos(pos / 100.0)).epsilon(1e-14));
  }

  TEST_CASE("analytic gradient matches central differences") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(31);
    const DenoiserParams p = random_params(c, rng);
    const auto batch = tiny_batch(c, rng);
    const LossAndGrad lg = loss_and_grad(batch, p);
    CHECK(std::isfinite(lg.loss));

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.weights.total_size(); ++i) {
      DenoiserParams plus = p;
      DenoiserParams minus = p;
      plus.weights.flat(i) += h;
      minus.weights.flat(i) -= h;
      const double fd =
          (loss_and_grad(batch, plus).loss - loss_and_grad(batch, minus).loss) / (2.0 * h);
      const double an = lg.grads.flat(i);
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < 1e-5);
  }

  TEST_CASE("loss is the mean squared error of the prediction") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(8);
    const DenoiserParams p = random_params(c, rng);
    const auto batch = tiny_batch(c, rng);
    double sse = 0.0;
    std::size_t n = 0;
    for (const auto& s : batch) {
      const Image pred = predict_noise(s.input, p);
      const Image diff = pred - s.target;
      sse += squared_norm(diff);
      n += diff.element_count();
    }
    CHECK(loss_and_grad(batch, p).loss == doctest::Approx(sse / static_cast<double>(n)).epsilon(1e-12));
  }

  TEST_CASE("batched and single predictions agree") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(9);
    const DenoiserParams p = random_params(c, rng);
    const auto batch = tiny_batch(c, rng);
    // Equal-shape inputs with the same scale parity.
    std::vector<DenoiserInput> inputs = {batch[1].input, batch[2].input};
    const auto out = predict_noise_batch(inputs, p);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      CHECK(test::max_abs_diff(out[k], predict_noise(inputs[k], p)) < 1e-13);
    }
  }

  TEST_CASE("scale embedding only affects its own row") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(10);
    DenoiserParams p = random_params(c, rng);
    DenoiserInput in;
    in.x_t = gaussian_image(5, 5, 1, rng);
    in.parent = gaussian_image(5, 5, 1, rng);
    in.t = 4;
    in.scale = 1;
    const Image before = predict_noise(in, p);

    Tensor& table = p.weights.find("embed.scale");
    REQUIRE(table.shape.front() == c.levels + 1);
    const auto row = static_cast<std::size_t>(table.shape.back());
    for (std::size_t k = 2 * row; k < 3 * row; ++k) table.values[k] += 0.5;
    CHECK(predict_noise(in, p) == before);
    for (std::size_t k = row; k < 2 * row; ++k) table.values[k] += 0.5;
    CHECK_FALSE(predict_noise(in, p) == before);
  }

  TEST_CASE("periodic padding makes the network shift equivariant") {
    DenoiserConfig c = tiny_config();
    c.padding = ConvPadding::kPeriodic;
    std::mt19937_64 rng(12);
    const DenoiserParams p = random_params(c, rng);
    DenoiserInput in;
    in.x_t = gaussian_image(8, 8, 1, rng);
    in.parent = gaussian_image(8, 8, 1, rng);
    in.t = 2;
    in.scale = 2;
    auto shift = [](const Image& img) {
      Image out(img.height(), img.width(), img.channels());
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
          out.at(0, (y + 3) % img.height(), (x + 5) % img.width()) = img.at(0, y, x);
      return out;
    };
    DenoiserInput moved = in;
    moved.x_t = shift(in.x_t);
    moved.parent = shift(*in.parent);
    CHECK(test::max_abs_diff(predict_noise(moved, p), shift(predict_noise(in, p))) < 1e-12);
  }

  TEST_CASE("input validation") {
    const DenoiserConfig c = tiny_config();
    const DenoiserParams p = DenoiserParams::zeros(c);
    DenoiserInput in;
    in.x_t = Image(4, 4, 1);
    in.t = 0;
    CHECK_THROWS_AS(predict_noise(in, p), ArgumentError);
    in.t = 11;
    CHECK_THROWS_AS(predict_noise(in, p), ArgumentError);
    in.t = 1;
    in.scale = 3;
    CHECK_THROWS_AS(predict_noise(in, p), ArgumentError);
    in.scale = 1;
    CHECK_THROWS_AS(predict_noise(in, p), ArgumentError);
    in.scale = 0;
    in.parent = Image(4, 4, 1);
    CHECK_THROWS_AS(predict_noise(in, p), ArgumentError);
    in.parent.reset();
    in.x_t = Image(4, 4, 3);
    CHECK_THROWS_AS(predict_noise(in, p), ShapeError);

    DenoiserConfig bad = c;
    bad.embed_dim = 3;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
  }

  TEST_CASE("bank lookup") {
    const DenoiserConfig c = tiny_config();
    DenoiserBank shared{{DenoiserParams::zeros(c)}};
    CHECK(&shared.for_scale(2) == &shared.nets.front());
    DenoiserBank separate{{DenoiserParams::zeros(c), DenoiserParams::zeros(c), DenoiserParams::zeros(c)}};
    CHECK(&separate.for_scale(1) == &separate.nets[1]);
    CHECK_THROWS_AS(separate.for_scale(3), ArgumentError);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("matches the scalar recurrence over many steps") {
    ParamSet p({Tensor("w", {3}, 0.0)});
    p[0].values = {0.5, -1.25, 2.0};
    AdamState state = AdamState::for_params(p);
    AdamHyper hp;
    hp.lr = 0.01;

    std::vector<double> ref = p[0].values;
    std::vector<double> m(3, 0.0);
    std::vector<double> v(3, 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int step = 1; step <= 50; ++step) {
      ParamSet g = p.zeros_like();
      for (double& x : g[0].values) x = u(rng);
      for (std::size_t k = 0; k < 3; ++k) {
        const double gk = g[0].values[k];
        m[k] = 0.9 * m[k] + 0.1 * gk;
        v[k] = 0.999 * v[k] + 0.001 * gk * gk;
        const double mh = m[k] / (1.0 - std::pow(0.9, step));
        const double vh = v[k] / (1.0 - std::pow(0.999, step));
        ref[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      }
      adam_step(p, g, state, hp);
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(p[0].values[k] - ref[k]) <= 1e-12);
    }
    CHECK(state.step == 50);
  }

  TEST_CASE("first step moves by about lr * sign(g)") {
    ParamSet p({Tensor("w", {2}, 1.0)});
    ParamSet g = p.zeros_like();
    g[0].values = {0.3, -7.0};
    AdamState state = AdamState::for_params(p);
    adam_step(p, g, state, AdamHyper{});
    CHECK(p[0].values[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-7));
    CHECK(p[0].values[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-7));
  }

  TEST_CASE("non-finite gradients leave everything untouched") {
    ParamSet p({Tensor("w", {2}, 1.0)});
    ParamSet g = p.zeros_like();
    g[0].values = {0.1, std::nan("")};
    AdamState state = AdamState::for_params(p);
    const ParamSet before = p;
    CHECK_THROWS_AS(adam_step(p, g, state, AdamHyper{}), NumericError);
    CHECK(p == before);
    CHECK(state.step == 0);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is exact and writing is deterministic") {
    const DenoiserConfig c = tiny_config();
    std::mt19937_64 rng(44);
    for (int nets : {1, 3}) {
      DenoiserBank bank;
      for (int k = 0; k < nets; ++k) bank.nets.push_back(random_params(c, rng));
      std::stringstream a;
      write_checkpoint(a, bank);
      std::stringstream b;
      write_checkpoint(b, bank);
      CHECK(a.str() == b.str());
      CHECK(a.str().substr(0, 8) == std::string("BATDIFF\0", 8));
      CHECK(read_checkpoint(a) == bank);
    }
  }

  TEST_CASE("corrupt input is an IoError") {
    const DenoiserConfig c = tiny_config();
    DenoiserBank bank{{DenoiserParams::zeros(c)}};
    std::stringstream ss;
    write_checkpoint(ss, bank);
    const std::string good = ss.str();

    std::stringstream magic("NOTADIFF" + good.substr(8));
    CHECK_THROWS_AS(read_checkpoint(magic), IoError);

    std::stringstream truncated(good.substr(0, good.size() - 5));
    CHECK_THROWS_AS(read_checkpoint(truncated), IoError);

    std::string bad_version = good;
    bad_version[8] = 9;
    std::stringstream version(bad_version);
    CHECK_THROWS_AS(read_checkpoint(version), IoError);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
  }
}
