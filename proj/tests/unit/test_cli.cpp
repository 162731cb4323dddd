#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli/ablation.hpp"
#include "batdiff/error.hpp"
#include "batdiff/image_io.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"

using namespace batdiff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "batdiff");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("batdiff_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// A fast network for smoke runs.
const std::vector<std::string> kTiny = {
    "--set", "features=4", "--set", "blocks=1",  "--set", "embed_dim=4",  "--set", "batch=2",
    "--set", "patch=16",   "--set", "levels=2",  "--set", "timesteps=4", "--set", "log_every=5"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text parsing") {
    const auto s = cli::parse_settings("# header\nlevels = 3\n  omega=0.5 # trailing\nsuite = \"a # b\"\n",
                                       "desk.conf");
    REQUIRE(s.size() == 3);
    CHECK(s[0].key == "levels");
    CHECK(s[0].origin == "desk.conf:2");
    CHECK(s[1].value == "0.5");
    CHECK(s[2].value == "a # b");

    cli::RunConfig cfg;
    cli::apply_settings(cfg, s);
    CHECK(cfg.sampler.levels == 3);
    CHECK(cfg.sampler.omega == 0.5);

    try {
      cli::apply_settings(cfg, cli::parse_settings("levels = 3\n\nwidth = 9\n", "x.conf"));
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("x.conf:3") != std::string::npos);
      CHECK(std::string(e.what()).find("width") != std::string::npos);
    }
    CHECK_THROWS_AS(cli::parse_settings("levels = 1\nlevels = 2\n", "dup"), ArgumentError);
    CHECK_THROWS_AS(cli::parse_settings("no equals sign\n", "bad"), ArgumentError);
    CHECK_THROWS_AS(cli::apply_setting(cfg, {"levels", "three", "flag"}), ArgumentError);
    CHECK_THROWS_AS(cli::apply_setting(cfg, {"parent_mode", "sideways", "flag"}), ArgumentError);
  }

  TEST_CASE("value formats") {
    cli::RunConfig cfg;
    cli::apply_setting(cfg, cli::parse_override("lr_milestones=[100, 200]"));
    CHECK(cfg.train.lr_milestones == std::vector<long>{100, 200});
    cli::apply_setting(cfg, cli::parse_override("seed=42"));
    CHECK(cfg.sampler.seed == 42);
    CHECK(cfg.train.seed == 42);
    cli::apply_setting(cfg, cli::parse_override("degradation=blur"));
    CHECK(cfg.degradation.mode == DegradationMode::kBlurSubsample);
    cli::apply_setting(cfg, cli::parse_override("coupling=independent"));
    CHECK(cfg.train.coupling == NoiseCoupling::kIndependent);
    cli::apply_setting(cfg, cli::parse_override("d_train_only=true"));
    CHECK(cfg.sampler.detail_gain_train_only);
    CHECK(cli::to_json(cfg).at("levels") == 6);
    CHECK_THROWS_AS(cli::parse_override("levels"), ArgumentError);
  }

  TEST_CASE("thread count comes from the environment") {
    setenv("BATDIFF_THREADS", "3", 1);
    CHECK(cli::thread_count() == 3);
    setenv("BATDIFF_THREADS", "zero", 1);
    CHECK_THROWS_AS(cli::thread_count(), ArgumentError);
    unsetenv("BATDIFF_THREADS");
    CHECK(cli::thread_count() >= 1);
  }

  TEST_CASE("missing required keys exit 2 and name the key") {
    const Outcome r = invoke({"train", "--output", "x.ckpt"});
    CHECK(r.code == 2);
    CHECK(r.err.find("'input'") != std::string::npos);
    const Outcome i = invoke({"infer", "--input", "synthetic:16", "--output", "o.png"});
    CHECK(i.code == 2);
    CHECK(i.err.find("'checkpoint'") != std::string::npos);
  }

  TEST_CASE("bad flags and unknown keys exit 2") {
    CHECK(invoke({"train", "--bogus"}).code == 2);
    CHECK(invoke({}).code == 2);
    const fs::path dir = fresh_dir("badkey");
    std::ofstream(dir / "bad.conf") << "levels = 3\ncolour = red\n";
    const Outcome r = invoke({"train", "-c", (dir / "bad.conf").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("bad.conf:2") != std::string::npos);
    CHECK(invoke({"train", "--help"}).code == 0);
  }

  TEST_CASE("train then infer, with manifests, trace, subbands and metrics") {
    const fs::path dir = fresh_dir("smoke");
    const std::string ckpt = (dir / "m.ckpt").string();
    const Outcome t = invoke(with_tiny(
        {"train", "--input", "synthetic:16", "--output", ckpt, "--iterations", "10", "--seed", "7"}));
    REQUIRE(t.code == 0);
    CHECK(t.err.find("iter 10 loss") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(ckpt + ".json"));
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("loss_curve").size() == 2);
    CHECK(manifest.at("config").at("iterations") == 10);

    // Same seed, same bytes.
    const std::string ckpt2 = (dir / "m2.ckpt").string();
    REQUIRE(invoke(with_tiny({"train", "--input", "synthetic:16", "--output", ckpt2,
                              "--iterations", "10", "--seed", "7"}))
                .code == 0);
    CHECK(slurp(ckpt) == slurp(ckpt2));

    save_image(Image(64, 64, 1, 0.5), dir / "gt.png");
    const std::string out = (dir / "hr.png").string();
    const Outcome i = invoke(with_tiny({"infer", "--input", "synthetic:16", "--checkpoint", ckpt,
                                        "--output", out, "--trace", (dir / "trace.txt").string(),
                                        "--dump-subbands", (dir / "bands").string(),
                                        "--reference", (dir / "gt.png").string(),
                                        "--metrics-csv", (dir / "m.csv").string()}));
    REQUIRE(i.code == 0);
    const Image hr = load_image(out);
    CHECK(hr.height() == 64);
    CHECK(hr.width() == 64);
    CHECK(fs::exists(dir / "bands" / "detail_2.png"));
    const std::string csv = slurp(dir / "m.csv");
    CHECK(csv.rfind("image,psnr,ssim\nhr.png,", 0) == 0);
    const std::string trace = slurp(dir / "trace.txt");
    CHECK(trace.rfind("state 0 4 ", 0) == 0);
    CHECK(trace.find("parent 2 1 ") != std::string::npos);
    const auto im = nlohmann::json::parse(slurp(out + ".json"));
    CHECK(im.at("command") == "infer");
    CHECK(im.contains("psnr"));

    // The manifest reproduces the run.
    const std::string out2 = (dir / "hr2.png").string();
    REQUIRE(invoke({"infer", "--from-manifest", out + ".json", "--output", out2, "--trace", "",
                    "--dump-subbands", "", "--reference", "", "--manifest",
                    (dir / "hr2.json").string()})
                .code == 0);
    CHECK(slurp(out) == slurp(out2));

    // A checkpoint trained for S=2 cannot serve S=3.
    const Outcome bad = invoke(with_tiny({"infer", "--input", "synthetic:16", "--checkpoint", ckpt,
                                          "--output", (dir / "x.png").string(), "--levels", "3"}));
    CHECK(bad.code == 2);
    CHECK(bad.err.find("S=2") != std::string::npos);
  }

  TEST_CASE("non-integer scale factor maps 40 to 126") {
    const fs::path dir = fresh_dir("frac");
    save_image(Image(40, 40, 1, 0.5), dir / "lr.png");
    const std::string ckpt = (dir / "m.ckpt").string();
    REQUIRE(invoke(with_tiny({"train", "--input", (dir / "lr.png").string(), "--output", ckpt,
                              "--iterations", "2", "--scale", "3.15"}))
                .code == 0);
    REQUIRE(invoke(with_tiny({"infer", "--input", (dir / "lr.png").string(), "--checkpoint", ckpt,
                              "--output", (dir / "hr.png").string(), "--scale", "3.15"}))
                .code == 0);
    const Image hr = load_image(dir / "hr.png");
    CHECK(hr.height() == 126);
    CHECK(hr.width() == 126);
  }

  TEST_CASE("non-finite training exits 3 and keeps the last good checkpoint") {
    const fs::path dir = fresh_dir("nan");
    const std::string ckpt = (dir / "m.ckpt").string();
    const Outcome r = invoke(with_tiny({"train", "--input", "synthetic:16", "--output", ckpt,
                                        "--iterations", "20", "--set", "lr=1e300"}));
    CHECK(r.code == 3);
    CHECK(r.err.find("numeric failure") != std::string::npos);
    CHECK(fs::exists(ckpt));
    CHECK(nlohmann::json::parse(slurp(ckpt + ".json")).contains("aborted_at"));
  }

  TEST_CASE("eval writes one CSV row per image") {
    const fs::path dir = fresh_dir("eval");
    fs::create_directories(dir / "est");
    fs::create_directories(dir / "ref");
    save_image(Image(16, 16, 1, 0.2), dir / "est" / "a.png");
    save_image(Image(16, 16, 1, 0.2), dir / "ref" / "a.png");
    save_image(Image(16, 16, 1, 0.2), dir / "est" / "b.png");
    save_image(Image(16, 16, 1, 0.2 + 16.0 / 255.0), dir / "ref" / "b.png");
    const Outcome r =
        invoke({"eval", "--input", (dir / "est").string(), "--reference", (dir / "ref").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("image,psnr,ssim\na.png,inf,1.000000\nb.png,24.048404,", 0) == 0);
  }

  TEST_CASE("ablation suites") {
    CHECK(cli::suite_names().size() == 7);
    const Outcome r = invoke({"ablate", "--suite", "nonsense", "--reference", "synthetic:16"});
    CHECK(r.code == 2);
    CHECK(r.err.find("parent-choice") != std::string::npos);

    const auto cells = cli::suite_cells("parent-choice", SamplerConfig{}, TrainConfig{});
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].variant == "none");

    const fs::path dir = fresh_dir("ablate");
    const Outcome a = invoke(with_tiny({"ablate", "--suite", "parent-choice", "--reference",
                                        "synthetic:32", "--iterations", "4", "--output",
                                        (dir / "pc.csv").string()}));
    REQUIRE(a.code == 0);
    std::istringstream csv(slurp(dir / "pc.csv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0].rfind("suite,variant,levels", 0) == 0);
    CHECK(lines[1].rfind("parent-choice,none,", 0) == 0);
  }
}
