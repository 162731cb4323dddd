#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "batdiff/error.hpp"

namespace batdiff::cli {
namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ArgumentError("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ArgumentError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long x = to_long(key, v);
  if (x < -2147483647L || x > 2147483647L) throw ArgumentError("'" + key + "' is out of range");
  return static_cast<int>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ArgumentError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ArgumentError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<long> to_milestones(const std::string& key, const std::string& v) {
  std::vector<long> out;
  std::string body = v;
  if (!body.empty() && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_long(key, item));
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<json(const RunConfig&)> get;
};

#define BATDIFF_STRING_KEY(field)                                         \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = v; },    \
      [](const RunConfig& c) { return json(c.field); }}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      BATDIFF_STRING_KEY(input),
      BATDIFF_STRING_KEY(output),
      BATDIFF_STRING_KEY(checkpoint),
      BATDIFF_STRING_KEY(reference),
      BATDIFF_STRING_KEY(manifest),
      BATDIFF_STRING_KEY(trace),
      BATDIFF_STRING_KEY(dump_subbands),
      BATDIFF_STRING_KEY(metrics_csv),
      BATDIFF_STRING_KEY(suite),
      {"ablate_seeds",
       [](RunConfig& c, const std::string& v) { c.ablate_seeds = to_int("ablate_seeds", v); },
       [](const RunConfig& c) { return json(c.ablate_seeds); }},
      {"scale_factor",
       [](RunConfig& c, const std::string& v) {
         c.degradation.scale_factor = to_real("scale_factor", v);
       },
       [](const RunConfig& c) { return json(c.degradation.scale_factor); }},
      {"degradation",
       [](RunConfig& c, const std::string& v) {
         if (v == "bicubic") {
           c.degradation.mode = DegradationMode::kBicubic;
         } else if (v == "blur") {
           c.degradation.mode = DegradationMode::kBlurSubsample;
         } else {
           throw ArgumentError("'degradation' must be bicubic or blur, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return json(c.degradation.mode == DegradationMode::kBicubic ? "bicubic" : "blur");
       }},
      {"blur_sigma",
       [](RunConfig& c, const std::string& v) {
         c.degradation.blur_sigma = to_real("blur_sigma", v);
       },
       [](const RunConfig& c) { return json(c.degradation.blur_sigma); }},
      {"noise_sigma",
       [](RunConfig& c, const std::string& v) {
         c.degradation.noise_sigma = to_real("noise_sigma", v);
       },
       [](const RunConfig& c) { return json(c.degradation.noise_sigma); }},
      {"levels",
       [](RunConfig& c, const std::string& v) { c.sampler.levels = to_int("levels", v); },
       [](const RunConfig& c) { return json(c.sampler.levels); }},
      {"timesteps",
       [](RunConfig& c, const std::string& v) { c.sampler.timesteps = to_int("timesteps", v); },
       [](const RunConfig& c) { return json(c.sampler.timesteps); }},
      {"beta_start",
       [](RunConfig& c, const std::string& v) { c.sampler.beta_start = to_real("beta_start", v); },
       [](const RunConfig& c) { return json(c.sampler.beta_start); }},
      {"beta_end",
       [](RunConfig& c, const std::string& v) { c.sampler.beta_end = to_real("beta_end", v); },
       [](const RunConfig& c) { return json(c.sampler.beta_end); }},
      {"posterior_std",
       [](RunConfig& c, const std::string& v) {
         if (v == "posterior") {
           c.sampler.posterior_std = PosteriorStd::kPosterior;
         } else if (v == "beta") {
           c.sampler.posterior_std = PosteriorStd::kBeta;
         } else {
           throw ArgumentError("'posterior_std' must be posterior or beta, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return json(c.sampler.posterior_std == PosteriorStd::kPosterior ? "posterior" : "beta");
       }},
      {"omega",
       [](RunConfig& c, const std::string& v) { c.sampler.omega = to_real("omega", v); },
       [](const RunConfig& c) { return json(c.sampler.omega); }},
      {"detail_gain",
       [](RunConfig& c, const std::string& v) {
         c.sampler.detail_gain = to_real("detail_gain", v);
       },
       [](const RunConfig& c) { return json(c.sampler.detail_gain); }},
      {"d_train_only",
       [](RunConfig& c, const std::string& v) {
         c.sampler.detail_gain_train_only = to_bool("d_train_only", v);
       },
       [](const RunConfig& c) { return json(c.sampler.detail_gain_train_only); }},
      {"eta",
       [](RunConfig& c, const std::string& v) { c.sampler.eta = to_real("eta", v); },
       [](const RunConfig& c) { return json(c.sampler.eta); }},
      {"parent_mode",
       [](RunConfig& c, const std::string& v) {
         c.sampler.parent_mode = parent_mode_from_string(v);
       },
       [](const RunConfig& c) { return json(to_string(c.sampler.parent_mode)); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         c.sampler.seed = to_seed("seed", v);
         c.train.seed = c.sampler.seed;
       },
       [](const RunConfig& c) { return json(c.sampler.seed); }},
      {"iterations",
       [](RunConfig& c, const std::string& v) { c.train.iterations = to_long("iterations", v); },
       [](const RunConfig& c) { return json(c.train.iterations); }},
      {"batch",
       [](RunConfig& c, const std::string& v) { c.train.batch = to_int("batch", v); },
       [](const RunConfig& c) { return json(c.train.batch); }},
      {"patch",
       [](RunConfig& c, const std::string& v) { c.train.patch = to_int("patch", v); },
       [](const RunConfig& c) { return json(c.train.patch); }},
      {"lr",
       [](RunConfig& c, const std::string& v) { c.train.lr = to_real("lr", v); },
       [](const RunConfig& c) { return json(c.train.lr); }},
      {"lr_milestones",
       [](RunConfig& c, const std::string& v) {
         c.train.lr_milestones = to_milestones("lr_milestones", v);
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.train.lr_milestones.size(); ++i) {
           if (i) out += ",";
           out += std::to_string(c.train.lr_milestones[i]);
         }
         return json(out);
       }},
      {"lr_decay",
       [](RunConfig& c, const std::string& v) { c.train.lr_decay = to_real("lr_decay", v); },
       [](const RunConfig& c) { return json(c.train.lr_decay); }},
      {"coupling",
       [](RunConfig& c, const std::string& v) {
         if (v == "shared") {
           c.train.coupling = NoiseCoupling::kShared;
         } else if (v == "independent") {
           c.train.coupling = NoiseCoupling::kIndependent;
         } else {
           throw ArgumentError("'coupling' must be shared or independent, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return json(c.train.coupling == NoiseCoupling::kShared ? "shared" : "independent");
       }},
      {"separate_networks",
       [](RunConfig& c, const std::string& v) {
         c.train.separate_networks = to_bool("separate_networks", v);
       },
       [](const RunConfig& c) { return json(c.train.separate_networks); }},
      {"features",
       [](RunConfig& c, const std::string& v) { c.train.features = to_int("features", v); },
       [](const RunConfig& c) { return json(c.train.features); }},
      {"blocks",
       [](RunConfig& c, const std::string& v) { c.train.blocks = to_int("blocks", v); },
       [](const RunConfig& c) { return json(c.train.blocks); }},
      {"embed_dim",
       [](RunConfig& c, const std::string& v) { c.train.embed_dim = to_int("embed_dim", v); },
       [](const RunConfig& c) { return json(c.train.embed_dim); }},
      {"log_every",
       [](RunConfig& c, const std::string& v) { c.train.log_every = to_int("log_every", v); },
       [](const RunConfig& c) { return json(c.train.log_every); }},
      {"y_channel",
       [](RunConfig& c, const std::string& v) { c.metrics.y_channel = to_bool("y_channel", v); },
       [](const RunConfig& c) { return json(c.metrics.y_channel); }},
      {"crop_border",
       [](RunConfig& c, const std::string& v) {
         c.metrics.crop_border = to_int("crop_border", v);
       },
       [](const RunConfig& c) { return json(c.metrics.crop_border); }},
  };
  return keys;
}

#undef BATDIFF_STRING_KEY

const Key* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

std::vector<Setting> parse_settings(std::string_view text, const std::string& origin) {
  std::vector<Setting> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);

    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError(where + ": expected 'key = value'");
    Setting s;
    s.key = trim(std::string_view(line).substr(0, eq));
    s.value = trim(std::string_view(line).substr(eq + 1));
    s.origin = where;
    if (s.key.empty()) throw ArgumentError(where + ": missing key before '='");
    if (s.value.size() >= 2 && s.value.front() == '"' && s.value.back() == '"') {
      s.value = s.value.substr(1, s.value.size() - 2);
    } else if (!s.value.empty() && (s.value.front() == '"' || s.value.back() == '"')) {
      throw ArgumentError(where + ": unterminated string");
    }
    if (!find_key(s.key)) throw ArgumentError(where + ": unknown key '" + s.key + "'");
    for (const auto& prev : out) {
      if (prev.key == s.key) {
        throw ArgumentError(where + ": duplicate key '" + s.key + "' (first set at " +
                            prev.origin + ")");
      }
    }
    out.push_back(std::move(s));
    if (end == text.size()) break;
  }
  return out;
}

std::vector<Setting> read_settings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.string());
}

Setting parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + text + "'");
  Setting s{trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1)),
            "--set"};
  if (!find_key(s.key)) throw ArgumentError("--set: unknown key '" + s.key + "'");
  return s;
}

void apply_setting(RunConfig& cfg, const Setting& s) {
  const Key* k = find_key(s.key);
  const std::string prefix = s.origin.empty() ? "" : s.origin + ": ";
  if (!k) throw ArgumentError(prefix + "unknown key '" + s.key + "'");
  try {
    k->set(cfg, s.value);
  } catch (const ArgumentError& e) {
    throw ArgumentError(prefix + e.what());
  }
}

void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings) {
  for (const auto& s : settings) apply_setting(cfg, s);
}

std::vector<Setting> settings_from_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
  if (!doc.contains("config") || !doc["config"].is_object()) {
    throw ArgumentError(path.string() + ": manifest has no \"config\" object");
  }
  std::vector<Setting> out;
  for (const auto& [key, value] : doc["config"].items()) {
    Setting s{key, value.is_string() ? value.get<std::string>() : value.dump(),
              path.string() + ":config." + key};
    if (!find_key(key)) throw ArgumentError(s.origin + ": unknown key '" + key + "'");
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& k : key_table()) v.push_back(k.name);
    return v;
  }();
  return names;
}

json to_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& k : key_table()) out[k.name] = k.get(cfg);
  return out;
}

void require(const std::string& value, const std::string& key) {
  if (value.empty()) throw ArgumentError("missing required key '" + key + "'");
}

}  // namespace batdiff::cli
