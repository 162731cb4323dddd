#include "ablation.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "batdiff/error.hpp"

namespace batdiff::cli {
namespace {

AblationCell make_cell(std::string variant, const SamplerConfig& s, const TrainConfig& t) {
  return AblationCell{std::move(variant), s, t};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Every input that changes what train() produces.
std::string training_key(const AblationCell& c) {
  std::ostringstream k;
  k.precision(17);
  const SamplerConfig& s = c.sampler;
  const TrainConfig& t = c.train;
  k << s.levels << '|' << s.timesteps << '|' << s.beta_start << '|' << s.beta_end << '|'
    << s.detail_gain << '|' << s.bivariate() << '|' << t.iterations << '|' << t.batch << '|'
    << t.patch << '|' << t.lr << '|' << t.lr_decay << '|' << static_cast<int>(t.coupling) << '|'
    << t.separate_networks << '|' << t.features << '|' << t.blocks << '|' << t.embed_dim << '|'
    << t.log_every;
  for (long m : t.resolved_milestones()) k << '|' << m;
  return k.str();
}

struct Job {
  std::uint64_t seed = 0;
  int seed_index = 0;
  std::vector<std::size_t> cells;
};

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "core-components", "parent-choice", "eta-sweep",          "omega-d-sweep",
      "levels",          "reverse-steps", "shared-vs-separate",
  };
  return names;
}

std::vector<AblationCell> suite_cells(const std::string& suite, const SamplerConfig& base_sampler,
                                      const TrainConfig& base_train) {
  std::vector<AblationCell> cells;
  const SamplerConfig& b = base_sampler;
  const TrainConfig& bt = base_train;

  if (suite == "core-components") {
    SamplerConfig lr_only = b;
    lr_only.levels = 0;
    lr_only.parent_mode = ParentMode::kNone;
    SamplerConfig atrous = b;
    atrous.parent_mode = ParentMode::kNone;
    SamplerConfig full = b;
    full.parent_mode = ParentMode::kTimeAligned;
    cells.push_back(make_cell("lr-consistency", lr_only, bt));
    cells.push_back(make_cell("+atrous", atrous, bt));
    cells.push_back(make_cell("+bivariate", full, bt));
  } else if (suite == "parent-choice") {
    for (ParentMode m : {ParentMode::kNone, ParentMode::kMisaligned, ParentMode::kCoarseFinal,
                         ParentMode::kTimeAligned}) {
      SamplerConfig s = b;
      s.parent_mode = m;
      cells.push_back(make_cell(to_string(m), s, bt));
    }
  } else if (suite == "eta-sweep") {
    for (double eta : {0.1, 0.3, 0.5}) {
      SamplerConfig s = b;
      s.eta = eta;
      cells.push_back(make_cell("eta=" + fmt(eta), s, bt));
    }
  } else if (suite == "omega-d-sweep") {
    for (double omega : {0.3, 0.5, 1.0, 2.0}) {
      SamplerConfig s = b;
      s.omega = omega;
      s.detail_gain = 0.8;
      cells.push_back(make_cell("omega=" + fmt(omega), s, bt));
    }
    for (double d : {0.5, 0.8, 1.0, 1.5}) {
      SamplerConfig s = b;
      s.omega = 0.3;
      s.detail_gain = d;
      cells.push_back(make_cell("d=" + fmt(d), s, bt));
    }
  } else if (suite == "levels") {
    for (int levels : {4, 5, 6, 7}) {
      SamplerConfig s = b;
      s.levels = levels;
      cells.push_back(make_cell("S=" + std::to_string(levels), s, bt));
    }
  } else if (suite == "reverse-steps") {
    for (int steps : {50, 75, 100}) {
      SamplerConfig s = b;
      s.timesteps = steps;
      cells.push_back(make_cell("T=" + std::to_string(steps), s, bt));
    }
  } else if (suite == "shared-vs-separate") {
    TrainConfig shared = bt;
    shared.separate_networks = false;
    TrainConfig separate = bt;
    separate.separate_networks = true;
    cells.push_back(make_cell("shared", b, shared));
    cells.push_back(make_cell("separate", b, separate));
  } else {
    std::string known;
    for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
    throw ArgumentError("unknown ablation suite '" + suite + "' (known: " + known + ")");
  }
  return cells;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const Image& y,
                                      const Image& ground_truth, const DegradationModel& model,
                                      const MetricOptions& metrics, int seeds, int threads) {
  if (seeds < 1) throw ArgumentError("ablation needs at least one seed");
  for (const auto& c : cells) {
    c.sampler.validate();
    c.train.validate();
  }

  // Group cells by training inputs so each network is trained once per seed.
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string key = training_key(cells[i]);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(i);
  }
  std::vector<Job> jobs;
  for (int k = 0; k < seeds; ++k) {
    for (const auto& key : order) {
      const std::uint64_t seed = cells[groups[key].front()].sampler.seed + static_cast<std::uint64_t>(k);
      jobs.push_back(Job{seed, k, groups[key]});
    }
  }

  std::vector<AblationRow> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i].cell = cells[i];
    rows[i].seeds = seeds;
    rows[i].per_seed.assign(static_cast<std::size_t>(seeds), MetricReport{});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Job& job = jobs[j];
        const AblationCell& first = cells[job.cells.front()];
        TrainConfig tc = first.train;
        tc.seed = job.seed;
        SamplerConfig train_sc = first.sampler;
        train_sc.seed = job.seed;
        const TrainResult trained = train(y, model, tc, train_sc);
        for (std::size_t ci : job.cells) {
          SamplerConfig sc = cells[ci].sampler;
          sc.seed = job.seed;
          const SampleResult out = sample(y, trained.bank, sc, model);
          rows[ci].per_seed[static_cast<std::size_t>(job.seed_index)] =
              evaluate(out.hr, ground_truth, metrics);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& row : rows) {
    double p = 0.0;
    double s = 0.0;
    for (const auto& r : row.per_seed) {
      p += r.psnr;
      s += r.ssim;
    }
    row.mean.psnr = p / seeds;
    row.mean.ssim = s / seeds;
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::string& suite,
                        const std::vector<AblationRow>& rows) {
  out << "suite,variant,levels,timesteps,omega,detail_gain,eta,parent_mode,separate_networks,"
         "iterations,seeds,psnr,ssim\n";
  for (const auto& r : rows) {
    const SamplerConfig& s = r.cell.sampler;
    out << suite << ',' << r.cell.variant << ',' << s.levels << ',' << s.timesteps << ','
        << fmt(s.omega) << ',' << fmt(s.detail_gain) << ',' << fmt(s.eta) << ','
        << to_string(s.parent_mode) << ',' << (r.cell.train.separate_networks ? 1 : 0) << ','
        << r.cell.train.iterations << ',' << r.seeds << ',' << format_metric(r.mean.psnr) << ','
        << format_metric(r.mean.ssim) << '\n';
  }
}

}  // namespace batdiff::cli
