// Command line front end: dataset validation, synthetic benchmark generation,
// tracking runs, metric reports, alignment statistics and gradient checks.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "rgbt/dataset.hpp"
#include "rgbt/errors.hpp"
#include "rgbt/eval.hpp"
#include "rgbt/fusion.hpp"
#include "rgbt/grad_check.hpp"
#include "rgbt/svg.hpp"
#include "rgbt/synthetic.hpp"
#include "rgbt/tracking.hpp"

namespace fs = std::filesystem;
using namespace rgbt;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RGBT_BENCH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring unparsable RGBT_BENCH_SEED='" << env << "'\n";
    }
  }
  return 1;
}

std::vector<SequenceRecord> load_dataset(const fs::path& root, const std::string& filter) {
  std::vector<SequenceRecord> records;
  for (const fs::path& dir : list_sequence_dirs(root)) {
    if (!filter.empty() && dir.filename().string().find(filter) == std::string::npos) continue;
    records.push_back(parse_sequence(dir));
  }
  return records;
}

template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  std::string first_error;
  const int count = std::min(workers, n);
  for (int t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error.empty()) first_error = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (!first_error.empty()) throw Error(first_error);
}

FusionPipeline parse_pipeline(const std::string& text) {
  PipelineFlags flags;
  Modality modality = Modality::kVisible;
  bool single = false;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, ',')) {
    if (token == "cif") {
      flags.cif = true;
    } else if (token == "dff") {
      flags.dff = true;
    } else if (token == "adf") {
      flags.adf = true;
    } else if (token == "rgb") {
      single = true;
      modality = Modality::kVisible;
    } else if (token == "ir") {
      single = true;
      modality = Modality::kThermal;
    } else if (!token.empty()) {
      throw ConfigError("unknown pipeline token '" + token +
                        "' (expected cif, dff, adf, rgb or ir)");
    }
  }
  if (single && (flags.cif || flags.dff || flags.adf)) {
    throw ConfigError("single-modality pipelines cannot combine with fusion branches");
  }
  return ablation_config(flags, modality);
}

// ---------------------------------------------------------------------------

int cmd_validate(const fs::path& root) {
  const std::vector<fs::path> dirs = list_sequence_dirs(root);
  if (dirs.empty()) {
    std::cout << "no sequences found under " << root.string() << "\n";
    return 1;
  }
  int failures = 0;
  for (const fs::path& dir : dirs) {
    try {
      const SequenceRecord rec = parse_sequence(dir);
      std::cout << "OK   " << rec.name << " (" << subset_name(rec.subset) << ", "
                << rec.frame_count << " frames)\n";
    } catch (const Error& e) {
      std::cout << "FAIL " << dir.filename().string() << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (failures > 0) {
    std::cout << failures << " of " << dirs.size() << " sequences failed validation\n";
    return 1;
  }
  std::cout << dirs.size() << " sequences OK\n";
  return 0;
}

int cmd_synth_gen(const fs::path& out, std::uint64_t seed) {
  fs::create_directories(out);
  int written = 0;
  for (const SyntheticSpec& spec : standard_benchmark(seed)) {
    write_synthetic(out, generate_synthetic(spec));
    ++written;
  }
  std::cout << "wrote " << written << " synthetic sequences to " << out.string() << "\n";
  return 0;
}

struct RunConfig {
  FusionPipeline pipeline;
  bool long_term = false;
  double theta_low = 0.3;
  double theta_high = 0.6;
  int stride = 16;
  std::uint64_t seed = 1;
  int workers = 1;
};

int cmd_track(const fs::path& root, const fs::path& out, const std::string& filter,
              const RunConfig& opt) {
  const std::vector<SequenceRecord> records = load_dataset(root, filter);
  if (records.empty()) {
    std::cout << "no sequences found under " << root.string() << "\n";
    return 1;
  }
  fs::create_directories(out);

  std::vector<std::optional<OpeResult>> results(records.size());
  std::vector<std::string> skipped(records.size());

  parallel_for(static_cast<int>(records.size()), opt.workers, [&](int i) {
    const SequenceRecord& rec = records[static_cast<std::size_t>(i)];
    const fs::path dir = root / rec.name;
    if (!DirectoryFrameSource::features_present(dir)) {
      skipped[static_cast<std::size_t>(i)] = "no toy features";
      return;
    }
    DirectoryFrameSource frames(dir, rec.frame_count);
    ToyTrackerConfig cfg;
    cfg.pipeline = opt.pipeline;
    cfg.long_term = opt.long_term;
    cfg.theta_low = opt.theta_low;
    cfg.theta_high = opt.theta_high;
    cfg.feature_stride = opt.stride;
    cfg.seed = opt.seed;
    HmftToyTracker tracker(cfg);
    results[static_cast<std::size_t>(i)] = run_ope(tracker, rec, frames);
  });

  // Deterministic merge in sequence-name order (records are already sorted).
  int tracked = 0;
  double total_frames = 0.0, total_seconds = 0.0;
  std::ofstream timing(out / "timing.txt");
  timing << "# sequence frames seconds fps (wall-clock; not covered by the determinism contract)\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!results[i]) {
      std::cerr << "warning: skipping " << records[i].name << ": " << skipped[i] << "\n";
      continue;
    }
    const OpeResult& r = *results[i];
    r.write_csv_file(out / (records[i].name + ".txt"));
    if (r.aborted) {
      std::cerr << "warning: " << records[i].name << " aborted: " << r.abort_reason << "\n";
    }
    char line[256];
    std::snprintf(line, sizeof(line), "%s %zu %.3f %.1f\n", records[i].name.c_str(),
                  r.boxes.size(), r.total_seconds(), r.fps());
    timing << line;
    total_frames += static_cast<double>(r.boxes.size());
    total_seconds += r.total_seconds();
    ++tracked;
  }
  char summary[128];
  std::snprintf(summary, sizeof(summary), "total %.0f frames in %.3f s (%.1f fps)\n", total_frames,
                total_seconds, total_seconds > 0 ? total_frames / total_seconds : 0.0);
  timing << summary;
  std::cout << "tracked " << tracked << " sequences with pipeline "
            << opt.pipeline.describe() << (opt.long_term ? " (long-term switcher on)" : "")
            << "; results in " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& root, const fs::path& results_dir, const fs::path& out,
                 const std::string& filter, double tau) {
  const std::vector<SequenceRecord> records = load_dataset(root, filter);
  if (records.empty()) {
    std::cout << "no sequences found under " << root.string() << "\n";
    return 1;
  }
  std::vector<OpeResult> results;
  for (const SequenceRecord& rec : records) {
    const fs::path file = results_dir / (rec.name + ".txt");
    if (fs::exists(file)) {
      results.push_back(OpeResult::read_csv_file(file, rec.name));
    }
  }
  EvalConfig config;
  config.tau = tau;
  const EvalReport report = build_report(records, results, config);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(out);
  {
    std::ofstream os(out / "report.json");
    os << report_to_json(report);
  }
  {
    std::ofstream os(out / "success.csv");
    os << success_curve_csv(report.overall.success);
  }
  {
    std::ofstream os(out / "precision.csv");
    os << precision_curve_csv(report.overall.precision);
  }
  {
    CurveSeries s;
    s.label = "overall";
    s.x.assign(report.overall.success.thresholds.begin(), report.overall.success.thresholds.end());
    s.y.assign(report.overall.success.rates.begin(), report.overall.success.rates.end());
    std::ofstream os(out / "success.svg");
    os << render_curve_svg("Success plot", "overlap threshold", std::span(&s, 1));
  }
  {
    CurveSeries s;
    s.label = "overall";
    s.x.assign(report.overall.precision.thresholds.begin(),
               report.overall.precision.thresholds.end());
    s.y.assign(report.overall.precision.rates.begin(), report.overall.precision.rates.end());
    std::ofstream os(out / "precision.svg");
    os << render_curve_svg("Precision plot", "center error threshold (px)", std::span(&s, 1));
  }

  std::printf("MSR %.3f  MPR %.3f  (%d sequences, tau=%g)\n", report.overall.msr,
              report.overall.mpr, report.overall.sequences, tau);
  if (report.short_term) {
    std::printf("  short-term: MSR %.3f  MPR %.3f  (%d sequences)\n", report.short_term->msr,
                report.short_term->mpr, report.short_term->sequences);
  }
  if (report.long_term) {
    std::printf("  long-term:  MSR %.3f  MPR %.3f  (%d sequences)\n", report.long_term->msr,
                report.long_term->mpr, report.long_term->sequences);
  }
  if (report.mask_jaccard) {
    std::printf("  masks: J %.3f  F %.3f  (%d sequences)\n", *report.mask_jaccard,
                *report.mask_f, report.mask_sequences);
  }
  std::cout << "report written to " << (out / "report.json").string() << "\n";
  return 0;
}

void print_attr_table(const char* heading, const std::map<Attribute, AttributeScore>& table,
                      const char* support_label) {
  std::printf("%s\n", heading);
  std::printf("  %-5s %8s %8s %10s\n", "attr", "MSR", "MPR", support_label);
  for (Attribute a : all_attributes()) {
    const auto it = table.find(a);
    if (it == table.end()) continue;
    std::printf("  %-5s %8.3f %8.3f %10d\n", std::string(attribute_name(a)).c_str(),
                it->second.msr, it->second.mpr, it->second.support);
  }
}

int cmd_attr_report(const fs::path& root, const fs::path& results_dir, const std::string& filter,
                    double tau, const std::string& level) {
  const std::vector<SequenceRecord> records = load_dataset(root, filter);
  if (records.empty()) {
    std::cout << "no sequences found under " << root.string() << "\n";
    return 1;
  }
  std::vector<OpeResult> results;
  for (const SequenceRecord& rec : records) {
    const fs::path file = results_dir / (rec.name + ".txt");
    if (fs::exists(file)) results.push_back(OpeResult::read_csv_file(file, rec.name));
  }
  EvalConfig config;
  config.tau = tau;
  const EvalReport report = build_report(records, results, config);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (level == "sequence" || level == "both") {
    print_attr_table("Sequence-level attribute breakdown", report.attrs_sequence_level,
                     "sequences");
  }
  if (level == "frame" || level == "both") {
    print_attr_table("Frame-level attribute breakdown", report.attrs_frame_level, "frames");
  }
  return 0;
}

int cmd_align_stats(const fs::path& root, const std::string& filter) {
  const std::vector<SequenceRecord> records = load_dataset(root, filter);
  if (records.empty()) {
    std::cout << "no sequences found under " << root.string() << "\n";
    return 1;
  }
  const AlignmentStats st = alignment_stats(records);
  std::printf("%-12s %8s %8s %9s\n", "dataset", "mean", "median", "samples");
  std::printf("%-12s %8.2f %8.2f %9d\n", root.filename().string().c_str(), st.mean, st.median,
              st.samples);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double epsilon, double tolerance,
                  const std::string& corrupt_op) {
  if (!corrupt_op.empty()) {
    // Self-test hook: re-register the named op with a perturbed backward so
    // the checker's sensitivity can be demonstrated end to end.
    OpRegistry& reg = OpRegistry::instance();
    CheckedOp broken = reg.get(corrupt_op);
    auto original_vjp = broken.vjp;
    broken.vjp = [original_vjp](std::span<const Tensor> in, std::span<const Tensor> cots) {
      std::vector<Tensor> grads = original_vjp(in, cots);
      grads[0][0] += 0.5;
      return grads;
    };
    reg.add(corrupt_op, std::move(broken));
  }

  const std::vector<GradCheckReport> reports = grad_check_all(seed, epsilon, tolerance);
  bool all_pass = true;
  std::printf("%-16s %-12s %14s  %s\n", "op", "input", "max rel err", "status");
  for (const GradCheckReport& r : reports) {
    for (const InputCheck& c : r.inputs) {
      std::printf("%-16s %-12s %14.3e  %s\n", r.op.c_str(), c.input.c_str(), c.max_rel_error,
                  c.pass ? "ok" : "FAIL");
      all_pass = all_pass && c.pass;
    }
  }
  std::printf("%s (epsilon=%g, tolerance=%g)\n", all_pass ? "all ops pass" : "FAILURES above",
              epsilon, tolerance);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-T tracking evaluation toolkit"};
  app.require_subcommand(1);

  std::string dataset, out, results, filter, pipeline_text = "cif,dff,adf", level = "both";
  std::string corrupt_op;
  double tau = kDefaultPrecisionThreshold;
  double theta_low = 0.3, theta_high = 0.6, epsilon = 1e-5, tolerance = 1e-6;
  std::uint64_t seed = default_seed();
  int workers = 1, stride = 16;
  bool long_term = false;

  auto* validate = app.add_subcommand("validate", "Parse and check every sequence in a dataset");
  validate->add_option("--dataset", dataset, "dataset root")->required();

  auto* synth = app.add_subcommand("synth-gen", "Generate the synthetic benchmark");
  synth->add_option("--out", out, "output dataset root")->required();
  synth->add_option("--seed", seed, "generation seed");

  auto* track = app.add_subcommand("track", "Run the reference tracker over a dataset");
  track->add_option("--dataset", dataset, "dataset root")->required();
  track->add_option("--out", out, "result directory")->required();
  track->add_option("--pipeline", pipeline_text,
                    "comma list of cif,dff,adf, or rgb / ir for single modality");
  track->add_flag("--lt", long_term, "enable the local/global switcher");
  track->add_option("--theta-low", theta_low, "switch to global below this confidence");
  track->add_option("--theta-high", theta_high, "switch back to local at this confidence");
  track->add_option("--seed", seed, "tracker parameter seed");
  track->add_option("--workers", workers, "parallel sequences");
  track->add_option("--filter", filter, "substring filter on sequence names");
  track->add_option("--stride", stride, "feature cell size in pixels");

  auto* evaluate = app.add_subcommand("evaluate", "Score tracking results against a dataset");
  evaluate->add_option("--dataset", dataset, "dataset root")->required();
  evaluate->add_option("--results", results, "directory of per-sequence result files")->required();
  evaluate->add_option("--out", out, "report directory")->required();
  evaluate->add_option("--tau", tau, "precision threshold in pixels");
  evaluate->add_option("--filter", filter, "substring filter on sequence names");

  auto* attr = app.add_subcommand("attr-report", "Attribute-conditioned metric breakdown");
  attr->add_option("--dataset", dataset, "dataset root")->required();
  attr->add_option("--results", results, "directory of per-sequence result files")->required();
  attr->add_option("--tau", tau, "precision threshold in pixels");
  attr->add_option("--level", level, "frame, sequence or both");
  attr->add_option("--filter", filter, "substring filter on sequence names");

  auto* align = app.add_subcommand("align-stats", "Center distance between modality annotations");
  align->add_option("--dataset", dataset, "dataset root")->required();
  align->add_option("--filter", filter, "substring filter on sequence names");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every registered op");
  grad->add_option("--seed", seed, "input sampling seed");
  grad->add_option("--epsilon", epsilon, "finite-difference step");
  grad->add_option("--tolerance", tolerance, "max relative error to pass");
  grad->add_option("--corrupt-op", corrupt_op,
                   "deliberately corrupt this op's backward (checker self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(dataset);
    if (synth->parsed()) return cmd_synth_gen(out, seed);
    if (track->parsed()) {
      RunConfig opt;
      opt.pipeline = parse_pipeline(pipeline_text);
      opt.long_term = long_term;
      opt.theta_low = theta_low;
      opt.theta_high = theta_high;
      opt.stride = stride;
      opt.seed = seed;
      opt.workers = workers;
      return cmd_track(dataset, out, filter, opt);
    }
    if (evaluate->parsed()) return cmd_evaluate(dataset, results, out, filter, tau);
    if (attr->parsed()) return cmd_attr_report(dataset, results, filter, tau, level);
    if (align->parsed()) return cmd_align_stats(dataset, filter);
    if (grad->parsed()) return cmd_gradcheck(seed, epsilon, tolerance, corrupt_op);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
