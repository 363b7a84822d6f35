#include "uwgan/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "uwgan/errors.hpp"
#include "uwgan/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uwgan {

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void freeze_config(const fs::path& out_dir, const RunConfig& cfg) {
  write_json(out_dir / "effective_config.json", cfg.to_json());
}

// Numeric training overrides shared by `train` and `ablate`.
struct TrainOverrides {
  std::optional<double> lr, beta1, beta2, lambda_cycle, lambda_pixel, lambda_coral;
  std::optional<int64_t> batch_size, epochs, max_steps, checkpoint_every, preview_count;
  std::optional<int64_t> base_filters, disc_base_filters;
  std::optional<uint64_t> seed;
  bool disable_da = false;
  bool disable_feedback = false;
  bool disable_pixel = false;

  void add_to(CLI::App* app, bool ablation_flags) {
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--beta1", beta1, "Adam beta1");
    app->add_option("--beta2", beta2, "Adam beta2");
    app->add_option("--lambda-cycle", lambda_cycle, "weight of the cycle term");
    app->add_option("--lambda-pixel", lambda_pixel, "weight of the pixel term");
    app->add_option("--lambda-coral", lambda_coral, "weight of the CORAL term");
    app->add_option("--batch-size", batch_size);
    app->add_option("--epochs", epochs);
    app->add_option("--max-steps", max_steps, "step cap (0 = epochs only)");
    app->add_option("--checkpoint-every", checkpoint_every, "steps between checkpoints");
    app->add_option("--preview-count", preview_count);
    app->add_option("--base-filters", base_filters, "generator width (64 = reference)");
    app->add_option("--disc-base-filters", disc_base_filters, "discriminator width");
    app->add_option("--seed", seed);
    if (ablation_flags) {
      app->add_flag("--disable-da", disable_da, "drop the domain-adaptation term");
      app->add_flag("--disable-feedback", disable_feedback, "drop the physics feedback path");
      app->add_flag("--disable-pixel", disable_pixel, "drop the pixel losses");
    }
  }

  void apply(RunConfig& cfg) const {
    auto& t = cfg.train;
    if (seed) cfg.seed = *seed;
    if (lr) t.learning_rate = *lr;
    if (beta1) t.beta1 = *beta1;
    if (beta2) t.beta2 = *beta2;
    if (lambda_cycle) t.weights.lambda_cycle = *lambda_cycle;
    if (lambda_pixel) t.weights.lambda_pixel = *lambda_pixel;
    if (lambda_coral) t.weights.lambda_coral = *lambda_coral;
    if (batch_size) t.batch_size = *batch_size;
    if (epochs) t.epochs = *epochs;
    if (max_steps) t.max_steps = *max_steps;
    if (checkpoint_every) t.checkpoint_every = *checkpoint_every;
    if (preview_count) t.preview_count = *preview_count;
    if (base_filters) t.generator.base_filters = *base_filters;
    if (disc_base_filters) t.discriminator.base_filters = *disc_base_filters;
    if (disable_da) t.ablation.disable_da = true;
    if (disable_feedback) t.ablation.disable_feedback = true;
    if (disable_pixel) t.ablation.disable_pixel = true;
    t.seed = cfg.seed;
    t.validate();
  }
};

RunConfig base_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
}

RealPool pool_for(const std::string& real_dir, int64_t resolution, std::ostream& err) {
  if (real_dir.empty()) return {};
  auto pool = load_real_pool(real_dir, resolution);
  for (const auto& w : pool.warnings) err << "warning: real pool: " << w << "\n";
  return pool;
}

// Pairs enhanced images with references and scores them.
MetricsReport score_directory(const fs::path& enhanced, const std::optional<fs::path>& reference,
                              const std::optional<fs::path>& dataset, Split split,
                              const MetricsConfig& metrics, std::ostream& err) {
  MetricsReport report;
  if (!fs::is_directory(enhanced)) throw IoError("enhanced directory not found: " + enhanced.string());
  if (dataset) {
    const auto manifest = DatasetManifest::load(*dataset / "manifest.json");
    for (const auto* r : manifest.by_split(split)) {
      const auto stem = fs::path(r->underwater_path).stem().string();
      const auto file = enhanced / (stem + ".png");
      if (!fs::exists(file)) {
        err << "warning: no enhanced image for " << r->id << "\n";
        continue;
      }
      report.images.push_back(evaluate_image(stem, load_rgb(file),
                                             load_rgb(*dataset / r->ground_truth_path), metrics));
    }
    return report;
  }
  std::map<std::string, fs::path> refs;
  if (reference) {
    if (!fs::is_directory(*reference)) {
      throw IoError("reference directory not found: " + reference->string());
    }
    for (const auto& e : fs::directory_iterator(*reference)) {
      if (e.is_regular_file() && is_image_file(e.path())) refs[e.path().stem().string()] = e.path();
    }
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(enhanced)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    torch::Tensor image;
    try {
      image = load_rgb(f);
    } catch (const IoError& e) {
      err << "warning: " << e.what() << "\n";
      continue;
    }
    torch::Tensor ref;
    if (reference) {
      const auto it = refs.find(f.stem().string());
      if (it == refs.end()) {
        err << "warning: no reference for " << f.filename().string() << "\n";
        continue;
      }
      ref = load_rgb(it->second);
    }
    report.images.push_back(evaluate_image(f.stem().string(), image, ref, metrics));
  }
  return report;
}

int cmd_synthesize(const std::string& corpus, const std::string& out_dir, RunConfig cfg,
                   std::ostream& out, std::ostream& err) {
  BuildOptions opts;
  opts.specs = parse_water_types(cfg.dataset.types);
  opts.mixture = cfg.dataset.mixture;
  opts.count = cfg.dataset.count;
  opts.seed = cfg.seed;
  opts.test_fraction = cfg.dataset.test_fraction;
  opts.train_resolution = cfg.dataset.resolution;
  opts.depth_normalization = cfg.dataset.depth_normalization;
  opts.depth_scale = cfg.dataset.depth_scale;
  const auto manifest = build_dataset(corpus, out_dir, opts);
  freeze_config(out_dir, cfg);
  out << "synthesized " << manifest.records.size() << " quads (train "
      << manifest.by_split(Split::Train).size() << ", test " << manifest.by_split(Split::Test).size()
      << ") into " << out_dir << "\n";
  if (!manifest.skipped.empty()) {
    err << "warning: skipped " << manifest.skipped.size() << " unreadable source(s)\n";
  }
  return kExitOk;
}

int cmd_train(const std::string& dataset, const std::string& real_dir, const std::string& out_dir,
              const std::string& resume, int64_t log_every, const RunConfig& cfg,
              std::ostream& out, std::ostream& err) {
  const auto manifest = DatasetManifest::load(fs::path(dataset) / "manifest.json");
  const auto pool = pool_for(real_dir, manifest.train_resolution, err);
  fs::create_directories(out_dir);
  freeze_config(out_dir, cfg);
  const auto progress = [&](const StepResult& s, int64_t step) {
    if (log_every > 0 && step % log_every == 0) {
      out << "step " << step << " total " << s.breakdown.total << "\n";
    }
  };
  const auto result =
      train_loop(manifest, dataset, pool, cfg.train, out_dir,
                 resume.empty() ? std::nullopt : std::optional<fs::path>(resume), progress);
  out << "trained " << result.steps << " steps; checkpoint " << result.final_checkpoint.string()
      << "\n";
  return kExitOk;
}

int cmd_enhance(const std::string& checkpoint, const std::string& input, const std::string& out_dir,
                std::ostream& out, std::ostream& err) {
  const auto report = enhance(checkpoint, input, out_dir);
  for (const auto& s : report.skipped) err << "warning: skipped " << s << "\n";
  if (report.written.empty()) err << "warning: no images enhanced from " << input << "\n";
  out << "enhanced " << report.written.size() << " image(s) into " << out_dir << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& enhanced, const std::string& reference,
                 const std::string& dataset, const std::string& split, const std::string& out_dir,
                 const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto report = score_directory(
      enhanced, reference.empty() ? std::nullopt : std::optional<fs::path>(reference),
      dataset.empty() ? std::nullopt : std::optional<fs::path>(dataset), split_from_string(split),
      cfg.metrics, err);
  const auto table = report.to_table();
  out << table;
  if (!out_dir.empty()) {
    write_json(fs::path(out_dir) / "metrics.json", report.to_json());
    write_text(fs::path(out_dir) / "report.txt", table);
    freeze_config(out_dir, cfg);
  }
  return kExitOk;
}

int cmd_ablate(const std::string& dataset, const std::string& real_dir, const std::string& eval_dir,
               const std::string& out_dir, const RunConfig& cfg, std::ostream& out,
               std::ostream& err) {
  const auto manifest = DatasetManifest::load(fs::path(dataset) / "manifest.json");
  const auto pool = pool_for(real_dir, manifest.train_resolution, err);
  const fs::path eval = eval_dir.empty() ? fs::path(real_dir) : fs::path(eval_dir);
  const bool has_test = !manifest.by_split(Split::Test).empty();
  fs::create_directories(out_dir);
  freeze_config(out_dir, cfg);

  std::vector<AblationFlags> variants(4);
  variants[1].disable_da = true;
  variants[2].disable_feedback = true;
  variants[3].disable_pixel = true;

  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(8) << "Method" << std::right << std::setw(10) << "UISM"
        << std::setw(10) << "UICM" << std::setw(10) << "UIConM" << std::setw(10) << "UIQM";
  if (has_test) table << std::setw(10) << "PSNR" << std::setw(9) << "SSIM";
  table << "\n";
  for (const auto& flags : variants) {
    auto train_cfg = cfg.train;
    train_cfg.ablation = flags;
    const fs::path run_dir = fs::path(out_dir) / flags.label();
    const auto result = train_loop(manifest, dataset, pool, train_cfg, run_dir);
    const auto enhancer = generator_enhancer(load_generator(result.final_checkpoint));

    MetricsReport real_report;
    if (!eval.empty()) {
      const auto written = enhance_directory(enhancer, eval, run_dir / "enhanced").written;
      for (const auto& f : written) {
        real_report.images.push_back(
            evaluate_image(f.stem().string(), load_rgb(f), {}, cfg.metrics));
      }
    }
    const auto agg = real_report.aggregate();
    json row{{"method", flags.label()},
             {"config", train_cfg.to_json()},
             {"images", real_report.images.size()},
             {"uism", agg.quality.uism},
             {"uicm", agg.quality.uicm},
             {"uiconm", agg.quality.uiconm},
             {"uiqm", agg.quality.uiqm}};
    table << std::left << std::setw(8) << flags.label() << std::right << std::fixed
          << std::setprecision(4) << std::setw(10) << agg.quality.uism << std::setw(10)
          << agg.quality.uicm << std::setw(10) << agg.quality.uiconm << std::setw(10)
          << agg.quality.uiqm;
    if (has_test) {
      MetricsReport synth;
      for (const auto* r : manifest.by_split(Split::Test)) {
        const auto q = load_quad(*r, dataset);
        synth.images.push_back(evaluate_image(
            r->id, quantize_8bit(enhancer(q.underwater)), q.ground_truth, cfg.metrics));
      }
      const auto s = synth.aggregate();
      row["psnr"] = *s.psnr;
      row["ssim"] = *s.ssim;
      table << std::setw(10) << *s.psnr << std::setw(9) << *s.ssim;
    }
    table << "\n";
    rows.push_back(row);
    out << "finished variant " << flags.label() << "\n";
  }
  write_json(fs::path(out_dir) / "ablation.json", json{{"rows", rows}});
  write_text(fs::path(out_dir) / "ablation.txt", table.str());
  out << table.str();
  return kExitOk;
}

}  // namespace

json DatasetConfig::to_json() const {
  return {{"types", types},
          {"mixture", mixture},
          {"count", count},
          {"test_fraction", test_fraction},
          {"resolution", resolution},
          {"depth_max_raw", depth_normalization.max_raw},
          {"depth_range", depth_normalization.range},
          {"depth_scale", depth_scale},
          {"clipping", clipping}};
}

DatasetConfig DatasetConfig::from_json(const json& j) { return from_json(j, DatasetConfig{}); }

DatasetConfig DatasetConfig::from_json(const json& j, DatasetConfig c) {
  c.types = j.value("types", c.types);
  c.mixture = j.value("mixture", c.mixture);
  c.count = j.value("count", c.count);
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.resolution = j.value("resolution", c.resolution);
  c.depth_normalization.max_raw = j.value("depth_max_raw", c.depth_normalization.max_raw);
  c.depth_normalization.range = j.value("depth_range", c.depth_normalization.range);
  c.depth_scale = j.value("depth_scale", c.depth_scale);
  c.clipping = j.value("clipping", c.clipping);
  if (c.clipping != "export_only") {
    throw ValidationError("dataset.clipping: only 'export_only' is implemented");
  }
  if (c.resolution < 16) throw ValidationError("dataset.resolution must be >= 16");
  return c;
}

json RunConfig::to_json() const {
  return {{"seed", seed},
          {"dataset", dataset.to_json()},
          {"train", train.to_json()},
          {"metrics", metrics.to_json()}};
}

RunConfig RunConfig::from_json(const json& j) { return from_json(j, RunConfig{}); }

RunConfig RunConfig::from_json(const json& j, RunConfig c) {
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j.at("dataset"), c.dataset);
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"), c.train);
    if (j.contains("metrics")) c.metrics = MetricsConfig::from_json(j.at("metrics"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.train.seed = c.seed;
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::vector<WaterTypeSpec> parse_water_types(const std::string& list) {
  std::vector<WaterTypeSpec> specs;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.size() != 1) throw ValidationError("water type must be one of b, c, d: '" + item + "'");
    specs.push_back(water_type(item[0]));
  }
  if (specs.empty()) throw ValidationError("no water types given");
  return specs;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-feedback, domain-adaptive underwater image enhancement"};
  app.require_subcommand(1);
  std::string config_path;

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "build synthetic (y, x, t, B) quads from RGB-D data");
  std::string corpus, syn_out, types;
  std::optional<int64_t> count, resolution;
  std::optional<uint64_t> syn_seed;
  std::optional<double> test_fraction, depth_max_raw, depth_range, depth_scale;
  std::vector<double> mixture;
  syn->add_option("--corpus", corpus, "directory with rgb/ and depth/")->required();
  syn->add_option("--out", syn_out, "output dataset directory")->required();
  syn->add_option("--config", config_path, "JSON config file");
  syn->add_option("--types", types, "comma-separated water types (b,c,d)");
  syn->add_option("--count", count, "total number of quads");
  syn->add_option("--seed", syn_seed);
  syn->add_option("--mixture", mixture, "relative share per type")->delimiter(',');
  syn->add_option("--test-fraction", test_fraction, "share of scenes held out, native size");
  syn->add_option("--resolution", resolution, "square training resolution");
  syn->add_option("--depth-max-raw", depth_max_raw, "raw depth mapped to the far limit");
  syn->add_option("--depth-range", depth_range, "attenuation units at the far limit");
  syn->add_option("--depth-scale", depth_scale, "exponent multiplier on normalized depth");

  // train
  auto* tr = app.add_subcommand("train", "train the enhancement network");
  std::string tr_dataset, tr_real, tr_out, resume;
  int64_t log_every = 100;
  TrainOverrides tr_over;
  tr->add_option("--dataset", tr_dataset, "dataset directory with manifest.json")->required();
  tr->add_option("--real", tr_real, "directory of unpaired real underwater images");
  tr->add_option("--out", tr_out, "run directory")->required();
  tr->add_option("--config", config_path, "JSON config file");
  tr->add_option("--resume", resume, "checkpoint to continue from");
  tr->add_option("--log-every", log_every, "progress print interval in steps");
  tr_over.add_to(tr, true);

  // enhance
  auto* en = app.add_subcommand("enhance", "run a trained generator over a directory");
  std::string checkpoint, en_in, en_out;
  en->add_option("--checkpoint", checkpoint)->required();
  en->add_option("--input", en_in)->required();
  en->add_option("--out", en_out)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score images with MSE/PSNR/SSIM and UIQM");
  std::string ev_enh, ev_ref, ev_dataset, ev_split = "test", ev_out;
  ev->add_option("--enhanced", ev_enh)->required();
  ev->add_option("--reference", ev_ref, "reference images matched by file stem");
  ev->add_option("--dataset", ev_dataset, "use the ground truth of a dataset split");
  ev->add_option("--split", ev_split, "dataset split (train|test)");
  ev->add_option("--out", ev_out, "directory for metrics.json and report.txt");
  ev->add_option("--config", config_path, "JSON config file");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train full, -DA, -PF and -PL variants and compare");
  std::string ab_dataset, ab_real, ab_eval, ab_out;
  TrainOverrides ab_over;
  ab->add_option("--dataset", ab_dataset)->required();
  ab->add_option("--real", ab_real, "real pool for domain adaptation");
  ab->add_option("--eval", ab_eval, "real images to score with UIQM (default: --real)");
  ab->add_option("--out", ab_out)->required();
  ab->add_option("--config", config_path, "JSON config file");
  ab_over.add_to(ab, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitValidation;
  }

  try {
    RunConfig cfg = base_config(config_path);
    if (*syn) {
      if (!types.empty()) cfg.dataset.types = types;
      if (count) cfg.dataset.count = *count;
      if (syn_seed) cfg.seed = *syn_seed;
      if (!mixture.empty()) cfg.dataset.mixture = mixture;
      if (test_fraction) cfg.dataset.test_fraction = *test_fraction;
      if (resolution) cfg.dataset.resolution = *resolution;
      if (depth_max_raw) cfg.dataset.depth_normalization.max_raw = *depth_max_raw;
      if (depth_range) cfg.dataset.depth_normalization.range = *depth_range;
      if (depth_scale) cfg.dataset.depth_scale = *depth_scale;
      cfg.train.seed = cfg.seed;
      return cmd_synthesize(corpus, syn_out, cfg, out, err);
    }
    if (*tr) {
      tr_over.apply(cfg);
      return cmd_train(tr_dataset, tr_real, tr_out, resume, log_every, cfg, out, err);
    }
    if (*en) return cmd_enhance(checkpoint, en_in, en_out, out, err);
    if (*ev) return cmd_evaluate(ev_enh, ev_ref, ev_dataset, ev_split, ev_out, cfg, out, err);
    if (*ab) {
      ab_over.apply(cfg);
      return cmd_ablate(ab_dataset, ab_real, ab_eval, ab_out, cfg, out, err);
    }
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const c10::Error& e) {
    err << "invalid input: " << e.what_without_backtrace() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace uwgan
