#include "uwgan/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "uwgan/errors.hpp"
#include "uwgan/image_io.hpp"
#include "uwgan/physics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uwgan {

namespace {

void configure_determinism() { at::globalContext().setDeterministicAlgorithms(true, false); }

std::string gan_mode_name(GanMode mode) {
  return mode == GanMode::Bce ? "bce" : "least_squares";
}

GanMode gan_mode_from(const std::string& s) {
  if (s == "bce") return GanMode::Bce;
  if (s == "least_squares") return GanMode::LeastSquares;
  throw ValidationError("unknown gan_mode '" + s + "'");
}

double grad_norm(const std::vector<torch::Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) sq += p.grad().to(torch::kFloat64).pow(2).sum().item<double>();
  }
  return std::sqrt(sq);
}

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.requires_grad_(on);
}

torch::optim::AdamOptions adam_options(const TrainConfig& c) {
  return torch::optim::AdamOptions(c.learning_rate).betas({c.beta1, c.beta2});
}

// Which loss terms a configuration actually computes.
struct ActiveTerms {
  bool feedback;
  bool domain_adaptation;
  bool pixel;
  bool cycle;
};

ActiveTerms active_terms(const TrainConfig& c) {
  ActiveTerms a{};
  a.feedback = !c.ablation.disable_feedback;
  a.domain_adaptation = !c.ablation.disable_da && c.weights.lambda_coral > 0.0;
  a.pixel = !c.ablation.disable_pixel && c.weights.lambda_pixel > 0.0;
  a.cycle = a.feedback && c.weights.lambda_cycle > 0.0;
  return a;
}

struct ForwardPasses {
  GeneratorOutput synthetic;  // G(y) and F(y)
  torch::Tensor regenerated;  // y~
  torch::Tensor re_enhanced;  // G(y~)
  torch::Tensor real_features;
};

ForwardPasses generator_passes(TrainState& s, const TrainBatch& b, const ActiveTerms& a) {
  ForwardPasses f;
  f.synthetic = s.generator->forward(b.underwater);
  if (a.feedback) {
    f.regenerated = regenerate(f.synthetic.enhanced, b.transmission, b.background);
  }
  if (a.cycle) {
    f.re_enhanced = s.generator->forward(f.regenerated).enhanced;
  }
  if (a.domain_adaptation) {
    if (!b.real.defined()) {
      throw ValidationError("domain adaptation enabled but the batch has no real image");
    }
    f.real_features = s.generator->encode(b.real);
  }
  return f;
}

struct DiscriminatorLosses {
  double d_g = 0.0;
  std::optional<double> d_p;
};

DiscriminatorLosses update_discriminators(TrainState& s, const TrainBatch& b,
                                          const torch::Tensor& fake, const torch::Tensor& regen,
                                          StepResult* result) {
  const auto mode = s.config.gan_mode;
  s.opt_d_g->zero_grad();
  s.opt_d_p->zero_grad();
  torch::Tensor dp_real;
  torch::Tensor dp_fake;
  if (regen.defined()) {
    dp_real = s.d_p->forward(b.underwater);
    dp_fake = s.d_p->forward(regen.detach());
  }
  const auto adv = adversarial_losses(s.d_g->forward(b.ground_truth),
                                      s.d_g->forward(fake.detach()), dp_real, dp_fake, mode);
  auto loss = adv.d_p.defined() ? adv.d_g + adv.d_p : adv.d_g;
  loss.backward();
  DiscriminatorLosses out;
  out.d_g = adv.d_g.item<double>();
  if (result) result->grad_norm_d_g = grad_norm(s.d_g->parameters());
  s.opt_d_g->step();
  if (adv.d_p.defined()) {
    out.d_p = adv.d_p.item<double>();
    if (result) result->grad_norm_d_p = grad_norm(s.d_p->parameters());
    s.opt_d_p->step();
  }
  if (!std::isfinite(out.d_g) || (out.d_p && !std::isfinite(*out.d_p))) {
    throw DivergenceError("non-finite discriminator loss");
  }
  return out;
}

LossTerms generator_terms(TrainState& s, const TrainBatch& b, const ForwardPasses& f,
                          const ActiveTerms& a, torch::Tensor* adv_dg = nullptr,
                          torch::Tensor* adv_dp = nullptr) {
  const auto mode = s.config.gan_mode;
  LossTerms terms;
  const auto dg_fake = s.d_g->forward(f.synthetic.enhanced);
  torch::Tensor dp_fake;
  if (a.feedback) dp_fake = s.d_p->forward(f.regenerated);
  terms.l_a = generator_adversarial_loss(dg_fake, dp_fake, mode);
  if (adv_dg) *adv_dg = patch_loss(dg_fake, true, mode);
  if (adv_dp && dp_fake.defined()) *adv_dp = patch_loss(dp_fake, true, mode);
  if (a.pixel) {
    const auto p = a.feedback ? pixel_losses(f.synthetic.enhanced, b.ground_truth, f.regenerated,
                                             b.underwater)
                              : pixel_losses(f.synthetic.enhanced, b.ground_truth);
    terms.l_g = p.l_g;
    terms.l_m = p.l_m;
    terms.l_pixel = p.l_pixel;
  }
  if (a.cycle) terms.l_cycle = cycle_loss(f.re_enhanced, b.ground_truth);
  if (a.domain_adaptation) terms.l_coral = coral_loss(f.synthetic.features, f.real_features);
  return terms;
}

std::vector<int64_t> epoch_order(uint64_t seed, int64_t epoch, int64_t n) {
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SeededUniform rng(derive_seed(seed, "epoch/" + std::to_string(epoch)));
  for (int64_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_u64() % static_cast<uint64_t>(i)]);
  }
  return order;
}

}  // namespace

std::string AblationFlags::label() const {
  std::string s;
  if (disable_da) s += "-DA";
  if (disable_feedback) s += "-PF";
  if (disable_pixel) s += "-PL";
  return s.empty() ? "full" : s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 0 || max_steps < 0 || checkpoint_every < 0 || preview_count < 0) {
    throw ValidationError("epochs, max_steps, checkpoint_every and preview_count must be >= 0");
  }
  if (!(init_std > 0.0)) throw ValidationError("init_std must be positive");
  weights.validate();
  generator.validate();
  discriminator.validate();
  if (update_order != "discriminators_first") {
    throw ValidationError("update_order: only 'discriminators_first' is implemented");
  }
  if (lr_schedule != "constant") {
    throw ValidationError("lr_schedule: only 'constant' is implemented");
  }
  if (real_sampling != "uniform_with_replacement") {
    throw ValidationError("real_sampling: only 'uniform_with_replacement' is implemented");
  }
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"max_steps", max_steps},
          {"seed", seed},
          {"loss_weights",
           {{"lambda_cycle", weights.lambda_cycle},
            {"lambda_pixel", weights.lambda_pixel},
            {"lambda_coral", weights.lambda_coral}}},
          {"ablation",
           {{"disable_da", ablation.disable_da},
            {"disable_feedback", ablation.disable_feedback},
            {"disable_pixel", ablation.disable_pixel}}},
          {"gan_mode", gan_mode_name(gan_mode)},
          {"checkpoint_every", checkpoint_every},
          {"preview_count", preview_count},
          {"init_std", init_std},
          {"generator", generator.to_json()},
          {"discriminator", discriminator.to_json()},
          {"update_order", update_order},
          {"lr_schedule", lr_schedule},
          {"real_sampling", real_sampling}};
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss_weights")) {
      const auto& w = j.at("loss_weights");
      c.weights.lambda_cycle = w.value("lambda_cycle", c.weights.lambda_cycle);
      c.weights.lambda_pixel = w.value("lambda_pixel", c.weights.lambda_pixel);
      c.weights.lambda_coral = w.value("lambda_coral", c.weights.lambda_coral);
    }
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      c.ablation.disable_da = a.value("disable_da", c.ablation.disable_da);
      c.ablation.disable_feedback = a.value("disable_feedback", c.ablation.disable_feedback);
      c.ablation.disable_pixel = a.value("disable_pixel", c.ablation.disable_pixel);
    }
    if (j.contains("gan_mode")) c.gan_mode = gan_mode_from(j.at("gan_mode").get<std::string>());
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.preview_count = j.value("preview_count", c.preview_count);
    c.init_std = j.value("init_std", c.init_std);
    if (j.contains("generator")) c.generator = GeneratorConfig::from_json(j.at("generator"));
    if (j.contains("discriminator")) {
      c.discriminator = DiscriminatorConfig::from_json(j.at("discriminator"));
    }
    c.update_order = j.value("update_order", c.update_order);
    c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
    c.real_sampling = j.value("real_sampling", c.real_sampling);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

TrainState::TrainState(const TrainConfig& cfg) : config(cfg) {
  config.validate();
  generator = Generator(config.generator);
  d_g = Discriminator(config.discriminator);
  d_p = Discriminator(config.discriminator);
  init_weights(*generator, derive_seed(config.seed, "init/generator"), config.init_std);
  init_weights(*d_g, derive_seed(config.seed, "init/d_g"), config.init_std);
  init_weights(*d_p, derive_seed(config.seed, "init/d_p"), config.init_std);
  opt_generator =
      std::make_unique<torch::optim::Adam>(generator->parameters(), adam_options(config));
  opt_d_g = std::make_unique<torch::optim::Adam>(d_g->parameters(), adam_options(config));
  opt_d_p = std::make_unique<torch::optim::Adam>(d_p->parameters(), adam_options(config));
}

void TrainState::save(const fs::path& path) const {
  torch::serialize::OutputArchive ar;
  ar.write("format", c10::IValue(std::string(kFormat)));
  ar.write("config", c10::IValue(config.to_json().dump()));
  ar.write("step", c10::IValue(step));
  ar.write("epoch", c10::IValue(epoch));
  ar.write("seed", c10::IValue(static_cast<int64_t>(config.seed)));
  const auto nested = [&ar](const char* key, const auto& saver) {
    torch::serialize::OutputArchive sub;
    saver(sub);
    ar.write(key, sub);
  };
  nested("generator", [&](auto& a) { generator->save(a); });
  nested("d_g", [&](auto& a) { d_g->save(a); });
  nested("d_p", [&](auto& a) { d_p->save(a); });
  nested("opt_generator", [&](auto& a) { opt_generator->save(a); });
  nested("opt_d_g", [&](auto& a) { opt_d_g->save(a); });
  nested("opt_d_p", [&](auto& a) { opt_d_p->save(a); });
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  try {
    ar.save_to(tmp.string());
    fs::rename(tmp, path);
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw IoError("cannot write checkpoint " + path.string() + ": " + e.what());
  }
}

TrainState TrainState::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const std::exception& e) {
    throw ValidationError("invalid checkpoint " + path.string() + ": " + e.what());
  }
  c10::IValue v;
  if (!ar.try_read("format", v) || !v.isString() || v.toStringRef() != kFormat) {
    throw ValidationError("invalid checkpoint " + path.string() + ": format tag mismatch");
  }
  ar.read("config", v);
  TrainState state(TrainConfig::from_json(json::parse(v.toStringRef())));
  ar.read("step", v);
  state.step = v.toInt();
  ar.read("epoch", v);
  state.epoch = v.toInt();
  const auto nested = [&ar](const char* key, const auto& loader) {
    torch::serialize::InputArchive sub;
    ar.read(key, sub);
    loader(sub);
  };
  try {
    nested("generator", [&](auto& a) { state.generator->load(a); });
    nested("d_g", [&](auto& a) { state.d_g->load(a); });
    nested("d_p", [&](auto& a) { state.d_p->load(a); });
    nested("opt_generator", [&](auto& a) { state.opt_generator->load(a); });
    nested("opt_d_g", [&](auto& a) { state.opt_d_g->load(a); });
    nested("opt_d_p", [&](auto& a) { state.opt_d_p->load(a); });
  } catch (const c10::Error& e) {
    throw ValidationError("invalid checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  return state;
}

// ---------------------------------------------------------------------------

TrainBatch make_batch(const std::vector<const QuadTensors*>& quads,
                      const std::vector<torch::Tensor>& reals) {
  if (quads.empty()) throw ValidationError("empty batch");
  std::vector<torch::Tensor> y, x, t, b;
  for (const auto* q : quads) {
    y.push_back(q->underwater);
    x.push_back(q->ground_truth);
    t.push_back(q->transmission);
    b.push_back(q->background.view({3, 1, 1}));
  }
  TrainBatch batch;
  try {
    batch.underwater = torch::stack(y);
    batch.ground_truth = torch::stack(x);
    batch.transmission = torch::stack(t);
    batch.background = torch::stack(b);
    if (!reals.empty()) batch.real = torch::stack(reals);
  } catch (const c10::Error& e) {
    throw ValidationError(std::string("batch images differ in size: ") + e.what_without_backtrace());
  }
  return batch;
}

StepResult train_step(TrainState& s, const TrainBatch& batch) {
  const auto active = active_terms(s.config);
  StepResult result;

  const auto passes = generator_passes(s, batch, active);
  const auto d_losses =
      update_discriminators(s, batch, passes.synthetic.enhanced, passes.regenerated, &result);

  set_requires_grad(*s.d_g, false);
  set_requires_grad(*s.d_p, false);
  WeightedLoss objective;
  try {
    s.opt_generator->zero_grad();
    objective = total_loss(generator_terms(s, batch, passes, active), s.config.weights);
    objective.total.backward();
  } catch (...) {
    set_requires_grad(*s.d_g, true);
    set_requires_grad(*s.d_p, true);
    throw;
  }
  set_requires_grad(*s.d_g, true);
  set_requires_grad(*s.d_p, true);
  result.grad_norm_generator = grad_norm(s.generator->parameters());
  s.opt_generator->step();

  result.breakdown = objective.breakdown;
  result.breakdown.d_g = d_losses.d_g;
  result.breakdown.d_p = d_losses.d_p;
  ++s.step;
  return result;
}

std::map<std::string, double> probe_generator_gradients(TrainState& s, const TrainBatch& batch) {
  const auto active = active_terms(s.config);
  const auto params = s.generator->parameters();
  const auto passes = generator_passes(s, batch, active);
  torch::Tensor adv_dg;
  torch::Tensor adv_dp;
  const auto terms = generator_terms(s, batch, passes, active, &adv_dg, &adv_dp);

  std::map<std::string, double> norms;
  const auto probe = [&](const std::string& name, const torch::Tensor& term) {
    if (!term.defined()) return;
    const auto grads = torch::autograd::grad({term}, params, /*grad_outputs=*/{},
                                             /*retain_graph=*/true, /*create_graph=*/false,
                                             /*allow_unused=*/true);
    double sq = 0.0;
    for (const auto& g : grads) {
      if (g.defined()) sq += g.to(torch::kFloat64).pow(2).sum().item<double>();
    }
    norms[name] = std::sqrt(sq);
  };
  probe("adv_d_g", adv_dg);
  probe("adv_d_p", adv_dp);
  probe("l_g", terms.l_g);
  probe("l_m", terms.l_m);
  probe("l_cycle", terms.l_cycle);
  probe("l_coral", terms.l_coral);
  for (auto& p : s.d_g->parameters()) p.mutable_grad() = torch::Tensor();
  for (auto& p : s.d_p->parameters()) p.mutable_grad() = torch::Tensor();
  return norms;
}

double discriminator_step(TrainState& s, const TrainBatch& batch) {
  const auto active = active_terms(s.config);
  torch::Tensor fake;
  torch::Tensor regen;
  {
    torch::NoGradGuard no_grad;
    fake = s.generator->forward(batch.underwater).enhanced;
    if (active.feedback) regen = regenerate(fake, batch.transmission, batch.background);
  }
  return update_discriminators(s, batch, fake, regen, nullptr).d_g;
}

double discriminator_g_loss(TrainState& s, const TrainBatch& batch) {
  torch::NoGradGuard no_grad;
  const auto fake = s.generator->forward(batch.underwater).enhanced;
  const auto adv = adversarial_losses(s.d_g->forward(batch.ground_truth), s.d_g->forward(fake),
                                      {}, {}, s.config.gan_mode);
  return adv.d_g.item<double>();
}

// ---------------------------------------------------------------------------

TrainResult train_loop(const DatasetManifest& manifest, const fs::path& dataset_root,
                       const RealPool& pool, const TrainConfig& config, const fs::path& out_dir,
                       const std::optional<fs::path>& resume,
                       const std::function<void(const StepResult&, int64_t)>& on_step) {
  config.validate();
  configure_determinism();
  const auto active = active_terms(config);
  require_pool(pool, active.domain_adaptation);

  std::vector<QuadTensors> quads;
  for (const auto* rec : manifest.by_split(Split::Train)) {
    quads.push_back(load_quad(*rec, dataset_root));
  }
  if (quads.empty()) throw ValidationError("manifest has no training quads");

  TrainState state = resume ? TrainState::load(*resume) : TrainState(config);
  if (resume) {
    if (state.config.generator.to_json() != config.generator.to_json() ||
        state.config.discriminator.to_json() != config.discriminator.to_json()) {
      throw ValidationError("resume checkpoint was trained with different network configs");
    }
    state.config = config;
  }

  const auto n = static_cast<int64_t>(quads.size());
  const int64_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  int64_t total = config.epochs * per_epoch;
  if (config.max_steps > 0) total = std::min(total, config.max_steps);

  fs::create_directories(out_dir);
  TrainResult result;
  result.loss_log = out_dir / "loss_log.jsonl";
  std::ofstream log(result.loss_log, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open loss log " + result.loss_log.string());
  if (!resume) {
    log << json{{"type", "header"},
                {"format", "uwgan-losslog/1"},
                {"torch", TORCH_VERSION},
                {"threads", at::get_num_threads()},
                {"determinism", "bitwise only for identical platform and thread count"},
                {"train_quads", n},
                {"total_steps", total},
                {"config", config.to_json()}}
               .dump()
        << "\n";
  } else {
    log << json{{"type", "resume"}, {"step", state.step}}.dump() << "\n";
  }

  int64_t cached_epoch = -1;
  std::vector<int64_t> order;
  std::optional<LossBreakdown> last_finite;
  while (state.step < total) {
    const int64_t epoch = state.step / per_epoch;
    const int64_t pos = state.step % per_epoch;
    if (epoch != cached_epoch) {
      order = epoch_order(config.seed, epoch, n);
      cached_epoch = epoch;
    }
    std::vector<const QuadTensors*> members;
    for (int64_t i = pos * config.batch_size; i < std::min(n, (pos + 1) * config.batch_size); ++i) {
      members.push_back(&quads[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    }
    std::vector<torch::Tensor> reals;
    if (active.domain_adaptation) {
      for (size_t j = 0; j < members.size(); ++j) {
        const auto key = "real/" + std::to_string(state.step) + "/" + std::to_string(j);
        reals.push_back(pool.images[derive_seed(config.seed, key) % pool.images.size()]);
      }
    }
    const int64_t step_index = state.step;
    StepResult step;
    try {
      step = train_step(state, make_batch(members, reals));
    } catch (const DivergenceError& e) {
      std::ostringstream msg;
      msg << "diverged at step " << step_index << ": " << e.what();
      if (last_finite) msg << "; last finite breakdown " << last_finite->to_json().dump();
      throw DivergenceError(msg.str());
    }
    state.epoch = state.step / per_epoch;
    last_finite = step.breakdown;
    auto rec = step.breakdown.to_json();
    rec["type"] = "step";
    rec["step"] = state.step;
    rec["epoch"] = epoch;
    rec["grad_norm_generator"] = step.grad_norm_generator;
    rec["grad_norm_d_g"] = step.grad_norm_d_g;
    rec["grad_norm_d_p"] = step.grad_norm_d_p;
    log << rec.dump() << "\n";
    if (!log) throw IoError("cannot append to loss log " + result.loss_log.string());
    if (on_step) on_step(step, state.step);
    if (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0) {
      std::ostringstream name;
      name << "step_" << std::setw(7) << std::setfill('0') << state.step << ".pt";
      state.save(out_dir / "checkpoints" / name.str());
    }
  }
  log.flush();

  result.final_checkpoint = out_dir / "final.pt";
  state.save(result.final_checkpoint);
  result.steps = state.step;
  result.last = last_finite;

  // Previews on a fixed set: test quads first, then train quads, manifest order.
  if (config.preview_count > 0) {
    std::vector<const ManifestRecord*> picks = manifest.by_split(Split::Test);
    for (const auto* r : manifest.by_split(Split::Train)) picks.push_back(r);
    picks.resize(std::min<size_t>(picks.size(), static_cast<size_t>(config.preview_count)));
    const auto enhancer = generator_enhancer(state.generator);
    for (const auto* r : picks) {
      const auto q = load_quad(*r, dataset_root);
      save_rgb_png(out_dir / "previews" / (r->id + "_enhanced.png"), enhancer(q.underwater));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

Generator load_generator(const fs::path& checkpoint) {
  return TrainState::load(checkpoint).generator;
}

Enhancer generator_enhancer(Generator generator) {
  return [generator](const torch::Tensor& image) mutable {
    torch::NoGradGuard no_grad;
    generator->eval();
    auto out = generator->forward(image.unsqueeze(0).to(torch::kFloat32)).enhanced.squeeze(0);
    return clip_for_export(out);
  };
}

EnhanceReport enhance_directory(const Enhancer& enhancer, const fs::path& in_dir,
                                const fs::path& out_dir) {
  if (!fs::is_directory(in_dir)) throw IoError("input directory not found: " + in_dir.string());
  configure_determinism();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  EnhanceReport report;
  fs::create_directories(out_dir);
  for (const auto& f : files) {
    torch::Tensor image;
    try {
      image = load_rgb(f);
    } catch (const IoError& e) {
      report.skipped.push_back(f.filename().string() + ": " + e.what());
      continue;
    }
    const auto target = out_dir / (f.stem().string() + ".png");
    save_rgb_png(target, clip_for_export(enhancer(image)));
    report.written.push_back(target);
  }
  return report;
}

EnhanceReport enhance(const fs::path& checkpoint, const fs::path& in_dir, const fs::path& out_dir) {
  return enhance_directory(generator_enhancer(load_generator(checkpoint)), in_dir, out_dir);
}

}  // namespace uwgan
