#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "uwgan/datasets.hpp"
#include "uwgan/losses.hpp"
#include "uwgan/models.hpp"

namespace uwgan {

/// Switches for the three ablation variants.
struct AblationFlags {
  bool disable_da = false;        // -DA: no CORAL term, no real-image pass
  bool disable_feedback = false;  // -PF: no y~, no D_p, no L_m, no L_cycle
  bool disable_pixel = false;     // -PL: no L_pixel

  std::string label() const;  // "full", "-DA", "-PF", "-PL" or combinations
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int64_t batch_size = 1;
  int64_t epochs = 10;
  int64_t max_steps = 2000;  // 0: no cap beyond epochs
  uint64_t seed = 0;
  LossWeights weights;
  AblationFlags ablation;
  GanMode gan_mode = GanMode::Bce;
  int64_t checkpoint_every = 500;  // 0: final checkpoint only
  int64_t preview_count = 4;
  double init_std = 0.02;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  // Schedule choices, exposed as named keys. Only the listed values exist.
  std::string update_order = "discriminators_first";
  std::string lr_schedule = "constant";
  std::string real_sampling = "uniform_with_replacement";

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

/// Networks, optimizers and counters. Non-copyable; the optimizers hold the
/// parameters of the networks they were built for.
class TrainState {
 public:
  static constexpr const char* kFormat = "uwgan-checkpoint/1";

  explicit TrainState(const TrainConfig& config);
  TrainState(TrainState&&) = default;
  TrainState& operator=(TrainState&&) = default;
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  /// Atomic write: temp file then rename.
  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);

  TrainConfig config;
  Generator generator{nullptr};
  Discriminator d_g{nullptr};
  Discriminator d_p{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_generator;
  std::unique_ptr<torch::optim::Adam> opt_d_g;
  std::unique_ptr<torch::optim::Adam> opt_d_p;
  int64_t step = 0;
  int64_t epoch = 0;
};

/// Stacked quads: y, x, t are [N, 3, H, W]; background [N, 3, 1, 1];
/// real [N, 3, H', W'] or undefined.
struct TrainBatch {
  torch::Tensor underwater;
  torch::Tensor ground_truth;
  torch::Tensor transmission;
  torch::Tensor background;
  torch::Tensor real;
};

TrainBatch make_batch(const std::vector<const QuadTensors*>& quads,
                      const std::vector<torch::Tensor>& reals = {});

struct StepResult {
  LossBreakdown breakdown;
  double grad_norm_generator = 0.0;
  double grad_norm_d_g = 0.0;
  double grad_norm_d_p = 0.0;
};

/// One iteration: generator passes, one step for D_g and D_p, then one
/// generator step against the updated (frozen) discriminators.
/// Throws DivergenceError on non-finite losses.
StepResult train_step(TrainState& state, const TrainBatch& batch);

/// Gradient norm over generator parameters of each weighted objective term
/// taken alone; absent terms are omitted. Does not change parameters.
std::map<std::string, double> probe_generator_gradients(TrainState& state,
                                                        const TrainBatch& batch);

/// Discriminator half of train_step only; the generator is left untouched.
/// Returns the D_g loss measured before the update.
double discriminator_step(TrainState& state, const TrainBatch& batch);

/// Loss-only evaluation of D_g on a batch with the current networks.
double discriminator_g_loss(TrainState& state, const TrainBatch& batch);

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_log;
  int64_t steps = 0;
  std::optional<LossBreakdown> last;
};

/// Trains on the train split of `manifest` (rooted at `dataset_root`).
/// Writes checkpoints, `loss_log.jsonl` and previews under `out_dir`. When
/// `resume` is given, continues from that checkpoint and appends to the log.
TrainResult train_loop(const DatasetManifest& manifest, const std::filesystem::path& dataset_root,
                       const RealPool& pool, const TrainConfig& config,
                       const std::filesystem::path& out_dir,
                       const std::optional<std::filesystem::path>& resume = std::nullopt,
                       const std::function<void(const StepResult&, int64_t)>& on_step = {});

// ---------------------------------------------------------------------------
// Inference

/// Maps one [3, H, W] image to its enhanced version.
using Enhancer = std::function<torch::Tensor(const torch::Tensor&)>;

Generator load_generator(const std::filesystem::path& checkpoint);
Enhancer generator_enhancer(Generator generator);

struct EnhanceReport {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> skipped;
};

/// Enhances every image in `in_dir` into `out_dir` (PNG, same stem),
/// clipped to [0, 1]. Unreadable files are skipped and reported.
EnhanceReport enhance_directory(const Enhancer& enhancer, const std::filesystem::path& in_dir,
                                const std::filesystem::path& out_dir);

EnhanceReport enhance(const std::filesystem::path& checkpoint,
                      const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

}  // namespace uwgan
