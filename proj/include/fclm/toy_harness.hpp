#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fclm/compositor.hpp"
#include "fclm/depth_distill.hpp"
#include "fclm/feature_grid.hpp"
#include "fclm/fg_align.hpp"
#include "fclm/pred_loss.hpp"
#include "fclm/tiny_net.hpp"

namespace fclm {

inline constexpr double kDefaultPixelOffset = 0.5;

/// Linear patch embedding: flattened RGB patch (values / 255 - offset) -> dim.
struct ToyEncoder {
    std::size_t patch_size = 4;
    double pixel_offset = kDefaultPixelOffset;
    TinyNet net;

    static ToyEncoder create(std::size_t patch_size, std::size_t dim, Rng& rng, double gain = 2.0);
    std::size_t dim() const { return net.output_dim(); }
};

/// Flattened patch vectors (pixel / 255 - offset, channels innermost), one
/// row per token in row-major grid order.
DenseMatrix extract_patches(const RgbImage& image, std::size_t patch_size, double offset = 0.0);
PatchGrid patch_grid_of(const RgbImage& image, std::size_t patch_size);

FeatureGrid encode_patches(const RgbImage& image, const ToyEncoder& enc);

enum class PromptKind { point, box, none, learnable_context };
PromptKind parse_prompt_kind(std::string_view name);

/// Coordinates normalized to [0, 1]: point uses (x, y), box (x0, y0, x1, y1).
struct Prompt {
    PromptKind kind = PromptKind::none;
    std::array<double, 4> coords{};

    static Prompt point(double x, double y) { return {PromptKind::point, {x, y, 0.0, 0.0}}; }
    static Prompt box(double x0, double y0, double x1, double y1) {
        return {PromptKind::box, {x0, y0, x1, y1}};
    }
    static Prompt none() { return {}; }
};

struct PromptEmbedding {
    PromptKind kind = PromptKind::none;
    std::vector<double> vector;
};

inline constexpr std::size_t kPromptFrequencies = 4;

/// Sinusoidal encoding sin/cos(2^k pi c), k < 4, of each coordinate,
/// concatenated and mixed to dim by a fixed seeded matrix. A box averages
/// the encodings of its two corners. none gives the zero vector.
PromptEmbedding prompt_embed(const Prompt& prompt, std::size_t dim);

/// Trainable query initialised at zero.
PromptEmbedding learnable_context(std::size_t dim);

struct TrainConfig {
    std::size_t steps = 200;
    double learning_rate = 1e-2;
    std::uint64_t seed = 7;
    double lambda = 1.0;
    double exchange_ratio = kDefaultExchangeRatio;
    double delta = kDefaultDepthThreshold;
    double sinkhorn_reg = 0.05;
    double sinkhorn_tol = 1e-4;
    std::size_t sinkhorn_max_iters = 5000;
    double temperature = 1.0;
    LossWeights weights{};
    std::size_t patch_size = 4;
    std::size_t dim = 16;
    double encoder_gain = 2.0;
    std::size_t teacher_dim = 16;
    std::size_t discriminator_hidden = 128;
    HeadTask task = HeadTask::matting;
};

/// One training pair: A is composited over a synthetic-style background, B
/// over a natural-style one.
struct ToySample {
    CompositePair pair;
    BinaryMask mask;
    DepthMap depth;
};

/// Seeded soft-edged blob foregrounds over two background styles. Depth is
/// 0.8 on the blob and 0.1 elsewhere (blended by alpha).
std::vector<ToySample> make_blob_dataset(std::size_t pairs, std::size_t size, std::uint64_t seed);

struct TrainLogEntry {
    std::size_t step = 0;
    double l_kd = 0.0;
    double l_adv = 0.0;
    double l_ot = 0.0;
    double l_head = 0.0;
    double total = 0.0;
    double disc_acc = 0.0;
    double align_stat = 0.0;

    friend bool operator==(const TrainLogEntry&, const TrainLogEntry&) = default;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;

    bool empty() const { return entries.empty(); }
    friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

/// All trainable state plus the frozen teacher.
struct ToyModel {
    ToyEncoder encoder;
    TinyNet teacher;
    MetaNet fg_net;
    MetaNet bg_net;
    TinyNet discriminator;
    TinyNet decoder;  // dim -> patch pixels, sigmoid
    PromptEmbedding context;

    static ToyModel create(const TrainConfig& cfg);
    /// Every trainable parameter, concatenated.
    std::vector<double> parameters() const;
};

class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(std::size_t step, double total);
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Runs cfg.steps full-batch gradient steps. Entry k holds the losses at the
/// parameters before update k + 1, with step = k + 1.
TrainLog run_training(const std::vector<ToySample>& dataset, const TrainConfig& cfg, ToyModel& model);
TrainLog run_training(const std::vector<ToySample>& dataset, const TrainConfig& cfg);

/// |mean(a) - mean(b)| over the average distance of each token to its own
/// domain centroid.
double cluster_alignment_stat(const ForegroundTokenSet& fg_a, const ForegroundTokenSet& fg_b);
double cluster_alignment_stat(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace fclm
