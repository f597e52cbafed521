#include "fclm/toy_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fclm/adversarial.hpp"

namespace fclm {

ToyEncoder ToyEncoder::create(std::size_t patch_size, std::size_t dim, Rng& rng, double gain) {
    if (patch_size == 0 || dim == 0) {
        throw std::invalid_argument("ToyEncoder: patch size and dim must be positive");
    }
    const std::array<std::size_t, 2> dims{patch_size * patch_size * 3, dim};
    const std::array<Activation, 1> acts{Activation::none};
    return {patch_size, kDefaultPixelOffset, TinyNet::random(dims, acts, rng, gain)};
}

PatchGrid patch_grid_of(const RgbImage& image, std::size_t patch_size) {
    if (patch_size == 0 || image.empty() || image.width() % patch_size != 0 ||
        image.height() % patch_size != 0) {
        throw std::invalid_argument("encode_patches: " + std::to_string(image.width()) + "x" +
                                    std::to_string(image.height()) + " image is not divisible by patch size " +
                                    std::to_string(patch_size));
    }
    return {image.height() / patch_size, image.width() / patch_size};
}

DenseMatrix extract_patches(const RgbImage& image, std::size_t patch_size, double offset) {
    const auto grid = patch_grid_of(image, patch_size);
    DenseMatrix out(grid.count(), patch_size * patch_size * 3);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            auto row = out.row(r * grid.cols + c);
            std::size_t k = 0;
            for (std::size_t py = 0; py < patch_size; ++py) {
                for (std::size_t px = 0; px < patch_size; ++px) {
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        row[k++] = image.at(c * patch_size + px, r * patch_size + py, ch) / 255.0 - offset;
                    }
                }
            }
        }
    }
    return out;
}

FeatureGrid encode_patches(const RgbImage& image, const ToyEncoder& enc) {
    if (enc.net.input_dim() != enc.patch_size * enc.patch_size * 3) {
        throw std::invalid_argument("encode_patches: encoder input does not match the patch size");
    }
    const auto grid = patch_grid_of(image, enc.patch_size);
    const auto patches = extract_patches(image, enc.patch_size, enc.pixel_offset);
    DenseMatrix tokens(grid.count(), enc.dim());
    for (std::size_t t = 0; t < grid.count(); ++t) {
        const auto v = enc.net.forward(patches.row(t));
        std::copy(v.begin(), v.end(), tokens.row(t).begin());
    }
    return {grid, std::move(tokens)};
}

PromptKind parse_prompt_kind(std::string_view name) {
    if (name == "point") return PromptKind::point;
    if (name == "box") return PromptKind::box;
    if (name == "none") return PromptKind::none;
    if (name == "learnable-context") return PromptKind::learnable_context;
    throw std::invalid_argument("unknown prompt kind '" + std::string(name) + "'");
}

namespace {

constexpr std::uint64_t kPromptMixSeed = 0x70726f6d7074ULL;
constexpr std::size_t kPromptFeatures = 2 * 2 * kPromptFrequencies;

void encode_coordinate(double c, std::vector<double>& out) {
    for (std::size_t k = 0; k < kPromptFrequencies; ++k) {
        const double w = std::ldexp(std::numbers::pi, static_cast<int>(k));
        out.push_back(std::sin(w * c));
        out.push_back(std::cos(w * c));
    }
}

}  // namespace

PromptEmbedding prompt_embed(const Prompt& prompt, std::size_t dim) {
    if (dim == 0) {
        throw std::invalid_argument("prompt_embed: dim must be positive");
    }
    PromptEmbedding out{prompt.kind, std::vector<double>(dim, 0.0)};
    if (prompt.kind == PromptKind::none || prompt.kind == PromptKind::learnable_context) {
        return out;
    }
    const std::size_t used = prompt.kind == PromptKind::point ? 2 : 4;
    for (std::size_t i = 0; i < used; ++i) {
        const double c = prompt.coords[i];
        if (!(c >= 0.0 && c <= 1.0)) {
            throw std::invalid_argument("prompt_embed: coordinate " + std::to_string(c) +
                                        " outside [0, 1]");
        }
    }
    std::vector<double> features;
    encode_coordinate(prompt.coords[0], features);
    encode_coordinate(prompt.coords[1], features);
    if (prompt.kind == PromptKind::box) {
        std::vector<double> corner;
        encode_coordinate(prompt.coords[2], corner);
        encode_coordinate(prompt.coords[3], corner);
        for (std::size_t i = 0; i < features.size(); ++i) {
            features[i] = 0.5 * (features[i] + corner[i]);
        }
    }
    Rng rng(kPromptMixSeed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kPromptFeatures));
    for (std::size_t d = 0; d < dim; ++d) {
        double s = 0.0;
        for (std::size_t j = 0; j < kPromptFeatures; ++j) {
            s += rng.normal() * scale * features[j];
        }
        out.vector[d] = s;
    }
    return out;
}

PromptEmbedding learnable_context(std::size_t dim) {
    return {PromptKind::learnable_context, std::vector<double>(dim, 0.0)};
}

std::vector<ToySample> make_blob_dataset(std::size_t pairs, std::size_t size, std::uint64_t seed) {
    if (size < 8) {
        throw std::invalid_argument("make_blob_dataset: size must be at least 8");
    }
    std::vector<ToySample> out;
    const double n = static_cast<double>(size);
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::uint64_t pair_seed = mix_seed(seed, i);
        Rng rng(pair_seed);
        const double cx = rng.uniform(0.35, 0.65) * n;
        const double cy = rng.uniform(0.35, 0.65) * n;
        const double rx = rng.uniform(0.18, 0.3) * n;
        const double ry = rng.uniform(0.18, 0.3) * n;
        const double edge = std::min(rx, ry) / 2.0;
        const std::array<double, 3> fg_color{rng.uniform(30, 90), rng.uniform(190, 250), rng.uniform(120, 250)};
        const std::array<double, 3> a0{rng.uniform(10, 40), rng.uniform(20, 50), rng.uniform(60, 100)};
        const std::array<double, 3> a1{rng.uniform(20, 60), rng.uniform(40, 80), rng.uniform(90, 130)};
        const std::array<double, 3> b_base{rng.uniform(170, 210), rng.uniform(140, 180), rng.uniform(90, 130)};

        AlphaMatte alpha(size, size);
        DepthMap depth(size, size);
        RgbImage fg(size, size);
        RgbImage bg_a(size, size);
        RgbImage bg_b(size, size);
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                const double qx = (static_cast<double>(x) + 0.5 - cx) / rx;
                const double qy = (static_cast<double>(y) + 0.5 - cy) / ry;
                const double a = std::clamp(0.5 + (1.0 - std::hypot(qx, qy)) * edge, 0.0, 1.0);
                alpha(x, y) = a;
                depth(x, y) = 0.1 + 0.7 * a;
                const double texture = 0.85 + 0.15 * std::sin(0.7 * static_cast<double>(x) + 0.4 * static_cast<double>(y));
                const double ramp = (static_cast<double>(x) + static_cast<double>(y)) / (2.0 * n);
                for (std::size_t c = 0; c < 3; ++c) {
                    fg.at(x, y, c) = static_cast<std::uint8_t>(std::round(fg_color[c] * texture));
                    bg_a.at(x, y, c) = static_cast<std::uint8_t>(std::round(a0[c] + (a1[c] - a0[c]) * ramp));
                    bg_b.at(x, y, c) = static_cast<std::uint8_t>(
                        std::round(std::clamp(b_base[c] + rng.uniform(-20.0, 20.0), 0.0, 255.0)));
                }
            }
        }
        ToySample s;
        s.pair.image_a = composite_alpha(fg, alpha, bg_a);
        s.pair.image_b = composite_alpha(fg, alpha, bg_b);
        s.pair.alpha = alpha;
        s.pair.background_a_id = "synthetic-" + std::to_string(i);
        s.pair.background_b_id = "natural-" + std::to_string(i);
        s.pair.seed = pair_seed;
        s.mask = binarize(alpha);
        s.depth = depth;
        out.push_back(std::move(s));
    }
    return out;
}

ToyModel ToyModel::create(const TrainConfig& cfg) {
    const std::size_t patch_dim = cfg.patch_size * cfg.patch_size * 3;
    ToyModel m;
    Rng enc_rng(mix_seed(cfg.seed, 1));
    m.encoder = ToyEncoder::create(cfg.patch_size, cfg.dim, enc_rng, cfg.encoder_gain);
    Rng teacher_rng(mix_seed(cfg.seed, 2));
    const std::array<std::size_t, 3> teacher_dims{patch_dim, 32, cfg.teacher_dim};
    const std::array<Activation, 2> teacher_acts{Activation::relu, Activation::none};
    m.teacher = TinyNet::random(teacher_dims, teacher_acts, teacher_rng, std::sqrt(2.0));
    Rng meta_rng(mix_seed(cfg.seed, 3));
    m.fg_net = MetaNet::create(cfg.teacher_dim, cfg.teacher_dim, cfg.dim, meta_rng);
    m.bg_net = MetaNet::create(cfg.teacher_dim, cfg.teacher_dim, cfg.dim, meta_rng);
    Rng disc_rng(mix_seed(cfg.seed, 4));
    m.discriminator = make_discriminator(cfg.dim, disc_rng, cfg.discriminator_hidden);
    Rng dec_rng(mix_seed(cfg.seed, 5));
    const std::array<std::size_t, 2> dec_dims{cfg.dim, cfg.patch_size * cfg.patch_size};
    const std::array<Activation, 1> dec_acts{Activation::sigmoid};
    m.decoder = TinyNet::random(dec_dims, dec_acts, dec_rng);
    m.context = learnable_context(cfg.dim);
    return m;
}

std::vector<double> ToyModel::parameters() const {
    std::vector<double> out;
    auto append = [&](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
    append(encoder.net.parameters());
    append(fg_net.parameters());
    append(bg_net.parameters());
    append(discriminator.parameters());
    append(decoder.parameters());
    append(context.vector);
    return out;
}

namespace {

std::string divergence_message(std::size_t step, double total) {
    std::ostringstream os;
    os << "training diverged at step " << step << " (total loss " << total << ")";
    return os.str();
}

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += scale * src[i];
    }
}

// Fixed per-sample inputs.
struct Prepared {
    DenseMatrix patches_a;
    DenseMatrix patches_b;
    FeatureGrid teacher_a;
    FeatureGrid teacher_b;
    DepthWeightPair weights_a;
    DepthWeightPair weights_b;
    PatchMask mask;
    std::vector<double> prompt;
};

FeatureGrid teacher_grid(const TinyNet& teacher, const DenseMatrix& patches, PatchGrid grid) {
    DenseMatrix t(patches.rows(), teacher.output_dim());
    for (std::size_t i = 0; i < patches.rows(); ++i) {
        const auto v = teacher.forward(patches.row(i));
        std::copy(v.begin(), v.end(), t.row(i).begin());
    }
    return {grid, std::move(t)};
}

Prompt box_prompt(const BinaryMask& mask) {
    std::size_t x0 = mask.width(), y0 = mask.height(), x1 = 0, y1 = 0;
    bool any = false;
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) {
            if (mask(x, y) > 0.5) {
                any = true;
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x + 1);
                y1 = std::max(y1, y + 1);
            }
        }
    }
    if (!any) {
        return Prompt::none();
    }
    const double w = static_cast<double>(mask.width());
    const double h = static_cast<double>(mask.height());
    return Prompt::box(static_cast<double>(x0) / w, static_cast<double>(y0) / h,
                       static_cast<double>(x1) / w, static_cast<double>(y1) / h);
}

struct Encoded {
    FeatureGrid grid;
    std::vector<NetTrace> traces;
};

Encoded encode_traced(const DenseMatrix& patches, PatchGrid grid, const TinyNet& net) {
    Encoded e;
    e.traces.resize(patches.rows());
    DenseMatrix tokens(patches.rows(), net.output_dim());
    for (std::size_t i = 0; i < patches.rows(); ++i) {
        const auto v = net.forward(patches.row(i), e.traces[i]);
        std::copy(v.begin(), v.end(), tokens.row(i).begin());
    }
    e.grid = FeatureGrid(grid, std::move(tokens));
    return e;
}

DenseMatrix pooled_foreground(const std::vector<FeatureGrid>& grids, const std::vector<Prepared>& prep) {
    std::vector<double> data;
    std::size_t rows = 0;
    const std::size_t dim = grids.front().dim();
    for (std::size_t i = 0; i < grids.size(); ++i) {
        for (std::size_t t = 0; t < grids[i].token_count(); ++t) {
            if (prep[i].mask.values.data()[t] > 0.0) {
                const auto row = grids[i].tokens.row(t);
                data.insert(data.end(), row.begin(), row.end());
                ++rows;
            }
        }
    }
    return DenseMatrix(rows, dim, std::move(data));
}

}  // namespace

TrainingDivergedError::TrainingDivergedError(std::size_t step, double total)
    : std::runtime_error(divergence_message(step, total)), step_(step) {}

TrainLog run_training(const std::vector<ToySample>& dataset, const TrainConfig& cfg, ToyModel& model) {
    if (dataset.size() < 8) {
        throw std::invalid_argument("run_training: need at least 8 pairs, got " +
                                    std::to_string(dataset.size()));
    }
    const std::size_t width = dataset.front().pair.image_a.width();
    const std::size_t height = dataset.front().pair.image_a.height();
    for (const auto& s : dataset) {
        if (s.pair.image_a.width() != width || s.pair.image_a.height() != height ||
            s.pair.image_b.width() != width || s.pair.image_b.height() != height ||
            s.pair.alpha.width() != width || s.pair.alpha.height() != height) {
            throw std::invalid_argument("run_training: all images must share one size");
        }
    }
    if (!(cfg.learning_rate > 0.0)) {
        throw std::invalid_argument("run_training: learning rate must be positive");
    }
    const std::size_t n = dataset.size();
    const std::size_t patch = cfg.patch_size;
    const PatchGrid grid = patch_grid_of(dataset.front().pair.image_a, patch);
    const std::size_t dim = model.encoder.dim();

    std::vector<Prepared> prep;
    for (const auto& s : dataset) {
        Prepared p;
        p.patches_a = extract_patches(s.pair.image_a, patch, model.encoder.pixel_offset);
        p.patches_b = extract_patches(s.pair.image_b, patch, model.encoder.pixel_offset);
        p.teacher_a = teacher_grid(model.teacher, p.patches_a, grid);
        p.teacher_b = teacher_grid(model.teacher, p.patches_b, grid);
        // both images share one depth map
        p.weights_a = compute_depth_weights(s.depth, cfg.delta, grid);
        p.weights_b = p.weights_a;
        p.mask = patchify_mask(s.mask, grid);
        p.prompt = prompt_embed(box_prompt(s.mask), dim).vector;
        prep.push_back(std::move(p));
    }

    const SinkhornOptions ot_options{cfg.sinkhorn_reg, cfg.sinkhorn_max_iters, cfg.sinkhorn_tol};
    const auto& w = cfg.weights;
    const double side = 1.0 / (2.0 * static_cast<double>(n));
    const double per_pair = 1.0 / static_cast<double>(n);
    TrainLog log;

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        std::vector<Encoded> enc_a;
        std::vector<Encoded> enc_b;
        std::vector<DenseMatrix> grad_a;
        std::vector<DenseMatrix> grad_b;
        for (const auto& p : prep) {
            enc_a.push_back(encode_traced(p.patches_a, grid, model.encoder.net));
            enc_b.push_back(encode_traced(p.patches_b, grid, model.encoder.net));
            grad_a.emplace_back(grid.count(), dim);
            grad_b.emplace_back(grid.count(), dim);
        }
        std::vector<double> g_fg(model.fg_net.parameter_count(), 0.0);
        std::vector<double> g_bg(model.bg_net.parameter_count(), 0.0);
        std::vector<double> g_dec(model.decoder.parameter_count(), 0.0);
        std::vector<double> g_ctx(dim, 0.0);
        TrainLogEntry entry;
        entry.step = step;

        // depth-aware distillation
        for (std::size_t i = 0; i < n; ++i) {
            for (int s = 0; s < 2; ++s) {
                const auto& student = s == 0 ? enc_a[i].grid : enc_b[i].grid;
                const auto& teacher = s == 0 ? prep[i].teacher_a : prep[i].teacher_b;
                const auto& weights = s == 0 ? prep[i].weights_a : prep[i].weights_b;
                const auto kd = kd_loss_depth_aware_grad(student, teacher, weights, model.fg_net,
                                                         model.bg_net, cfg.temperature);
                entry.l_kd += side * kd.loss;
                add_scaled((s == 0 ? grad_a : grad_b)[i].data(), kd.d_student.data(), side * w.kd);
                add_scaled(g_fg, kd.d_fg_net, side * w.kd);
                add_scaled(g_bg, kd.d_bg_net, side * w.kd);
            }
        }

        // token exchange, shared by the adversarial and transport terms
        std::vector<TokenExchange> exchanged;
        std::vector<std::vector<bool>> swapped;
        DomainBatch batch;
        for (std::size_t i = 0; i < n; ++i) {
            exchanged.push_back(exchange_tokens(enc_a[i].grid, enc_b[i].grid, cfg.exchange_ratio,
                                                mix_seed(mix_seed(cfg.seed, 6), (step - 1) * n + i)));
            std::vector<bool> flags(grid.count(), false);
            for (std::size_t t : exchanged.back().swapped) flags[t] = true;
            swapped.push_back(std::move(flags));
            batch.features_a.push_back(exchanged.back().a);
            batch.features_b.push_back(exchanged.back().b);
        }
        // gradient on exchanged token t of pair i, side s, routed to its source
        auto route = [&](std::size_t i, int s, std::size_t t, std::span<const double> g, double scale) {
            const bool from_a = (s == 0) != swapped[i][t];
            add_scaled((from_a ? grad_a : grad_b)[i].row(t), g, scale);
        };

        const auto adv = adversarial_loss(model.discriminator, batch, GrlConfig{cfg.lambda});
        entry.l_adv = adv.loss;
        entry.disc_acc = adv.accuracy;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < grid.count(); ++t) {
                route(i, 0, t, adv.grads_a[i].row(t), w.adv);
                route(i, 1, t, adv.grads_b[i].row(t), w.adv);
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            const auto fa = filter_foreground_tokens(exchanged[i].a, prep[i].mask);
            const auto fb = filter_foreground_tokens(exchanged[i].b, prep[i].mask);
            const auto ot = ot_loss_grad(fa.tokens, fb.tokens, ot_options);
            entry.l_ot += per_pair * ot.loss;
            for (std::size_t k = 0; k < fa.count(); ++k) {
                route(i, 0, fa.indices[k], ot.d_a.row(k), per_pair * w.ot);
                route(i, 1, fb.indices[k], ot.d_b.row(k), per_pair * w.ot);
            }
        }

        // prediction head on the unexchanged tokens
        std::vector<double> query(dim);
        NetTrace trace;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = 0; s < 2; ++s) {
                const auto& tokens = (s == 0 ? enc_a : enc_b)[i].grid.tokens;
                AlphaMatte pred(width, height);
                std::vector<NetTrace> traces(grid.count());
                for (std::size_t t = 0; t < grid.count(); ++t) {
                    for (std::size_t k = 0; k < dim; ++k) {
                        query[k] = tokens(t, k) + prep[i].prompt[k] + model.context.vector[k];
                    }
                    const auto out = model.decoder.forward(query, traces[t]);
                    const std::size_t r = t / grid.cols;
                    const std::size_t c = t % grid.cols;
                    for (std::size_t py = 0; py < patch; ++py) {
                        for (std::size_t px = 0; px < patch; ++px) {
                            pred(c * patch + px, r * patch + py) = out[py * patch + px];
                        }
                    }
                }
                const auto head = head_loss_grad(cfg.task, pred, dataset[i].pair.alpha);
                entry.l_head += side * head.value;
                std::vector<double> g_out(patch * patch);
                for (std::size_t t = 0; t < grid.count(); ++t) {
                    const std::size_t r = t / grid.cols;
                    const std::size_t c = t % grid.cols;
                    for (std::size_t py = 0; py < patch; ++py) {
                        for (std::size_t px = 0; px < patch; ++px) {
                            g_out[py * patch + px] =
                                side * w.head * head.grad[(r * patch + py) * width + c * patch + px];
                        }
                    }
                    const auto g_in = model.decoder.backward(traces[t], g_out, g_dec);
                    add_scaled((s == 0 ? grad_a : grad_b)[i].row(t), g_in, 1.0);
                    add_scaled(g_ctx, g_in, 1.0);
                }
            }
        }

        std::vector<FeatureGrid> plain_a;
        std::vector<FeatureGrid> plain_b;
        for (std::size_t i = 0; i < n; ++i) {
            plain_a.push_back(enc_a[i].grid);
            plain_b.push_back(enc_b[i].grid);
        }
        entry.align_stat = cluster_alignment_stat(pooled_foreground(plain_a, prep),
                                                  pooled_foreground(plain_b, prep));

        const std::array<double, 4> parts{entry.l_kd, entry.l_adv, entry.l_ot, entry.l_head};
        const bool finite = std::all_of(parts.begin(), parts.end(), [](double v) { return std::isfinite(v); });
        entry.total = finite ? total_loss(entry.l_kd, entry.l_adv, entry.l_ot, entry.l_head, w)
                             : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(entry.total) || entry.total > 1e6) {
            throw TrainingDivergedError(step, entry.total);
        }
        log.entries.push_back(entry);

        std::vector<double> g_enc(model.encoder.net.parameter_count(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < grid.count(); ++t) {
                model.encoder.net.backward(enc_a[i].traces[t], grad_a[i].row(t), g_enc);
                model.encoder.net.backward(enc_b[i].traces[t], grad_b[i].row(t), g_enc);
            }
        }
        const double lr = cfg.learning_rate;
        model.encoder.net.descend(g_enc, lr);
        model.fg_net.descend(g_fg, lr);
        model.bg_net.descend(g_bg, lr);
        model.discriminator.descend(adv.param_grad, lr);
        model.decoder.descend(g_dec, lr);
        add_scaled(model.context.vector, g_ctx, -lr);
    }
    return log;
}

TrainLog run_training(const std::vector<ToySample>& dataset, const TrainConfig& cfg) {
    auto model = ToyModel::create(cfg);
    return run_training(dataset, cfg, model);
}

double cluster_alignment_stat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("cluster_alignment_stat: token sets differ in shape");
    }
    if (a.rows() < 2) {
        throw std::invalid_argument("cluster_alignment_stat: need K >= 2 tokens, got " +
                                    std::to_string(a.rows()));
    }
    const std::size_t k = a.rows();
    const std::size_t d = a.cols();
    auto centroid = [&](const DenseMatrix& m) {
        std::vector<double> c(d, 0.0);
        for (std::size_t i = 0; i < k; ++i) add_scaled(c, m.row(i), 1.0 / static_cast<double>(k));
        return c;
    };
    auto scatter = [&](const DenseMatrix& m, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double q = 0.0;
            for (std::size_t j = 0; j < d; ++j) q += (m(i, j) - c[j]) * (m(i, j) - c[j]);
            s += std::sqrt(q);
        }
        return s / static_cast<double>(k);
    };
    const auto ca = centroid(a);
    const auto cb = centroid(b);
    double gap = 0.0;
    for (std::size_t j = 0; j < d; ++j) gap += (ca[j] - cb[j]) * (ca[j] - cb[j]);
    gap = std::sqrt(gap);
    const double within = 0.5 * (scatter(a, ca) + scatter(b, cb));
    if (within == 0.0) {
        return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return gap / within;
}

double cluster_alignment_stat(const ForegroundTokenSet& fg_a, const ForegroundTokenSet& fg_b) {
    return cluster_alignment_stat(fg_a.tokens, fg_b.tokens);
}

}  // namespace fclm
