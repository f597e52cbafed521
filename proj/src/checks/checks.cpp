#include "fclm/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "fclm/adversarial.hpp"
#include "fclm/compositor.hpp"
#include "fclm/depth_distill.hpp"
#include "fclm/fg_align.hpp"
#include "fclm/metrics_dis.hpp"
#include "fclm/metrics_matting.hpp"
#include "fclm/oracles.hpp"
#include "fclm/pred_loss.hpp"

namespace fclm::checks {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

CheckResult timed(const std::string& name, const std::function<void(CheckResult&)>& body) {
    CheckResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

FeatureGrid random_grid(PatchGrid g, std::size_t dim, Rng& rng) {
    return {g, random_matrix(g.count(), dim, rng)};
}

AlphaMatte random_matte(std::size_t w, std::size_t h, Rng& rng, double lo = 0.0, double hi = 1.0) {
    AlphaMatte m(w, h);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

BinaryMask random_mask(std::size_t w, std::size_t h, Rng& rng) {
    BinaryMask m(w, h);
    for (double& v : m.values()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    m[0] = 1.0;
    return m;
}

std::vector<double> concat(std::initializer_list<std::span<const double>> parts) {
    std::vector<double> out;
    for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// Smallest |pre-activation| over the ReLU layers of net at x.
double relu_margin(const TinyNet& net, std::span<const double> x) {
    NetTrace trace;
    net.forward(x, trace);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (net.layers()[l].activation != Activation::relu) continue;
        for (double z : trace.pre[l]) m = std::min(m, std::abs(z));
    }
    return m;
}

// Soft disc used by the identity corpus.
AlphaMatte soft_blob(std::size_t size, Rng& rng) {
    AlphaMatte a(size, size);
    const double cx = rng.uniform(0.35, 0.65) * size;
    const double cy = rng.uniform(0.35, 0.65) * size;
    const double r = rng.uniform(0.2, 0.3) * size;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
            a(x, y) = std::clamp((r - d) / 3.0 + 0.5, 0.0, 1.0);
        }
    }
    return a;
}

RgbImage random_rgb(std::size_t w, std::size_t h, Rng& rng) {
    RgbImage img(w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

}  // namespace

bool GradientSuite::passed() const {
    return !entries.empty() && std::all_of(entries.begin(), entries.end(), [&](const auto& e) {
        return e.max_rel_error <= tolerance;
    });
}

CheckResult sinkhorn_lp(const CheckOptions& options) {
    return timed("sinkhorn_lp", [&](CheckResult& r) {
        const SinkhornOptions opts{1e-3, 100000, 1e-6, true};
        double worst_gap = 0.0;
        double worst_residual = 0.0;
        constexpr std::size_t kInstances = 200;
        for (std::size_t s = 0; s < kInstances; ++s) {
            Rng rng(mix_seed(options.seed, s));
            const std::size_t k = 2 + s % 3;
            const auto a = random_matrix(k, 8, rng);
            const auto b = random_matrix(k, 8, rng);
            const auto ot = ot_loss_grad(a, b, opts);
            const double lp = oracles::lp_optimum_uniform(cost_matrix_cosine(a, b));
            worst_gap = std::max(worst_gap, std::abs(ot.loss - lp));
            worst_residual = std::max({worst_residual, ot.plan.row_residual, ot.plan.col_residual});
        }
        r.passed = worst_gap <= 5e-3 && worst_residual <= 1e-6;
        r.detail = "200 instances, max |ot - lp| " + fmt("%.3g", worst_gap) +
                   ", max marginal residual " + fmt("%.3g", worst_residual);
    });
}

GradientSuite gradient_suite(const CheckOptions& options) {
    GradientSuite suite;
    constexpr std::size_t kInstances = 20;
    const double h = suite.step;
    // NaN marks an instance with a tiny nonzero analytic coordinate; it is redrawn
    auto check = [&](const ScalarFn& fn, std::span<const double> params, std::span<const double> analytic) {
        for (double v : analytic) {
            if (v != 0.0 && std::abs(v) < 1e-6) return std::numeric_limits<double>::quiet_NaN();
        }
        return finite_diff_check(fn, params, analytic, h);
    };
    auto run = [&](const std::string& name, std::uint64_t stream,
                   const std::function<double(Rng&)>& instance) {
        GradientEntry e{name, 0.0, kInstances};
        for (std::size_t i = 0; i < kInstances; ++i) {
            double err = std::numeric_limits<double>::quiet_NaN();
            for (std::uint64_t attempt = 0; std::isnan(err) && attempt < 50; ++attempt) {
                Rng rng(mix_seed(mix_seed(mix_seed(options.seed, stream), i), attempt));
                err = instance(rng);
            }
            if (std::isnan(err)) throw std::runtime_error("gradient_suite: no well-conditioned instance for " + name);
            e.max_rel_error = std::max(e.max_rel_error, err);
        }
        suite.entries.push_back(e);
    };

    run("kd_plain", 1, [&](Rng& rng) {
        const PatchGrid g{2, 3};
        const std::size_t d = 5;
        const double temp = rng.uniform() < 0.5 ? 1.0 : 2.0;
        std::vector<FeatureGrid> grids;
        for (int k = 0; k < 4; ++k) grids.push_back(random_grid(g, d, rng));
        const std::size_t n = g.count() * d;
        auto fn = [&](std::span<const double> p) {
            std::vector<FeatureGrid> x;
            for (std::size_t k = 0; k < 4; ++k) {
                x.emplace_back(g, DenseMatrix(g.count(), d, std::vector<double>(p.begin() + k * n, p.begin() + (k + 1) * n)));
            }
            return kd_loss_plain(x[0], x[1], x[2], x[3], temp);
        };
        const auto ga = weighted_kd_distance(grids[0], grids[2], {}, temp);
        const auto gb = weighted_kd_distance(grids[1], grids[3], {}, temp);
        const auto params = concat({grids[0].tokens.data(), grids[1].tokens.data(),
                                    grids[2].tokens.data(), grids[3].tokens.data()});
        const auto analytic = concat({ga.d_student.data(), gb.d_student.data(),
                                      ga.d_teacher.data(), gb.d_teacher.data()});
        return check(fn, params, analytic);
    });

    run("kd_depth_aware", 2, [&](Rng& rng) {
        const PatchGrid g{2, 3};
        const std::size_t ds = 4, dt = 5;
        const FeatureGrid student = random_grid(g, ds, rng);
        DepthMap depth(g.cols, g.rows);
        for (double& v : depth.values()) {
            v = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.2) : rng.uniform(0.3, 1.0);
        }
        depth[0] = 0.9;
        const auto weights = compute_depth_weights(depth, kDefaultDepthThreshold, g);
        FeatureGrid teacher;
        MetaNet fg, bg;
        // resample until no hidden unit sits near its ReLU kink
        for (int attempt = 0;; ++attempt) {
            teacher = random_grid(g, dt, rng);
            fg = MetaNet::create(dt, 6, ds, rng);
            bg = MetaNet::create(dt, 6, ds, rng);
            for (double& c : fg.context) c = 0.1 * rng.normal();
            for (double& c : bg.context) c = 0.1 * rng.normal();
            double margin = 1.0;
            for (std::size_t t = 0; t < g.count(); ++t) {
                for (const MetaNet* net : {&fg, &bg}) {
                    std::vector<double> x(teacher.tokens.row(t).begin(), teacher.tokens.row(t).end());
                    for (std::size_t i = 0; i < x.size(); ++i) x[i] += net->context[i];
                    margin = std::min(margin, relu_margin(net->body, x));
                }
            }
            if (margin > 1e-3 || attempt == 100) break;
        }
        const double temp = rng.uniform() < 0.5 ? 1.0 : 2.0;
        const std::size_t ns = student.tokens.size();
        const std::size_t nf = fg.parameter_count();
        auto fn = [&](std::span<const double> p) {
            FeatureGrid s{g, DenseMatrix(g.count(), ds, std::vector<double>(p.begin(), p.begin() + ns))};
            MetaNet f = fg, b = bg;
            f.set_parameters(p.subspan(ns, nf));
            b.set_parameters(p.subspan(ns + nf));
            return kd_loss_depth_aware(s, teacher, weights, f, b, temp);
        };
        const auto grad = kd_loss_depth_aware_grad(student, teacher, weights, fg, bg, temp);
        const auto fp = fg.parameters();
        const auto bp = bg.parameters();
        const auto params = concat({student.tokens.data(), fp, bp});
        const auto analytic = concat({grad.d_student.data(), grad.d_fg_net, grad.d_bg_net});
        return check(fn, params, analytic);
    });

    run("adversarial", 3, [&](Rng& rng) {
        const PatchGrid g{2, 2};
        const std::size_t d = 4;
        DomainBatch batch;
        TinyNet disc;
        // resample until no hidden unit sits near its ReLU kink
        for (int attempt = 0;; ++attempt) {
            batch = DomainBatch{};
            for (int k = 0; k < 2; ++k) {
                batch.features_a.push_back(random_grid(g, d, rng));
                batch.features_b.push_back(random_grid(g, d, rng));
            }
            disc = make_discriminator(d, rng, 8);
            double margin = 1.0;
            for (const auto* side : {&batch.features_a, &batch.features_b}) {
                for (const auto& grid : *side) margin = std::min(margin, relu_margin(disc, mean_pool(grid)));
            }
            if (margin > 1e-3 || attempt == 100) break;
        }
        const GrlConfig grl{1.0};
        const auto res = adversarial_loss(disc, batch, grl);

        auto fn_params = [&](std::span<const double> p) {
            TinyNet n = disc;
            n.set_parameters(p);
            return adversarial_loss(n, batch, grl).loss;
        };
        const double e1 = check(fn_params, disc.parameters(), res.param_grad);

        // token gradients arrive reversed; undo the reversal for the check
        std::vector<double> tokens, analytic;
        for (std::size_t k = 0; k < 2; ++k) {
            for (const auto* side : {&batch.features_a, &batch.features_b}) {
                const auto& t = (*side)[k].tokens.data();
                tokens.insert(tokens.end(), t.begin(), t.end());
                const auto& gr = (side == &batch.features_a ? res.grads_a : res.grads_b)[k].data();
                for (double v : gr) analytic.push_back(-v / grl.lambda);
            }
        }
        const std::size_t n = g.count() * d;
        auto fn_tokens = [&](std::span<const double> p) {
            DomainBatch b;
            std::size_t off = 0;
            for (std::size_t k = 0; k < 2; ++k) {
                for (auto* side : {&b.features_a, &b.features_b}) {
                    side->emplace_back(g, DenseMatrix(g.count(), d, std::vector<double>(p.begin() + off, p.begin() + off + n)));
                    off += n;
                }
            }
            return adversarial_loss(disc, b, grl).loss;
        };
        const double e2 = check(fn_tokens, tokens, analytic);
        return std::isnan(e1) || std::isnan(e2) ? std::numeric_limits<double>::quiet_NaN() : std::max(e1, e2);
    });

    run("ot_envelope", 4, [&](Rng& rng) {
        const std::size_t k = 2 + rng.index(3), d = 4;
        const auto a = random_matrix(k, d, rng);
        const auto b = random_matrix(k, d, rng);
        const SinkhornOptions opts{0.5, 100000, 1e-13};
        const auto grad = ot_loss_grad(a, b, opts);
        auto fn = [&](std::span<const double> p) {
            const DenseMatrix pa(k, d, std::vector<double>(p.begin(), p.begin() + k * d));
            const DenseMatrix pb(k, d, std::vector<double>(p.begin() + k * d, p.end()));
            const auto u = EmpiricalDistribution::uniform(k);
            return sinkhorn_plan(cost_matrix_cosine(pa, pb), u, u, opts).entropic_objective();
        };
        return check(fn, concat({a.data(), b.data()}), concat({grad.d_a.data(), grad.d_b.data()}));
    });

    auto image_fn = [](std::size_t w, std::size_t hh, const std::function<double(const AlphaMatte&)>& f) {
        return [w, hh, f](std::span<const double> p) {
            return f(AlphaMatte(w, hh, std::vector<double>(p.begin(), p.end())));
        };
    };

    run("l1", 5, [&](Rng& rng) {
        const AlphaMatte gt = random_matte(4, 4, rng);
        AlphaMatte pred = random_matte(4, 4, rng);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (std::abs(pred[i] - gt[i]) < 0.05) pred[i] = gt[i] + (gt[i] < 0.5 ? 0.1 : -0.1);
        }
        auto g = l1_matte_loss_grad(pred, gt);
        if (options.corrupt_gradient) {
            for (double& v : g.grad) v *= 1.01;
        }
        const auto fn = image_fn(4, 4, [&](const AlphaMatte& p) { return l1_matte_loss(p, gt); });
        return check(fn, pred.values(), g.grad);
    });

    run("laplacian", 6, [&](Rng& rng) {
        const std::size_t side = 16;
        AlphaMatte gt, pred;
        // resample until every band difference stays clear of the |.| kink
        for (int attempt = 0;; ++attempt) {
            gt = random_matte(side, side, rng);
            pred = random_matte(side, side, rng);
            const auto bp = laplacian_pyramid(pred, kDefaultPyramidLevels);
            const auto bg = laplacian_pyramid(gt, kDefaultPyramidLevels);
            double margin = 1.0;
            for (std::size_t l = 0; l < bp.size(); ++l) {
                for (std::size_t i = 0; i < bp[l].size(); ++i) {
                    margin = std::min(margin, std::abs(bp[l][i] - bg[l][i]));
                }
            }
            if (margin > 1e-3 || attempt == 100) break;
        }
        const auto g = laplacian_pyramid_loss_grad(pred, gt);
        const auto fn = image_fn(side, side, [&](const AlphaMatte& p) { return laplacian_pyramid_loss(p, gt); });
        return check(fn, pred.values(), g.grad);
    });

    run("bce", 7, [&](Rng& rng) {
        const BinaryMask gt = random_mask(4, 4, rng);
        const AlphaMatte pred = random_matte(4, 4, rng, 0.05, 0.95);
        const auto g = bce_loss_grad(pred, gt);
        const auto fn = image_fn(4, 4, [&](const AlphaMatte& p) { return bce_loss(p, gt); });
        return check(fn, pred.values(), g.grad);
    });

    run("iou", 8, [&](Rng& rng) {
        const BinaryMask gt = random_mask(4, 4, rng);
        const AlphaMatte pred = random_matte(4, 4, rng, 0.05, 0.95);
        const auto g = iou_loss_grad(pred, gt);
        const auto fn = image_fn(4, 4, [&](const AlphaMatte& p) { return iou_loss(p, gt); });
        return check(fn, pred.values(), g.grad);
    });

    return suite;
}

CheckResult gradients(const CheckOptions& options) {
    return timed("gradients", [&](CheckResult& r) {
        const auto suite = gradient_suite(options);
        r.passed = suite.passed();
        std::string failing, all;
        for (const auto& e : suite.entries) {
            all += (all.empty() ? "" : ", ") + e.loss + " " + fmt("%.2g", e.max_rel_error);
            if (e.max_rel_error > suite.tolerance) failing += (failing.empty() ? "" : ", ") + e.loss;
        }
        r.detail = r.passed ? "max rel. error: " + all : "failing: " + failing + " (" + all + ")";
    });
}

CheckResult depth_weights_contract(const CheckOptions& options) {
    return timed("depth_weights", [&](CheckResult& r) {
        std::size_t violations = 0;
        Rng rng(mix_seed(options.seed, 30));
        const double deltas[] = {0.1, 0.25, 0.5};
        for (std::size_t t = 0; t < 50; ++t) {
            const std::size_t w = 3 + rng.index(10), hh = 3 + rng.index(10);
            const double delta = deltas[t % 3];
            DepthMap depth(w, hh);
            for (double& v : depth.values()) v = rng.uniform() < 0.1 ? delta : rng.uniform();
            const auto dw = compute_depth_weights(depth, delta, {hh, w});
            for (std::size_t y = 0; y < hh; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const double p = dw.d_plus(y, x), m = dw.d_minus(y, x);
                    if (p * m != 0.0 || (p > 0.0) != (depth(x, y) > delta)) ++violations;
                }
            }
        }
        const DepthMap hand(2, 2, {0.8, 0.2, 0.25, 1.0});
        const auto dw = compute_depth_weights(hand, 0.25, {2, 2});
        const bool hand_ok = dw.d_plus(0, 0) == 0.8 && dw.d_plus(0, 1) == 0.0 &&
                             dw.d_plus(1, 0) == 0.0 && dw.d_plus(1, 1) == 1.0 &&
                             dw.d_minus(0, 0) == 0.0 && std::abs(dw.d_minus(0, 1) - 0.2) <= 1e-15 &&
                             dw.d_minus(1, 0) == 0.0 && dw.d_minus(1, 1) == 0.0;
        r.passed = violations == 0 && hand_ok;
        r.detail = std::to_string(violations) + " pointwise violations on 50 maps; 2x2 example " +
                   (hand_ok ? "reproduced" : "differs");
    });
}

CheckResult grl_contract(const CheckOptions& options) {
    return timed("grl", [&](CheckResult& r) {
        Rng rng(mix_seed(options.seed, 40));
        const FeatureGrid x = random_grid({3, 3}, 6, rng);
        const FeatureGrid& y = grl_forward(x);
        const bool forward_ok =
            std::memcmp(x.tokens.data().data(), y.tokens.data().data(), x.tokens.size() * sizeof(double)) == 0;

        bool backward_ok = true;
        std::vector<double> up(32);
        for (double& v : up) v = rng.normal();
        for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
            const auto g = grl_apply(up, {lambda});
            for (std::size_t i = 0; i < up.size(); ++i) backward_ok &= g[i] == -lambda * up[i];
        }

        DomainBatch batch;
        for (int k = 0; k < 3; ++k) {
            batch.features_a.push_back(random_grid({2, 2}, 6, rng));
            batch.features_b.push_back(random_grid({2, 2}, 6, rng));
        }
        const TinyNet disc = make_discriminator(6, rng, 16);
        bool scaling_ok = true;
        for (double lambda : {0.5, 1.0}) {
            const auto base = adversarial_loss(disc, batch, {lambda});
            const auto twice = adversarial_loss(disc, batch, {2.0 * lambda});
            scaling_ok &= base.param_grad == twice.param_grad && base.loss == twice.loss;
            for (std::size_t k = 0; k < base.grads_a.size(); ++k) {
                for (std::size_t i = 0; i < base.grads_a[k].size(); ++i) {
                    scaling_ok &= twice.grads_a[k].data()[i] == 2.0 * base.grads_a[k].data()[i];
                    scaling_ok &= twice.grads_b[k].data()[i] == 2.0 * base.grads_b[k].data()[i];
                }
            }
        }
        r.passed = forward_ok && backward_ok && scaling_ok;
        r.detail = std::string("forward ") + (forward_ok ? "identical" : "differs") + ", backward " +
                   (backward_ok ? "exact" : "inexact") + " for lambda in {0,0.5,1,2}, scaling " +
                   (scaling_ok ? "exact" : "inexact");
    });
}

CheckResult metric_identities(const CheckOptions& options) {
    return timed("metric_identities", [&](CheckResult& r) {
        Rng rng(mix_seed(options.seed, 50));
        std::string bad;
        auto expect = [&](bool ok, const char* what) {
            if (!ok && bad.find(what) == std::string::npos) bad += (bad.empty() ? "" : ", ") + std::string(what);
        };
        constexpr std::size_t kCorpus = 8;
        for (std::size_t i = 0; i < kCorpus; ++i) {
            const AlphaMatte alpha = soft_blob(32, rng);
            const auto m = matte_report(alpha, alpha);
            expect(m.sad_raw == 0.0, "SAD");
            expect(m.mse == 0.0, "MSE");
            expect(m.mad == 0.0, "MAD");
            expect(m.grad_raw == 0.0, "Grad");
            expect(m.conn_raw == 0.0, "Conn");

            AlphaMatte left = alpha, right = alpha;
            for (std::size_t y = 0; y < 32; ++y) {
                for (std::size_t x = 0; x < 32; ++x) (x < 16 ? right : left)(x, y) = 0.0;
            }
            const std::vector<AlphaMatte> inst{left, right};
            for (auto q : {ImqQuality::mse, ImqQuality::mad, ImqQuality::grad, ImqQuality::conn}) {
                expect(imq(inst, inst, q) == 100.0, "IMQ");
            }

            const BinaryMask gt = binarize(alpha);
            const auto d = dis_report(to_matte(gt), gt);
            expect(d.max_f == 1.0, "maxF");
            expect(d.weighted_f == 1.0, "weighted F");
            expect(d.mae == 0.0, "MAE");
            expect(std::abs(d.s_measure - 1.0) <= 1e-6, "S-measure");
            expect(std::abs(d.e_measure - 1.0) <= 1e-6, "E-measure");
            expect(d.hce == 0, "HCE");
        }
        r.passed = bad.empty();
        r.detail = r.passed ? "pred = gt on 8 mattes: all identities hold" : "violated: " + bad;
    });
}

CheckResult metric_oracles(const CheckOptions& options) {
    return timed("metric_oracles", [&](CheckResult& r) {
        Rng rng(mix_seed(options.seed, 60));
        double grad_gap = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            const AlphaMatte p = random_matte(16, 16, rng);
            const AlphaMatte g = i % 2 ? soft_blob(16, rng) : random_matte(16, 16, rng);
            grad_gap = std::max(grad_gap, std::abs(grad_error(p, g).raw - oracles::grad_error_naive(p, g, kGradSigma)));
        }

        double conn_gap = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            AlphaMatte p(8, 8), g(8, 8);
            switch (i) {
                case 0:
                    break;
                case 1:
                    p = AlphaMatte(8, 8, 1.0);
                    g = AlphaMatte(8, 8, 1.0);
                    break;
                case 2:
                case 3:
                    // two equal islands: the tie rule decides
                    for (std::size_t y = 1; y < 4; ++y) {
                        for (std::size_t x = 0; x < 3; ++x) {
                            p(x + 1, y) = g(x + 1, y) = 0.9;
                            p(x + 4, y + 3) = g(x + 4, y + 3) = i == 2 ? 0.9 : 0.6;
                        }
                    }
                    break;
                case 4:
                    for (std::size_t y = 0; y < 8; ++y) {
                        for (std::size_t x = 0; x < 8; ++x) p(x, y) = g(x, y) = (x + y) % 2 ? 1.0 : 0.0;
                    }
                    break;
                default:
                    for (std::size_t k = 0; k < 64; ++k) {
                        const double base = std::round(rng.uniform() * 10.0) / 10.0;
                        p[k] = i % 3 ? base : rng.uniform();
                        g[k] = std::clamp(base + (rng.uniform() < 0.3 ? rng.uniform(-0.4, 0.4) : 0.0), 0.0, 1.0);
                    }
            }
            conn_gap = std::max(conn_gap, std::abs(connectivity_error(p, g).raw -
                                                   oracles::connectivity_error_flood(p, g, kConnStep)));
        }

        const AlphaMatte pred(2, 2, {0.0, 1.0, 1.0, 1.0});
        const BinaryMask gt(2, 2, {1.0, 0.0, 0.0, 0.0});
        const double f = max_f_measure(pred, gt);

        const bool grad_ok = grad_gap <= 1e-9, conn_ok = conn_gap <= 1e-12;
        const bool f_ok = std::abs(f - 0.3023) <= 1e-4;
        r.passed = grad_ok && conn_ok && f_ok;
        r.detail = "grad vs naive conv " + fmt("%.2g", grad_gap) + " (50 pairs), conn vs flood fill " +
                   fmt("%.2g", conn_gap) + " (20 cases), maxF hand case " + fmt("%.4f", f);
    });
}

CheckResult compositor_algebra(const CheckOptions& options) {
    return timed("compositor", [&](CheckResult& r) {
        Rng rng(mix_seed(options.seed, 70));
        std::size_t opaque_diffs = 0, identity_misses = 0;
        for (std::size_t t = 0; t < 10; ++t) {
            const std::size_t w = 24, hh = 20;
            const RgbImage fg = random_rgb(w, hh, rng);
            AlphaMatte alpha(w, hh);
            for (double& a : alpha.values()) {
                const double u = rng.uniform();
                a = u < 0.3 ? 1.0 : (u < 0.5 ? 0.0 : rng.uniform());
            }
            std::vector<Background> pool;
            for (std::size_t k = 0; k < 4; ++k) {
                pool.push_back({"bg-" + std::to_string(k), random_rgb(w + 2 * k, hh + 3 * k, rng)});
            }
            const auto pair = make_pair(fg, alpha, pool, mix_seed(options.seed, 100 + t));
            auto find = [&](const std::string& id) {
                for (const auto& b : pool) {
                    if (b.id == id) return b.image.center_crop(w, hh);
                }
                throw std::runtime_error("background id not in pool: " + id);
            };
            const RgbImage ba = find(pair.background_a_id), bb = find(pair.background_b_id);
            for (std::size_t y = 0; y < hh; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double diff = double(pair.image_a.at(x, y, c)) - pair.image_b.at(x, y, c);
                        const double expect = (1.0 - alpha(x, y)) * (double(ba.at(x, y, c)) - bb.at(x, y, c));
                        if (alpha(x, y) == 1.0 && diff != 0.0) ++opaque_diffs;
                        if (std::abs(diff - expect) > 1.0) ++identity_misses;
                    }
                }
            }
        }
        RgbImage f1(1, 1, 200), b1(1, 1, 100);
        const auto half = composite_alpha(f1, AlphaMatte(1, 1, 0.5), b1);
        const bool half_ok = half.at(0, 0, 0) == 150 && half.at(0, 0, 1) == 150 && half.at(0, 0, 2) == 150;
        r.passed = opaque_diffs == 0 && identity_misses == 0 && half_ok;
        r.detail = std::to_string(opaque_diffs) + " differing alpha=1 values, " +
                   std::to_string(identity_misses) + " difference-identity misses over 10 pairs, alpha=0.5 gives " +
                   std::to_string(half.at(0, 0, 0));
    });
}

std::vector<CheckResult> run_all(const CheckOptions& options) {
    return {sinkhorn_lp(options),          gradients(options),        depth_weights_contract(options),
            grl_contract(options),         metric_identities(options), metric_oracles(options),
            compositor_algebra(options)};
}

}  // namespace fclm::checks
