#include "mpgen/model.hpp"

#include <algorithm>
#include <cmath>

#include "mpgen/error.hpp"

namespace mpgen {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
           x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void collect_linear(std::vector<ParamRef>& out, LinearLayer& layer,
                    const std::string& name, bool base_trainable) {
    out.push_back({&layer.w, name + ".w", base_trainable});
    if (layer.lora) {
        out.push_back({&layer.lora->a, name + ".lora_a", true});
        out.push_back({&layer.lora->b, name + ".lora_b", true});
    }
}

}  // namespace

std::vector<ParamRef> collect_params(TinyModel& model) {
    // With adapters attached only their tensors train; the base freezes.
    const bool base = !model.lora_attached;
    std::vector<ParamRef> out;
    out.push_back({&model.tok_emb, "tok_emb", base});
    out.push_back({&model.pos_emb, "pos_emb", base});
    if (model.config.prefix_dim > 0) {
        collect_linear(out, model.visual_proj, "visual_proj", base);
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        out.push_back({&layer.ln1_gamma, p + "ln1_gamma", base});
        out.push_back({&layer.ln1_beta, p + "ln1_beta", base});
        collect_linear(out, layer.wq, p + "wq", base);
        collect_linear(out, layer.wk, p + "wk", base);
        collect_linear(out, layer.wv, p + "wv", base);
        collect_linear(out, layer.wo, p + "wo", base);
        out.push_back({&layer.ln2_gamma, p + "ln2_gamma", base});
        out.push_back({&layer.ln2_beta, p + "ln2_beta", base});
        collect_linear(out, layer.w1, p + "w1", base);
        out.push_back({&layer.b1, p + "b1", base});
        collect_linear(out, layer.w2, p + "w2", base);
        out.push_back({&layer.b2, p + "b2", base});
    }
    out.push_back({&model.lnf_gamma, "lnf_gamma", base});
    out.push_back({&model.lnf_beta, "lnf_beta", base});
    collect_linear(out, model.head, "head", base);
    return out;
}

std::vector<ParamRef> collect_params(const TinyModel& model) {
    return collect_params(const_cast<TinyModel&>(model));
}

std::size_t count_parameters(const TinyModel& model) {
    std::size_t n = 0;
    for (const auto& p : collect_params(model)) n += p.tensor->size();
    return n;
}

TinyModel init_model(const ModelConfig& config, std::uint64_t seed) {
    if (config.vocab < 2 || config.dim < 1 || config.layers < 1 ||
        config.heads < 1 || config.ffn_dim < 1 || config.max_seq < 2 ||
        config.prefix_dim < 0) {
        fail(ErrorCode::invalid_config, "model dimensions must be positive");
    }
    if (config.dim % config.heads != 0) {
        fail(ErrorCode::invalid_config, "heads must divide the embedding dim");
    }

    TinyModel model;
    model.config = config;
    model.tok_emb = Tensor(config.vocab, config.dim);
    model.pos_emb = Tensor(config.max_seq, config.dim);
    if (config.prefix_dim > 0) {
        model.visual_proj.w = Tensor(config.dim, config.prefix_dim);
    }
    model.layers.resize(config.layers);
    for (auto& layer : model.layers) {
        layer.ln1_gamma = Tensor(1, config.dim);
        layer.ln1_beta = Tensor(1, config.dim);
        layer.wq.w = Tensor(config.dim, config.dim);
        layer.wk.w = Tensor(config.dim, config.dim);
        layer.wv.w = Tensor(config.dim, config.dim);
        layer.wo.w = Tensor(config.dim, config.dim);
        layer.ln2_gamma = Tensor(1, config.dim);
        layer.ln2_beta = Tensor(1, config.dim);
        layer.w1.w = Tensor(config.ffn_dim, config.dim);
        layer.b1 = Tensor(1, config.ffn_dim);
        layer.w2.w = Tensor(config.dim, config.ffn_dim);
        layer.b2 = Tensor(1, config.dim);
    }
    model.lnf_gamma = Tensor(1, config.dim);
    model.lnf_beta = Tensor(1, config.dim);
    model.head.w = Tensor(config.vocab, config.dim);

    Rng rng(seed);
    Rng init = rng.fork("model_init");
    for (auto& p : collect_params(model)) {
        if (p.name.find("gamma") != std::string::npos) {
            std::fill(p.tensor->v.begin(), p.tensor->v.end(), 1.0);
        } else if (p.name.find("beta") != std::string::npos ||
                   p.name.find(".b1") != std::string::npos ||
                   p.name.find(".b2") != std::string::npos) {
            p.tensor->zero();
        } else {
            for (auto& value : p.tensor->v) value = init.normal(0.0, 0.02);
        }
    }
    return model;
}

TinyModel clone_shape(const TinyModel& model) {
    TinyModel clone = model;
    for (auto& p : collect_params(clone)) p.tensor->zero();
    return clone;
}

void attach_lora(TinyModel& model, int rank, double alpha, double dropout) {
    if (model.lora_attached) {
        fail(ErrorCode::already_attached, "adapters are already attached");
    }
    if (rank < 1) fail(ErrorCode::invalid_config, "adapter rank must be ≥ 1");
    if (dropout < 0.0 || dropout >= 1.0) {
        fail(ErrorCode::invalid_config, "adapter dropout must be in [0, 1)");
    }

    Rng rng(model.config.vocab);  // any fixed stream; only determinism matters
    Rng init = Rng(stable_hash64("lora_init", 42));
    const auto adapt = [&](LinearLayer& layer) {
        LoraAdapter lora;
        lora.rank = rank;
        lora.alpha = alpha;
        lora.dropout = dropout;
        lora.a = Tensor(rank, layer.w.cols);
        lora.b = Tensor(layer.w.rows, rank);  // zero: attach changes nothing
        for (auto& value : lora.a.v) value = init.normal(0.0, 0.02);
        layer.lora = std::move(lora);
    };
    if (model.config.prefix_dim > 0) adapt(model.visual_proj);
    for (auto& layer : model.layers) {
        adapt(layer.wq);
        adapt(layer.wk);
        adapt(layer.wv);
        adapt(layer.wo);
        adapt(layer.w1);
        adapt(layer.w2);
    }
    // The head stays adapter-free by design.
    model.lora_attached = true;
}

void merge_lora(TinyModel& model) {
    if (!model.lora_attached) return;
    const auto fold = [](LinearLayer& layer) {
        if (!layer.lora) return;
        const auto& lora = *layer.lora;
        const double scale = lora.alpha / lora.rank;
        for (int o = 0; o < layer.w.rows; ++o) {
            for (int i = 0; i < layer.w.cols; ++i) {
                double acc = 0.0;
                for (int r = 0; r < lora.rank; ++r) {
                    acc += lora.b.at(o, r) * lora.a.at(r, i);
                }
                layer.w.at(o, i) += scale * acc;
            }
        }
        layer.lora.reset();
    };
    if (model.config.prefix_dim > 0) fold(model.visual_proj);
    for (auto& layer : model.layers) {
        fold(layer.wq);
        fold(layer.wk);
        fold(layer.wv);
        fold(layer.wo);
        fold(layer.w1);
        fold(layer.w2);
    }
    model.lora_attached = false;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

// y = x·Wᵀ (+ adapter path). Caches what backward needs.
Tensor linear_forward(const LinearLayer& layer, const Tensor& x,
                      ForwardTape::LinearCache& cache, Rng* dropout_rng) {
    cache.input = x;
    Tensor y(x.rows, layer.w.rows);
    matmul_wt(x.v.data(), x.rows, x.cols, layer.w, y.v.data());
    if (layer.lora) {
        const auto& lora = *layer.lora;
        const double scale = lora.alpha / lora.rank;
        const Tensor* adapter_in = &x;
        Tensor dropped;
        if (dropout_rng != nullptr && lora.dropout > 0.0) {
            cache.drop_mask = Tensor(x.rows, x.cols);
            dropped = Tensor(x.rows, x.cols);
            const double keep_scale = 1.0 / (1.0 - lora.dropout);
            for (std::size_t i = 0; i < x.v.size(); ++i) {
                const double m =
                    dropout_rng->uniform_real() < lora.dropout ? 0.0 : keep_scale;
                cache.drop_mask.v[i] = m;
                dropped.v[i] = x.v[i] * m;
            }
            adapter_in = &dropped;
        }
        cache.lora_mid = Tensor(x.rows, lora.rank);
        matmul_wt(adapter_in->v.data(), x.rows, x.cols, lora.a,
                  cache.lora_mid.v.data());
        Tensor lora_out(x.rows, layer.w.rows);
        matmul_wt(cache.lora_mid.v.data(), x.rows, lora.rank, lora.b,
                  lora_out.v.data());
        for (std::size_t i = 0; i < y.v.size(); ++i) {
            y.v[i] += scale * lora_out.v[i];
        }
    }
    return y;
}

// dx accumulated into dx (same rows as cache.input); parameter gradients go
// to the grads-side layer.
void linear_backward(const LinearLayer& layer, LinearLayer& grad_layer,
                     const ForwardTape::LinearCache& cache, const Tensor& dy,
                     bool base_trainable, Tensor* dx) {
    matmul_wt_backward(cache.input.v.data(), dy.v.data(), cache.input.rows,
                       cache.input.cols, layer.w,
                       base_trainable ? &grad_layer.w : nullptr,
                       dx != nullptr ? dx->v.data() : nullptr);
    if (!layer.lora) return;
    const auto& lora = *layer.lora;
    const double scale = lora.alpha / lora.rank;

    // d lora_out = scale · dy; backprop through B then A.
    Tensor dy_scaled(dy.rows, dy.cols);
    for (std::size_t i = 0; i < dy.v.size(); ++i) dy_scaled.v[i] = scale * dy.v[i];

    Tensor dmid(cache.lora_mid.rows, cache.lora_mid.cols);
    matmul_wt_backward(cache.lora_mid.v.data(), dy_scaled.v.data(), dy.rows,
                       lora.rank, lora.b, &grad_layer.lora->b, dmid.v.data());

    const bool dropped = cache.drop_mask.size() > 0;
    Tensor adapter_in = cache.input;
    if (dropped) {
        for (std::size_t i = 0; i < adapter_in.v.size(); ++i) {
            adapter_in.v[i] *= cache.drop_mask.v[i];
        }
    }
    Tensor d_adapter_in(cache.input.rows, cache.input.cols);
    matmul_wt_backward(adapter_in.v.data(), dmid.v.data(), cache.input.rows,
                       cache.input.cols, lora.a, &grad_layer.lora->a,
                       d_adapter_in.v.data());
    if (dx != nullptr) {
        for (std::size_t i = 0; i < dx->v.size(); ++i) {
            dx->v[i] +=
                dropped ? d_adapter_in.v[i] * cache.drop_mask.v[i] : d_adapter_in.v[i];
        }
    }
}

Tensor norm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    ForwardTape::NormCache& cache) {
    cache.input = x;
    cache.mean.assign(x.rows, 0.0);
    cache.rstd.assign(x.rows, 0.0);
    cache.normalized = Tensor(x.rows, x.cols);
    Tensor y(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double mean = 0.0;
        for (int c = 0; c < x.cols; ++c) mean += xr[c];
        mean /= x.cols;
        double var = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            const double d = xr[c] - mean;
            var += d * d;
        }
        var /= x.cols;
        const double rstd = 1.0 / std::sqrt(var + kNormEps);
        cache.mean[r] = mean;
        cache.rstd[r] = rstd;
        for (int c = 0; c < x.cols; ++c) {
            const double n = (xr[c] - mean) * rstd;
            cache.normalized.at(r, c) = n;
            y.at(r, c) = gamma.v[c] * n + beta.v[c];
        }
    }
    return y;
}

void norm_backward(const ForwardTape::NormCache& cache, const Tensor& gamma,
                   Tensor& dgamma, Tensor& dbeta, const Tensor& dy, Tensor& dx) {
    const int cols = cache.input.cols;
    for (int r = 0; r < cache.input.rows; ++r) {
        const double* dyr = dy.row(r);
        const double* nr = cache.normalized.row(r);
        double sum_dn = 0.0;
        double sum_dn_n = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double dn = dyr[c] * gamma.v[c];
            sum_dn += dn;
            sum_dn_n += dn * nr[c];
            dgamma.v[c] += dyr[c] * nr[c];
            dbeta.v[c] += dyr[c];
        }
        const double inv_cols = 1.0 / cols;
        for (int c = 0; c < cols; ++c) {
            const double dn = dyr[c] * gamma.v[c];
            dx.at(r, c) += cache.rstd[r] *
                           (dn - inv_cols * sum_dn - nr[c] * inv_cols * sum_dn_n);
        }
    }
}

}  // namespace

void forward(const TinyModel& model, const std::vector<int>& tokens,
             const Tensor* visual_prefix, ForwardTape& tape, Rng* dropout_rng) {
    const auto& cfg = model.config;
    const int prefix_rows = visual_prefix != nullptr ? visual_prefix->rows : 0;
    if (prefix_rows > 0) {
        if (cfg.prefix_dim <= 0) {
            fail(ErrorCode::invalid_config, "model has no visual projector");
        }
        if (visual_prefix->cols != cfg.prefix_dim) {
            fail(ErrorCode::invalid_config, "prefix vector width mismatch");
        }
    }
    if (tokens.empty()) {
        fail(ErrorCode::too_short, "forward needs at least one token");
    }
    for (int t : tokens) {
        if (t < 0 || t >= cfg.vocab) {
            fail(ErrorCode::token_out_of_range,
                 "token id " + std::to_string(t) + " outside vocabulary");
        }
    }
    const int total = prefix_rows + int(tokens.size());
    if (total > cfg.max_seq) {
        fail(ErrorCode::invalid_config,
             "sequence of " + std::to_string(total) + " exceeds max_seq " +
                 std::to_string(cfg.max_seq));
    }

    tape.total = total;
    tape.prefix = prefix_rows;
    tape.tokens = tokens;
    tape.layers.assign(cfg.layers, {});

    // Embed: projected prefix vectors occupy the leading positions; both
    // kinds of row receive the position embedding.
    tape.x0 = Tensor(total, cfg.dim);
    if (prefix_rows > 0) {
        tape.prefix_in = *visual_prefix;
        Tensor projected =
            linear_forward(model.visual_proj, tape.prefix_in, tape.visual,
                           dropout_rng);
        for (int r = 0; r < prefix_rows; ++r) {
            for (int c = 0; c < cfg.dim; ++c) {
                tape.x0.at(r, c) = projected.at(r, c) + model.pos_emb.at(r, c);
            }
        }
    }
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const int r = prefix_rows + int(t);
        const double* emb = model.tok_emb.row(tokens[t]);
        const double* pos = model.pos_emb.row(r);
        for (int c = 0; c < cfg.dim; ++c) tape.x0.at(r, c) = emb[c] + pos[c];
    }

    const int head_dim = cfg.dim / cfg.heads;
    const double att_scale = 1.0 / std::sqrt(double(head_dim));

    Tensor x = tape.x0;
    for (int l = 0; l < cfg.layers; ++l) {
        const auto& layer = model.layers[l];
        auto& cache = tape.layers[l];

        const Tensor ln1 =
            norm_forward(x, layer.ln1_gamma, layer.ln1_beta, cache.ln1);
        cache.qh = linear_forward(layer.wq, ln1, cache.q, dropout_rng);
        cache.kh = linear_forward(layer.wk, ln1, cache.k, dropout_rng);
        cache.vh = linear_forward(layer.wv, ln1, cache.v, dropout_rng);

        cache.att.assign(cfg.heads, Tensor(total, total));
        cache.att_out = Tensor(total, cfg.dim);
        for (int h = 0; h < cfg.heads; ++h) {
            const int off = h * head_dim;
            Tensor& att = cache.att[h];
            for (int i = 0; i < total; ++i) {
                // Causal: position i sees positions 0..i only.
                double max_score = -1e300;
                for (int j = 0; j <= i; ++j) {
                    double s = 0.0;
                    for (int c = 0; c < head_dim; ++c) {
                        s += cache.qh.at(i, off + c) * cache.kh.at(j, off + c);
                    }
                    s *= att_scale;
                    att.at(i, j) = s;
                    if (s > max_score) max_score = s;
                }
                double denom = 0.0;
                for (int j = 0; j <= i; ++j) {
                    const double e = std::exp(att.at(i, j) - max_score);
                    att.at(i, j) = e;
                    denom += e;
                }
                for (int j = 0; j <= i; ++j) att.at(i, j) /= denom;
                for (int c = 0; c < head_dim; ++c) {
                    double acc = 0.0;
                    for (int j = 0; j <= i; ++j) {
                        acc += att.at(i, j) * cache.vh.at(j, off + c);
                    }
                    cache.att_out.at(i, off + c) = acc;
                }
            }
        }

        const Tensor o = linear_forward(layer.wo, cache.att_out, cache.o, dropout_rng);
        cache.res1 = Tensor(total, cfg.dim);
        for (std::size_t i = 0; i < cache.res1.v.size(); ++i) {
            cache.res1.v[i] = x.v[i] + o.v[i];
        }

        const Tensor ln2 = norm_forward(cache.res1, layer.ln2_gamma,
                                        layer.ln2_beta, cache.ln2);
        cache.h_pre = linear_forward(layer.w1, ln2, cache.up, dropout_rng);
        for (int r = 0; r < total; ++r) {
            for (int c = 0; c < cfg.ffn_dim; ++c) {
                cache.h_pre.at(r, c) += layer.b1.v[c];
            }
        }
        cache.h_act = Tensor(total, cfg.ffn_dim);
        for (std::size_t i = 0; i < cache.h_act.v.size(); ++i) {
            cache.h_act.v[i] = gelu(cache.h_pre.v[i]);
        }
        Tensor down = linear_forward(layer.w2, cache.h_act, cache.down, dropout_rng);
        for (int r = 0; r < total; ++r) {
            for (int c = 0; c < cfg.dim; ++c) down.at(r, c) += layer.b2.v[c];
        }

        Tensor next(total, cfg.dim);
        for (std::size_t i = 0; i < next.v.size(); ++i) {
            next.v[i] = cache.res1.v[i] + down.v[i];
        }
        x = std::move(next);
    }

    const Tensor final_norm =
        norm_forward(x, model.lnf_gamma, model.lnf_beta, tape.lnf);
    tape.logits = linear_forward(model.head, final_norm, tape.head, dropout_rng);
}

void backward(const TinyModel& model, const ForwardTape& tape,
              const Tensor& dlogits, TinyModel& grads) {
    const auto& cfg = model.config;
    const bool base = !model.lora_attached;
    const int total = tape.total;
    const int head_dim = cfg.dim / cfg.heads;
    const double att_scale = 1.0 / std::sqrt(double(head_dim));

    Tensor d_final_norm(total, cfg.dim);
    linear_backward(model.head, grads.head, tape.head, dlogits, base,
                    &d_final_norm);

    Tensor dx(total, cfg.dim);
    norm_backward(tape.lnf, model.lnf_gamma, grads.lnf_gamma, grads.lnf_beta,
                  d_final_norm, dx);

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& layer = model.layers[l];
        auto& glayer = grads.layers[l];
        const auto& cache = tape.layers[l];

        // dx holds d(residual-2 output) = d(res1) + d(down path).
        Tensor d_down = dx;
        for (int r = 0; r < total; ++r) {
            for (int c = 0; c < cfg.dim; ++c) {
                glayer.b2.v[c] += d_down.at(r, c);
            }
        }
        Tensor d_h_act(total, cfg.ffn_dim);
        linear_backward(layer.w2, glayer.w2, cache.down, d_down, base, &d_h_act);
        Tensor d_h_pre(total, cfg.ffn_dim);
        for (std::size_t i = 0; i < d_h_pre.v.size(); ++i) {
            d_h_pre.v[i] = d_h_act.v[i] * gelu_derivative(cache.h_pre.v[i]);
        }
        for (int r = 0; r < total; ++r) {
            for (int c = 0; c < cfg.ffn_dim; ++c) {
                glayer.b1.v[c] += d_h_pre.at(r, c);
            }
        }
        Tensor d_ln2_out(total, cfg.dim);
        linear_backward(layer.w1, glayer.w1, cache.up, d_h_pre, base, &d_ln2_out);

        Tensor d_res1 = dx;  // residual shortcut
        norm_backward(cache.ln2, layer.ln2_gamma, glayer.ln2_gamma,
                      glayer.ln2_beta, d_ln2_out, d_res1);

        // res1 = layer input + attention output.
        Tensor d_att_out(total, cfg.dim);
        linear_backward(layer.wo, glayer.wo, cache.o, d_res1, base, &d_att_out);

        Tensor dq(total, cfg.dim), dk(total, cfg.dim), dv(total, cfg.dim);
        for (int h = 0; h < cfg.heads; ++h) {
            const int off = h * head_dim;
            const Tensor& att = cache.att[h];
            for (int i = 0; i < total; ++i) {
                // datt[i][j] = d_att_out_i · v_j over this head's columns.
                std::vector<double> datt(i + 1, 0.0);
                for (int j = 0; j <= i; ++j) {
                    double acc = 0.0;
                    for (int c = 0; c < head_dim; ++c) {
                        acc += d_att_out.at(i, off + c) * cache.vh.at(j, off + c);
                    }
                    datt[j] = acc;
                }
                for (int c = 0; c < head_dim; ++c) {
                    const double g = d_att_out.at(i, off + c);
                    if (g == 0.0) continue;
                    for (int j = 0; j <= i; ++j) {
                        dv.at(j, off + c) += g * att.at(i, j);
                    }
                }
                double dot = 0.0;
                for (int j = 0; j <= i; ++j) dot += att.at(i, j) * datt[j];
                for (int j = 0; j <= i; ++j) {
                    const double ds = att.at(i, j) * (datt[j] - dot) * att_scale;
                    if (ds == 0.0) continue;
                    for (int c = 0; c < head_dim; ++c) {
                        dq.at(i, off + c) += ds * cache.kh.at(j, off + c);
                        dk.at(j, off + c) += ds * cache.qh.at(i, off + c);
                    }
                }
            }
        }

        Tensor d_ln1_out(total, cfg.dim);
        linear_backward(layer.wq, glayer.wq, cache.q, dq, base, &d_ln1_out);
        linear_backward(layer.wk, glayer.wk, cache.k, dk, base, &d_ln1_out);
        linear_backward(layer.wv, glayer.wv, cache.v, dv, base, &d_ln1_out);

        Tensor d_input = d_res1;  // residual shortcut around attention
        norm_backward(cache.ln1, layer.ln1_gamma, glayer.ln1_gamma,
                      glayer.ln1_beta, d_ln1_out, d_input);
        dx = std::move(d_input);
    }

    // dx is now d x0: scatter to embeddings and the prefix projector.
    const bool train_base = !model.lora_attached;
    for (int r = tape.prefix; r < total; ++r) {
        const int token = tape.tokens[r - tape.prefix];
        for (int c = 0; c < cfg.dim; ++c) {
            if (train_base) grads.tok_emb.at(token, c) += dx.at(r, c);
            if (train_base) grads.pos_emb.at(r, c) += dx.at(r, c);
        }
    }
    if (tape.prefix > 0) {
        Tensor d_projected(tape.prefix, cfg.dim);
        for (int r = 0; r < tape.prefix; ++r) {
            for (int c = 0; c < cfg.dim; ++c) {
                if (train_base) grads.pos_emb.at(r, c) += dx.at(r, c);
                d_projected.at(r, c) = dx.at(r, c);
            }
        }
        linear_backward(model.visual_proj, grads.visual_proj, tape.visual,
                        d_projected, train_base, nullptr);
    }
}

// ---------------------------------------------------------------------------
// Losses

namespace {

// Shared NLL machinery: forward once, compute mean NLL over the target
// positions, optionally backprop. `targets` lists (position, token) pairs
// meaning "the logits row at `position` must predict `token`".
LossOutput nll_loss(const TinyModel& model, const std::vector<int>& tokens,
                    const std::vector<std::pair<int, int>>& targets,
                    TinyModel* grads, Rng* dropout_rng) {
    ForwardTape tape;
    forward(model, tokens, nullptr, tape, dropout_rng);

    const int vocab = model.config.vocab;
    LossOutput out;
    out.token_count = int(targets.size());
    Tensor dlogits;
    if (grads != nullptr) dlogits = Tensor(tape.total, vocab);

    const double inv_count = 1.0 / double(targets.size());
    for (const auto& [pos, target] : targets) {
        const double* row = tape.logits.row(pos);
        double max_logit = row[0];
        for (int v = 1; v < vocab; ++v) max_logit = std::max(max_logit, row[v]);
        double denom = 0.0;
        for (int v = 0; v < vocab; ++v) denom += std::exp(row[v] - max_logit);
        const double log_denom = std::log(denom);
        out.loss -= (row[target] - max_logit - log_denom) * inv_count;
        if (grads != nullptr) {
            double* drow = dlogits.row(pos);
            for (int v = 0; v < vocab; ++v) {
                const double p = std::exp(row[v] - max_logit) / denom;
                drow[v] = (p - (v == target ? 1.0 : 0.0)) * inv_count;
            }
        }
    }
    if (grads != nullptr) backward(model, tape, dlogits, *grads);
    return out;
}

}  // namespace

LossOutput loss_pretrain(const TinyModel& model, const std::vector<int>& tokens,
                         TinyModel* grads, Rng* dropout_rng) {
    if (tokens.size() < 2) {
        fail(ErrorCode::too_short, "need at least 2 tokens to predict anything");
    }
    std::vector<std::pair<int, int>> targets;
    targets.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        targets.emplace_back(int(t) - 1, tokens[t]);
    }
    return nll_loss(model, tokens, targets, grads, dropout_rng);
}

LossOutput loss_instruction(const TinyModel& model, const IconicPair& pair,
                            TinyModel* grads, Rng* dropout_rng) {
    const int n = int(pair.tokens.size());
    if (pair.span_begin < 0 || pair.span_end <= pair.span_begin ||
        pair.span_end > n) {
        fail(ErrorCode::empty_span, "response span is empty or out of bounds");
    }
    // Token j is predicted from position j−1, so the first sequence token
    // can never be a target even when the span starts at 0.
    const int first_target = std::max(pair.span_begin, 1);
    if (first_target >= pair.span_end) {
        fail(ErrorCode::empty_span, "no predictable response token in span");
    }
    std::vector<std::pair<int, int>> targets;
    targets.reserve(pair.span_end - first_target);
    for (int j = first_target; j < pair.span_end; ++j) {
        targets.emplace_back(j - 1, pair.tokens[j]);
    }
    return nll_loss(model, pair.tokens, targets, grads, dropout_rng);
}

TokenizedTriple tokenize_triple(const PreferenceTriple& triple) {
    TokenizedTriple out;
    out.prompt = ByteTokenizer::encode(triple.instruction);
    out.preferred = ByteTokenizer::encode(triple.preferred);
    out.preferred.push_back(ByteTokenizer::kSep);
    out.dispreferred = ByteTokenizer::encode(triple.dispreferred);
    out.dispreferred.push_back(ByteTokenizer::kSep);
    if (out.preferred == out.dispreferred) {
        fail(ErrorCode::same_pair, "responses tokenize identically");
    }
    return out;
}

namespace {

// Σ response-token log-probs, plus the per-logit gradient scaffold when a
// coefficient is supplied: d(coeff · Σ log p)/d logits.
double sequence_log_prob(const TinyModel& model, const std::vector<int>& prompt,
                         const std::vector<int>& response, double coeff,
                         TinyModel* grads) {
    if (prompt.empty()) {
        fail(ErrorCode::too_short, "preference prompt must be non-empty");
    }
    if (response.empty()) {
        fail(ErrorCode::empty_span, "preference response must be non-empty");
    }
    std::vector<int> tokens = prompt;
    tokens.insert(tokens.end(), response.begin(), response.end());

    ForwardTape tape;
    forward(model, tokens, nullptr, tape, nullptr);

    const int vocab = model.config.vocab;
    const int base = int(prompt.size());
    double total = 0.0;
    Tensor dlogits;
    if (grads != nullptr) dlogits = Tensor(tape.total, vocab);

    for (std::size_t j = 0; j < response.size(); ++j) {
        const int pos = base + int(j) - 1;
        const int target = response[j];
        const double* row = tape.logits.row(pos);
        double max_logit = row[0];
        for (int v = 1; v < vocab; ++v) max_logit = std::max(max_logit, row[v]);
        double denom = 0.0;
        for (int v = 0; v < vocab; ++v) denom += std::exp(row[v] - max_logit);
        total += row[target] - max_logit - std::log(denom);
        if (grads != nullptr) {
            double* drow = dlogits.row(pos);
            for (int v = 0; v < vocab; ++v) {
                const double p = std::exp(row[v] - max_logit) / denom;
                drow[v] += coeff * ((v == target ? 1.0 : 0.0) - p);
            }
        }
    }
    if (grads != nullptr) backward(model, tape, dlogits, *grads);
    return total;
}

}  // namespace

double response_log_prob(const TinyModel& model, const std::vector<int>& prompt,
                         const std::vector<int>& response) {
    return sequence_log_prob(model, prompt, response, 0.0, nullptr);
}

DpoOutput loss_dpo(const TinyModel& policy, const TinyModel& reference,
                   const TokenizedTriple& triple, const DpoConfig& config,
                   TinyModel* grads) {
    if (config.beta < 0.0) {
        fail(ErrorCode::invalid_config, "beta must be non-negative");
    }
    if (config.smoothing < 0.0 || config.smoothing >= 0.5) {
        fail(ErrorCode::invalid_config, "smoothing must lie in [0, 0.5)");
    }
    if (triple.preferred == triple.dispreferred) {
        fail(ErrorCode::same_pair, "responses are identical");
    }

    const double ref_w =
        sequence_log_prob(reference, triple.prompt, triple.preferred, 0.0, nullptr);
    const double ref_l = sequence_log_prob(reference, triple.prompt,
                                           triple.dispreferred, 0.0, nullptr);
    const double pol_w =
        sequence_log_prob(policy, triple.prompt, triple.preferred, 0.0, nullptr);
    const double pol_l = sequence_log_prob(policy, triple.prompt,
                                           triple.dispreferred, 0.0, nullptr);

    const double delta = (pol_w - ref_w) - (pol_l - ref_l);
    const double z = config.beta * delta;
    const double eps = config.smoothing;
    // σ in log space: ln σ(z) = −ln(1 + e^{−z}), stable via log1p on the
    // negative branch.
    const auto log_sigmoid = [](double x) {
        return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
    };
    const auto sigmoid = [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    };

    DpoOutput out;
    out.delta = delta;
    out.margin = pol_w - pol_l;
    out.loss = -(1.0 - eps) * log_sigmoid(z) - eps * log_sigmoid(-z);

    if (grads != nullptr) {
        // dL/dΔ = β·(ε·σ(z) − (1−ε)·σ(−z)); Δ feeds +Σlogp(w) and −Σlogp(l).
        const double dl_ddelta =
            config.beta * (eps * sigmoid(z) - (1.0 - eps) * sigmoid(-z));
        sequence_log_prob(policy, triple.prompt, triple.preferred, dl_ddelta,
                          grads);
        sequence_log_prob(policy, triple.prompt, triple.dispreferred, -dl_ddelta,
                          grads);
    }
    return out;
}

}  // namespace mpgen
