// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/pipeline.hpp"

#include <cmath>
#include <future>
#include <string>

#include "decorstory/simd.hpp"

namespace decorstory {
namespace {

template <Real T>
Matrix<T> draw_uniform(SplitMix64& rng, std::size_t rows, std::size_t cols) {
    Matrix<T> m(rows, cols);
    for (T& x : m.values()) {
        x = static_cast<T>(rng.uniform_pm1());
    }
    return m;
}

template <Real T>
double norm_of(const std::vector<T>& z) {
    double acc = 0.0;
    for (T v : z) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

template <Real T>
FrameOutput<T> denoise_frame(std::size_t frame, const TokenEmbeddingMatrix<T>& conditioned,
                             const ToyDenoiserWeights<T>& weights, const PromptLayout& layout,
                             const std::vector<T>& initial, const PipelineConfig& config) {
    const DenoiseOptions options{config.step_size, config.toggles.enable_ipca};
    LatentState<T> state{initial, config.steps};
    FrameOutput<T> out;
    out.frame_index = frame;
    out.trace.reserve(config.steps + 1);
    out.trace.push_back(norm_of(state.z));
    while (state.t > 0) {
        state = toy_denoise_step<T>(state, conditioned, weights, layout, options);
        out.trace.push_back(norm_of(state.z));
    }
    out.vector = toy_decode<T>(state);
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    svr.validate();
    decorrelation.validate();
    if (steps < 1) raise(Errc::invalid_argument, "steps must be >= 1");
    if (latent_dim < 1) raise(Errc::invalid_argument, "latent_dim must be >= 1");
    if (query_rows < 1) raise(Errc::invalid_argument, "query_rows must be >= 1");
    if (attention_dim < 1) raise(Errc::invalid_argument, "attention_dim must be >= 1");
    if (!(std::isfinite(step_size) && step_size > 0.0)) raise(Errc::invalid_argument, "step size must be > 0");
}

template <Real T>
ToyDenoiserWeights<T> draw_toy_weights(SplitMix64& rng, std::size_t embedding_dim, const PipelineConfig& config) {
    ToyDenoiserWeights<T> w;
    w.w_q = draw_uniform<T>(rng, config.latent_dim, config.query_rows * config.attention_dim);
    w.attention.w_k = draw_uniform<T>(rng, embedding_dim, config.attention_dim);
    w.attention.w_v = draw_uniform<T>(rng, embedding_dim, config.attention_dim);
    w.w_out = draw_uniform<T>(rng, config.attention_dim, config.latent_dim);
    return w;
}

template <Real T>
std::vector<T> draw_initial_latent(SplitMix64& rng, std::size_t latent_dim) {
    std::vector<T> z(latent_dim);
    for (T& x : z) {
        x = static_cast<T>(rng.gaussian());
    }
    return z;
}

template <Real T>
LatentState<T> toy_denoise_step(const LatentState<T>& state, const TokenEmbeddingMatrix<T>& conditioned,
                                const ToyDenoiserWeights<T>& weights, const PromptLayout& layout,
                                const DenoiseOptions& options) {
    const std::size_t latent_dim = weights.w_q.rows();
    const std::size_t d = weights.attention.key_dim();
    const std::size_t lq = weights.query_rows();
    if (state.z.size() != latent_dim || weights.w_out.rows() != d || weights.w_out.cols() != latent_dim ||
        lq * d != weights.w_q.cols() || lq == 0) {
        raise(Errc::shape_mismatch, "toy denoiser weights do not match the latent state");
    }
    if (state.t == 0) {
        raise(Errc::invalid_argument, "no denoising steps remain");
    }
    const auto& k = simd::active_kernels<T>();

    Matrix<T> z_row(1, latent_dim);
    z_row.set_row(0, state.z);
    const Matrix<T> q_flat = simd::matmul(z_row, weights.w_q);
    Matrix<T> queries(lq, d);
    std::copy(q_flat.values().begin(), q_flat.values().end(), queries.values().begin());

    Matrix<T> out;
    if (options.enable_ipca) {
        out = ipca_attention<T>(make_ipca_batch<T>(std::move(queries), conditioned, layout, weights.attention));
    } else {
        layout.validate(conditioned.rows());
        auto [keys, values] = project_kv<T>(conditioned, weights.attention);
        out = attention<T>(queries, keys, values);
    }

    Matrix<T> pooled(1, d);
    for (std::size_t r = 0; r < lq; ++r) {
        k.axpy(T(1), out.row(r).data(), pooled.data(), d);
    }
    k.divide(pooled.data(), static_cast<T>(lq), d);
    const Matrix<T> update = simd::matmul(pooled, weights.w_out);

    LatentState<T> next{state.z, state.t - 1};
    k.axpy(static_cast<T>(-options.step_size), update.data(), next.z.data(), latent_dim);
    return next;
}

template <Real T>
std::vector<T> toy_decode(const LatentState<T>& state) {
    if (state.t != 0) {
        raise(Errc::steps_remaining, std::to_string(state.t) + " denoising steps remain");
    }
    return state.z;
}

template <Real T>
std::vector<FrameOutput<T>> run_pipeline(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                         const PipelineConfig& config) {
    config.validate();
    layout.validate(tokens.rows());
    if (!tokens.all_finite()) {
        raise(Errc::non_finite_entry, "token matrix contains NaN or Inf");
    }
    const std::size_t n = layout.n_frames();

    // Stage 2
    TokenEmbeddingMatrix<T> decorrelated_tokens = tokens;
    Matrix<T> representatives;
    if (config.toggles.enable_gs || config.toggles.enable_svr) {
        representatives = extract_frame_matrix<T>(tokens, layout).rows();
    }
    if (config.toggles.enable_gs) {
        const FrameMatrix<T> frames(representatives, RepresentativeMode::mean_pooled);
        DecorrelatedFrameMatrix<T> x = modified_gram_schmidt<T>(frames, config.decorrelation);
        decorrelated_tokens = inject_decorrelated<T>(tokens, layout, x);
        representatives = std::move(x.rows);
    }

    SplitMix64 rng(config.seed);
    const ToyDenoiserWeights<T> weights = draw_toy_weights<T>(rng, tokens.cols(), config);
    std::vector<std::vector<T>> latents;
    latents.push_back(draw_initial_latent<T>(rng, config.latent_dim));
    if (config.per_frame_noise) {
        for (std::size_t j = 1; j < n; ++j) {
            latents.push_back(draw_initial_latent<T>(rng, config.latent_dim));
        }
    }

    // Stages 3 and 4 for one target frame; reads only immutable shared state.
    auto run_frame = [&](std::size_t frame) {
        const std::vector<T>& initial = config.per_frame_noise ? latents[frame - 1] : latents.front();
        if (!config.toggles.enable_svr) {
            return denoise_frame<T>(frame, decorrelated_tokens, weights, layout, initial, config);
        }
        const ConditionedMatrix<T> conditioned =
            assemble_conditioned<T>(decorrelated_tokens, layout, representatives, frame, config.svr);
        return denoise_frame<T>(frame, conditioned.data, weights, layout, initial, config);
    };

    std::vector<FrameOutput<T>> outputs;
    outputs.reserve(n);
    if (config.parallel_frames && n > 1) {
        std::vector<std::future<FrameOutput<T>>> pending;
        pending.reserve(n);
        for (std::size_t j = 1; j <= n; ++j) {
            pending.push_back(std::async(std::launch::async, run_frame, j));
        }
        for (auto& f : pending) {
            outputs.push_back(f.get());
        }
    } else {
        for (std::size_t j = 1; j <= n; ++j) {
            outputs.push_back(run_frame(j));
        }
    }
    return outputs;
}

#define DECORSTORY_INSTANTIATE(T)                                                                                \
    template ToyDenoiserWeights<T> draw_toy_weights<T>(SplitMix64&, std::size_t, const PipelineConfig&);        \
    template std::vector<T> draw_initial_latent<T>(SplitMix64&, std::size_t);                                    \
    template LatentState<T> toy_denoise_step<T>(const LatentState<T>&, const TokenEmbeddingMatrix<T>&,           \
                                                const ToyDenoiserWeights<T>&, const PromptLayout&,               \
                                                const DenoiseOptions&);                                          \
    template std::vector<T> toy_decode<T>(const LatentState<T>&);                                                \
    template std::vector<FrameOutput<T>> run_pipeline<T>(const TokenEmbeddingMatrix<T>&, const PromptLayout&,    \
                                                         const PipelineConfig&);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
