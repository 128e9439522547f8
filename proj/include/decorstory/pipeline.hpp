// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end inference over a toy denoiser:
//
//   1. tokens arrive already encoded (file-loaded)
//   2. frame representatives are Gram-Schmidt decorrelated and injected
//   3. per target frame j, singular-value reweighting builds C^(j)
//   4. T toy denoising steps driven by (identity-preserving) cross-attention
//      on C^(j), then the identity decoder
//
// Random draws come from one SplitMix64 stream seeded with `seed`, consumed in
// this order: W_Q, W_K, W_V, W_out (each row-major, uniform in [-1, 1)), then
// the initial latent(s) (standard normal, see SplitMix64::gaussian). With
// shared noise one latent is drawn; with per-frame noise N latents are drawn
// in frame order.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "decorstory/decorrelation.hpp"
#include "decorstory/ipca.hpp"
#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"
#include "decorstory/rng.hpp"
#include "decorstory/svr.hpp"

namespace decorstory {

struct StageToggles {
    bool enable_gs = true;
    bool enable_svr = true;
    bool enable_ipca = true;
};

struct PipelineConfig {
    SvrParams svr;
    DecorrelationParams decorrelation;
    std::size_t steps = 10;
    std::uint64_t seed = 0;
    std::size_t latent_dim = 8;
    double step_size = 0.1;
    std::size_t query_rows = 4;     // Lq
    std::size_t attention_dim = 8;  // d
    StageToggles toggles;
    bool per_frame_noise = false;
    bool parallel_frames = false;

    void validate() const;
};

template <Real T>
struct LatentState {
    std::vector<T> z;
    std::size_t t = 0;  // remaining steps
};

/// Stand-in for the denoising network: a single cross-attention block with linear readout.
template <Real T>
struct ToyDenoiserWeights {
    Matrix<T> w_q;  // latent_dim x (Lq * d); z^T W_Q is reshaped row-major into Lq x d
    AttentionWeights<T> attention;
    Matrix<T> w_out;  // d x latent_dim

    std::size_t query_rows() const noexcept { return attention.key_dim() ? w_q.cols() / attention.key_dim() : 0; }
};

template <Real T>
ToyDenoiserWeights<T> draw_toy_weights(SplitMix64& rng, std::size_t embedding_dim, const PipelineConfig& config);

template <Real T>
std::vector<T> draw_initial_latent(SplitMix64& rng, std::size_t latent_dim);

struct DenoiseOptions {
    double step_size = 0.1;
    bool enable_ipca = true;
};

/// One step: Q from z through W_Q, attention over the conditioned tokens,
/// z <- z - eta * (mean over query rows of Out) W_out, t <- t - 1.
template <Real T>
LatentState<T> toy_denoise_step(const LatentState<T>& state, const TokenEmbeddingMatrix<T>& conditioned,
                                const ToyDenoiserWeights<T>& weights, const PromptLayout& layout,
                                const DenoiseOptions& options);

/// Identity readout. Throws StepsRemaining unless t == 0.
template <Real T>
std::vector<T> toy_decode(const LatentState<T>& state);

template <Real T>
struct FrameOutput {
    std::size_t frame_index = 0;  // 1-based
    std::vector<T> vector;
    std::vector<double> trace;    // |z_t| for t = T .. 0
};

template <Real T>
std::vector<FrameOutput<T>> run_pipeline(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                         const PipelineConfig& config);

}  // namespace decorstory
