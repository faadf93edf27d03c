// Copyright 2026 The eqex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eqex/encoder.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "eqex/error.hpp"
#include "eqex/ops.hpp"

namespace eqex::encoder {
namespace {

using ad::Tensor;

void check_config(const EncoderConfig& cfg) {
  if (cfg.vocab_size == 0) throw ValidationError("encoder: vocab_size must be positive");
  if (cfg.hidden == 0 || cfg.layers == 0 || cfg.heads == 0) {
    throw ValidationError("encoder: hidden, layers, and heads must be positive");
  }
  if (cfg.hidden % cfg.heads != 0) {
    throw ValidationError("encoder: hidden (" + std::to_string(cfg.hidden) +
                          ") must be divisible by heads (" +
                          std::to_string(cfg.heads) + ")");
  }
  if (cfg.attn_avg_layers == 0 || cfg.attn_avg_layers > cfg.layers) {
    throw ValidationError(
        "encoder: attn_avg_layers must be in [1, layers], got " +
        std::to_string(cfg.attn_avg_layers) + " with layers=" +
        std::to_string(cfg.layers));
  }
  if (cfg.max_len == 0) throw ValidationError("encoder: max_len must be positive");
}

std::string layer_prefix(const std::string& ns, std::size_t i) {
  return ns + ".layer" + std::to_string(i);
}

// Gaussian fan-agnostic init used for every weight matrix and embedding.
std::function<double()> gaussian_init(Rng& rng) {
  return [&rng]() { return rng.normal(0.0, 0.02); };
}

const std::function<double()> kZeroInit = []() { return 0.0; };
const std::function<double()> kOneInit = []() { return 1.0; };

void create_linear(ad::ParameterStore& params, const std::string& name,
                   std::size_t out_dim, std::size_t in_dim, Rng& rng) {
  params.create(name + ".w", {out_dim, in_dim}, gaussian_init(rng));
  params.create(name + ".b", {out_dim}, kZeroInit);
}

void create_norm(ad::ParameterStore& params, const std::string& name,
                 std::size_t dim) {
  params.create(name + ".gamma", {dim}, kOneInit);
  params.create(name + ".beta", {dim}, kZeroInit);
}

// y = x * W^T + b for row-major activations (rows = positions).
Tensor linear(const Tensor& x, const ad::ParameterStore& params,
              const std::string& name) {
  return ad::add_rowvec(ad::matmul_nt(x, params.get(name + ".w")),
                        params.get(name + ".b"));
}

Tensor norm(const Tensor& x, const ad::ParameterStore& params,
            const std::string& name) {
  return ad::layer_norm(x, params.get(name + ".gamma"),
                        params.get(name + ".beta"));
}

}  // namespace

void init_params(ad::ParameterStore& params, const std::string& ns,
                 const EncoderConfig& cfg, Rng& rng) {
  check_config(cfg);
  const std::size_t d = cfg.hidden;
  // Creation order is fixed so that a given seed always yields the same
  // values regardless of caller.
  params.create(ns + ".tok_emb", {cfg.vocab_size, d}, gaussian_init(rng));
  params.create(ns + ".pos_emb", {cfg.max_len, d}, gaussian_init(rng));
  params.create(ns + ".seg_emb", {2, d}, gaussian_init(rng));
  create_norm(params, ns + ".emb_norm", d);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix(ns, i);
    create_linear(params, lp + ".attn.q", d, d, rng);
    create_linear(params, lp + ".attn.k", d, d, rng);
    create_linear(params, lp + ".attn.v", d, d, rng);
    create_linear(params, lp + ".attn.o", d, d, rng);
    create_norm(params, lp + ".attn_norm", d);
    create_linear(params, lp + ".ffn.1", 4 * d, d, rng);
    create_linear(params, lp + ".ffn.2", d, 4 * d, rng);
    create_norm(params, lp + ".ffn_norm", d);
  }
}

EncoderOutput encode(const std::vector<int>& token_ids,
                     const std::vector<int>& segments,
                     const ad::ParameterStore& params, const std::string& ns,
                     const EncoderConfig& cfg, const EncodeOptions& opts) {
  check_config(cfg);
  const std::size_t len = token_ids.size();
  if (len == 0) throw ValidationError("encoder: empty input sequence");
  if (len > cfg.max_len) {
    throw ValidationError("encoder: sequence length " + std::to_string(len) +
                          " exceeds max_len " + std::to_string(cfg.max_len));
  }
  if (segments.size() != len) {
    throw ValidationError("encoder: segments length " +
                          std::to_string(segments.size()) +
                          " does not match sequence length " +
                          std::to_string(len));
  }
  for (int id : token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw ValidationError("encoder: token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(cfg.vocab_size));
    }
  }
  for (int s : segments) {
    if (s != 0 && s != 1) {
      throw ValidationError("encoder: segment ids must be 0 or 1, got " +
                            std::to_string(s));
    }
  }
  const bool use_dropout = opts.dropout > 0.0;
  if (use_dropout && opts.rng == nullptr) {
    throw ValidationError("encoder: dropout requires an rng");
  }
  auto drop = [&](const Tensor& x) {
    if (!use_dropout) return x;
    return ad::dropout(x, opts.dropout, *opts.rng, true);
  };

  const std::size_t d = cfg.hidden;
  const std::size_t dh = d / cfg.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<int> positions(len);
  std::iota(positions.begin(), positions.end(), 0);

  Tensor x = ad::add(
      ad::add(ad::gather_rows(params.get(ns + ".tok_emb"), token_ids),
              ad::gather_rows(params.get(ns + ".pos_emb"), positions)),
      ad::gather_rows(params.get(ns + ".seg_emb"), segments));
  x = drop(norm(x, params, ns + ".emb_norm"));

  // Attention maps from the final attn_avg_layers, all heads, accumulated on
  // the tape so they can feed differentiable features downstream.
  const std::size_t first_avg_layer = cfg.layers - cfg.attn_avg_layers;
  Tensor prob_sum;

  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix(ns, i);
    Tensor q = linear(x, params, lp + ".attn.q");
    Tensor k = linear(x, params, lp + ".attn.k");
    Tensor v = linear(x, params, lp + ".attn.v");
    std::vector<Tensor> contexts;
    contexts.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t c0 = h * dh;
      const std::size_t c1 = c0 + dh;
      Tensor qh = ad::slice_cols(q, c0, c1);
      Tensor kh = ad::slice_cols(k, c0, c1);
      Tensor vh = ad::slice_cols(v, c0, c1);
      Tensor probs =
          ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt_dh));
      if (i >= first_avg_layer) {
        prob_sum = prob_sum.defined() ? ad::add(prob_sum, probs) : probs;
      }
      contexts.push_back(ad::matmul(probs, vh));
    }
    Tensor attn_out =
        drop(linear(ad::concat_cols(contexts), params, lp + ".attn.o"));
    x = norm(ad::add(x, attn_out), params, lp + ".attn_norm");
    Tensor f = ad::gelu(linear(x, params, lp + ".ffn.1"));
    Tensor ffn_out = drop(linear(f, params, lp + ".ffn.2"));
    x = norm(ad::add(x, ffn_out), params, lp + ".ffn_norm");
  }

  const double denom =
      static_cast<double>(cfg.attn_avg_layers * cfg.heads);
  return EncoderOutput{x, ad::scale(prob_sum, 1.0 / denom)};
}

}  // namespace eqex::encoder
