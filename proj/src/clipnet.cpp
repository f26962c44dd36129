#include "actdet/clipnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "actdet/errors.hpp"
#include "actdet/jsonl.hpp"

namespace actdet {

// ---------------------------------------------------------------- parameters

template <typename Real>
void ModelParams<Real>::for_each_tensor(const std::function<void(const std::string&, std::vector<Real>&)>& fn) {
  for (std::size_t i = 0; i < convs.size(); ++i) {
    fn("conv" + std::to_string(i) + ".weight", convs[i].weight);
    fn("conv" + std::to_string(i) + ".bias", convs[i].bias);
  }
  fn("head.weight", head_weight);
  fn("head.bias", head_bias);
  fn("lambda2", part.lambda2);
  fn("lambda3", part.lambda3);
}

template <typename Real>
void ModelParams<Real>::for_each_tensor(
    const std::function<void(const std::string&, const std::vector<Real>&)>& fn) const {
  const_cast<ModelParams<Real>*>(this)->for_each_tensor(
      [&](const std::string& name, std::vector<Real>& v) { fn(name, v); });
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, const std::vector<Real>& v) { n += v.size(); });
  return n;
}

namespace {

void validate_arch(const ArchConfig& arch) {
  if (arch.input_channels <= 0) throw ContractViolation("architecture: input_channels must be positive");
  if (arch.num_classes <= 0) throw ContractViolation("architecture: num_classes must be positive");
  if (!arch.input_scale.empty() && static_cast<int>(arch.input_scale.size()) != arch.input_channels) {
    throw ContractViolation("architecture: input_scale needs one entry per input channel");
  }
  for (const auto& c : arch.convs) {
    if (c.out_channels <= 0) throw ContractViolation("architecture: conv out_channels must be positive");
    for (const int s : c.stride) {
      if (s <= 0) throw ContractViolation("architecture: conv strides must be positive");
    }
  }
}

template <typename Real>
ModelParams<Real> shaped_params(const ArchConfig& arch) {
  validate_arch(arch);
  ModelParams<Real> p;
  p.arch = arch;
  int in = arch.input_channels;
  for (const auto& spec : arch.convs) {
    ConvLayer<Real> layer;
    layer.in_channels = in;
    layer.out_channels = spec.out_channels;
    layer.stride = spec.stride;
    layer.weight.assign(static_cast<std::size_t>(27) * in * spec.out_channels, Real(0));
    layer.bias.assign(static_cast<std::size_t>(spec.out_channels), Real(0));
    p.convs.push_back(std::move(layer));
    in = spec.out_channels;
  }
  const auto n = static_cast<std::size_t>(arch.num_classes);
  p.head_weight.assign(static_cast<std::size_t>(in) * n, Real(0));
  p.head_bias.assign(n, Real(0));
  p.part.lambda1.assign(n, Real(1));
  p.part.lambda2.assign(n, Real(0));
  p.part.lambda3.assign(n, Real(0));
  return p;
}

}  // namespace

template <typename Real>
ModelParams<Real> init_params(const ArchConfig& arch, std::uint64_t seed) {
  auto p = shaped_params<Real>(arch);
  std::mt19937_64 rng(seed);
  for (auto& layer : p.convs) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (27.0 * layer.in_channels)));
    for (auto& w : layer.weight) w = static_cast<Real>(dist(rng));
  }
  std::normal_distribution<double> head(0.0, std::sqrt(1.0 / p.feature_channels()));
  for (auto& w : p.head_weight) w = static_cast<Real>(head(rng));
  return p;
}

template <typename Real>
ModelParams<Real> zeros_like(const ModelParams<Real>& params) {
  return shaped_params<Real>(params.arch);
}

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params) {
  auto out = shaped_params<To>(params.arch);
  std::vector<const std::vector<From>*> src;
  params.for_each_tensor([&](const std::string&, const std::vector<From>& v) { src.push_back(&v); });
  std::size_t i = 0;
  out.for_each_tensor([&](const std::string&, std::vector<To>& v) {
    const auto& s = *src[i++];
    std::transform(s.begin(), s.end(), v.begin(), [](From x) { return static_cast<To>(x); });
  });
  return out;
}

template <typename Real>
Volume<Real> to_volume(const ClipTensor& clip) {
  Volume<Real> v(clip.frames(), clip.height(), clip.width(), clip.channels());
  std::transform(clip.data().begin(), clip.data().end(), v.data.begin(), [](float x) { return static_cast<Real>(x); });
  return v;
}

// ---------------------------------------------------------------- layers

namespace {

template <typename Real>
Volume<Real> conv_forward(const Volume<Real>& in, const ConvLayer<Real>& layer) {
  if (in.c != layer.in_channels) throw ContractViolation("conv: input channel count mismatch");
  const auto [st, sh, sw] = layer.stride;
  Volume<Real> out(conv_output_size(in.t, st), conv_output_size(in.h, sh), conv_output_size(in.w, sw),
                   layer.out_channels);
  const int ci_n = layer.in_channels, co_n = layer.out_channels;
  for (int ot = 0; ot < out.t; ++ot) {
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        Real* o = &out.data[out.index(ot, oy, ox, 0)];
        std::copy(layer.bias.begin(), layer.bias.end(), o);
        for (int kt = 0; kt < 3; ++kt) {
          const int it = ot * st + kt - 1;
          if (it < 0 || it >= in.t) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * sh + ky - 1;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * sw + kx - 1;
              if (ix < 0 || ix >= in.w) continue;
              const Real* x = &in.data[in.index(it, iy, ix, 0)];
              const Real* w = &layer.weight[static_cast<std::size_t>((kt * 3 + ky) * 3 + kx) * ci_n * co_n];
              for (int ci = 0; ci < ci_n; ++ci) {
                const Real xv = x[ci];
                if (xv == Real(0)) continue;
                const Real* wr = w + static_cast<std::size_t>(ci) * co_n;
                for (int co = 0; co < co_n; ++co) o[co] += xv * wr[co];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates weight/bias gradients into `grad` and, when `grad_in` is
// non-null, writes the input gradient.
template <typename Real>
void conv_backward(const Volume<Real>& in, const ConvLayer<Real>& layer, const Volume<Real>& grad_out,
                   ConvLayer<Real>& grad, Volume<Real>* grad_in) {
  const auto [st, sh, sw] = layer.stride;
  const int ci_n = layer.in_channels, co_n = layer.out_channels;
  if (grad_in) *grad_in = Volume<Real>(in.t, in.h, in.w, in.c);
  for (int ot = 0; ot < grad_out.t; ++ot) {
    for (int oy = 0; oy < grad_out.h; ++oy) {
      for (int ox = 0; ox < grad_out.w; ++ox) {
        const Real* g = &grad_out.data[grad_out.index(ot, oy, ox, 0)];
        bool any = false;
        for (int co = 0; co < co_n; ++co) {
          grad.bias[static_cast<std::size_t>(co)] += g[co];
          any = any || g[co] != Real(0);
        }
        if (!any) continue;
        for (int kt = 0; kt < 3; ++kt) {
          const int it = ot * st + kt - 1;
          if (it < 0 || it >= in.t) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * sh + ky - 1;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * sw + kx - 1;
              if (ix < 0 || ix >= in.w) continue;
              const std::size_t tap = static_cast<std::size_t>((kt * 3 + ky) * 3 + kx) * ci_n * co_n;
              const Real* x = &in.data[in.index(it, iy, ix, 0)];
              const Real* w = &layer.weight[tap];
              Real* gw = &grad.weight[tap];
              Real* gx = grad_in ? &grad_in->data[grad_in->index(it, iy, ix, 0)] : nullptr;
              for (int ci = 0; ci < ci_n; ++ci) {
                const Real xv = x[ci];
                Real* gwr = gw + static_cast<std::size_t>(ci) * co_n;
                if (xv != Real(0)) {
                  for (int co = 0; co < co_n; ++co) gwr[co] += xv * g[co];
                }
                if (gx) {
                  const Real* wr = w + static_cast<std::size_t>(ci) * co_n;
                  Real acc = 0;
                  for (int co = 0; co < co_n; ++co) acc += wr[co] * g[co];
                  gx[ci] += acc;
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename Real>
void relu_inplace(Volume<Real>& v) {
  for (auto& x : v.data) x = x > Real(0) ? x : Real(0);
}

template <typename Real>
struct ForwardCache {
  std::vector<Volume<Real>> activations;  // [0] = input, [i + 1] = ReLU(conv i)
  ScoreMaps<Real> scores;
  PooledScores<Real> pooled;
  std::vector<Real> logits;
  std::vector<Real> probabilities;
};

template <typename Real>
void check_input(const ClipTensor& clip, const ModelParams<Real>& params) {
  if (clip.channels() != params.arch.input_channels) {
    throw ContractViolation("clip has " + std::to_string(clip.channels()) + " channels, model expects " +
                            std::to_string(params.arch.input_channels));
  }
  if (clip.frames() <= 0 || clip.height() <= 0 || clip.width() <= 0) throw ContractViolation("empty clip");
}

template <typename Real>
Volume<Real> input_volume(const ClipTensor& clip, const ModelParams<Real>& params) {
  Volume<Real> v = to_volume<Real>(clip);
  const auto& scale = params.arch.input_scale;
  if (scale.empty()) return v;
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] *= static_cast<Real>(scale[i % scale.size()]);
  return v;
}

template <typename Real>
ForwardCache<Real> forward_cached(const ClipTensor& clip, const ModelParams<Real>& params, HeadMode mode) {
  check_input(clip, params);
  ForwardCache<Real> cache;
  cache.activations.reserve(params.convs.size() + 1);
  cache.activations.push_back(input_volume(clip, params));
  for (const auto& layer : params.convs) {
    auto next = conv_forward(cache.activations.back(), layer);
    relu_inplace(next);
    cache.activations.push_back(std::move(next));
  }
  cache.scores = score_head(cache.activations.back(), params);
  cache.pooled = pool_scores(cache.scores);
  if (mode == HeadMode::kGapOnly) {
    cache.logits = cache.pooled.s1;
  } else {
    cache.logits = aggregate<Real>(cache.pooled.s1, cache.pooled.s2, cache.pooled.s3, params.part);
  }
  cache.probabilities = softmax<Real>(cache.logits);
  return cache;
}

}  // namespace

template <typename Real>
FeatureMaps<Real> extract_features(const ClipTensor& clip, const ModelParams<Real>& params) {
  check_input(clip, params);
  Volume<Real> x = input_volume(clip, params);
  for (const auto& layer : params.convs) {
    x = conv_forward(x, layer);
    relu_inplace(x);
  }
  return x;
}

template <typename Real>
ScoreMaps<Real> score_head(const FeatureMaps<Real>& features, const ModelParams<Real>& params) {
  const int cf = params.feature_channels();
  const int n = params.num_classes();
  if (features.c != cf) throw ContractViolation("score_head: feature channels do not match head kernel");
  ScoreMaps<Real> s(features.t, features.h, features.w, n);
  const std::size_t positions = features.positions();
  for (std::size_t p = 0; p < positions; ++p) {
    const Real* f = &features.data[p * static_cast<std::size_t>(cf)];
    Real* o = &s.data[p * static_cast<std::size_t>(n)];
    std::copy(params.head_bias.begin(), params.head_bias.end(), o);
    for (int c = 0; c < cf; ++c) {
      const Real fv = f[c];
      if (fv == Real(0)) continue;
      const Real* w = &params.head_weight[static_cast<std::size_t>(c) * n];
      for (int k = 0; k < n; ++k) o[k] += fv * w[k];
    }
  }
  return s;
}

template <typename Real>
PooledScores<Real> pool_scores(const ScoreMaps<Real>& scores) {
  if (scores.h < 2) throw ContractViolation("pool_scores: need at least two rows to split");
  const int n = scores.c;
  const int top_rows = (scores.h + 1) / 2;
  PooledScores<Real> out;
  out.s1.assign(static_cast<std::size_t>(n), Real(0));
  out.s2.assign(static_cast<std::size_t>(n), -std::numeric_limits<Real>::infinity());
  out.s3.assign(static_cast<std::size_t>(n), -std::numeric_limits<Real>::infinity());
  out.argmax_top.assign(static_cast<std::size_t>(n), 0);
  out.argmax_bottom.assign(static_cast<std::size_t>(n), 0);
  std::size_t p = 0;
  for (int t = 0; t < scores.t; ++t) {
    for (int y = 0; y < scores.h; ++y) {
      const bool top = y < top_rows;
      auto& best = top ? out.s2 : out.s3;
      auto& arg = top ? out.argmax_top : out.argmax_bottom;
      for (int x = 0; x < scores.w; ++x, ++p) {
        const Real* v = &scores.data[p * static_cast<std::size_t>(n)];
        for (int k = 0; k < n; ++k) {
          out.s1[static_cast<std::size_t>(k)] += v[k];
          if (v[k] > best[static_cast<std::size_t>(k)]) {
            best[static_cast<std::size_t>(k)] = v[k];
            arg[static_cast<std::size_t>(k)] = p;
          }
        }
      }
    }
  }
  const Real count = static_cast<Real>(scores.positions());
  for (auto& v : out.s1) v /= count;
  return out;
}

template <typename Real>
std::vector<Real> aggregate(std::span<const Real> s1, std::span<const Real> s2, std::span<const Real> s3,
                            const PartWeights<Real>& weights) {
  const std::size_t n = s1.size();
  if (s2.size() != n || s3.size() != n || weights.lambda1.size() != n || weights.lambda2.size() != n ||
      weights.lambda3.size() != n) {
    throw ContractViolation("aggregate: score and weight vectors differ in length");
  }
  std::vector<Real> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = weights.lambda1[k] * s1[k] + weights.lambda2[k] * s2[k] + weights.lambda3[k] * s3[k];
  }
  return s;
}

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const Real m = *std::max_element(p.begin(), p.end());
  Real sum = 0;
  for (auto& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <typename Real>
ForwardResult<Real> forward(const ClipTensor& clip, const ModelParams<Real>& params, HeadMode mode) {
  auto cache = forward_cached(clip, params, mode);
  return {std::move(cache.logits), std::move(cache.probabilities)};
}

// ---------------------------------------------------------------- gradients

namespace {

template <typename Real>
void add_into(ModelParams<Real>& acc, const ModelParams<Real>& g) {
  std::vector<const std::vector<Real>*> src;
  g.for_each_tensor([&](const std::string&, const std::vector<Real>& v) { src.push_back(&v); });
  std::size_t i = 0;
  acc.for_each_tensor([&](const std::string&, std::vector<Real>& v) {
    const auto& s = *src[i++];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += s[k];
  });
}

// Loss of one sample; gradients of the loss scaled by `weight` are added to
// `grads`.
template <typename Real>
Real sample_backward(const ClipTensor& clip, int label, const ModelParams<Real>& params, HeadMode mode,
                     Real weight, ModelParams<Real>& grads, bool* correct) {
  const int n = params.num_classes();
  if (label < 0 || label >= n) throw ContractViolation("loss_and_grads: label " + std::to_string(label) + " out of range");
  auto cache = forward_cached(clip, params, mode);
  const auto lab = static_cast<std::size_t>(label);
  const Real loss = -std::log(std::max(cache.probabilities[lab], std::numeric_limits<Real>::min()));
  if (correct) {
    *correct = static_cast<std::size_t>(std::max_element(cache.probabilities.begin(), cache.probabilities.end()) -
                                        cache.probabilities.begin()) == lab;
  }

  std::vector<Real> g(cache.probabilities);
  g[lab] -= Real(1);
  for (auto& v : g) v *= weight;

  const auto& pooled = cache.pooled;
  std::vector<Real> ds1 = g, ds2(g.size(), Real(0)), ds3(g.size(), Real(0));
  if (mode == HeadMode::kPartAttention) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      ds1[k] = params.part.lambda1[k] * g[k];
      ds2[k] = params.part.lambda2[k] * g[k];
      ds3[k] = params.part.lambda3[k] * g[k];
      grads.part.lambda2[k] += g[k] * pooled.s2[k];
      grads.part.lambda3[k] += g[k] * pooled.s3[k];
    }
  }

  const ScoreMaps<Real>& S = cache.scores;
  const std::size_t positions = S.positions();
  const Real inv = Real(1) / static_cast<Real>(positions);
  ScoreMaps<Real> dS(S.t, S.h, S.w, S.c);
  for (std::size_t p = 0; p < positions; ++p) {
    Real* d = &dS.data[p * static_cast<std::size_t>(n)];
    for (int k = 0; k < n; ++k) d[k] = ds1[static_cast<std::size_t>(k)] * inv;
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
    dS.data[pooled.argmax_top[k] * static_cast<std::size_t>(n) + k] += ds2[k];
    dS.data[pooled.argmax_bottom[k] * static_cast<std::size_t>(n) + k] += ds3[k];
  }

  const FeatureMaps<Real>& F = cache.activations.back();
  const int cf = params.feature_channels();
  Volume<Real> dF(F.t, F.h, F.w, F.c);
  for (std::size_t p = 0; p < positions; ++p) {
    const Real* d = &dS.data[p * static_cast<std::size_t>(n)];
    const Real* f = &F.data[p * static_cast<std::size_t>(cf)];
    Real* df = &dF.data[p * static_cast<std::size_t>(cf)];
    for (int k = 0; k < n; ++k) grads.head_bias[static_cast<std::size_t>(k)] += d[k];
    for (int c = 0; c < cf; ++c) {
      const Real* w = &params.head_weight[static_cast<std::size_t>(c) * n];
      Real* gw = &grads.head_weight[static_cast<std::size_t>(c) * n];
      Real acc = 0;
      for (int k = 0; k < n; ++k) {
        gw[k] += f[c] * d[k];
        acc += w[k] * d[k];
      }
      df[c] = acc;
    }
  }

  Volume<Real> upstream = std::move(dF);
  for (std::size_t li = params.convs.size(); li-- > 0;) {
    const Volume<Real>& out = cache.activations[li + 1];
    for (std::size_t k = 0; k < upstream.data.size(); ++k) {
      if (!(out.data[k] > Real(0))) upstream.data[k] = Real(0);
    }
    Volume<Real> down;
    conv_backward(cache.activations[li], params.convs[li], upstream, grads.convs[li], li > 0 ? &down : nullptr);
    upstream = std::move(down);
  }
  return loss;
}

}  // namespace

template <typename Real>
LossAndGrads<Real> loss_and_grads(std::span<const LabeledClip> batch, const ModelParams<Real>& params,
                                  HeadMode mode, int jobs) {
  if (batch.empty()) throw ContractViolation("loss_and_grads: empty batch");
  const Real weight = Real(1) / static_cast<Real>(batch.size());
  LossAndGrads<Real> result{Real(0), 0, zeros_like(params)};

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, batch.size());
  // Every sample gets its own zeroed gradient buffer, also on one thread, so
  // the floating-point summation order never depends on `jobs`.
  std::vector<ModelParams<Real>> per_sample(batch.size(), zeros_like(params));
  std::vector<Real> losses(batch.size(), Real(0));
  std::vector<char> correct(batch.size(), 0);
  std::vector<std::exception_ptr> errors(workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      bool ok = false;
      losses[i] = sample_backward(*batch[i].clip, batch[i].label, params, mode, weight, per_sample[i], &ok);
      correct[i] = ok ? 1 : 0;
    }
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < batch.size(); i += workers) {
            bool ok = false;
            losses[i] = sample_backward(*batch[i].clip, batch[i].label, params, mode, weight, per_sample[i], &ok);
            correct[i] = ok ? 1 : 0;
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  // Sum in batch order so the result is independent of the thread count.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    add_into(result.grads, per_sample[i]);
    result.loss += losses[i] * weight;
    result.correct += correct[i];
  }
  return result;
}

// ---------------------------------------------------------------- inference

ProposalScores classify_proposal(std::span<const ClipTensor> window_clips, std::span<const std::pair<int, int>> spans,
                                 const ModelParams<float>& params, HeadMode mode) {
  if (window_clips.size() != spans.size()) throw ContractViolation("classify_proposal: one span per window required");
  ProposalScores out;
  if (window_clips.empty()) return out;
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (const auto& [t0, t1] : spans) {
    if (t1 <= t0) throw ContractViolation("classify_proposal: empty window span");
    lo = std::min(lo, t0);
    hi = std::max(hi, t1);
  }
  const auto n = static_cast<std::size_t>(params.num_classes());
  out.first_frame = lo;
  out.frame_confidences.assign(static_cast<std::size_t>(hi - lo), std::vector<double>(n, 0.0));
  std::vector<int> cover(static_cast<std::size_t>(hi - lo), 0);
  for (std::size_t i = 0; i < window_clips.size(); ++i) {
    const auto fwd = forward(window_clips[i], params, mode);
    WindowScores w{spans[i].first, spans[i].second, std::vector<double>(fwd.probabilities.begin(), fwd.probabilities.end())};
    for (int f = w.t0; f < w.t1; ++f) {
      auto& row = out.frame_confidences[static_cast<std::size_t>(f - lo)];
      for (std::size_t k = 0; k < n; ++k) row[k] += w.confidences[k];
      ++cover[static_cast<std::size_t>(f - lo)];
    }
    out.windows.push_back(std::move(w));
  }
  for (std::size_t f = 0; f < cover.size(); ++f) {
    if (cover[f] == 0) continue;
    for (auto& v : out.frame_confidences[f]) v /= cover[f];
  }
  return out;
}

// ---------------------------------------------------------------- checkpoints

std::string to_string(HeadMode mode) {
  return mode == HeadMode::kPartAttention ? "part_attention" : "gap_only";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "part_attention") return HeadMode::kPartAttention;
  if (s == "gap_only") return HeadMode::kGapOnly;
  throw ContractViolation("unknown head mode '" + s + "'");
}

void save_checkpoint(const ModelParams<float>& params, const CheckpointInfo& info, const std::filesystem::path& base) {
  nlohmann::json manifest;
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : params.arch.convs) {
    convs.push_back({{"out_channels", c.out_channels}, {"stride", c.stride}});
  }
  manifest["architecture"] = {{"input_channels", params.arch.input_channels},
                              {"num_classes", params.arch.num_classes},
                              {"input_scale", params.arch.input_scale},
                              {"convs", convs}};
  manifest["seed"] = info.seed;
  manifest["epoch"] = info.epoch;
  manifest["mode"] = to_string(info.mode);
  manifest["input"] = info.input;
  manifest["classes"] = info.class_names;
  manifest["dtype"] = "float32le";
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  params.for_each_tensor([&](const std::string& name, const std::vector<float>& v) {
    tensors.push_back({{"name", name}, {"count", v.size()}});
    payload += encode_f32le(v.data(), v.size());
  });
  manifest["tensors"] = tensors;
  write_file_atomic(base.string() + ".json", manifest.dump(2) + "\n");
  write_file_atomic(base.string() + ".bin", payload);
}

ModelParams<float> load_checkpoint(const std::filesystem::path& base, CheckpointInfo* info) {
  const auto manifest = nlohmann::json::parse(read_file(base.string() + ".json"));
  ArchConfig arch;
  const auto& a = manifest.at("architecture");
  arch.input_channels = a.at("input_channels").get<int>();
  arch.num_classes = a.at("num_classes").get<int>();
  arch.input_scale = a.value("input_scale", std::vector<double>{});
  arch.convs.clear();
  for (const auto& c : a.at("convs")) {
    arch.convs.push_back({c.at("out_channels").get<int>(), c.at("stride").get<std::array<int, 3>>()});
  }
  auto params = shaped_params<float>(arch);
  const auto payload = decode_f32le(read_file(base.string() + ".bin"));
  const auto& tensors = manifest.at("tensors");
  std::size_t offset = 0, index = 0;
  params.for_each_tensor([&](const std::string& name, std::vector<float>& v) {
    if (index >= tensors.size() || tensors[index].at("name").get<std::string>() != name ||
        tensors[index].at("count").get<std::size_t>() != v.size()) {
      throw ContractViolation("checkpoint manifest does not match architecture at tensor " + name);
    }
    if (offset + v.size() > payload.size()) throw ContractViolation("checkpoint payload truncated");
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(offset), v.size(), v.begin());
    offset += v.size();
    ++index;
  });
  if (offset != payload.size()) throw ContractViolation("checkpoint payload has trailing data");
  if (info) {
    info->seed = manifest.value("seed", std::uint64_t{0});
    info->epoch = manifest.value("epoch", 0);
    info->mode = head_mode_from_string(manifest.value("mode", std::string("part_attention")));
    info->input = manifest.value("input", std::string("rgb"));
    info->class_names = manifest.value("classes", std::vector<std::string>{});
  }
  return params;
}

// ---------------------------------------------------------------- instantiations

#define ACTDET_INSTANTIATE(Real)                                                                              \
  template struct ModelParams<Real>;                                                                          \
  template ModelParams<Real> init_params<Real>(const ArchConfig&, std::uint64_t);                             \
  template ModelParams<Real> zeros_like<Real>(const ModelParams<Real>&);                                      \
  template Volume<Real> to_volume<Real>(const ClipTensor&);                                                   \
  template FeatureMaps<Real> extract_features<Real>(const ClipTensor&, const ModelParams<Real>&);             \
  template ScoreMaps<Real> score_head<Real>(const FeatureMaps<Real>&, const ModelParams<Real>&);              \
  template PooledScores<Real> pool_scores<Real>(const ScoreMaps<Real>&);                                      \
  template std::vector<Real> aggregate<Real>(std::span<const Real>, std::span<const Real>,                    \
                                             std::span<const Real>, const PartWeights<Real>&);                \
  template std::vector<Real> softmax<Real>(std::span<const Real>);                                            \
  template ForwardResult<Real> forward<Real>(const ClipTensor&, const ModelParams<Real>&, HeadMode);          \
  template LossAndGrads<Real> loss_and_grads<Real>(std::span<const LabeledClip>, const ModelParams<Real>&,    \
                                                   HeadMode, int);

ACTDET_INSTANTIATE(float)
ACTDET_INSTANTIATE(double)
#undef ACTDET_INSTANTIATE

template ModelParams<double> convert_params<double, float>(const ModelParams<float>&);
template ModelParams<float> convert_params<float, double>(const ModelParams<double>&);
template ModelParams<float> convert_params<float, float>(const ModelParams<float>&);
template ModelParams<double> convert_params<double, double>(const ModelParams<double>&);

}  // namespace actdet
