// Copyright 2026 The trdfew Authors.
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

#include "trd/discriminator.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "trd/adamw.h"
#include "trd/error.h"
#include "trd/rng.h"

namespace trd {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Offsets of one encoder layer's tensors inside the flat parameter vector.
struct LayerSlots {
  std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Layout {
  std::size_t embed = 0;
  std::vector<LayerSlots> layers;
  std::size_t lnf_g = 0, lnf_b = 0, head = 0;
};

Layout layout_of(const std::vector<TensorInfo>& tensors,
                 const ModelConfig& cfg) {
  // Tensors are registered in a fixed order; see ModelParams::ModelParams.
  Layout l;
  std::size_t t = 0;
  l.embed = tensors[t++].offset;
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    LayerSlots s{};
    for (std::size_t* slot :
         {&s.ln1_g, &s.ln1_b, &s.wq, &s.bq, &s.wk, &s.bk, &s.wv, &s.bv, &s.wo,
          &s.bo, &s.ln2_g, &s.ln2_b, &s.w1, &s.b1, &s.w2, &s.b2})
      *slot = tensors[t++].offset;
    l.layers.push_back(s);
  }
  l.lnf_g = tensors[t++].offset;
  l.lnf_b = tensors[t++].offset;
  l.head = tensors[t++].offset;
  return l;
}

void validate_config(const ModelConfig& c) {
  if (c.vocab_size < kNumReserved)
    throw ModelError("vocab_size must cover the reserved tokens");
  if (c.d_model == 0 || c.num_heads == 0 || c.num_layers == 0)
    throw ModelError("d_model, num_heads and num_layers must be positive");
  if (c.d_model % c.num_heads != 0)
    throw ModelError("d_model " + std::to_string(c.d_model) +
                     " is not divisible by num_heads " +
                     std::to_string(c.num_heads));
  if (c.max_length < 3) throw ModelError("max_length must be at least 3");
}

// Sinusoidal encodings, PE[t][2i] = sin(t / 10000^(2i/d)), PE[t][2i+1] = cos.
double position_encoding(std::size_t t, std::size_t j, std::size_t d) {
  const double exponent =
      static_cast<double>(j - (j % 2)) / static_cast<double>(d);
  const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
  return (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
}

// Y[n x out] = X[n x in] * W[in x out] + b
void linear(const double* x, std::size_t n, std::size_t in, const double* w,
            const double* b, std::size_t out, double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    double* yr = y + r * out;
    for (std::size_t c = 0; c < out; ++c) yr[c] = b[c];
    const double* xr = x + r * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      const double* wk = w + k * out;
      for (std::size_t c = 0; c < out; ++c) yr[c] += xv * wk[c];
    }
  }
}

// dX += dY W^T, dW += X^T dY, db += colsum(dY)
void linear_backward(const double* x, std::size_t n, std::size_t in,
                     const double* w, std::size_t out, const double* dy,
                     double* dx, double* dw, double* db) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* dyr = dy + r * out;
    const double* xr = x + r * in;
    for (std::size_t c = 0; c < out; ++c) db[c] += dyr[c];
    for (std::size_t k = 0; k < in; ++k) {
      const double* wk = w + k * out;
      double* dwk = dw + k * out;
      const double xv = xr[k];
      double acc = 0.0;
      for (std::size_t c = 0; c < out; ++c) {
        acc += dyr[c] * wk[c];
        dwk[c] += xv * dyr[c];
      }
      if (dx) dx[r * in + k] += acc;
    }
  }
}

void layer_norm(const double* x, std::size_t n, std::size_t d,
                const double* g, const double* b, double* xhat, double* rstd,
                double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * rs;
      xhat[r * d + j] = h;
      y[r * d + j] = h * g[j] + b[j];
    }
  }
}

// dx += LN'(dy); dg += sum dy * xhat; db += sum dy
void layer_norm_backward(const double* xhat, const double* rstd,
                         std::size_t n, std::size_t d, const double* g,
                         const double* dy, double* dx, double* dg,
                         double* db) {
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* hr = xhat + r * d;
    const double* dyr = dy + r * d;
    double mean_dxhat = 0.0, mean_dxhat_h = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dg[j] += dyr[j] * hr[j];
      db[j] += dyr[j];
      dxhat[j] = dyr[j] * g[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_h += dxhat[j] * hr[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_h /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j)
      dx[r * d + j] += rstd[r] * (dxhat[j] - mean_dxhat - hr[j] * mean_dxhat_h);
  }
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) * kInvSqrt2 * std::numbers::inv_sqrtpi;
  return cdf + x * pdf;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LayerCache {
  std::vector<double> x_in, ln1_hat, ln1_rstd, a;
  std::vector<double> q, k, v, attn, ctx;
  std::vector<double> x_mid, ln2_hat, ln2_rstd, f, u, act;
};

struct Tape {
  std::size_t n = 0;
  std::vector<LayerCache> layers;
  std::vector<double> x_out, lnf_hat, lnf_rstd, h;
  std::vector<double> probs;
};

// Forward pass retaining every activation the backward pass needs.
void run_forward(const ModelParams& params, const Layout& lay,
                 std::span<const TokenId> ids, Tape& tape) {
  const auto& cfg = params.config();
  const std::size_t n = ids.size();
  const std::size_t d = cfg.d_model;
  const std::size_t heads = cfg.num_heads;
  const std::size_t dh = cfg.head_dim();
  const std::size_t ff = cfg.ff();
  if (n == 0) throw ModelError("cannot run the model on an empty sequence");
  if (n > cfg.max_length)
    throw ModelError("sequence of " + std::to_string(n) +
                     " tokens exceeds max_length " +
                     std::to_string(cfg.max_length));
  const double* p = params.values().data();

  tape.n = n;
  tape.layers.resize(cfg.num_layers);
  std::vector<double> x(n * d);
  for (std::size_t t = 0; t < n; ++t) {
    if (ids[t] >= cfg.vocab_size)
      throw ModelError("token id " + std::to_string(ids[t]) +
                       " outside the vocabulary");
    const double* e = p + lay.embed + static_cast<std::size_t>(ids[t]) * d;
    for (std::size_t j = 0; j < d; ++j)
      x[t * d + j] = e[j] + position_encoding(t, j, d);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> scores(n);
  for (std::size_t li = 0; li < cfg.num_layers; ++li) {
    const LayerSlots& s = lay.layers[li];
    LayerCache& c = tape.layers[li];
    c.x_in = x;
    c.ln1_hat.resize(n * d);
    c.ln1_rstd.resize(n);
    c.a.resize(n * d);
    layer_norm(x.data(), n, d, p + s.ln1_g, p + s.ln1_b, c.ln1_hat.data(),
               c.ln1_rstd.data(), c.a.data());
    c.q.resize(n * d);
    c.k.resize(n * d);
    c.v.resize(n * d);
    linear(c.a.data(), n, d, p + s.wq, p + s.bq, d, c.q.data());
    linear(c.a.data(), n, d, p + s.wk, p + s.bk, d, c.k.data());
    linear(c.a.data(), n, d, p + s.wv, p + s.bv, d, c.v.data());

    c.attn.assign(heads * n * n, 0.0);
    c.ctx.assign(n * d, 0.0);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const std::size_t off = hd * dh;
      for (std::size_t i = 0; i < n; ++i) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (ids[j] == kPadId) continue;
          double dot = 0.0;
          for (std::size_t m = 0; m < dh; ++m)
            dot += c.q[i * d + off + m] * c.k[j * d + off + m];
          scores[j] = dot * scale;
          max_score = std::max(max_score, scores[j]);
        }
        if (max_score == -std::numeric_limits<double>::infinity()) continue;
        double* arow = c.attn.data() + (hd * n + i) * n;
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (ids[j] == kPadId) continue;
          arow[j] = std::exp(scores[j] - max_score);
          z += arow[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (ids[j] == kPadId) continue;
          arow[j] /= z;
          const double w = arow[j];
          for (std::size_t m = 0; m < dh; ++m)
            c.ctx[i * d + off + m] += w * c.v[j * d + off + m];
        }
      }
    }

    std::vector<double> o(n * d);
    linear(c.ctx.data(), n, d, p + s.wo, p + s.bo, d, o.data());
    for (std::size_t i = 0; i < n * d; ++i) x[i] += o[i];
    c.x_mid = x;

    c.ln2_hat.resize(n * d);
    c.ln2_rstd.resize(n);
    c.f.resize(n * d);
    layer_norm(x.data(), n, d, p + s.ln2_g, p + s.ln2_b, c.ln2_hat.data(),
               c.ln2_rstd.data(), c.f.data());
    c.u.resize(n * ff);
    c.act.resize(n * ff);
    linear(c.f.data(), n, d, p + s.w1, p + s.b1, ff, c.u.data());
    for (std::size_t i = 0; i < n * ff; ++i) c.act[i] = gelu(c.u[i]);
    std::vector<double> y(n * d);
    linear(c.act.data(), n, ff, p + s.w2, p + s.b2, d, y.data());
    for (std::size_t i = 0; i < n * d; ++i) x[i] += y[i];
  }

  tape.x_out = x;
  tape.lnf_hat.resize(n * d);
  tape.lnf_rstd.resize(n);
  tape.h.resize(n * d);
  layer_norm(x.data(), n, d, p + lay.lnf_g, p + lay.lnf_b,
             tape.lnf_hat.data(), tape.lnf_rstd.data(), tape.h.data());
  tape.probs.resize(n);
  const double* w = p + lay.head;
  for (std::size_t t = 0; t < n; ++t) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * tape.h[t * d + j];
    tape.probs[t] = sigmoid(z);
  }
}

// Backpropagates d(loss)/d(logit_t) = dlogit[t] through the tape.
void run_backward(const ModelParams& params, const Layout& lay,
                  std::span<const TokenId> ids, const Tape& tape,
                  std::span<const double> dlogit, std::span<double> grad) {
  const auto& cfg = params.config();
  const std::size_t n = tape.n;
  const std::size_t d = cfg.d_model;
  const std::size_t heads = cfg.num_heads;
  const std::size_t dh = cfg.head_dim();
  const std::size_t ff = cfg.ff();
  const double* p = params.values().data();
  double* g = grad.data();

  std::vector<double> dh_out(n * d, 0.0);
  const double* w = p + lay.head;
  for (std::size_t t = 0; t < n; ++t) {
    if (dlogit[t] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      g[lay.head + j] += dlogit[t] * tape.h[t * d + j];
      dh_out[t * d + j] = dlogit[t] * w[j];
    }
  }
  std::vector<double> dx(n * d, 0.0);
  layer_norm_backward(tape.lnf_hat.data(), tape.lnf_rstd.data(), n, d,
                      p + lay.lnf_g, dh_out.data(), dx.data(), g + lay.lnf_g,
                      g + lay.lnf_b);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t li = cfg.num_layers; li-- > 0;) {
    const LayerSlots& s = lay.layers[li];
    const LayerCache& c = tape.layers[li];

    // Feed-forward block: x_out = x_mid + W2 gelu(W1 LN2(x_mid)).
    std::vector<double> dact(n * ff, 0.0);
    linear_backward(c.act.data(), n, ff, p + s.w2, d, dx.data(), dact.data(),
                    g + s.w2, g + s.b2);
    for (std::size_t i = 0; i < n * ff; ++i) dact[i] *= gelu_grad(c.u[i]);
    std::vector<double> df(n * d, 0.0);
    linear_backward(c.f.data(), n, d, p + s.w1, ff, dact.data(), df.data(),
                    g + s.w1, g + s.b1);
    layer_norm_backward(c.ln2_hat.data(), c.ln2_rstd.data(), n, d,
                        p + s.ln2_g, df.data(), dx.data(), g + s.ln2_g,
                        g + s.ln2_b);

    // Attention block: x_mid = x_in + Wo attn(LN1(x_in)).
    std::vector<double> dctx(n * d, 0.0);
    linear_backward(c.ctx.data(), n, d, p + s.wo, d, dx.data(), dctx.data(),
                    g + s.wo, g + s.bo);
    std::vector<double> dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0);
    std::vector<double> da_row(n);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const std::size_t off = hd * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const double* arow = c.attn.data() + (hd * n + i) * n;
        double dot_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (arow[j] == 0.0) {
            da_row[j] = 0.0;
            continue;
          }
          double acc = 0.0;
          for (std::size_t m = 0; m < dh; ++m) {
            acc += dctx[i * d + off + m] * c.v[j * d + off + m];
            dv[j * d + off + m] += arow[j] * dctx[i * d + off + m];
          }
          da_row[j] = acc;
          dot_sum += acc * arow[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (arow[j] == 0.0) continue;
          const double ds = arow[j] * (da_row[j] - dot_sum) * scale;
          for (std::size_t m = 0; m < dh; ++m) {
            dq[i * d + off + m] += ds * c.k[j * d + off + m];
            dk[j * d + off + m] += ds * c.q[i * d + off + m];
          }
        }
      }
    }
    std::vector<double> da(n * d, 0.0);
    linear_backward(c.a.data(), n, d, p + s.wq, d, dq.data(), da.data(),
                    g + s.wq, g + s.bq);
    linear_backward(c.a.data(), n, d, p + s.wk, d, dk.data(), da.data(),
                    g + s.wk, g + s.bk);
    linear_backward(c.a.data(), n, d, p + s.wv, d, dv.data(), da.data(),
                    g + s.wv, g + s.bv);
    layer_norm_backward(c.ln1_hat.data(), c.ln1_rstd.data(), n, d,
                        p + s.ln1_g, da.data(), dx.data(), g + s.ln1_g,
                        g + s.ln1_b);
  }

  for (std::size_t t = 0; t < n; ++t) {
    double* ge = g + lay.embed + static_cast<std::size_t>(ids[t]) * d;
    for (std::size_t j = 0; j < d; ++j) ge[j] += dx[t * d + j];
  }
}

double clipped(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

double bce_term(double p, double t) {
  const double pc = clipped(p);
  return -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
}

std::size_t mask_count(const TargetVector& target) {
  return static_cast<std::size_t>(
      std::count(target.loss_mask.begin(), target.loss_mask.end(), true));
}

// --- checkpoint encoding --------------------------------------------------

constexpr std::array<char, 8> kMagic = {'T', 'R', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof())
      throw ModelError("truncated checkpoint");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

// --- ModelParams ------------------------------------------------------------

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  validate_config(config_);
  const std::size_t d = config_.d_model;
  const std::size_t ff = config_.ff();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape,
                 bool decay) {
    std::size_t size = 1;
    for (auto s : shape) size *= s;
    tensors_.push_back({std::move(name), std::move(shape), offset, size, decay});
    offset += size;
  };
  add("embed", {config_.vocab_size, d}, true);
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    const std::string pre = "layer" + std::to_string(i) + ".";
    add(pre + "ln1.g", {d}, false);
    add(pre + "ln1.b", {d}, false);
    add(pre + "attn.wq", {d, d}, true);
    add(pre + "attn.bq", {d}, false);
    add(pre + "attn.wk", {d, d}, true);
    add(pre + "attn.bk", {d}, false);
    add(pre + "attn.wv", {d, d}, true);
    add(pre + "attn.bv", {d}, false);
    add(pre + "attn.wo", {d, d}, true);
    add(pre + "attn.bo", {d}, false);
    add(pre + "ln2.g", {d}, false);
    add(pre + "ln2.b", {d}, false);
    add(pre + "ff.w1", {d, ff}, true);
    add(pre + "ff.b1", {ff}, false);
    add(pre + "ff.w2", {ff, d}, true);
    add(pre + "ff.b2", {d}, false);
  }
  add("final_ln.g", {d}, false);
  add("final_ln.b", {d}, false);
  add("head.w", {d}, true);
  values_.assign(offset, 0.0);
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  ModelParams mp(config);
  Rng rng(seed);
  for (const auto& t : mp.tensors_) {
    auto slice = std::span<double>(mp.values_).subspan(t.offset, t.size);
    const bool is_gain = t.name.ends_with(".g");
    if (is_gain) {
      std::fill(slice.begin(), slice.end(), 1.0);
    } else if (t.name == "embed") {
      // Unit variance, on the scale of the sinusoidal position codes.
      const double bound = std::sqrt(3.0);
      for (double& v : slice) v = rng.uniform(-bound, bound);
    } else if (t.shape.size() == 2 || t.name == "head.w") {
      const double fan_in = static_cast<double>(t.shape.front());
      const double fan_out =
          t.shape.size() == 2 ? static_cast<double>(t.shape.back()) : 1.0;
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : slice) v = rng.uniform(-bound, bound);
    }
  }
  return mp;
}

const TensorInfo& ModelParams::tensor_info(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw ModelError("no tensor named '" + std::string(name) + "'");
}

std::span<double> ModelParams::tensor(std::string_view name) {
  const auto& t = tensor_info(name);
  return std::span<double>(values_).subspan(t.offset, t.size);
}

std::span<const double> ModelParams::tensor(std::string_view name) const {
  const auto& t = tensor_info(name);
  return std::span<const double>(values_).subspan(t.offset, t.size);
}

std::vector<std::uint8_t> ModelParams::decay_mask() const {
  std::vector<std::uint8_t> mask(values_.size(), 0);
  for (const auto& t : tensors_)
    if (t.decay)
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size,
                  std::uint8_t{1});
  return mask;
}

void ModelParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  for (std::size_t v : {config_.vocab_size, config_.d_model, config_.num_layers,
                        config_.num_heads, config_.ff(), config_.max_length})
    put_u64(out, v);
  put_u32(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& t : tensors_) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto s : t.shape) put_u64(out, s);
    for (std::size_t i = 0; i < t.size; ++i)
      put_u64(out, std::bit_cast<std::uint64_t>(values_[t.offset + i]));
  }
  if (!out) throw ModelError("I/O error writing " + path.string());
}

ModelParams ModelParams::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic)
    throw ModelError(path.string() + " is not a trd checkpoint");
  const auto version = get_uint(in, 4);
  if (version != kCheckpointVersion)
    throw ModelError("unsupported checkpoint version " +
                     std::to_string(version));
  ModelConfig cfg;
  cfg.vocab_size = get_uint(in, 8);
  cfg.d_model = get_uint(in, 8);
  cfg.num_layers = get_uint(in, 8);
  cfg.num_heads = get_uint(in, 8);
  cfg.ff_dim = get_uint(in, 8);
  cfg.max_length = get_uint(in, 8);
  if (cfg.ff_dim == 4 * cfg.d_model) cfg.ff_dim = 0;
  ModelParams mp(cfg);
  const auto count = get_uint(in, 4);
  if (count != mp.tensors_.size())
    throw ModelError("checkpoint tensor count does not match its config");
  for (const auto& t : mp.tensors_) {
    const auto name_len = get_uint(in, 4);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!in || name != t.name)
      throw ModelError("checkpoint tensor '" + name + "' where '" + t.name +
                       "' was expected");
    const auto ndim = get_uint(in, 4);
    std::vector<std::size_t> shape;
    for (std::uint64_t i = 0; i < ndim; ++i) shape.push_back(get_uint(in, 8));
    if (shape != t.shape)
      throw ModelError("checkpoint tensor '" + name + "' has the wrong shape");
    for (std::size_t i = 0; i < t.size; ++i)
      mp.values_[t.offset + i] = std::bit_cast<double>(get_uint(in, 8));
  }
  return mp;
}

// --- forward / loss / gradient ---------------------------------------------

std::vector<double> forward(const ModelParams& params,
                            std::span<const TokenId> ids) {
  const Layout lay = layout_of(params.tensors(), params.config());
  Tape tape;
  run_forward(params, lay, ids, tape);
  return std::move(tape.probs);
}

double bce_loss(std::span<const double> probs, const TargetVector& target) {
  if (probs.size() != target.values.size() ||
      probs.size() != target.loss_mask.size())
    throw ModelError("prediction and target lengths differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (!target.loss_mask[t]) continue;
    sum += bce_term(probs[t], target.values[t]);
    ++count;
  }
  if (count == 0) throw ModelError("loss mask selects no positions");
  return sum / static_cast<double>(count);
}

double accumulate_gradient(const ModelParams& params,
                           std::span<const TokenId> ids,
                           const TargetVector& target,
                           std::span<double> grad) {
  if (grad.size() != params.size())
    throw ModelError("gradient buffer has the wrong size");
  if (ids.size() != target.values.size() ||
      ids.size() != target.loss_mask.size())
    throw ModelError("token and target lengths differ");
  const Layout lay = layout_of(params.tensors(), params.config());
  Tape tape;
  run_forward(params, lay, ids, tape);

  std::vector<double> dlogit(ids.size(), 0.0);
  double loss = 0.0;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (!target.loss_mask[t]) continue;
    const double p = tape.probs[t];
    const double y = target.values[t];
    loss += bce_term(p, y);
    // The clip is flat outside [kProbClip, 1 - kProbClip].
    if (p > kProbClip && p < 1.0 - kProbClip) dlogit[t] = p - y;
  }
  run_backward(params, lay, ids, tape, dlogit, grad);
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ModelError("learning_rate must be a finite non-negative number");
  if (batch_size == 0) throw ModelError("batch_size must be at least 1");
  if (!(weight_decay >= 0.0)) throw ModelError("weight_decay must be >= 0");
  if (!(adam_epsilon > 0.0)) throw ModelError("adam_epsilon must be > 0");
  if (max_length < 3) throw ModelError("max_length must be at least 3");
}

TrainResult train(ModelParams params, std::span<const TrainingExample> data,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ModelError("no training data");
  for (const auto& ex : data) {
    if (ex.encoding.tokens.size() > params.config().max_length ||
        ex.encoding.tokens.size() > cfg.max_length)
      throw ModelError("training example longer than max_length");
    if (mask_count(ex.target) == 0)
      throw ModelError("training example with an empty loss mask");
  }

  AdamW::Options opt;
  opt.learning_rate = cfg.learning_rate;
  opt.epsilon = cfg.adam_epsilon;
  opt.weight_decay = cfg.weight_decay;
  AdamW optimizer(params.size(), opt, params.decay_mask());

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed);
  std::vector<double> grad(params.size());
  TrainResult result{params, {}};
  ModelParams& current = result.params;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batches) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss_sum = 0.0;
      std::size_t count = 0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& ex = data[order[b]];
        loss_sum += accumulate_gradient(current, ex.encoding.tokens.ids,
                                        ex.target, grad);
        count += mask_count(ex.target);
      }
      const double loss = loss_sum / static_cast<double>(count);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss in epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(batches),
                            epoch, batches);
      const double inv = 1.0 / static_cast<double>(count);
      double norm_sq = 0.0;
      for (double& gv : grad) {
        gv *= inv;
        norm_sq += gv * gv;
      }
      if (cfg.clip_norm > 0.0) {
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.clip_norm) {
          const double f = cfg.clip_norm / norm;
          for (double& gv : grad) gv *= f;
        }
      }
      optimizer.step(current.values(), grad);
      epoch_loss += loss;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

LabelProbabilities score_labels(const ModelParams& params,
                                const PromptEncoding& enc) {
  const auto probs = forward(params, enc.tokens.ids);
  LabelProbabilities out;
  for (const auto pos : enc.label_positions) {
    if (pos >= probs.size())
      throw CodecError("label position outside the sequence");
    out.p.push_back(probs[pos]);
  }
  return out;
}

GradientFn analytic_gradient() {
  return [](const ModelParams& params, const TrainingExample& ex,
            std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double sum =
        accumulate_gradient(params, ex.encoding.tokens.ids, ex.target, grad);
    const double inv = 1.0 / static_cast<double>(mask_count(ex.target));
    for (double& g : grad) g *= inv;
    return sum * inv;
  };
}

GradCheckResult grad_check(const ModelParams& params,
                           const TrainingExample& sample, double epsilon,
                           std::size_t coordinates, std::uint64_t seed,
                           const GradientFn& gradient) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw ModelError("grad_check epsilon must lie in [1e-6, 1e-3]");
  std::vector<double> analytic(params.size());
  gradient(params, sample, analytic);

  // A few coordinates from every tensor, then uniform draws until the
  // requested count is reached.
  Rng rng(seed);
  std::vector<std::size_t> picks;
  for (const auto& t : params.tensors())
    for (std::size_t i = 0; i < std::min<std::size_t>(4, t.size); ++i)
      picks.push_back(t.offset + rng.uniform_index(t.size));
  const std::size_t want = std::min(coordinates, params.size());
  while (picks.size() < want) picks.push_back(rng.uniform_index(params.size()));

  auto loss_at = [&](const ModelParams& p) {
    return bce_loss(forward(p, sample.encoding.tokens.ids), sample.target);
  };

  GradCheckResult out;
  out.coordinates = picks.size();
  ModelParams probe = params;
  for (const std::size_t idx : picks) {
    const double saved = probe.values()[idx];
    probe.values()[idx] = saved + epsilon;
    const double up = loss_at(probe);
    probe.values()[idx] = saved - epsilon;
    const double down = loss_at(probe);
    probe.values()[idx] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[idx];
    const double rel =
        std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
    out.max_abs_analytic = std::max(out.max_abs_analytic, std::abs(a));
    out.max_abs_numeric = std::max(out.max_abs_numeric, std::abs(numeric));
    if (rel > out.max_relative_error) {
      out.max_relative_error = rel;
      for (const auto& t : params.tensors())
        if (idx >= t.offset && idx < t.offset + t.size) out.worst_tensor = t.name;
    }
  }
  return out;
}

}  // namespace trd
