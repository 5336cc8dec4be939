/* Copyright (c) 2026 The mapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "mapseg/unet.hpp"

#include <cmath>
#include <string>

namespace mapseg {

void UNetConfig::validate() const {
  if (input_channels < 1) throw ConfigError("unet: input_channels must be >= 1");
  if (num_classes < 2) throw ConfigError("unet: num_classes must be >= 2");
  if (num_classes > 256) throw ConfigError("unet: num_classes must fit in 8-bit labels");
  if (depth < 1 || depth > 12) throw ConfigError("unet: depth must be in [1, 12]");
  if (base_filters < 1) throw ConfigError("unet: base_filters must be >= 1");
  if (base_filters > (std::int64_t{1} << 20) >> depth)
    throw ConfigError("unet: base_filters * 2^depth is unreasonably large");
  const std::int64_t unit = std::int64_t{1} << depth;
  if (patch_size < unit || patch_size % unit != 0)
    throw ConfigError("unet: patch_size " + std::to_string(patch_size) +
                      " must be a positive multiple of 2^depth = " + std::to_string(unit));
}

namespace {

template <typename T>
nn::ConvParams<T> make_conv(std::int64_t out_c, std::int64_t in_c, std::int64_t k, Rng* rng) {
  const Shape4 shape{out_c, in_c, k, k};
  nn::ConvParams<T> p;
  if (rng != nullptr) {
    const double fan_in = static_cast<double>(in_c * k * k);
    p.weight = tensor_rand_normal<T>(shape, 0.0, std::sqrt(2.0 / fan_in), *rng);
  } else {
    p.weight = BasicTensor<T>(shape);
  }
  p.bias.assign(static_cast<std::size_t>(out_c), T(0));
  return p;
}

template <typename T>
Stage<T> make_stage(std::int64_t in_c, std::int64_t out_c, Rng* rng) {
  Stage<T> s;
  s.first.conv = make_conv<T>(out_c, in_c, 3, rng);
  s.first.bn = nn::BNParams<T>::identity(out_c);
  s.second.conv = make_conv<T>(out_c, out_c, 3, rng);
  s.second.bn = nn::BNParams<T>::identity(out_c);
  return s;
}

template <typename T>
BasicUNet<T> assemble(const UNetConfig& cfg, Rng* rng) {
  cfg.validate();
  BasicUNet<T> m;
  for (std::int64_t l = 0; l < cfg.depth; ++l) {
    const std::int64_t in_c = l == 0 ? cfg.input_channels : cfg.level_channels(l - 1);
    m.encoder.push_back(make_stage<T>(in_c, cfg.level_channels(l), rng));
  }
  m.bottleneck =
      make_stage<T>(cfg.level_channels(cfg.depth - 1), cfg.level_channels(cfg.depth), rng);
  m.decoder.resize(static_cast<std::size_t>(cfg.depth));
  for (std::int64_t l = cfg.depth - 1; l >= 0; --l) {
    const std::int64_t skip_c = cfg.level_channels(l);
    const std::int64_t up_c = cfg.level_channels(l + 1);
    m.decoder[static_cast<std::size_t>(l)] = make_stage<T>(skip_c + up_c, skip_c, rng);
  }
  m.head = make_conv<T>(cfg.num_classes, cfg.level_channels(0), 1, rng);
  return m;
}

std::vector<std::int64_t> dims_of(const Shape4& s) { return {s.n, s.c, s.h, s.w}; }

// Visits stages in forward order: encoder levels, bottleneck, decoder from
// the deepest level back to full resolution.
template <typename M, typename F>
void for_each_stage(M& model, F&& f) {
  const std::int64_t depth = static_cast<std::int64_t>(model.encoder.size());
  for (std::int64_t l = 0; l < depth; ++l)
    f("enc" + std::to_string(l), model.encoder[static_cast<std::size_t>(l)]);
  f(std::string("bottleneck"), model.bottleneck);
  for (std::int64_t l = depth - 1; l >= 0; --l)
    f("dec" + std::to_string(l), model.decoder[static_cast<std::size_t>(l)]);
}

template <typename Q, typename Conv>
void append_conv(std::vector<ParamRef<Q>>& out, const std::string& prefix, Conv& conv) {
  out.push_back({prefix + ".weight", dims_of(conv.weight.shape()),
                 std::span<Q>(conv.weight.ptr(), conv.weight.size())});
  out.push_back({prefix + ".bias", {static_cast<std::int64_t>(conv.bias.size())},
                 std::span<Q>(conv.bias.data(), conv.bias.size())});
}

template <typename Q, typename V>
void append_vector(std::vector<ParamRef<Q>>& out, const std::string& name, V& values) {
  out.push_back({name, {static_cast<std::int64_t>(values.size())},
                 std::span<Q>(values.data(), values.size())});
}

template <typename Q, typename M>
std::vector<ParamRef<Q>> collect_parameters(M& model) {
  std::vector<ParamRef<Q>> out;
  for_each_stage(model, [&](const std::string& prefix, auto& stage) {
    append_conv<Q>(out, prefix + ".conv1", stage.first.conv);
    append_vector<Q>(out, prefix + ".bn1.gamma", stage.first.bn.gamma);
    append_vector<Q>(out, prefix + ".bn1.beta", stage.first.bn.beta);
    append_conv<Q>(out, prefix + ".conv2", stage.second.conv);
    append_vector<Q>(out, prefix + ".bn2.gamma", stage.second.bn.gamma);
    append_vector<Q>(out, prefix + ".bn2.beta", stage.second.bn.beta);
  });
  append_conv<Q>(out, "head", model.head);
  return out;
}

template <typename Q, typename M>
std::vector<ParamRef<Q>> collect_buffers(M& model) {
  std::vector<ParamRef<Q>> out;
  for_each_stage(model, [&](const std::string& prefix, auto& stage) {
    append_vector<Q>(out, prefix + ".bn1.running_mean", stage.first.bn.running_mean);
    append_vector<Q>(out, prefix + ".bn1.running_var", stage.first.bn.running_var);
    append_vector<Q>(out, prefix + ".bn2.running_mean", stage.second.bn.running_mean);
    append_vector<Q>(out, prefix + ".bn2.running_var", stage.second.bn.running_var);
  });
  return out;
}

template <typename U, typename T>
std::vector<U> cast_vector(const std::vector<T>& v) {
  return std::vector<U>(v.begin(), v.end());
}

template <typename U, typename T>
Stage<U> cast_stage(const Stage<T>& s) {
  auto block = [](const ConvBlock<T>& b) {
    ConvBlock<U> out;
    out.conv.weight = b.conv.weight.template cast<U>();
    out.conv.bias = cast_vector<U>(b.conv.bias);
    out.bn.gamma = cast_vector<U>(b.bn.gamma);
    out.bn.beta = cast_vector<U>(b.bn.beta);
    out.bn.running_mean = cast_vector<U>(b.bn.running_mean);
    out.bn.running_var = cast_vector<U>(b.bn.running_var);
    out.bn.eps = static_cast<U>(b.bn.eps);
    out.bn.momentum = static_cast<U>(b.bn.momentum);
    return out;
  };
  return {block(s.first), block(s.second)};
}

// ------------------------------------------------------------------- forward

template <typename T>
BasicTensor<T> block_forward(ConvBlock<T>& b, const BasicTensor<T>& x, bool training,
                             nn::ConvCache<T>& cc, nn::BNCache<T>& bc, nn::ReluCache& rc) {
  auto conv = nn::conv2d_forward(x, b.conv, 1, 1);
  cc = std::move(conv.cache);
  auto bn = nn::batchnorm_forward(conv.y, b.bn, training);
  bc = std::move(bn.cache);
  auto relu = nn::relu_forward(bn.y);
  rc = std::move(relu.cache);
  return std::move(relu.y);
}

template <typename T>
BasicTensor<T> stage_forward(Stage<T>& s, const BasicTensor<T>& x, bool training,
                             StageCache<T>& cache) {
  BasicTensor<T> h = block_forward(s.first, x, training, cache.conv1, cache.bn1, cache.relu1);
  return block_forward(s.second, h, training, cache.conv2, cache.bn2, cache.relu2);
}

template <typename T>
BasicTensor<T> block_infer(const ConvBlock<T>& b, const BasicTensor<T>& x) {
  BasicTensor<T> y = nn::batchnorm_infer(nn::conv2d_infer(x, b.conv, 1, 1), b.bn);
  for (T& v : y.data()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
BasicTensor<T> stage_infer(const Stage<T>& s, const BasicTensor<T>& x) {
  return block_infer(s.second, block_infer(s.first, x));
}

void check_input(const UNetConfig& cfg, const Shape4& s) {
  if (s.n < 1 || s.c != cfg.input_channels || s.h != cfg.patch_size || s.w != cfg.patch_size)
    throw ShapeError("unet: input " + s.str() + " does not match (n, " +
                     std::to_string(cfg.input_channels) + ", " + std::to_string(cfg.patch_size) +
                     ", " + std::to_string(cfg.patch_size) + ")");
}

// ------------------------------------------------------------------ backward

template <typename T>
struct BlockGrads {
  nn::ConvGrads<T> conv;
  nn::BNGrads<T> bn;
};

template <typename T>
struct StageGrads {
  BlockGrads<T> first;
  BlockGrads<T> second;
};

template <typename T>
BasicTensor<T> block_backward(const ConvBlock<T>& b, const BasicTensor<T>& grad_y,
                              const nn::ConvCache<T>& cc, const nn::BNCache<T>& bc,
                              const nn::ReluCache& rc, BlockGrads<T>& grads) {
  grads.bn = nn::batchnorm_backward(nn::relu_backward(grad_y, rc), bc);
  grads.conv = nn::conv2d_backward(grads.bn.grad_x, cc, b.conv);
  grads.bn.grad_x = BasicTensor<T>();
  return std::move(grads.conv.grad_x);
}

template <typename T>
BasicTensor<T> stage_backward(const Stage<T>& s, const BasicTensor<T>& grad_y,
                              const StageCache<T>& c, StageGrads<T>& grads) {
  BasicTensor<T> g =
      block_backward(s.second, grad_y, c.conv2, c.bn2, c.relu2, grads.second);
  return block_backward(s.first, g, c.conv1, c.bn1, c.relu1, grads.first);
}

template <typename T>
void append_block_grads(GradientSet<T>& out, const std::string& prefix, const std::string& suffix,
                        const ConvBlock<T>& b, BlockGrads<T>& g) {
  out.push_back({prefix + ".conv" + suffix + ".weight", dims_of(b.conv.weight.shape()),
                 std::vector<T>(g.conv.grad_w.data().begin(), g.conv.grad_w.data().end())});
  out.push_back({prefix + ".conv" + suffix + ".bias",
                 {static_cast<std::int64_t>(b.conv.bias.size())},
                 std::move(g.conv.grad_b)});
  out.push_back({prefix + ".bn" + suffix + ".gamma", {b.bn.channels()}, std::move(g.bn.grad_gamma)});
  out.push_back({prefix + ".bn" + suffix + ".beta", {b.bn.channels()}, std::move(g.bn.grad_beta)});
}

}  // namespace

template <typename T>
BasicUNet<T> BasicUNet<T>::build(const UNetConfig& config, Rng& rng) {
  BasicUNet<T> m = assemble<T>(config, &rng);
  m.config_ = config;
  return m;
}

template <typename T>
BasicUNet<T> BasicUNet<T>::zeros(const UNetConfig& config) {
  BasicUNet<T> m = assemble<T>(config, nullptr);
  m.config_ = config;
  return m;
}

template <typename T>
std::vector<ParamRef<T>> BasicUNet<T>::parameters() {
  return collect_parameters<T>(*this);
}

template <typename T>
std::vector<ParamRef<const T>> BasicUNet<T>::parameters() const {
  return collect_parameters<const T>(*this);
}

template <typename T>
std::vector<ParamRef<T>> BasicUNet<T>::buffers() {
  return collect_buffers<T>(*this);
}

template <typename T>
std::vector<ParamRef<const T>> BasicUNet<T>::buffers() const {
  return collect_buffers<const T>(*this);
}

template <typename T>
std::int64_t BasicUNet<T>::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : parameters()) total += static_cast<std::int64_t>(p.values.size());
  return total;
}

template <typename T>
template <typename U>
BasicUNet<U> BasicUNet<T>::cast() const {
  BasicUNet<U> out;
  out.config_ = config_;
  for (const auto& s : encoder) out.encoder.push_back(cast_stage<U>(s));
  out.bottleneck = cast_stage<U>(bottleneck);
  for (const auto& s : decoder) out.decoder.push_back(cast_stage<U>(s));
  out.head.weight = head.weight.template cast<U>();
  out.head.bias = cast_vector<U>(head.bias);
  return out;
}

template <typename T>
UNetForward<T> forward(BasicUNet<T>& model, const BasicTensor<T>& x, bool training) {
  const UNetConfig& cfg = model.config();
  check_input(cfg, x.shape());
  const auto depth = static_cast<std::size_t>(cfg.depth);
  UNetForward<T> out;
  UNetCache<T>& cache = out.cache;
  cache.input_shape = x.shape();
  cache.encoder.resize(depth);
  cache.decoder.resize(depth);
  cache.pools.resize(depth);
  cache.upsamples.resize(depth);
  cache.skip_channels.resize(depth);

  std::vector<BasicTensor<T>> skips(depth);
  BasicTensor<T> h = x;
  for (std::size_t l = 0; l < depth; ++l) {
    skips[l] = stage_forward(model.encoder[l], h, training, cache.encoder[l]);
    auto pooled = nn::maxpool2d_forward(skips[l], 2, 2);
    cache.pools[l] = std::move(pooled.cache);
    h = std::move(pooled.y);
  }
  h = stage_forward(model.bottleneck, h, training, cache.bottleneck);
  for (std::size_t l = depth; l-- > 0;) {
    auto up = nn::upsample2x_forward(h);
    cache.upsamples[l] = up.cache;
    cache.skip_channels[l] = skips[l].shape().c;
    BasicTensor<T> merged = concat_channels(skips[l], up.y);
    skips[l] = BasicTensor<T>();
    h = stage_forward(model.decoder[l], merged, training, cache.decoder[l]);
  }
  auto head = nn::conv2d_forward(h, model.head, 1, 0);
  cache.head = std::move(head.cache);
  out.logits = std::move(head.y);
  return out;
}

template <typename T>
BasicTensor<T> infer(const BasicUNet<T>& model, const BasicTensor<T>& x) {
  const UNetConfig& cfg = model.config();
  check_input(cfg, x.shape());
  const auto depth = static_cast<std::size_t>(cfg.depth);
  std::vector<BasicTensor<T>> skips(depth);
  BasicTensor<T> h = x;
  for (std::size_t l = 0; l < depth; ++l) {
    skips[l] = stage_infer(model.encoder[l], h);
    h = nn::maxpool2d_forward(skips[l], 2, 2).y;
  }
  h = stage_infer(model.bottleneck, h);
  for (std::size_t l = depth; l-- > 0;) {
    BasicTensor<T> merged = concat_channels(skips[l], nn::upsample2x_forward(h).y);
    skips[l] = BasicTensor<T>();
    h = stage_infer(model.decoder[l], merged);
  }
  return nn::conv2d_infer(h, model.head, 1, 0);
}

template <typename T>
GradientSet<T> backward(const BasicUNet<T>& model, const UNetCache<T>& cache,
                        const BasicTensor<T>& grad_logits, BasicTensor<T>* grad_input) {
  const UNetConfig& cfg = model.config();
  const auto depth = static_cast<std::size_t>(cfg.depth);
  if (cache.encoder.size() != depth || cache.decoder.size() != depth ||
      cache.pools.size() != depth || cache.upsamples.size() != depth)
    throw StateError("unet backward: cache was not produced by a forward pass of this model");
  const Shape4 expected{cache.input_shape.n, cfg.num_classes, cache.input_shape.h,
                        cache.input_shape.w};
  if (!(grad_logits.shape() == expected) || !(cache.head.out_shape == expected))
    throw StateError("unet backward: gradient " + grad_logits.shape().str() +
                     " does not match the cached forward output " + cache.head.out_shape.str());

  std::vector<StageGrads<T>> enc_grads(depth);
  std::vector<StageGrads<T>> dec_grads(depth);
  StageGrads<T> mid_grads;

  nn::ConvGrads<T> head_grads = nn::conv2d_backward(grad_logits, cache.head, model.head);
  BasicTensor<T> g = std::move(head_grads.grad_x);
  std::vector<BasicTensor<T>> skip_grads(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    BasicTensor<T> merged = stage_backward(model.decoder[l], g, cache.decoder[l], dec_grads[l]);
    const std::int64_t skip_c = cache.skip_channels[l];
    skip_grads[l] = slice_channels(merged, 0, skip_c);
    g = nn::upsample2x_backward(slice_channels(merged, skip_c, merged.shape().c),
                                cache.upsamples[l]);
  }
  g = stage_backward(model.bottleneck, g, cache.bottleneck, mid_grads);
  for (std::size_t l = depth; l-- > 0;) {
    BasicTensor<T> from_pool = nn::maxpool2d_backward(g, cache.pools[l]);
    BasicTensor<T> total = tensor_zip(from_pool, skip_grads[l], [](T a, T b) { return a + b; });
    g = stage_backward(model.encoder[l], total, cache.encoder[l], enc_grads[l]);
  }
  if (grad_input != nullptr) *grad_input = std::move(g);

  GradientSet<T> out;
  auto emit = [&](const std::string& prefix, const Stage<T>& s, StageGrads<T>& sg) {
    append_block_grads(out, prefix, "1", s.first, sg.first);
    append_block_grads(out, prefix, "2", s.second, sg.second);
  };
  for (std::size_t l = 0; l < depth; ++l)
    emit("enc" + std::to_string(l), model.encoder[l], enc_grads[l]);
  emit("bottleneck", model.bottleneck, mid_grads);
  for (std::size_t l = depth; l-- > 0;)
    emit("dec" + std::to_string(l), model.decoder[l], dec_grads[l]);
  out.push_back({"head.weight", dims_of(model.head.weight.shape()),
                 std::vector<T>(head_grads.grad_w.data().begin(), head_grads.grad_w.data().end())});
  out.push_back({"head.bias", {static_cast<std::int64_t>(model.head.bias.size())},
                 std::move(head_grads.grad_b)});
  return out;
}

template <typename T>
GradientSet<T> zero_gradients(const BasicUNet<T>& model) {
  GradientSet<T> out;
  for (const auto& p : model.parameters())
    out.push_back({p.name, p.dims, std::vector<T>(p.values.size(), T(0))});
  return out;
}

template class BasicUNet<float>;
template class BasicUNet<double>;
template BasicUNet<double> BasicUNet<float>::cast<double>() const;
template BasicUNet<float> BasicUNet<double>::cast<float>() const;
template BasicUNet<float> BasicUNet<float>::cast<float>() const;

template UNetForward<float> forward(BasicUNet<float>&, const BasicTensor<float>&, bool);
template UNetForward<double> forward(BasicUNet<double>&, const BasicTensor<double>&, bool);
template BasicTensor<float> infer(const BasicUNet<float>&, const BasicTensor<float>&);
template BasicTensor<double> infer(const BasicUNet<double>&, const BasicTensor<double>&);
template GradientSet<float> backward(const BasicUNet<float>&, const UNetCache<float>&,
                                     const BasicTensor<float>&, BasicTensor<float>*);
template GradientSet<double> backward(const BasicUNet<double>&, const UNetCache<double>&,
                                      const BasicTensor<double>&, BasicTensor<double>*);
template GradientSet<float> zero_gradients(const BasicUNet<float>&);
template GradientSet<double> zero_gradients(const BasicUNet<double>&);

}  // namespace mapseg
