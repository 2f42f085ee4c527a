#include "vigil/model.hpp"

#include <cmath>
#include <sstream>

#include "vigil/rng.hpp"

namespace vigil {

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::StandardConv: return "conv";
    case LayerKind::DepthwiseSeparable: return "dsblock";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::FullyConnected: return "fc";
  }
  return "?";
}

std::string layer_tag(int index, LayerKind kind) {
  return "l" + std::to_string(index) + "." + kind_name(kind);
}

}  // namespace

LayerSpec LayerSpec::conv(int out, int k, int stride, int padding, bool bn,
                          Activation act) {
  LayerSpec l;
  l.kind = LayerKind::StandardConv;
  l.out_channels = out;
  l.kernel = k;
  l.stride = stride;
  l.padding = padding;
  l.has_bn = bn;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::dsblock(int out, int k, int stride, int padding) {
  LayerSpec l;
  l.kind = LayerKind::DepthwiseSeparable;
  l.out_channels = out;
  l.kernel = k;
  l.stride = stride;
  l.padding = padding;
  l.has_bn = true;
  l.activation = Activation::Relu;
  return l;
}

LayerSpec LayerSpec::max_pool(int window, int stride) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  l.window_h = l.window_w = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::avg_pool(int window_h, int window_w, int stride) {
  LayerSpec l;
  l.kind = LayerKind::AvgPool;
  l.window_h = window_h;
  l.window_w = window_w;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  return l;
}

LayerSpec LayerSpec::fc(int units) {
  LayerSpec l;
  l.kind = LayerKind::FullyConnected;
  l.units = units;
  return l;
}

int scaled_channels(int base, float alpha) {
  const int scaled = static_cast<int>(std::lround(alpha * base));
  return scaled < 1 ? 1 : scaled;
}

ModelSpec reference_spec(int input_h, int input_w, float alpha,
                         std::vector<std::string> class_labels) {
  // Downsampling is done by 2x2 stride-2 pools: a 3x3 stride-2 convolution
  // has no integral output extent on even-sized inputs, and every supported
  // input size is even. Requires H and W divisible by 8.
  ModelSpec spec;
  spec.input_c = 3;
  spec.input_h = input_h;
  spec.input_w = input_w;
  spec.width_multiplier = alpha;
  spec.head = HeadKind::SoftmaxK;
  spec.class_labels = std::move(class_labels);

  spec.layers.push_back(LayerSpec::conv(32, 3, 1, 1));
  spec.layers.push_back(LayerSpec::max_pool(2, 2));
  spec.layers.push_back(LayerSpec::dsblock(64, 3, 1, 1));
  spec.layers.push_back(LayerSpec::max_pool(2, 2));
  spec.layers.push_back(LayerSpec::dsblock(128, 3, 1, 1));
  spec.layers.push_back(LayerSpec::max_pool(2, 2));
  spec.layers.push_back(LayerSpec::dsblock(256, 3, 1, 1));
  spec.layers.push_back(LayerSpec::avg_pool(input_h / 8, input_w / 8, 1));
  spec.layers.push_back(LayerSpec::flatten());
  spec.layers.push_back(LayerSpec::fc(static_cast<int>(spec.class_labels.size())));
  return spec;
}

Plan compile(const ModelSpec& spec) {
  if (spec.input_c < 1 || spec.input_h < 1 || spec.input_w < 1)
    throw ConfigError("model: input shape must be positive");
  if (spec.width_multiplier <= 0.0f || spec.width_multiplier > 1.0f)
    throw ConfigError("model: width_multiplier must be in (0, 1]");
  if (spec.class_labels.empty())
    throw ConfigError("model: class_labels must not be empty");
  if (spec.layers.empty())
    throw ConfigError("model: layer list must not be empty");

  const float alpha = spec.width_multiplier;
  Plan plan;
  int c = spec.input_c, h = spec.input_h, w = spec.input_w;
  bool flattened = false;
  int next_param = 0;

  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string tag = layer_tag(static_cast<int>(i), l.kind);
    auto fail = [&](const std::string& why) {
      throw ConfigError("model layer " + std::to_string(i) + " (" +
                        kind_name(l.kind) + "): " + why);
    };
    if (flattened && l.kind != LayerKind::FullyConnected)
      fail("only fully-connected layers may follow flatten");

    switch (l.kind) {
      case LayerKind::StandardConv: {
        if (l.out_channels < 1) fail("output channels must be positive");
        if (l.kernel != 1 && l.kernel != 3 && l.kernel != 5)
          fail("kernel size must be 1, 3 or 5");
        const int oc = scaled_channels(l.out_channels, alpha);
        const int oh = ops::out_extent(h, l.kernel, l.stride, l.padding,
                                       (tag + " height").c_str());
        const int ow = ops::out_extent(w, l.kernel, l.stride, l.padding,
                                       (tag + " width").c_str());
        PlanStep conv{PlanStep::Conv, tag, c, h, w, oc, oh, ow,
                      l.kernel, l.stride, l.padding, 0, 0, l.has_bias,
                      next_param++};
        plan.steps.push_back(conv);
        c = oc; h = oh; w = ow;
        if (l.has_bn) {
          PlanStep bn{PlanStep::BatchNorm, tag + ".bn", c, h, w, c, h, w,
                      0, 1, 0, 0, 0, false, next_param++};
          plan.steps.push_back(bn);
        }
        if (l.activation == Activation::Relu) {
          PlanStep act{PlanStep::Relu, tag + ".relu", c, h, w, c, h, w};
          plan.steps.push_back(act);
        }
        break;
      }
      case LayerKind::DepthwiseSeparable: {
        if (l.out_channels < 1) fail("output channels must be positive");
        if (l.kernel != 3 && l.kernel != 5)
          fail("depthwise kernel size must be 3 or 5");
        const int oc = scaled_channels(l.out_channels, alpha);
        const int oh = ops::out_extent(h, l.kernel, l.stride, l.padding,
                                       (tag + " height").c_str());
        const int ow = ops::out_extent(w, l.kernel, l.stride, l.padding,
                                       (tag + " width").c_str());
        const std::string base = "l" + std::to_string(i);
        PlanStep dw{PlanStep::Depthwise, base + ".dw", c, h, w, c, oh, ow,
                    l.kernel, l.stride, l.padding, 0, 0, l.has_bias,
                    next_param++};
        plan.steps.push_back(dw);
        if (l.has_bn)
          plan.steps.push_back({PlanStep::BatchNorm, base + ".dw.bn", c, oh, ow,
                                c, oh, ow, 0, 1, 0, 0, 0, false, next_param++});
        if (l.activation == Activation::Relu)
          plan.steps.push_back(
              {PlanStep::Relu, base + ".dw.relu", c, oh, ow, c, oh, ow});
        PlanStep pw{PlanStep::Pointwise, base + ".pw", c, oh, ow, oc, oh, ow,
                    1, 1, 0, 0, 0, l.has_bias, next_param++};
        plan.steps.push_back(pw);
        if (l.has_bn)
          plan.steps.push_back({PlanStep::BatchNorm, base + ".pw.bn", oc, oh, ow,
                                oc, oh, ow, 0, 1, 0, 0, 0, false, next_param++});
        if (l.activation == Activation::Relu)
          plan.steps.push_back(
              {PlanStep::Relu, base + ".pw.relu", oc, oh, ow, oc, oh, ow});
        c = oc; h = oh; w = ow;
        break;
      }
      case LayerKind::MaxPool:
      case LayerKind::AvgPool: {
        const int wh = l.window_h, ww = l.window_w;
        if (wh < 1 || ww < 1) fail("pool window must be positive");
        const int oh = ops::out_extent(h, wh, l.stride, 0, (tag + " height").c_str());
        const int ow = ops::out_extent(w, ww, l.stride, 0, (tag + " width").c_str());
        const auto op = l.kind == LayerKind::MaxPool ? PlanStep::MaxPool
                                                     : PlanStep::AvgPool;
        PlanStep pool{op, tag, c, h, w, c, oh, ow, 0, l.stride, 0, wh, ww};
        plan.steps.push_back(pool);
        h = oh; w = ow;
        break;
      }
      case LayerKind::Flatten: {
        PlanStep fl{PlanStep::Flatten, tag, c, h, w, c * h * w, 1, 1};
        plan.steps.push_back(fl);
        c = c * h * w;
        h = w = 1;
        flattened = true;
        break;
      }
      case LayerKind::FullyConnected: {
        if (l.units < 1) fail("units must be positive");
        if (!flattened)
          fail("input must be flattened first (flattened dim would be " +
               std::to_string(c * h * w) + ")");
        PlanStep fc{PlanStep::FullyConnected, tag, c, 1, 1, l.units, 1, 1,
                    0, 1, 0, 0, 0, l.has_bias, next_param++};
        plan.steps.push_back(fc);
        c = l.units;
        flattened = true;
        break;
      }
    }
  }

  if (!flattened || h != 1 || w != 1)
    throw ConfigError("model: network must end in flatten/fully-connected "
                      "layers producing an N x K logit matrix");
  plan.logits_dim = c;

  const std::string last_layer =
      "layer " + std::to_string(spec.layers.size() - 1) + " (" +
      kind_name(spec.layers.back().kind) + ")";
  const int k = spec.class_count();
  if (spec.head == HeadKind::SoftmaxK) {
    if (plan.logits_dim != k)
      throw ConfigError("model: softmax head expects " + std::to_string(k) +
                        " logits (one per class), " + last_layer +
                        " produces " + std::to_string(plan.logits_dim));
  } else {
    if (k != 2)
      throw ConfigError("model: sigmoid head is binary, needs exactly 2 class "
                        "labels, got " + std::to_string(k));
    if (plan.logits_dim != 1)
      throw ConfigError("model: sigmoid head expects a single logit, " +
                        last_layer + " produces " +
                        std::to_string(plan.logits_dim));
  }
  return plan;
}

ModelWeights build_model(const ModelSpec& spec, uint64_t seed) {
  const Plan plan = compile(spec);
  ModelWeights weights;
  weights.seed = seed;
  Rng rng(seed);

  auto he_uniform = [&](Tensor& t, int fan_in) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
    for (float& v : t.raw()) v = rng.uniform(-limit, limit);
  };

  for (const PlanStep& step : plan.steps) {
    if (step.param < 0) continue;
    ParamSet p;
    switch (step.op) {
      case PlanStep::Conv:
        p.w = Tensor(step.out_c, step.in_c, step.kernel, step.kernel);
        he_uniform(p.w, step.in_c * step.kernel * step.kernel);
        if (step.has_bias) p.bias.assign(step.out_c, 0.0f);
        break;
      case PlanStep::Depthwise:
        p.w = Tensor(step.in_c, 1, step.kernel, step.kernel);
        he_uniform(p.w, step.kernel * step.kernel);
        if (step.has_bias) p.bias.assign(step.in_c, 0.0f);
        break;
      case PlanStep::Pointwise:
        p.w = Tensor(step.out_c, step.in_c, 1, 1);
        he_uniform(p.w, step.in_c);
        if (step.has_bias) p.bias.assign(step.out_c, 0.0f);
        break;
      case PlanStep::BatchNorm:
        p.gamma.assign(step.out_c, 1.0f);
        p.beta.assign(step.out_c, 0.0f);
        p.running_mean.assign(step.out_c, 0.0f);
        p.running_var.assign(step.out_c, 1.0f);
        break;
      case PlanStep::FullyConnected:
        p.w = Tensor(step.out_c, step.in_c, 1, 1);
        he_uniform(p.w, step.in_c);
        if (step.has_bias) p.bias.assign(step.out_c, 0.0f);
        break;
      default:
        break;
    }
    weights.params.push_back(std::move(p));
  }
  return weights;
}

namespace {

constexpr float kBnEpsilon = 1e-5f;
constexpr float kBnMomentum = 0.1f;

Tensor run_step(const PlanStep& step, ParamSet* p, const Tensor& x,
                bool training) {
  switch (step.op) {
    case PlanStep::Conv:
      return ops::conv2d_forward(x, p->w, p->bias, step.stride, step.padding);
    case PlanStep::Depthwise:
      return ops::depthwise_conv2d_forward(x, p->w, p->bias, step.stride,
                                           step.padding);
    case PlanStep::Pointwise:
      return ops::pointwise_conv2d_forward(x, p->w, p->bias);
    case PlanStep::BatchNorm:
      return ops::batchnorm_forward(x, p->gamma, p->beta, p->running_mean,
                                    p->running_var, kBnEpsilon, training,
                                    kBnMomentum);
    case PlanStep::Relu:
      return ops::relu(x);
    case PlanStep::MaxPool:
      return ops::pool2d(x, ops::PoolMode::Max, step.window_h, step.window_w,
                         step.stride, step.stride);
    case PlanStep::AvgPool:
      return ops::pool2d(x, ops::PoolMode::Average, step.window_h,
                         step.window_w, step.stride, step.stride);
    case PlanStep::Flatten:
      return Tensor::from(x.n(), x.c() * x.h() * x.w(), 1, 1, x.raw());
    case PlanStep::FullyConnected:
      return ops::fully_connected_forward(x, p->w, p->bias);
  }
  throw ConfigError("model: unknown plan step");
}

void check_input(const ModelSpec& spec, const Tensor& batch) {
  if (batch.c() != spec.input_c)
    throw DimensionError("model forward: channel axis mismatch, batch C=" +
                         std::to_string(batch.c()) + " vs spec C=" +
                         std::to_string(spec.input_c));
  if (batch.h() != spec.input_h || batch.w() != spec.input_w)
    throw DimensionError("model forward: spatial axes mismatch, batch " +
                         std::to_string(batch.h()) + "x" +
                         std::to_string(batch.w()) + " vs spec " +
                         std::to_string(spec.input_h) + "x" +
                         std::to_string(spec.input_w));
  if (batch.n() < 1) throw DimensionError("model forward: empty batch");
}

}  // namespace

Tensor forward(const ModelSpec& spec, const ModelWeights& weights,
               const Tensor& batch) {
  check_input(spec, batch);
  const Plan plan = compile(spec);
  Tensor x = batch;
  for (const PlanStep& step : plan.steps) {
    ParamSet* p = step.param >= 0
                      ? const_cast<ParamSet*>(&weights.params[step.param])
                      : nullptr;
    x = run_step(step, p, x, /*training=*/false);
  }
  return x;
}

ForwardTape forward_train(const ModelSpec& spec, ModelWeights& weights,
                          const Tensor& batch) {
  check_input(spec, batch);
  const Plan plan = compile(spec);
  ForwardTape tape;
  tape.acts.reserve(plan.steps.size() + 1);
  tape.acts.push_back(batch);
  for (const PlanStep& step : plan.steps) {
    ParamSet* p = step.param >= 0 ? &weights.params[step.param] : nullptr;
    tape.acts.push_back(run_step(step, p, tape.acts.back(), /*training=*/true));
  }
  return tape;
}

GradSet backward(const ModelSpec& spec, const ModelWeights& weights,
                 const ForwardTape& tape, const Tensor& logits_grad) {
  const Plan plan = compile(spec);
  if (tape.acts.size() != plan.steps.size() + 1)
    throw DimensionError("model backward: tape does not match plan");

  GradSet grads;
  grads.params.resize(weights.params.size());

  Tensor up = logits_grad;
  for (int i = static_cast<int>(plan.steps.size()) - 1; i >= 0; --i) {
    const PlanStep& step = plan.steps[i];
    const Tensor& x = tape.acts[static_cast<size_t>(i)];
    switch (step.op) {
      case PlanStep::Conv: {
        auto g = ops::conv2d_backward(x, weights.params[step.param].w,
                                      step.stride, step.padding, up);
        grads.params[step.param].w = std::move(g.kernel_grad);
        if (step.has_bias)
          grads.params[step.param].bias = std::move(g.bias_grad);
        up = std::move(g.input_grad);
        break;
      }
      case PlanStep::Depthwise: {
        auto g = ops::depthwise_conv2d_backward(x, weights.params[step.param].w,
                                                step.stride, step.padding, up);
        grads.params[step.param].w = std::move(g.kernel_grad);
        if (step.has_bias)
          grads.params[step.param].bias = std::move(g.bias_grad);
        up = std::move(g.input_grad);
        break;
      }
      case PlanStep::Pointwise: {
        auto g = ops::conv2d_backward(x, weights.params[step.param].w, 1, 0, up);
        grads.params[step.param].w = std::move(g.kernel_grad);
        if (step.has_bias)
          grads.params[step.param].bias = std::move(g.bias_grad);
        up = std::move(g.input_grad);
        break;
      }
      case PlanStep::BatchNorm: {
        auto g = ops::batchnorm_backward(x, weights.params[step.param].gamma,
                                         kBnEpsilon, up);
        grads.params[step.param].gamma = std::move(g.gamma_grad);
        grads.params[step.param].beta = std::move(g.beta_grad);
        up = std::move(g.input_grad);
        break;
      }
      case PlanStep::Relu:
        up = ops::relu_backward(x, up);
        break;
      case PlanStep::MaxPool:
        up = ops::pool2d_backward(x, ops::PoolMode::Max, step.window_h,
                                  step.window_w, step.stride, step.stride, up);
        break;
      case PlanStep::AvgPool:
        up = ops::pool2d_backward(x, ops::PoolMode::Average, step.window_h,
                                  step.window_w, step.stride, step.stride, up);
        break;
      case PlanStep::Flatten:
        up = Tensor::from(x.n(), x.c(), x.h(), x.w(), up.raw());
        break;
      case PlanStep::FullyConnected: {
        auto g = ops::fully_connected_backward(x, weights.params[step.param].w, up);
        grads.params[step.param].w = std::move(g.weight_grad);
        if (step.has_bias)
          grads.params[step.param].bias = std::move(g.bias_grad);
        up = std::move(g.input_grad);
        break;
      }
    }
  }
  return grads;
}

std::vector<float> apply_head(const ModelSpec& spec,
                              std::span<const float> logits_row) {
  if (spec.head == HeadKind::SoftmaxK) return ops::softmax(logits_row);
  if (logits_row.size() != 1)
    throw DimensionError("sigmoid head expects one logit, got " +
                         std::to_string(logits_row.size()));
  const float p = ops::sigmoid(logits_row[0]);
  return {1.0f - p, p};
}

int argmax_lowest(std::span<const float> values) {
  if (values.empty()) throw DimensionError("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[static_cast<size_t>(i)] > values[static_cast<size_t>(best)])
      best = i;
  return best;
}

Prediction predict(const ModelSpec& spec, const ModelWeights& weights,
                   const Tensor& image) {
  if (image.n() != 1)
    throw DimensionError("predict expects a single-image batch, got N=" +
                         std::to_string(image.n()));
  const Tensor logits = forward(spec, weights, image);
  std::span<const float> row(logits.data(), logits.size());
  Prediction out;
  out.probs = apply_head(spec, row);
  out.class_index = argmax_lowest(out.probs);
  out.label = spec.class_labels[static_cast<size_t>(out.class_index)];
  return out;
}

ModelCost count_cost(const ModelSpec& spec) {
  const Plan plan = compile(spec);
  ModelCost cost;
  // Aggregate plan steps back to spec-layer granularity via the "lN" prefix.
  std::vector<LayerCost> rows(spec.layers.size());
  for (size_t i = 0; i < spec.layers.size(); ++i)
    rows[i].layer = layer_tag(static_cast<int>(i), spec.layers[i].kind);

  for (const PlanStep& step : plan.steps) {
    const size_t dot = step.name.find('.');
    const int layer = std::stoi(step.name.substr(1, dot - 1));
    LayerCost& row = rows[static_cast<size_t>(layer)];
    const long long spatial = static_cast<long long>(step.out_h) * step.out_w;
    switch (step.op) {
      case PlanStep::Conv: {
        const long long w = static_cast<long long>(step.kernel) * step.kernel *
                            step.in_c * step.out_c;
        row.params += w + (step.has_bias ? step.out_c : 0);
        row.macs += w * spatial;
        break;
      }
      case PlanStep::Depthwise: {
        const long long w = static_cast<long long>(step.kernel) * step.kernel *
                            step.in_c;
        row.params += w + (step.has_bias ? step.in_c : 0);
        row.macs += w * spatial;
        break;
      }
      case PlanStep::Pointwise: {
        const long long w = static_cast<long long>(step.in_c) * step.out_c;
        row.params += w + (step.has_bias ? step.out_c : 0);
        row.macs += w * spatial;
        break;
      }
      case PlanStep::BatchNorm:
        row.params += 2LL * step.out_c;  // gamma + beta
        break;
      case PlanStep::FullyConnected: {
        const long long w = static_cast<long long>(step.in_c) * step.out_c;
        row.params += w + (step.has_bias ? step.out_c : 0);
        row.macs += w;
        break;
      }
      default:
        break;
    }
  }
  for (LayerCost& row : rows) {
    cost.total_params += row.params;
    cost.total_macs += row.macs;
  }
  cost.layers = std::move(rows);
  return cost;
}

namespace {

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ',';
    out += labels[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string layer_to_value(const LayerSpec& l) {
  std::ostringstream s;
  switch (l.kind) {
    case LayerKind::StandardConv:
      s << "conv out=" << l.out_channels << " k=" << l.kernel
        << " s=" << l.stride << " p=" << l.padding
        << " bias=" << (l.has_bias ? 1 : 0) << " bn=" << (l.has_bn ? 1 : 0)
        << " act=" << (l.activation == Activation::Relu ? "relu" : "none");
      break;
    case LayerKind::DepthwiseSeparable:
      s << "dsblock out=" << l.out_channels << " k=" << l.kernel
        << " s=" << l.stride << " p=" << l.padding
        << " bias=" << (l.has_bias ? 1 : 0) << " bn=" << (l.has_bn ? 1 : 0)
        << " act=" << (l.activation == Activation::Relu ? "relu" : "none");
      break;
    case LayerKind::MaxPool:
      s << "maxpool k=" << l.window_h << " s=" << l.stride;
      break;
    case LayerKind::AvgPool:
      if (l.window_h == l.window_w)
        s << "avgpool k=" << l.window_h << " s=" << l.stride;
      else
        s << "avgpool kh=" << l.window_h << " kw=" << l.window_w
          << " s=" << l.stride;
      break;
    case LayerKind::Flatten:
      s << "flatten";
      break;
    case LayerKind::FullyConnected:
      s << "fc units=" << l.units << " bias=" << (l.has_bias ? 1 : 0);
      break;
  }
  return s.str();
}

LayerSpec layer_from_value(const std::string& value) {
  std::istringstream in(value);
  std::string kind;
  in >> kind;
  LayerSpec l;
  if (kind == "conv") l.kind = LayerKind::StandardConv;
  else if (kind == "dsblock") l.kind = LayerKind::DepthwiseSeparable;
  else if (kind == "maxpool") l.kind = LayerKind::MaxPool;
  else if (kind == "avgpool") l.kind = LayerKind::AvgPool;
  else if (kind == "flatten") l.kind = LayerKind::Flatten;
  else if (kind == "fc") l.kind = LayerKind::FullyConnected;
  else throw ParseError("layer: unknown kind \"" + kind + "\"");

  if (l.kind == LayerKind::DepthwiseSeparable) {
    l.has_bn = true;
    l.activation = Activation::Relu;
  }
  std::string token;
  while (in >> token) {
    const size_t eq = token.find('=');
    if (eq == std::string::npos)
      throw ParseError("layer: expected key=value, got \"" + token + "\"");
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "out") l.out_channels = static_cast<int>(parse_int(val, "layer out"));
    else if (key == "k") l.kernel = l.window_h = l.window_w =
        static_cast<int>(parse_int(val, "layer k"));
    else if (key == "kh") l.window_h = static_cast<int>(parse_int(val, "layer kh"));
    else if (key == "kw") l.window_w = static_cast<int>(parse_int(val, "layer kw"));
    else if (key == "s") l.stride = static_cast<int>(parse_int(val, "layer s"));
    else if (key == "p") l.padding = static_cast<int>(parse_int(val, "layer p"));
    else if (key == "units") l.units = static_cast<int>(parse_int(val, "layer units"));
    else if (key == "bias") l.has_bias = parse_int(val, "layer bias") != 0;
    else if (key == "bn") l.has_bn = parse_int(val, "layer bn") != 0;
    else if (key == "act") {
      if (val == "relu") l.activation = Activation::Relu;
      else if (val == "none") l.activation = Activation::None;
      else throw ParseError("layer: unknown activation \"" + val + "\"");
    } else {
      throw ParseError("layer: unknown key \"" + key + "\"");
    }
  }
  return l;
}

}  // namespace

std::string model_to_config(const ModelSpec& spec) {
  ConfigDoc doc;
  doc.add("input_c", std::to_string(spec.input_c));
  doc.add("input_h", std::to_string(spec.input_h));
  doc.add("input_w", std::to_string(spec.input_w));
  doc.add("width_multiplier", format_double(spec.width_multiplier));
  doc.add("head", spec.head == HeadKind::SoftmaxK ? "softmax" : "sigmoid");
  doc.add("labels", join_labels(spec.class_labels));
  for (const LayerSpec& l : spec.layers) doc.add("layer", layer_to_value(l));
  return doc.serialize();
}

std::string model_to_config(const ModelSpec& spec, uint64_t seed) {
  std::string text = model_to_config(spec);
  text += "seed = " + std::to_string(seed) + "\n";
  return text;
}

ModelSpec model_from_config(const ConfigDoc& doc) {
  ModelSpec spec;
  spec.input_c = static_cast<int>(doc.get_int("input_c", 3));
  spec.input_h = static_cast<int>(doc.get_int("input_h", 224));
  spec.input_w = static_cast<int>(doc.get_int("input_w", 224));
  spec.width_multiplier = static_cast<float>(doc.get_double("width_multiplier", 1.0));
  const std::string head = doc.get_string("head", "softmax");
  if (head == "softmax") spec.head = HeadKind::SoftmaxK;
  else if (head == "sigmoid") spec.head = HeadKind::SigmoidBinary;
  else throw ParseError("model config: unknown head \"" + head + "\"");
  const std::string* labels = doc.find("labels");
  if (!labels || labels->empty())
    throw ConfigError("model config: labels key is required");
  spec.class_labels = split_list(*labels, ',');
  for (const std::string& v : doc.all("layer"))
    spec.layers.push_back(layer_from_value(v));
  return spec;
}

ModelSpec model_from_config_text(const std::string& text) {
  return model_from_config(ConfigDoc::parse(text));
}

}  // namespace vigil
