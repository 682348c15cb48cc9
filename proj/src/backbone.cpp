#include "spotter/backbone.hpp"

#include <string>

#include "spotter/errors.hpp"

namespace spotter::backbone {

namespace F = torch::nn::functional;
using torch::indexing::Slice;

void BackboneConfig::validate() const {
  if (type != "swin" && type != "resnet") throw ConfigError("backbone.type must be swin or resnet");
  if (patch_size != 4) throw ConfigError("backbone.patch_size must be 4 for a stride-4 first level");
  if (depths.size() != 4 || heads.size() != 4) throw ConfigError("backbone needs 4 depths and 4 heads");
  if (window < 1) throw ConfigError("backbone.window must be positive");
  if (embed_dim < 1 || d_model < 1) throw ConfigError("backbone widths must be positive");
  if (dc_dilation < 1) throw ConfigError("backbone.dc_dilation must be positive");
  for (int i = 0; i < 4; ++i) {
    if (depths[i] < 1) throw ConfigError("backbone.depths entries must be >= 1");
    if (heads[i] < 1 || stage_width(i) % heads[i] != 0) {
      throw ConfigError("backbone: heads[" + std::to_string(i) + "]=" + std::to_string(heads[i]) +
                        " does not divide stage width " + std::to_string(stage_width(i)));
    }
  }
}

namespace {

torch::Tensor window_partition(const torch::Tensor& x, int64_t w) {
  const auto b = x.size(0), h = x.size(1), wd = x.size(2), c = x.size(3);
  return x.view({b, h / w, w, wd / w, w, c}).permute({0, 1, 3, 2, 4, 5}).reshape({-1, w * w, c});
}

torch::Tensor window_merge(const torch::Tensor& windows, int64_t w, int64_t b, int64_t h, int64_t wd) {
  const auto c = windows.size(-1);
  return windows.view({b, h / w, wd / w, w, w, c}).permute({0, 1, 3, 2, 4, 5}).reshape({b, h, wd, c});
}

// Additive mask keeping attention within regions that were contiguous before the cyclic shift.
torch::Tensor shifted_window_mask(int64_t h, int64_t w, int64_t win, int64_t shift,
                                  const torch::TensorOptions& opts) {
  auto region = torch::zeros({1, h, w, 1}, opts);
  const std::vector<std::pair<int64_t, int64_t>> spans = {{0, -win}, {-win, -shift}, {-shift, 0}};
  auto resolve = [](int64_t v, int64_t n) { return v < 0 ? n + v : v; };
  int64_t label = 0;
  for (auto [h0, h1] : spans) {
    for (auto [w0, w1] : spans) {
      const auto hs = resolve(h0, h), he = h1 == 0 ? h : resolve(h1, h);
      const auto ws = resolve(w0, w), we = w1 == 0 ? w : resolve(w1, w);
      if (he > hs && we > ws) {
        region.index_put_({Slice(), Slice(hs, he), Slice(ws, we), Slice()}, double(label));
      }
      ++label;
    }
  }
  auto ids = window_partition(region, win).squeeze(-1);  // [nW, w*w]
  auto diff = ids.unsqueeze(1) - ids.unsqueeze(2);
  return torch::where(diff != 0, torch::full_like(diff, -100.0), torch::zeros_like(diff));
}

torch::Tensor pad_for_conv(const torch::Tensor& x, int64_t pad) {
  // Reflection needs pad < size; tiny maps fall back to edge replication.
  const bool reflect_ok = x.size(2) > pad && x.size(3) > pad;
  auto opts = F::PadFuncOptions({pad, pad, pad, pad});
  if (reflect_ok) {
    opts.mode(torch::kReflect);
  } else {
    opts.mode(torch::kReplicate);
  }
  return F::pad(x, opts);
}

}  // namespace

WindowAttentionImpl::WindowAttentionImpl(int64_t dim, int64_t heads, int64_t window)
    : window_(window), heads_(heads) {
  attn = register_module("attn", layers::Attention(dim, heads));
  bias_table = register_parameter(
      "bias_table", torch::randn({(2 * window - 1) * (2 * window - 1), heads}) * 0.02);
  auto coords = torch::stack(torch::meshgrid({torch::arange(window), torch::arange(window)}, "ij"))
                    .flatten(1);  // [2, w*w]
  auto rel = (coords.unsqueeze(2) - coords.unsqueeze(1)).permute({1, 2, 0}) + (window - 1);
  rel_index_ = register_buffer("rel_index", (rel.select(2, 0) * (2 * window - 1) + rel.select(2, 1)).flatten());
}

torch::Tensor WindowAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& mask, int64_t batch) {
  const auto n = window_ * window_;
  auto bias = bias_table.index_select(0, rel_index_.to(torch::kLong)).view({n, n, heads_}).permute({2, 0, 1}).unsqueeze(0);
  if (mask.defined()) {
    const auto nw = mask.size(0);
    bias = (bias + mask.unsqueeze(1)).unsqueeze(0).expand({batch, nw, heads_, n, n}).reshape({batch * nw, heads_, n, n});
  }
  return attn(x, x, x, bias);
}

SwinBlockImpl::SwinBlockImpl(int64_t dim, int64_t heads, int64_t window, int64_t shift)
    : window_(window), shift_(shift) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", WindowAttention(dim, heads, window));
  mlp = register_module("mlp", layers::Mlp(dim, dim * 4));
}

torch::Tensor SwinBlockImpl::forward(const torch::Tensor& x) {
  const auto b = x.size(0), h = x.size(1), w = x.size(2);
  const auto pad_h = (window_ - h % window_) % window_;
  const auto pad_w = (window_ - w % window_) % window_;
  auto y = norm1(x);
  if (pad_h || pad_w) y = F::pad(y, F::PadFuncOptions({0, 0, 0, pad_w, 0, pad_h}));
  const auto hp = h + pad_h, wp = w + pad_w;
  // A map that fits in one window has nothing to shift across.
  const bool shifted = shift_ > 0 && (hp > window_ || wp > window_);
  torch::Tensor mask;
  if (shifted) {
    y = torch::roll(y, {-shift_, -shift_}, {1, 2});
    mask = shifted_window_mask(hp, wp, window_, shift_, y.options());
  }
  auto windows = attn(window_partition(y, window_), mask, b);
  y = window_merge(windows, window_, b, hp, wp);
  if (shifted) y = torch::roll(y, {shift_, shift_}, {1, 2});
  if (pad_h || pad_w) y = y.index({Slice(), Slice(0, h), Slice(0, w)}).contiguous();
  auto out = x + y;
  return out + mlp(norm2(out));
}

SwinStageImpl::SwinStageImpl(int64_t dim, int64_t depth, int64_t heads, int64_t window) {
  for (int64_t i = 0; i < depth; ++i) {
    blocks->push_back(SwinBlock(dim, heads, window, i % 2 == 0 ? 0 : window / 2));
  }
  register_module("blocks", blocks);
}

torch::Tensor SwinStageImpl::forward(torch::Tensor x) {
  for (auto& blk : *blocks) x = blk->as<SwinBlock>()->forward(x);
  return x;
}

PatchMergingImpl::PatchMergingImpl(int64_t dim) {
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({4 * dim})));
  reduction = register_module("reduction", torch::nn::Linear(torch::nn::LinearOptions(4 * dim, 2 * dim).bias(false)));
}

torch::Tensor PatchMergingImpl::forward(const torch::Tensor& x) {
  auto x0 = x.index({Slice(), Slice(0, torch::indexing::None, 2), Slice(0, torch::indexing::None, 2)});
  auto x1 = x.index({Slice(), Slice(1, torch::indexing::None, 2), Slice(0, torch::indexing::None, 2)});
  auto x2 = x.index({Slice(), Slice(0, torch::indexing::None, 2), Slice(1, torch::indexing::None, 2)});
  auto x3 = x.index({Slice(), Slice(1, torch::indexing::None, 2), Slice(1, torch::indexing::None, 2)});
  return reduction(norm(torch::cat({x0, x1, x2, x3}, -1)));
}

DcUnitImpl::DcUnitImpl(int64_t channels, int64_t dilation) : dilation_(dilation) {
  auto dopts = torch::nn::Conv2dOptions(channels, channels, 3).dilation(dilation).padding(0);
  dilated1 = register_module("dilated1", torch::nn::Conv2d(dopts));
  dilated2 = register_module("dilated2", torch::nn::Conv2d(dopts));
  pointwise = register_module("pointwise", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 1)));
  layers::zero_conv(pointwise);
}

torch::Tensor DcUnitImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(dilated1(pad_for_conv(x, dilation_)));
  h = torch::relu(dilated2(pad_for_conv(h, dilation_)));
  return x + pointwise(h);
}

SwinTrunkImpl::SwinTrunkImpl(const BackboneConfig& cfg) {
  patch_embed = register_module(
      "patch_embed",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(3, cfg.embed_dim, cfg.patch_size).stride(cfg.patch_size)));
  embed_norm = register_module("embed_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.embed_dim})));
  for (int i = 0; i < 4; ++i) {
    const int64_t width = cfg.stage_width(i);
    stages->push_back(SwinStage(width, cfg.depths[i], cfg.heads[i], cfg.window));
    out_norms->push_back(torch::nn::LayerNorm(torch::nn::LayerNormOptions({width})));
    if (i < 3) merges->push_back(PatchMerging(width));
  }
  register_module("stages", stages);
  register_module("merges", merges);
  register_module("out_norms", out_norms);
}

std::vector<torch::Tensor> SwinTrunkImpl::forward(const torch::Tensor& image) {
  auto x = embed_norm(patch_embed(image).permute({0, 2, 3, 1}));
  std::vector<torch::Tensor> outs;
  for (int i = 0; i < 4; ++i) {
    x = stages[i]->as<SwinStage>()->forward(x);
    outs.push_back(out_norms[i]->as<torch::nn::LayerNorm>()->forward(x).permute({0, 3, 1, 2}).contiguous());
    if (i < 3) x = merges[i]->as<PatchMerging>()->forward(x);
  }
  return outs;
}

namespace {

torch::nn::GroupNorm group_norm(int64_t channels) {
  return torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::min<int64_t>(8, channels), channels));
}

void append_conv_gn_relu(torch::nn::Sequential& seq, int64_t in, int64_t out, int64_t stride) {
  seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)));
  seq->push_back(group_norm(out));
  seq->push_back(torch::nn::ReLU());
}

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int64_t in, int64_t out, int64_t stride) {
    torch::nn::Sequential seq;
    append_conv_gn_relu(seq, in, out, stride);
    seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1).bias(false)));
    seq->push_back(group_norm(out));
    body = register_module("body", seq);
    if (stride != 1 || in != out) {
      shortcut = register_module(
          "shortcut", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)));
    }
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto skip = shortcut ? shortcut(x) : x;
    return torch::relu(body->forward(x) + skip);
  }
  torch::nn::Sequential body{nullptr};
  torch::nn::Conv2d shortcut{nullptr};
};
TORCH_MODULE(BasicBlock);

}  // namespace

ResNetTrunkImpl::ResNetTrunkImpl(const BackboneConfig& cfg) {
  torch::nn::Sequential seq;
  append_conv_gn_relu(seq, 3, cfg.embed_dim / 2, 2);
  append_conv_gn_relu(seq, cfg.embed_dim / 2, cfg.embed_dim, 2);
  stem = register_module("stem", seq);
  for (int i = 0; i < 4; ++i) {
    torch::nn::Sequential stage;
    const int64_t in = i == 0 ? cfg.embed_dim : cfg.stage_width(i - 1);
    stage->push_back(BasicBlock(in, cfg.stage_width(i), i == 0 ? 1 : 2));
    for (int d = 1; d < cfg.depths[i]; ++d) stage->push_back(BasicBlock(cfg.stage_width(i), cfg.stage_width(i), 1));
    stages->push_back(stage);
  }
  register_module("stages", stages);
}

std::vector<torch::Tensor> ResNetTrunkImpl::forward(const torch::Tensor& image) {
  auto x = stem->forward(image);
  std::vector<torch::Tensor> outs;
  for (auto& s : *stages) {
    x = s->as<torch::nn::Sequential>()->forward(x);
    outs.push_back(x);
  }
  return outs;
}

FpnImpl::FpnImpl(const std::vector<int64_t>& in_channels, int64_t d_model) {
  for (auto c : in_channels) {
    laterals->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(c, d_model, 1)));
    outputs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(d_model, d_model, 3).padding(1)));
  }
  register_module("laterals", laterals);
  register_module("outputs", outputs);
}

std::vector<torch::Tensor> FpnImpl::forward(const std::vector<torch::Tensor>& feats) {
  const auto n = feats.size();
  std::vector<torch::Tensor> merged(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto i = n - 1 - j;
    auto lat = laterals[i]->as<torch::nn::Conv2d>()->forward(feats[i]);
    if (j > 0) {
      lat = lat + F::interpolate(merged[i + 1], F::InterpolateFuncOptions()
                                                    .size(std::vector<int64_t>{lat.size(2), lat.size(3)})
                                                    .mode(torch::kNearest));
    }
    merged[i] = lat;
  }
  std::vector<torch::Tensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(outputs[i]->as<torch::nn::Conv2d>()->forward(merged[i]));
  return out;
}

BackboneImpl::BackboneImpl(const BackboneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.type == "swin") {
    swin = register_module("swin", SwinTrunk(cfg_));
  } else {
    resnet = register_module("resnet", ResNetTrunk(cfg_));
  }
  std::vector<int64_t> widths;
  for (int i = 0; i < 4; ++i) {
    widths.push_back(cfg_.stage_width(i));
    if (cfg_.dilated) dc_units->push_back(DcUnit(cfg_.stage_width(i), cfg_.dc_dilation));
  }
  register_module("dc_units", dc_units);
  fpn = register_module("fpn", Fpn(widths, cfg_.d_model));
}

FeaturePyramid BackboneImpl::forward(const torch::Tensor& image) {
  TORCH_CHECK(image.dim() == 4 && image.size(1) == 3, "backbone: image must be [B,3,H,W]");
  const auto h = image.size(2), w = image.size(3);
  if (h < 32 || w < 32) {
    throw ConfigError("backbone: image " + std::to_string(h) + "x" + std::to_string(w) +
                      " is smaller than the 32-pixel minimum");
  }
  const auto pad_h = (32 - h % 32) % 32, pad_w = (32 - w % 32) % 32;
  auto x = (pad_h || pad_w) ? F::pad(image, F::PadFuncOptions({0, pad_w, 0, pad_h})) : image;
  auto feats = swin ? swin->forward(x) : resnet->forward(x);
  if (cfg_.dilated) {
    for (int i = 0; i < 4; ++i) feats[i] = dc_units[i]->as<DcUnit>()->forward(feats[i]);
  }
  return {fpn->forward(feats), int(h), int(w)};
}

}  // namespace spotter::backbone
