// Copyright 2026 The modecompose Authors.
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

#include "modecompose/denoiser.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "modecompose/container.h"
#include "modecompose/random.h"

namespace modecompose {
namespace {

Matrix Silu(const Matrix& z) {
  return (z.array() / (1.0 + (-z.array()).exp())).matrix();
}

Matrix SiluGrad(const Matrix& z) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
  return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

Eigen::Map<Matrix> SlotView(std::vector<double>& flat, const ParameterSet::Slot& s) {
  return Eigen::Map<Matrix>(flat.data() + s.offset, s.rows, s.cols);
}

void AddParam(ParameterSet& p, const std::string& name, int rows, int cols) { p.Add(name, rows, cols); }

ParameterSet LayoutFor(const DenoiserArch& a) {
  ParameterSet p;
  int in = a.dim + a.time_features;
  for (int l = 0; l <= a.depth; ++l) {
    const int out = l < a.depth ? a.width : a.dim;
    AddParam(p, "layer" + std::to_string(l) + ".weight", out, in);
    AddParam(p, "layer" + std::to_string(l) + ".bias", 1, out);
    in = out;
  }
  AddParam(p, "class_embedding", a.num_classes + 1, a.width);
  return p;
}

void ValidateArch(const DenoiserArch& a) {
  Require(a.dim > 0, "denoiser: dim must be positive");
  Require(a.num_classes >= 0, "denoiser: negative class count");
  Require(a.width > 0 && a.depth >= 1, "denoiser: need width > 0 and depth >= 1");
  Require(a.time_features > 0 && a.time_features % 2 == 0, "denoiser: time_features must be even");
}

}  // namespace

ToyDenoiser::ToyDenoiser(DenoiserArch arch, NoiseSchedule schedule, uint64_t init_seed)
    : arch_(arch), schedule_(std::move(schedule)) {
  ValidateArch(arch_);
  params_ = LayoutFor(arch_);
  IndexSlots();
  Rng rng = MakeRng(init_seed, {0x1417});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l <= arch_.depth; ++l) {
    auto w = params_.Map(weight_slots_[l]);
    const double std_w = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (int i = 0; i < w.size(); ++i) w.data()[i] = std_w * normal(rng);
  }
  auto e = params_.Map(embedding_slot_);
  for (int i = 0; i < e.size(); ++i) e.data()[i] = 0.1 * normal(rng);
}

ToyDenoiser::ToyDenoiser(DenoiserArch arch, NoiseSchedule schedule, ParameterSet params)
    : arch_(arch), schedule_(std::move(schedule)), params_(std::move(params)) {
  ValidateArch(arch_);
  const ParameterSet expected = LayoutFor(arch_);
  Require(expected.slots().size() == params_.slots().size(), "denoiser: parameter layout mismatch");
  for (size_t i = 0; i < expected.slots().size(); ++i) {
    const auto& a = expected.slots()[i];
    const int j = params_.Find(a.name);
    Require(j >= 0, "denoiser: missing parameter " + a.name);
    const auto& b = params_.slots()[j];
    Require(a.rows == b.rows && a.cols == b.cols, "denoiser: shape mismatch for " + a.name);
  }
  IndexSlots();
}

void ToyDenoiser::IndexSlots() {
  weight_slots_.clear();
  bias_slots_.clear();
  for (int l = 0; l <= arch_.depth; ++l) {
    weight_slots_.push_back(params_.Find("layer" + std::to_string(l) + ".weight"));
    bias_slots_.push_back(params_.Find("layer" + std::to_string(l) + ".bias"));
  }
  embedding_slot_ = params_.Find("class_embedding");
}

std::vector<std::pair<int, int>> ToyDenoiser::LinearShapes() const {
  std::vector<std::pair<int, int>> shapes;
  for (int l = 0; l <= arch_.depth; ++l) {
    const auto& s = params_.slots()[weight_slots_[l]];
    shapes.emplace_back(s.rows, s.cols);
  }
  return shapes;
}

int ToyDenoiser::EmbeddingRowFor(const Conditioning& c) const {
  switch (c.kind()) {
    case Conditioning::Kind::kNull:
      return null_row();
    case Conditioning::Kind::kClass:
      if (c.class_id() < 0 || c.class_id() >= arch_.num_classes) {
        throw std::invalid_argument("denoiser: unknown class id " + std::to_string(c.class_id()));
      }
      return c.class_id();
    case Conditioning::Kind::kNewConcept:
      break;
  }
  throw std::invalid_argument("denoiser: the base model has no new-concept embedding");
}

Matrix ToyDenoiser::EmbeddingRows(std::span<const int> rows) const {
  const auto table = params_.Map(embedding_slot_);
  Matrix out(rows.size(), arch_.width);
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = table.row(rows[i]);
  return out;
}

Matrix ToyDenoiser::TimeFeatures(std::span<const int> t) const {
  const int half = arch_.time_features / 2;
  Matrix f(t.size(), arch_.time_features);
  for (size_t i = 0; i < t.size(); ++i) {
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      f(i, k) = std::sin(t[i] * freq);
      f(i, half + k) = std::cos(t[i] * freq);
    }
  }
  return f;
}

Matrix ToyDenoiser::EpsBatch(const Matrix& xt, int t, const Conditioning& c) const {
  schedule_.CheckTimestep(t);
  const std::vector<int> ts(xt.rows(), t);
  const std::vector<int> rows(xt.rows(), EmbeddingRowFor(c));
  return Forward(xt, ts, EmbeddingRows(rows), nullptr, nullptr);
}

std::pair<double, double> ToyDenoiser::HeadGains(int t) const {
  const double sab = schedule_.sqrt_alpha_bar(t);
  const double s1m = schedule_.sqrt_one_minus_alpha_bar(t);
  const double c = sab / s1m;
  const double lambda = arch_.x0_gain_cap > 0.0 ? std::min(1.0, arch_.x0_gain_cap / c) : 1.0;
  return {lambda / s1m, lambda * c};
}

Matrix ToyDenoiser::Forward(const Matrix& xt, std::span<const int> t, const Matrix& cond_embed,
                            const LoraAdapter* lora, ForwardCache* cache) const {
  const Eigen::Index n = xt.rows();
  Require(xt.cols() == arch_.dim, "denoiser: input dimension mismatch");
  Require(static_cast<Eigen::Index>(t.size()) == n, "denoiser: one timestep per row required");
  Require(cond_embed.rows() == n && cond_embed.cols() == arch_.width,
          "denoiser: conditioning embedding shape mismatch");
  if (lora) {
    Require(lora->num_layers() == num_linear_layers(), "denoiser: adapter layer count mismatch");
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre_act.clear();
    cache->lora_hidden.clear();
    cache->t.assign(t.begin(), t.end());
  }

  Matrix h(n, arch_.dim + arch_.time_features);
  h.leftCols(arch_.dim) = xt;
  h.rightCols(arch_.time_features) = TimeFeatures(t);

  for (int l = 0; l <= arch_.depth; ++l) {
    const auto w = params_.Map(weight_slots_[l]);
    const auto b = params_.Map(bias_slots_[l]);
    Matrix z(n, w.rows());
    z.noalias() = h * w.transpose();
    z.rowwise() += b.row(0);
    if (lora) {
      Require(lora->A(l).cols() == w.cols() && lora->B(l).rows() == w.rows(),
              "denoiser: adapter shape mismatch at layer " + std::to_string(l));
      Matrix ha(n, lora->rank());
      ha.noalias() = h * lora->A(l).transpose();
      z.noalias() += lora->scale() * (ha * lora->B(l).transpose());
      if (cache) cache->lora_hidden.push_back(std::move(ha));
    }
    if (l == 0) z += cond_embed;
    if (cache) cache->inputs.push_back(h);
    if (l == arch_.depth) {
      if (arch_.head == OutputHead::kEpsilon) return z;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto [a, b] = HeadGains(t[i]);
        z.row(i) = a * xt.row(i) - b * z.row(i);
      }
      return z;
    }
    h = Silu(z);
    if (cache) cache->pre_act.push_back(std::move(z));
  }
  return h;  // unreachable
}

void ToyDenoiser::Backward(const ForwardCache& cache, const Matrix& d_out, const LoraAdapter* lora,
                           std::vector<double>* base_grad, std::vector<double>* lora_grad,
                           Matrix* d_cond_embed) const {
  Require(static_cast<int>(cache.inputs.size()) == num_linear_layers(), "denoiser: stale cache");
  if (base_grad) Require(base_grad->size() == params_.size(), "denoiser: base grad size mismatch");
  if (lora_grad) {
    Require(lora != nullptr, "denoiser: lora gradient requested without an adapter");
    Require(lora_grad->size() == lora->params().size(), "denoiser: lora grad size mismatch");
  }
  Matrix g = d_out;
  if (arch_.head == OutputHead::kX0) {
    Require(static_cast<Eigen::Index>(cache.t.size()) == d_out.rows(), "denoiser: stale cache");
    for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) *= -HeadGains(cache.t[i]).second;
  }
  for (int l = arch_.depth; l >= 0; --l) {
    const Matrix& in = cache.inputs[l];
    const auto w = params_.Map(weight_slots_[l]);
    if (base_grad) {
      SlotView(*base_grad, params_.slots()[weight_slots_[l]]).noalias() += g.transpose() * in;
      SlotView(*base_grad, params_.slots()[bias_slots_[l]]).row(0) += g.colwise().sum();
    }
    Matrix gb;
    if (lora) {
      gb.noalias() = g * lora->B(l);
      if (lora_grad) {
        const double s = lora->scale();
        SlotView(*lora_grad, lora->params().slots()[lora->b_slot(l)]).noalias() +=
            s * (g.transpose() * cache.lora_hidden[l]);
        SlotView(*lora_grad, lora->params().slots()[lora->a_slot(l)]).noalias() +=
            s * (gb.transpose() * in);
      }
    }
    if (l == 0) {
      if (d_cond_embed) *d_cond_embed = g;
      break;
    }
    Matrix din(g.rows(), w.cols());
    din.noalias() = g * w;
    if (lora) din.noalias() += lora->scale() * (gb * lora->A(l));
    g = (din.array() * SiluGrad(cache.pre_act[l - 1]).array()).matrix();
  }
}

void ToyDenoiser::Save(const std::filesystem::path& path) const {
  Container c;
  c.kind = "backbone";
  c.meta = {{"arch",
             {{"dim", arch_.dim},
              {"num_classes", arch_.num_classes},
              {"width", arch_.width},
              {"depth", arch_.depth},
              {"time_features", arch_.time_features}}},
            {"activation", "silu"},
            {"parameterization", arch_.head == OutputHead::kX0 ? "x0" : "epsilon"},
            {"x0_gain_cap", arch_.x0_gain_cap},
            {"parameter_count", params_.size()}};
  c.Add("schedule.beta", schedule_.betas());
  for (const auto& s : params_.slots()) {
    c.Add(s.name, params_.Map(params_.Find(s.name)));
  }
  WriteContainer(path, c);
}

ToyDenoiser ToyDenoiser::Load(const std::filesystem::path& path) {
  const Container c = ReadContainer(path);
  if (c.kind != "backbone") throw std::runtime_error(path.string() + ": not a backbone checkpoint");
  const auto& a = c.meta.at("arch");
  const std::string param = c.meta.value("parameterization", "epsilon");
  if (param != "epsilon" && param != "x0") {
    throw std::runtime_error(path.string() + ": unknown parameterization " + param);
  }
  DenoiserArch arch{a.at("dim").get<int>(),
                    a.at("num_classes").get<int>(),
                    a.at("width").get<int>(),
                    a.at("depth").get<int>(),
                    a.at("time_features").get<int>(),
                    param == "x0" ? OutputHead::kX0 : OutputHead::kEpsilon,
                    c.meta.value("x0_gain_cap", 0.0)};
  ParameterSet params;
  for (const NamedTensor& t : c.tensors) {
    if (t.name == "schedule.beta") continue;
    const int slot = params.Add(t.name, t.rows, t.cols);
    std::copy(t.data.begin(), t.data.end(), params.Map(slot).data());
  }
  return ToyDenoiser(arch, NoiseSchedule::FromBetas(c.Get("schedule.beta").data), std::move(params));
}

TrainResult TrainBackbone(ToyDenoiser& model, const LabeledDataset& data, const TrainConfig& cfg,
                          const std::function<void(std::span<const int>)>& on_batch) {
  const int n = static_cast<int>(data.x.rows());
  const int d = model.dim();
  Require(n > 0, "train_backbone: empty dataset");
  Require(data.x.cols() == d, "train_backbone: dataset dimension mismatch");
  Require(static_cast<int>(data.labels.size()) == n, "train_backbone: one label per row required");
  for (int y : data.labels) {
    Require(y >= 0 && y < model.num_classes(), "train_backbone: label outside trained class set");
  }
  Require(cfg.batch_size > 0 && cfg.epochs > 0, "train_backbone: batch and epochs must be positive");
  Require(cfg.null_dropout >= 0.0 && cfg.null_dropout < 1.0, "train_backbone: dropout in [0, 1)");

  const NoiseSchedule& s = model.schedule();
  Rng rng = MakeRng(cfg.seed, {0x7a1});
  Adam adam(model.params().size(), cfg.adam);
  std::vector<double> grad(model.params().size());
  const auto& embed_slot = model.params().slots()[model.embedding_slot()];

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long loss_count = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int nb = std::min(cfg.batch_size, n - start);
      const std::span<const int> rows(order.data() + start, nb);
      if (on_batch) on_batch(rows);

      std::vector<int> ts(nb), embed_rows(nb);
      Matrix eps = StandardNormal(nb, d, rng);
      Matrix xt(nb, d);
      for (int i = 0; i < nb; ++i) {
        ts[i] = UniformInt(1, s.num_steps(), rng);
        embed_rows[i] = Uniform01(rng) < cfg.null_dropout ? model.null_row() : data.labels[rows[i]];
        xt.row(i) = s.sqrt_alpha_bar(ts[i]) * data.x.row(rows[i]) +
                    s.sqrt_one_minus_alpha_bar(ts[i]) * eps.row(i);
      }
      ForwardCache cache;
      const Matrix out = model.Forward(xt, ts, model.EmbeddingRows(embed_rows), nullptr, &cache);
      const Matrix diff = out - eps;
      const double loss = diff.squaredNorm() / (static_cast<double>(nb) * d);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train_backbone: non-finite loss at epoch " << epoch << ", batch offset " << start;
        throw NumericalError(msg.str());
      }
      loss_sum += loss * nb;
      loss_count += nb;

      std::fill(grad.begin(), grad.end(), 0.0);
      Matrix d_cond;
      model.Backward(cache, (2.0 / (static_cast<double>(nb) * d)) * diff, nullptr, &grad, nullptr,
                     &d_cond);
      auto embed_grad = SlotView(grad, embed_slot);
      for (int i = 0; i < nb; ++i) embed_grad.row(embed_rows[i]) += d_cond.row(i);
      ClipGradNorm(grad, cfg.grad_clip);
      adam.Step(model.params().values(), grad);
    }
    result.epoch_loss.push_back(loss_sum / loss_count);
  }
  return result;
}

}  // namespace modecompose
