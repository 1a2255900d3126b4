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

#include "modecompose/distillation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "modecompose/container.h"
#include "modecompose/random.h"

namespace modecompose {
namespace {

Matrix ConditioningRows(const ToyDenoiser& base, const LoraAdapter& adapter,
                        const std::vector<bool>& use_null) {
  const auto table = base.params().Map(base.embedding_slot());
  Matrix rows(use_null.size(), base.arch().width);
  for (size_t i = 0; i < use_null.size(); ++i) {
    if (use_null[i]) {
      rows.row(i) = table.row(base.null_row());
    } else {
      rows.row(i) = adapter.new_embedding().row(0);
    }
  }
  return rows;
}

}  // namespace

AdaptedDenoiser::AdaptedDenoiser(const ToyDenoiser& base, const LoraAdapter& adapter)
    : base_(base), adapter_(adapter) {
  const auto shapes = base.LinearShapes();
  Require(adapter.num_layers() == static_cast<int>(shapes.size()),
          "adapted_eps: adapter layer count mismatch");
  for (int l = 0; l < adapter.num_layers(); ++l) {
    Require(adapter.B(l).rows() == shapes[l].first && adapter.A(l).cols() == shapes[l].second,
            "adapted_eps: adapter shape mismatch at layer " + std::to_string(l));
  }
  Require(adapter.new_embedding().cols() == base.arch().width,
          "adapted_eps: embedding width mismatch");
}

Matrix AdaptedDenoiser::EpsBatch(const Matrix& xt, int t, const Conditioning& c) const {
  base_.schedule().CheckTimestep(t);
  const std::vector<int> ts(xt.rows(), t);
  Matrix embed;
  if (c.kind() == Conditioning::Kind::kNewConcept) {
    embed = adapter_.new_embedding().row(0).replicate(xt.rows(), 1);
  } else {
    const std::vector<int> rows(xt.rows(), base_.EmbeddingRowFor(c));
    embed = base_.EmbeddingRows(rows);
  }
  return base_.Forward(xt, ts, embed, &adapter_, nullptr);
}

void DistillConfig::Validate() const {
  Require(pool_size > 0 && rank > 0 && alpha > 0.0, "distill: pool, rank and alpha must be positive");
  Require(epochs > 0 && batch_size > 0, "distill: epochs and batch size must be positive");
  Require(adam.lr > 0.0, "distill: learning rate must be positive");
  Require(cfg_dropout >= 0.0 && cfg_dropout < 1.0, "distill: dropout must be in [0, 1)");
  Require(embed_init_std > 0.0, "distill: embed_init_std must be positive");
  Require(grad_clip >= 0.0, "distill: grad_clip must be non-negative");
}

LoraAdapter CreateAdapter(const ToyDenoiser& base, const DistillConfig& cfg) {
  Rng rng = MakeRng(cfg.seed, {0x10a});
  return LoraAdapter::Create(base.LinearShapes(), base.arch().width, cfg.rank, cfg.alpha,
                             cfg.embed_init_std, rng);
}

Matrix GeneratePool(const ScoreModel& model, const PoeTeacher& teacher, const GuidanceConfig& cfg,
                    int pool_size) {
  Require(pool_size > 0, "generate_pool: pool size must be positive");
  GuidanceConfig pool_cfg = cfg;
  pool_cfg.n_samples = pool_size;
  pool_cfg.mode = GuidanceMode::kVarianceAware;
  return SampleWithTeacher(model, teacher, pool_cfg);
}

double DistillLossAndGrad(const ToyDenoiser& base, const LoraAdapter& adapter, const Matrix& x0,
                          std::span<const int> t, const Matrix& eps,
                          const std::vector<bool>& use_null, std::vector<double>* grad) {
  const Eigen::Index nb = x0.rows();
  const int d = base.dim();
  const NoiseSchedule& s = base.schedule();
  Matrix xt(nb, d);
  for (Eigen::Index i = 0; i < nb; ++i) {
    xt.row(i) = s.sqrt_alpha_bar(t[i]) * x0.row(i) + s.sqrt_one_minus_alpha_bar(t[i]) * eps.row(i);
  }
  ForwardCache cache;
  const Matrix out =
      base.Forward(xt, t, ConditioningRows(base, adapter, use_null), &adapter, &cache);
  const Matrix diff = out - eps;
  const double denom = static_cast<double>(nb) * d;
  const double loss = diff.squaredNorm() / denom;
  if (grad) {
    grad->assign(adapter.params().size(), 0.0);
    Matrix d_cond;
    base.Backward(cache, (2.0 / denom) * diff, &adapter, nullptr, grad, &d_cond);
    const auto& slot = adapter.params().slots()[adapter.embed_slot()];
    Eigen::Map<Eigen::RowVectorXd> g_embed(grad->data() + slot.offset, slot.cols);
    for (Eigen::Index i = 0; i < nb; ++i) {
      if (!use_null[i]) g_embed += d_cond.row(i);
    }
  }
  return loss;
}

DistillResult Distill(const ToyDenoiser& base, const Matrix& pool, const DistillConfig& cfg) {
  cfg.Validate();
  const int n = static_cast<int>(pool.rows());
  Require(n > 0, "distill: empty pool");
  Require(pool.cols() == base.dim(), "distill: pool dimension mismatch");
  DistillResult result{CreateAdapter(base, cfg), {}};
  LoraAdapter& adapter = result.adapter;
  const NoiseSchedule& s = base.schedule();
  Rng rng = MakeRng(cfg.seed, {0xd15});
  Adam adam(adapter.params().size(), cfg.adam);
  std::vector<double> grad;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int nb = std::min(cfg.batch_size, n - start);
      Matrix x0(nb, base.dim());
      std::vector<int> ts(nb);
      std::vector<bool> use_null(nb);
      for (int i = 0; i < nb; ++i) {
        x0.row(i) = pool.row(order[start + i]);
        ts[i] = UniformInt(1, s.num_steps(), rng);
        use_null[i] = Uniform01(rng) < cfg.cfg_dropout;
      }
      const Matrix eps = StandardNormal(nb, base.dim(), rng);
      const double loss = DistillLossAndGrad(base, adapter, x0, ts, eps, use_null, &grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "distill: non-finite loss at epoch " << epoch << ", batch offset " << start;
        throw NumericalError(msg.str());
      }
      loss_sum += loss * nb;
      if (cfg.grad_clip > 0.0) ClipGradNorm(grad, cfg.grad_clip);
      adam.Step(adapter.params().values(), grad);
    }
    result.epoch_loss.push_back(loss_sum / n);
  }
  return result;
}

Matrix SampleDistilled(const ToyDenoiser& base, const LoraAdapter& adapter, double w,
                       const GuidanceConfig& cfg) {
  const AdaptedDenoiser model(base, adapter);
  return DdimSample(
      [&](const Matrix& xt, int t) { return model.EpsBatch(xt, t, Conditioning::Null()); },
      [&](const Matrix& xt, int t) { return model.EpsBatch(xt, t, Conditioning::NewConcept()); },
      [w](int) { return w; }, base.schedule(), base.dim(), cfg);
}

void SaveAdapter(const std::filesystem::path& path, const LoraAdapter& adapter,
                 const std::string& query_id) {
  Container c;
  c.kind = "adapter";
  c.meta = {{"query_id", query_id},
            {"rank", adapter.rank()},
            {"alpha", adapter.alpha()},
            {"scale", adapter.scale()},
            {"num_layers", adapter.num_layers()}};
  const ParameterSet& p = adapter.params();
  for (size_t i = 0; i < p.slots().size(); ++i) c.Add(p.slots()[i].name, p.Map(static_cast<int>(i)));
  WriteContainer(path, c);
}

LoraAdapter LoadAdapter(const std::filesystem::path& path, std::string* query_id) {
  const Container c = ReadContainer(path);
  if (c.kind != "adapter") throw std::runtime_error(path.string() + ": not an adapter checkpoint");
  ParameterSet params;
  for (const NamedTensor& t : c.tensors) {
    const int slot = params.Add(t.name, t.rows, t.cols);
    std::copy(t.data.begin(), t.data.end(), params.Map(slot).data());
  }
  if (query_id) *query_id = c.meta.at("query_id").get<std::string>();
  return LoraAdapter::FromParameters(std::move(params), c.meta.at("rank").get<int>(),
                                     c.meta.at("alpha").get<double>());
}

}  // namespace modecompose
