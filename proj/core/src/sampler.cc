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

#include "modecompose/sampler.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "modecompose/random.h"

namespace modecompose {

void GuidanceConfig::Validate(int num_steps) const {
  Require(w0 > 0.0, "guidance: w0 must be positive");
  Require(w_max >= w0 || mode == GuidanceMode::kVarianceAware,
          "guidance: w_max must be >= w0 in fixed mode");
  Require(w_max > 0.0, "guidance: w_max must be positive");
  Require(ddim_steps >= 2 && ddim_steps <= num_steps, "guidance: ddim_steps must be in [2, T]");
  Require(eta == 0.0, "guidance: only deterministic DDIM (eta = 0) is supported");
  Require(n_samples >= 1, "guidance: n_samples must be >= 1");
}

std::pair<Vector, Vector> TeacherNoisyParams(const PoeTeacher& teacher, int t,
                                             const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  Vector mean = std::sqrt(ab) * teacher.mu;
  // 1 + ab (v - 1) keeps unit variance exact at every t.
  Vector var = (1.0 + ab * (teacher.var.array() - 1.0)).matrix();
  return {std::move(mean), std::move(var)};
}

Matrix TeacherEpsBatch(const PoeTeacher& teacher, const Matrix& xt, int t, const NoiseSchedule& s) {
  Require(xt.cols() == teacher.mu.size(), "teacher_eps: dimension mismatch");
  const auto [mean, var] = TeacherNoisyParams(teacher, t, s);
  Matrix out = xt;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= var.transpose().array();
  return s.sqrt_one_minus_alpha_bar(t) * out;
}

Vector TeacherEps(const PoeTeacher& teacher, const Vector& xt, int t, const NoiseSchedule& s) {
  return TeacherEpsBatch(teacher, xt.transpose(), t, s).row(0).transpose();
}

double GuidanceWeight(const PoeTeacher& teacher, int t, const NoiseSchedule& s,
                      const GuidanceConfig& cfg) {
  if (cfg.mode == GuidanceMode::kFixed) return cfg.w0;
  const double ab = s.alpha_bar(t);
  // Isotropic teachers skip the reduction so the weight matches var_t bit for bit.
  const double v = teacher.var.minCoeff() == teacher.var.maxCoeff() ? teacher.var[0] : teacher.var.mean();
  const double mean_var = 1.0 + ab * (v - 1.0);
  return std::min(cfg.w0 * mean_var, cfg.w_max);
}

Matrix CfgCompose(const Matrix& eps_uncond, const Matrix& eps_cond, double w) {
  Require(eps_uncond.rows() == eps_cond.rows() && eps_uncond.cols() == eps_cond.cols(),
          "cfg_compose: shape mismatch");
  return eps_uncond + w * (eps_cond - eps_uncond);
}

Vector CfgCompose(const Vector& eps_uncond, const Vector& eps_cond, double w) {
  Require(eps_uncond.size() == eps_cond.size(), "cfg_compose: shape mismatch");
  return eps_uncond + w * (eps_cond - eps_uncond);
}

std::vector<int> DdimTimesteps(int num_steps, int ddim_steps) {
  Require(ddim_steps >= 2 && ddim_steps <= num_steps, "ddim: steps must be in [2, T]");
  std::vector<int> grid;
  for (int i = 0; i < ddim_steps; ++i) {
    const double t = 1.0 + (num_steps - 1.0) * i / (ddim_steps - 1.0);
    const int ti = static_cast<int>(std::lround(t));
    if (grid.empty() || ti != grid.back()) grid.push_back(ti);
  }
  std::reverse(grid.begin(), grid.end());
  return grid;
}

Matrix DdimSample(const EpsFn& eps_uncond, const EpsFn& eps_cond, const WeightFn& weight,
                  const NoiseSchedule& s, int dim, const GuidanceConfig& cfg) {
  cfg.Validate(s.num_steps());
  Matrix x(cfg.n_samples, dim);
  for (int i = 0; i < cfg.n_samples; ++i) {
    Rng rng = MakeRng(cfg.seed, {0xdd1, static_cast<uint64_t>(i)});
    x.row(i) = StandardNormal(dim, rng).transpose();
  }
  const std::vector<int> grid = DdimTimesteps(s.num_steps(), cfg.ddim_steps);
  for (size_t step = 0; step < grid.size(); ++step) {
    const int t = grid[step];
    const double w = weight ? weight(t) : 0.0;
    Matrix eps;
    if (w == 0.0) {
      eps = eps_uncond(x, t);
    } else if (w == 1.0) {
      eps = eps_cond(x, t);
    } else {
      eps = CfgCompose(eps_uncond(x, t), eps_cond(x, t), w);
    }
    const double a = s.sqrt_alpha_bar(t);
    const double b = s.sqrt_one_minus_alpha_bar(t);
    Matrix x0 = (x - b * eps) / a;
    if (cfg.clip_x0) {
      x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);
      eps = (x - a * x0) / b;
    }
    const double ab_prev = step + 1 < grid.size() ? s.alpha_bar(grid[step + 1]) : 1.0;
    x = std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps;
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "ddim_sample: non-finite state at step " << step << " (t=" << t << ")";
      throw NumericalError(msg.str());
    }
  }
  return x;
}

Matrix SampleWithTeacher(const ScoreModel& model, const PoeTeacher& teacher,
                         const GuidanceConfig& cfg) {
  Require(teacher.mu.size() == model.dim(), "sample: teacher dimension mismatch");
  const NoiseSchedule& s = model.schedule();
  return DdimSample(
      [&](const Matrix& xt, int t) { return model.EpsBatch(xt, t, Conditioning::Null()); },
      [&](const Matrix& xt, int t) { return TeacherEpsBatch(teacher, xt, t, s); },
      [&](int t) { return GuidanceWeight(teacher, t, s, cfg); }, s, model.dim(), cfg);
}

Matrix SampleUnconditional(const ScoreModel& model, const GuidanceConfig& cfg) {
  auto uncond = [&](const Matrix& xt, int t) {
    return model.EpsBatch(xt, t, Conditioning::Null());
  };
  return DdimSample(uncond, uncond, {}, model.schedule(), model.dim(), cfg);
}

std::vector<int> DefaultEvalTimesteps(int num_steps) {
  std::vector<int> ts;
  for (int i = 0; i < 10; ++i) {
    const int t = std::min(50 + 50 * i, num_steps);
    if (ts.empty() || t != ts.back()) ts.push_back(t);
  }
  return ts;
}

std::vector<double> ScoreTrainedClasses(const ScoreModel& model, const Vector& x_q,
                                        const std::vector<int>& t_eval, int n_eps, uint64_t seed) {
  const int num_classes = model.num_classes();
  Require(num_classes > 0, "score_trained_classes: model is not class-conditional");
  Require(!t_eval.empty(), "score_trained_classes: empty timestep set");
  Require(n_eps >= 1, "score_trained_classes: n_eps must be >= 1");
  Require(x_q.size() == model.dim(), "score_trained_classes: dimension mismatch");
  const NoiseSchedule& s = model.schedule();
  std::vector<double> loss(num_classes, 0.0);
  for (size_t ti = 0; ti < t_eval.size(); ++ti) {
    const int t = t_eval[ti];
    Rng rng = MakeRng(seed, {0x7c1, static_cast<uint64_t>(t)});
    const Matrix eps = StandardNormal(n_eps, model.dim(), rng);
    Matrix xt = s.sqrt_one_minus_alpha_bar(t) * eps;
    xt.rowwise() += s.sqrt_alpha_bar(t) * x_q.transpose();
    for (int c = 0; c < num_classes; ++c) {
      loss[c] += (model.EpsBatch(xt, t, Conditioning::Class(c)) - eps).squaredNorm();
    }
  }
  for (double& l : loss) l /= static_cast<double>(t_eval.size()) * n_eps;
  return loss;
}

TopkChoice SelectTopk(const std::vector<double>& losses, int k, double tau_tk) {
  Require(k >= 1 && k <= static_cast<int>(losses.size()), "topk: k must be in [1, #classes]");
  Require(tau_tk > 0.0, "topk: tau_tk must be positive");
  std::vector<int> order(losses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return losses[a] < losses[b]; });
  TopkChoice choice;
  choice.classes.assign(order.begin(), order.begin() + k);
  const double best = losses[choice.classes.front()];
  double total = 0.0;
  for (int c : choice.classes) {
    choice.weights.push_back(std::exp(-(losses[c] - best) / tau_tk));
    total += choice.weights.back();
  }
  for (double& w : choice.weights) w /= total;
  return choice;
}

Matrix TopkEpsBatch(const ScoreModel& model, const Matrix& xt, int t, const TopkChoice& choice) {
  Require(!choice.classes.empty() && choice.classes.size() == choice.weights.size(),
          "topk_eps: malformed choice");
  if (choice.classes.size() == 1) return model.EpsBatch(xt, t, Conditioning::Class(choice.classes[0]));
  const Matrix uncond = model.EpsBatch(xt, t, Conditioning::Null());
  Matrix out = uncond;
  for (size_t k = 0; k < choice.classes.size(); ++k) {
    out += choice.weights[k] * (model.EpsBatch(xt, t, Conditioning::Class(choice.classes[k])) - uncond);
  }
  return out;
}

Matrix SampleTopk(const ScoreModel& model, const TopkChoice& choice, const GuidanceConfig& cfg) {
  GuidanceConfig fixed = cfg;
  fixed.mode = GuidanceMode::kFixed;
  return DdimSample(
      [&](const Matrix& xt, int t) { return model.EpsBatch(xt, t, Conditioning::Null()); },
      [&](const Matrix& xt, int t) { return TopkEpsBatch(model, xt, t, choice); },
      [&](int) { return fixed.w0; }, model.schedule(), model.dim(), fixed);
}

PoeTeacher QueryOnlyTeacher(const Vector& x_q, double sigma_q) {
  Require(sigma_q > 0.0, "query_only_teacher: sigma_q must be positive");
  PoeTeacher t;
  t.mu = x_q;
  t.var = Vector::Constant(x_q.size(), sigma_q * sigma_q);
  return t;
}

}  // namespace modecompose
