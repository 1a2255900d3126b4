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

#include "modecompose/mode_discovery.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modecompose {

std::vector<int> AscentConfig::TimestepGrid() const {
  std::vector<int> grid;
  for (int t = t_start; t <= t_end; t += t_step) grid.push_back(t);
  return grid;
}

double AscentConfig::GradTol(int dim) const {
  return grad_tol > 0.0 ? grad_tol : 1e-3 * std::sqrt(static_cast<double>(dim));
}

double AscentConfig::MergeTol(int dim) const {
  return merge_tol > 0.0 ? merge_tol : 0.05 * std::sqrt(static_cast<double>(dim));
}

void AscentConfig::Validate(int num_steps) const {
  Require(t_step > 0 && t_start >= 1 && t_start <= t_end && t_end <= num_steps,
          "ascent: timestep grid must lie within [1, T]");
  Require(n_per_t >= 1, "ascent: n_per_t must be >= 1");
  Require(n_iters >= 0, "ascent: n_iters must be >= 0");
  Require(base_step > 0.0, "ascent: base_step must be positive");
  Require(query_fraction >= 0.0 && query_fraction <= 1.0, "ascent: query_fraction in [0, 1]");
  Require(hutchinson_probes >= 1 && hutchinson_step > 0.0, "ascent: bad Hutchinson settings");
  Require(var_floor > 0.0, "ascent: var_floor must be positive");
}

std::vector<Vector> InitStarts(const Vector& x_q, int t, const AscentConfig& cfg,
                               const NoiseSchedule& s) {
  Require(cfg.n_per_t >= 1, "init_starts: n_per_t must be >= 1");
  const int n_query = cfg.init == InitStrategy::kQueryCentered
                          ? cfg.n_per_t
                          : static_cast<int>(std::lround(cfg.query_fraction * cfg.n_per_t));
  const double a = s.sqrt_alpha_bar(t);
  const double b = s.sqrt_one_minus_alpha_bar(t);
  std::vector<Vector> starts;
  starts.reserve(cfg.n_per_t);
  for (int i = 0; i < cfg.n_per_t; ++i) {
    Rng rng = MakeRng(cfg.seed, {0x5747, static_cast<uint64_t>(t), static_cast<uint64_t>(i)});
    const Vector eps = StandardNormal(static_cast<int>(x_q.size()), rng);
    starts.push_back(i < n_query ? Vector(a * x_q + b * eps) : eps);
  }
  return starts;
}

ModeCandidate AscendMode(const ScoreModel& model, const Vector& x_init, int t,
                         const AscentConfig& cfg) {
  return AscendModes(model, {x_init}, t, cfg).front();
}

std::vector<ModeCandidate> AscendModes(const ScoreModel& model, const std::vector<Vector>& starts,
                                       int t, const AscentConfig& cfg) {
  const int n = static_cast<int>(starts.size());
  const int d = model.dim();
  const double tol = cfg.GradTol(d);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    Require(starts[i].size() == d, "ascend_mode: start dimension mismatch");
    x.row(i) = starts[i].transpose();
  }
  Matrix m = Matrix::Zero(n, d);
  Matrix v = Matrix::Zero(n, d);
  std::vector<ModeCandidate> out(n);
  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) {
    active[i] = i;
    out[i].t = t;
  }

  auto evaluate = [&](const std::vector<int>& rows) {
    Matrix batch(rows.size(), d);
    for (size_t k = 0; k < rows.size(); ++k) batch.row(k) = x.row(rows[k]);
    return model.ScoreBatch(batch, t, Conditioning::Null());
  };

  for (int it = 0; it < cfg.n_iters && !active.empty(); ++it) {
    const Matrix score = evaluate(active);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, it + 1);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, it + 1);
    std::vector<int> still_active;
    for (size_t k = 0; k < active.size(); ++k) {
      const int i = active[k];
      const double norm = score.row(k).norm();
      if (!std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "ascend_mode: non-finite score at iteration " << it << " (t=" << t << ", start "
            << i << ")";
        throw NumericalError(msg.str());
      }
      out[i].grad_norm_trace.push_back(norm);
      out[i].iterations_used = it;
      if (norm < tol) continue;
      // Ascent: move along +score.
      m.row(i) = cfg.adam_beta1 * m.row(i) + (1.0 - cfg.adam_beta1) * score.row(k);
      v.row(i) = cfg.adam_beta2 * v.row(i) +
                 (1.0 - cfg.adam_beta2) * score.row(k).array().square().matrix();
      x.row(i).array() += cfg.base_step * (m.row(i).array() / bc1) /
                          ((v.row(i).array() / bc2).sqrt() + cfg.adam_eps);
      if (!x.row(i).allFinite()) {
        std::ostringstream msg;
        msg << "ascend_mode: non-finite iterate at iteration " << it << " (t=" << t << ", start "
            << i << ")";
        throw NumericalError(msg.str());
      }
      out[i].iterations_used = it + 1;
      still_active.push_back(i);
    }
    active = std::move(still_active);
  }

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  const Matrix final_score = evaluate(all);
  for (int i = 0; i < n; ++i) {
    out[i].x_star = x.row(i).transpose();
    out[i].final_grad_norm = final_score.row(i).norm();
    if (!std::isfinite(out[i].final_grad_norm)) {
      throw NumericalError("ascend_mode: non-finite final score (t=" + std::to_string(t) + ")");
    }
  }
  return out;
}

std::vector<ModeCandidate> DedupModes(const std::vector<ModeCandidate>& candidates,
                                      double merge_tol, const NoiseSchedule& s) {
  Require(merge_tol > 0.0, "dedup_modes: merge_tol must be positive");
  std::vector<size_t> order(candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (candidates[a].t != candidates[b].t) return candidates[a].t < candidates[b].t;
    return candidates[a].final_grad_norm < candidates[b].final_grad_norm;
  });

  std::vector<ModeCandidate> kept;
  std::vector<Vector> kept_clean;
  for (size_t idx : order) {
    const ModeCandidate& c = candidates[idx];
    const Vector clean = c.x_star / s.sqrt_alpha_bar(c.t);
    bool merged = false;
    for (size_t k = 0; k < kept.size(); ++k) {
      if (kept[k].t == c.t && (kept_clean[k] - clean).norm() < merge_tol) {
        merged = true;
        break;
      }
    }
    if (!merged) {
      kept.push_back(c);
      kept_clean.push_back(clean);
    }
  }

  std::vector<size_t> out_order(kept.size());
  for (size_t i = 0; i < out_order.size(); ++i) out_order[i] = i;
  std::sort(out_order.begin(), out_order.end(), [&](size_t a, size_t b) {
    if (kept[a].t != kept[b].t) return kept[a].t < kept[b].t;
    return std::lexicographical_compare(kept_clean[a].begin(), kept_clean[a].end(),
                                        kept_clean[b].begin(), kept_clean[b].end());
  });
  std::vector<ModeCandidate> out;
  out.reserve(kept.size());
  for (size_t i : out_order) out.push_back(kept[i]);
  return out;
}

HutchinsonEstimate HutchinsonDiagCov(const ScoreModel& model, const ModeCandidate& mode,
                                     int n_probes, double fd_step, double curvature_floor,
                                     Rng& rng) {
  Require(n_probes >= 1, "hutchinson: n_probes must be >= 1");
  Require(fd_step > 0.0, "hutchinson: fd_step must be positive");
  const int d = model.dim();
  Require(mode.x_star.size() == d, "hutchinson: dimension mismatch");

  std::bernoulli_distribution coin(0.5);
  Matrix z(n_probes, d);
  for (int p = 0; p < n_probes; ++p)
    for (int j = 0; j < d; ++j) z(p, j) = coin(rng) ? 1.0 : -1.0;

  Matrix points(2 * n_probes, d);
  for (int p = 0; p < n_probes; ++p) {
    points.row(2 * p) = mode.x_star.transpose() + fd_step * z.row(p);
    points.row(2 * p + 1) = mode.x_star.transpose() - fd_step * z.row(p);
  }
  const Matrix s = model.ScoreBatch(points, mode.t, Conditioning::Null());

  HutchinsonEstimate est;
  est.hessian_diag = Vector::Zero(d);
  for (int p = 0; p < n_probes; ++p) {
    const Eigen::RowVectorXd hz = (s.row(2 * p) - s.row(2 * p + 1)) / (2.0 * fd_step);
    est.hessian_diag += (z.row(p).array() * hz.array()).matrix().transpose();
  }
  est.hessian_diag /= n_probes;

  est.cov_t.resize(d);
  for (int j = 0; j < d; ++j) {
    double h = est.hessian_diag[j];
    if (!(h < -curvature_floor)) {
      ++est.nonconcave_dims;
      h = -curvature_floor;
    }
    est.cov_t[j] = -1.0 / h;
  }
  return est;
}

PrototypeExpert PullToClean(const ModeCandidate& mode, const Vector& cov_t,
                            const NoiseSchedule& s, double var_floor) {
  Require(cov_t.size() == mode.x_star.size(), "pull_to_clean: dimension mismatch");
  Require((cov_t.array() > 0.0).all(), "pull_to_clean: covariance must be positive");
  const double ab = s.alpha_bar(mode.t);
  PrototypeExpert p;
  p.m = mode.x_star / std::sqrt(ab);
  p.var = ((cov_t.array() - (1.0 - ab)) / ab).max(var_floor).matrix();
  p.origin_t = mode.t;
  p.origin_grad_norm = mode.final_grad_norm;
  return p;
}

DiscoveryResult DiscoverPrototypes(const ScoreModel& model, const Vector& x_q,
                                   const AscentConfig& cfg) {
  const NoiseSchedule& s = model.schedule();
  cfg.Validate(s.num_steps());
  Require(x_q.size() == model.dim(), "discover: query dimension mismatch");
  const int d = model.dim();
  const double accept = cfg.accept_factor * cfg.GradTol(d);

  DiscoveryResult result;
  for (int t : cfg.TimestepGrid()) {
    const std::vector<Vector> starts = InitStarts(x_q, t, cfg, s);
    std::vector<ModeCandidate> cands = AscendModes(model, starts, t, cfg);
    DiscoveryDiagnostics::PerTimestep diag{t, static_cast<int>(starts.size()), 0, 0};
    std::vector<ModeCandidate> accepted;
    for (ModeCandidate& c : cands) {
      if (c.final_grad_norm <= accept) accepted.push_back(std::move(c));
    }
    diag.accepted = static_cast<int>(accepted.size());
    const std::vector<ModeCandidate> survivors = DedupModes(accepted, cfg.MergeTol(d), s);
    diag.survivors = static_cast<int>(survivors.size());
    for (size_t k = 0; k < survivors.size(); ++k) {
      Rng rng = MakeRng(cfg.seed, {0x4875, static_cast<uint64_t>(t), k});
      const HutchinsonEstimate est = HutchinsonDiagCov(
          model, survivors[k], cfg.hutchinson_probes, cfg.hutchinson_step, cfg.curvature_floor, rng);
      PrototypeExpert p = PullToClean(survivors[k], est.cov_t, s, cfg.var_floor);
      p.nonconcave_dims = est.nonconcave_dims;
      result.pool.push_back(std::move(p));
      result.modes.push_back(survivors[k]);
    }
    result.diagnostics.per_t.push_back(diag);
  }
  result.diagnostics.pool_size = static_cast<int>(result.pool.size());
  if (result.pool.empty()) {
    throw std::runtime_error("discover: no ascent converged on any timestep; empty prototype pool");
  }
  return result;
}

}  // namespace modecompose
