#include <cmath>

#include "forward_cache.hpp"
#include "sme/error.hpp"
#include "sme/numcore/kernels.hpp"

namespace sme {
namespace {

using detail::BranchCache;
using detail::ForwardCache;

// Reverse pass of one head; returns d(loss)/d(concat(u_image, u_text)).
Vector head_backward(Model& model, const Head& head, const detail::HeadCache& hc, double g_y) {
  auto& tape = model.tape;
  const Vector gy{g_y};
  if (head.linear) {
    Vector g_in(hc.input.size(), 0.0);
    affine_backward_accumulate(hc.input, tape.value_matrix(head.w1), gy, tape.grad_matrix(head.w1),
                               tape.grads(head.b1), g_in);
    return g_in;
  }
  Vector g_hidden(hc.hidden.size(), 0.0);
  affine_backward_accumulate(hc.hidden, tape.value_matrix(head.w2), gy, tape.grad_matrix(head.w2),
                             tape.grads(head.b2), g_hidden);
  const Vector g_pre = activation_backward(hc.pre_hidden, g_hidden, model.config.activation);
  Vector g_in(hc.input.size(), 0.0);
  affine_backward_accumulate(hc.input, tape.value_matrix(head.w1), g_pre, tape.grad_matrix(head.w1),
                             tape.grads(head.b1), g_in);
  return g_in;
}

}  // namespace

double backward(Model& model, std::span<const RegionRecord> records,
                std::span<const std::size_t> batch, const Matrix& targets,
                const LossWeights& weights) {
  const auto& c = model.config;
  if (batch.empty()) throw ArgumentError("backward: empty batch");
  if (weights.lambda.size() != c.num_tasks()) {
    throw ArgumentError("backward: " + std::to_string(weights.lambda.size()) +
                        " loss weights for " + std::to_string(c.num_tasks()) + " tasks");
  }
  for (double l : weights.lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("backward: loss weights must be finite and >= 0");
  }
  if (targets.rows() != records.size() || targets.cols() != c.num_tasks()) {
    throw ShapeError("backward: targets " + shape_string(targets.rows(), targets.cols()) +
                     " do not match " + std::to_string(records.size()) + " records x " +
                     std::to_string(c.num_tasks()) + " tasks");
  }

  auto& tape = model.tape;
  tape.zero_grad();
  const auto& k = kernels::active();
  const std::size_t slots = model.heads.size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const std::size_t d_u = c.expert_out;
  const std::size_t d_in = c.d_in();

  double loss = 0.0;
  ForwardCache cache;
  std::array<Vector, 2> g_z;
  std::array<std::vector<Vector>, 2> g_expert_out;

  for (std::size_t idx : batch) {
    if (idx >= records.size()) throw ArgumentError("backward: batch index out of range");
    const RegionRecord& rec = records[idx];
    detail::forward_cached(model, rec, cache);

    for (std::size_t b = 0; b < 2; ++b) {
      g_z[b].assign(d_in, 0.0);
      g_expert_out[b].assign(cache.branches[b].experts.size(), Vector(d_u, 0.0));
    }

    for (std::size_t s = 0; s < slots; ++s) {
      const std::size_t task = model.heads[s].task;
      const double lambda = weights.lambda[task];
      const double resid = cache.y[s] - targets(idx, task);
      loss += lambda * inv_b * resid * resid;
      if (lambda == 0.0) continue;

      const Vector g_joined = head_backward(model, model.heads[s], cache.heads[s], 2.0 * lambda * inv_b * resid);

      for (std::size_t b = 0; b < 2; ++b) {
        const Branch& br = model.branches[b];
        const BranchCache& bc = cache.branches[b];
        const Router& r = br.routers[s];
        const GateVector& gate = bc.gates[s];
        const double* g_u = g_joined.data() + b * d_u;

        // Zero-masked gates are a hard stop: their cotangent stays zero.
        Vector g_masked(r.eligible.size(), 0.0);
        for (std::size_t m = 0; m < r.eligible.size(); ++m) {
          if (gate.masked[m] == 0.0) continue;
          const int slot = bc.slot_of_expert[r.eligible[m]];
          g_masked[m] = k.dot(g_u, bc.experts[slot].out.data(), d_u);
          k.axpy(gate.masked[m], g_u, g_expert_out[b][slot].data(), d_u);
        }
        const Vector g_logits = softmax_backward(gate.raw, g_masked);
        affine_backward_accumulate(cache.input.z(br.label), tape.value_matrix(r.w), g_logits,
                                   tape.grad_matrix(r.w), tape.grads(r.b), g_z[b]);
      }
    }

    for (std::size_t b = 0; b < 2; ++b) {
      const Branch& br = model.branches[b];
      const BranchCache& bc = cache.branches[b];
      const Vector& z = cache.input.z(br.label);
      for (std::size_t slot = 0; slot < bc.experts.size(); ++slot) {
        const Vector& g_out = g_expert_out[b][slot];
        bool any = false;
        for (double v : g_out) any |= v != 0.0;
        if (!any) continue;
        const auto& ec = bc.experts[slot];
        const Expert& ex = br.experts[ec.index];
        const Vector g_pre_out = c.sigma == SigmaKind::layer_norm
                                     ? layer_norm_backward(ec.pre_out, c.norm_eps, g_out)
                                     : g_out;
        Vector g_hidden(c.expert_hidden, 0.0);
        affine_backward_accumulate(ec.hidden, tape.value_matrix(ex.w2), g_pre_out,
                                   tape.grad_matrix(ex.w2), tape.grads(ex.b2), g_hidden);
        const Vector g_pre_hidden = activation_backward(ec.pre_hidden, g_hidden, c.activation);
        affine_backward_accumulate(z, tape.value_matrix(ex.w1), g_pre_hidden, tape.grad_matrix(ex.w1),
                                   tape.grads(ex.b1), g_z[b]);
      }
    }

    // z = [e | r | p]: features are fixed, r and p are shared by both branches.
    if (c.d_r > 0) {
      auto g_region = tape.grad_matrix(model.region_embedding).row(rec.region_id);
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < c.d_r; ++i) g_region[i] += g_z[b][c.d_e + i];
      }
    }
    if (c.d_p > 0) {
      Vector g_p(c.d_p, 0.0);
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < c.d_p; ++i) g_p[i] += g_z[b][c.d_e + c.d_r + i];
      }
      affine_backward_accumulate(cache.input.poi_features, tape.value_matrix(model.poi_w), g_p,
                                 tape.grad_matrix(model.poi_w), tape.grads(model.poi_b), {});
    }
  }

  if (!std::isfinite(loss)) throw NumericError("backward: non-finite loss");
  return loss;
}

double backward(Model& model, std::span<const RegionRecord> records, const Matrix& targets,
                const LossWeights& weights) {
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return backward(model, records, all, targets, weights);
}

}  // namespace sme
