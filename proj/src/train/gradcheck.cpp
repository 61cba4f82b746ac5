#include "sme/train/gradcheck.hpp"

#include "sme/data/synthetic.hpp"

namespace sme {

MicroProblem make_micro_problem(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.regions = 6;
  spec.d_e = 4;
  spec.poi_categories = 3;
  spec.latent_dim = 4;
  spec.seed = seed;
  Dataset ds = gen_synthetic(spec);

  ModelConfig c;
  c.d_e = 4;
  c.d_r = 2;
  c.d_p = 2;
  c.poi_categories = 3;
  c.n_specific = 1;
  c.n_dual = 1;
  c.n_shared = 1;
  c.expert_hidden = 8;
  c.expert_out = 4;
  c.head_hidden = 8;
  c.epsilon = 0.0;
  c.activation = Activation::tanh;
  c.sigma = SigmaKind::identity;

  Rng rng(seed);
  Model model = build_model(c, ds.region_capacity(), rng);
  // Nonzero biases so their gradients are exercised away from the origin.
  for (std::size_t i = 0; i < model.tape.slices().size(); ++i) {
    const auto& s = model.tape.slice(i);
    if (s.cols == 1) {
      for (double& v : model.tape.values(i)) v = rng.normal(0.0, 0.1);
    }
  }
  const std::size_t T = ds.manifest.num_tasks;
  Matrix targets(ds.size(), T);
  for (std::size_t k = 0; k < ds.size(); ++k) {
    for (std::size_t t = 0; t < T; ++t) targets(k, t) = ds.records[k].labels[t];
  }
  LossWeights w{std::vector<double>(T)};
  for (std::size_t t = 0; t < T; ++t) w.lambda[t] = 1.0 + 0.5 * static_cast<double>(t);
  return {std::move(ds), std::move(model), std::move(targets), std::move(w)};
}

GradCheckReport check_model_gradients(MicroProblem& p, double h, bool corrupt_gradient) {
  Objective f = [&](ParamTape&, bool compute_grad) {
    const double loss = backward(p.model, p.dataset.records, p.targets, p.weights);
    if (compute_grad && corrupt_gradient) {
      const auto id = p.model.heads.front().w1;
      p.model.tape.grads(id)[0] += 1e-2;
    }
    return loss;
  };
  return grad_check(p.model.tape, f, h);
}

}  // namespace sme
