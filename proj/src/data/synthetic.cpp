#include "sme/data/synthetic.hpp"

#include <cmath>

#include "sme/error.hpp"
#include "sme/numcore/rng.hpp"

namespace sme {
namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, stddev);
  return m;
}

double row_dot(const Matrix& m, std::size_t r, const Vector& h) {
  double s = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) s += m(r, j) * h[j];
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (regions < 1 || d_e < 1 || poi_categories < 1 || num_tasks < 1 || latent_dim < 1) {
    throw ArgumentError("synthetic spec: all counts must be >= 1");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ArgumentError("synthetic spec: noise_std must be finite and >= 0");
  }
}

SyntheticSample gen_synthetic_with_latents(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t L = spec.latent_dim;
  const double inv_sqrt_l = 1.0 / std::sqrt(static_cast<double>(L));

  Rng root(spec.seed);
  Rng factor_rng = root.fork(1);
  Rng sample_rng = root.fork(2);

  // Image sees latent dims [0, hi_image), text sees [lo_text, L).
  const std::size_t hi_image = std::max<std::size_t>(1, (2 * L + 2) / 3);
  const std::size_t lo_text = L - hi_image;
  Matrix a_image = gaussian(factor_rng, spec.d_e, L, inv_sqrt_l * std::sqrt(1.5));
  Matrix a_text = gaussian(factor_rng, spec.d_e, L, inv_sqrt_l * std::sqrt(1.5));
  for (std::size_t i = 0; i < spec.d_e; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      if (j >= hi_image) a_image(i, j) = 0.0;
      if (j < lo_text) a_text(i, j) = 0.0;
    }
  }
  const Matrix b_poi = gaussian(factor_rng, spec.poi_categories, L, inv_sqrt_l * 0.6);
  Vector poi_base(spec.poi_categories);
  for (double& v : poi_base) v = std::log(factor_rng.uniform(2.0, 12.0));

  const Matrix shared = gaussian(factor_rng, 1, L, inv_sqrt_l);
  const Matrix specific = gaussian(factor_rng, spec.num_tasks, L, inv_sqrt_l * 0.7);
  const Matrix basis_dirs = gaussian(factor_rng, kSyntheticBasis, L, inv_sqrt_l * 1.5);
  const Matrix basis_coef = gaussian(factor_rng, spec.num_tasks, kSyntheticBasis, 0.5);
  Vector offsets(spec.num_tasks);
  for (double& v : offsets) v = factor_rng.uniform(-0.5, 0.5);

  SyntheticSample out;
  auto& ds = out.dataset;
  ds.manifest.name = "synthetic";
  ds.manifest.d_e = spec.d_e;
  ds.manifest.poi_categories = spec.poi_categories;
  ds.manifest.num_tasks = spec.num_tasks;
  ds.manifest.task_names = default_task_names(spec.num_tasks);
  out.latents = Matrix(spec.regions, L);
  out.basis = Matrix(spec.regions, kSyntheticBasis);
  ds.records.reserve(spec.regions);

  for (std::size_t k = 0; k < spec.regions; ++k) {
    Vector h(L);
    for (double& v : h) v = sample_rng.normal();
    for (std::size_t j = 0; j < L; ++j) out.latents(k, j) = h[j];

    RegionRecord r;
    r.region_id = static_cast<std::uint32_t>(k);
    r.image_feat.resize(spec.d_e);
    r.text_feat.resize(spec.d_e);
    for (std::size_t i = 0; i < spec.d_e; ++i) {
      r.image_feat[i] = f32(row_dot(a_image, i, h) + spec.noise_std * sample_rng.normal());
    }
    for (std::size_t i = 0; i < spec.d_e; ++i) {
      r.text_feat[i] = f32(row_dot(a_text, i, h) + spec.noise_std * sample_rng.normal());
    }
    r.poi_counts.resize(spec.poi_categories);
    for (std::size_t c = 0; c < spec.poi_categories; ++c) {
      const double rate = std::exp(poi_base[c] + row_dot(b_poi, c, h));
      r.poi_counts[c] = static_cast<double>(sample_rng.poisson(rate));
    }
    Vector basis(kSyntheticBasis);
    for (std::size_t b = 0; b < kSyntheticBasis; ++b) {
      basis[b] = std::tanh(row_dot(basis_dirs, b, h));
      out.basis(k, b) = basis[b];
    }
    r.labels.resize(spec.num_tasks);
    for (std::size_t t = 0; t < spec.num_tasks; ++t) {
      double y = offsets[t] + row_dot(shared, 0, h) + row_dot(specific, t, h);
      for (std::size_t b = 0; b < kSyntheticBasis; ++b) y += basis_coef(t, b) * basis[b];
      r.labels[t] = f32(y + spec.noise_std * sample_rng.normal());
    }
    ds.records.push_back(std::move(r));
  }
  return out;
}

Dataset gen_synthetic(const SyntheticSpec& spec) { return gen_synthetic_with_latents(spec).dataset; }

}  // namespace sme
