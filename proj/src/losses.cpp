#include "mudikit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mudikit/error.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

namespace {

void require_batch(std::span<const TrainingExample> batch, const char* what) {
  require(!batch.empty(), ErrorCode::parameter, std::string(what) + " is empty");
  const std::size_t d = batch.front().x0.size();
  require(d > 0, ErrorCode::parameter, std::string(what) + " has empty latents");
  for (const auto& ex : batch)
    require(ex.x0.size() == d, ErrorCode::contract, std::string(what) + " latents differ in size");
}

struct KlTerm {
  const DenoiserModel* reference = nullptr;
  // Share of one draw in the penalty mean (1 / total draws).
  double draw_share = 0.0;
  double weight = 0.0;
};

// Adds loss_weight * (batch mean of per-element MSE to eps) and, when a
// reference is given, its share of the KL penalty.
void accumulate(const DenoiserModel& model, std::span<const TrainingExample> batch,
                std::span<const LossDraw> draws, const NoiseSchedule& schedule,
                double loss_weight, const KlTerm& kl, bool with_gradient, LossValue& out) {
  require(draws.size() == batch.size(), ErrorCode::contract, "draw count differs from batch size");
  const std::size_t d = batch.front().x0.size();
  require(model.dim() == d, ErrorCode::contract, "model dimension differs from latent size");
  std::vector<double> x_t(d), pred(d), ref_pred(d), upstream(d);
  const double mse_weight = loss_weight / (static_cast<double>(d) * batch.size());
  const double gap_scale = kl.draw_share / static_cast<double>(d);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const LossDraw& draw = draws[k];
    require(draw.eps.size() == d, ErrorCode::contract, "noise draw has the wrong size");
    require(draw.t >= 1 && draw.t <= schedule.steps(), ErrorCode::contract,
            "drawn timestep out of range");
    kernels::axpby(schedule.alpha(draw.t), batch[k].x0, schedule.sigma(draw.t), draw.eps, x_t);
    model.predict(x_t, draw.t, batch[k].condition, pred);
    out.value += mse_weight * kernels::squared_distance(pred, draw.eps);
    if (with_gradient)
      for (std::size_t i = 0; i < d; ++i) upstream[i] = 2.0 * mse_weight * (pred[i] - draw.eps[i]);
    if (kl.reference) {
      kl.reference->predict(x_t, draw.t, batch[k].condition, ref_pred);
      const double gap = kernels::squared_distance(pred, ref_pred);
      out.penalty += gap * gap_scale;
      if (with_gradient)
        for (std::size_t i = 0; i < d; ++i)
          upstream[i] += 2.0 * kl.weight * gap_scale * (pred[i] - ref_pred[i]);
    }
    if (with_gradient) model.backward(x_t, draw.t, batch[k].condition, upstream, out.gradient);
  }
}

LossValue start(const DenoiserModel& model, bool with_gradient) {
  LossValue v;
  if (with_gradient) v.gradient.assign(model.parameter_count(), 0.0);
  return v;
}

}  // namespace

std::vector<LossDraw> draw_loss_terms(std::span<const TrainingExample> batch,
                                      const NoiseSchedule& schedule, RandomSource& rng) {
  require_batch(batch, "batch");
  std::vector<LossDraw> draws(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    draws[k].t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
    draws[k].eps.resize(batch[k].x0.size());
    rng.fill_normal(draws[k].eps);
  }
  return draws;
}

LossValue dm_loss_on(const DenoiserModel& model, std::span<const TrainingExample> batch,
                     std::span<const LossDraw> draws, const NoiseSchedule& schedule,
                     bool with_gradient) {
  require_batch(batch, "batch");
  LossValue v = start(model, with_gradient);
  accumulate(model, batch, draws, schedule, 1.0, {}, with_gradient, v);
  return v;
}

double dm_loss(const DenoiserModel& model, std::span<const TrainingExample> batch,
               const NoiseSchedule& schedule, RandomSource& rng) {
  const auto draws = draw_loss_terms(batch, schedule, rng);
  return dm_loss_on(model, batch, draws, schedule).value;
}

DbDraws draw_db_terms(const TrainingSets& sets, const NoiseSchedule& schedule, RandomSource& rng) {
  require_batch(sets.ref_set, "reference set");
  require_batch(sets.prior_set, "prior set");
  DbDraws draws;
  draws.ref = draw_loss_terms(sets.ref_set, schedule, rng);
  draws.prior = draw_loss_terms(sets.prior_set, schedule, rng);
  return draws;
}

LossValue db_loss_on(const DenoiserModel& model, const TrainingSets& sets, const DbDraws& draws,
                     const NoiseSchedule& schedule, bool with_gradient) {
  require_batch(sets.ref_set, "reference set");
  require_batch(sets.prior_set, "prior set");
  LossValue v = start(model, with_gradient);
  accumulate(model, sets.ref_set, draws.ref, schedule, 1.0, {}, with_gradient, v);
  accumulate(model, sets.prior_set, draws.prior, schedule, sets.lambda, {}, with_gradient, v);
  return v;
}

double db_loss(const DenoiserModel& model, const TrainingSets& sets,
               const NoiseSchedule& schedule, RandomSource& rng) {
  const auto draws = draw_db_terms(sets, schedule, rng);
  return db_loss_on(model, sets, draws, schedule).value;
}

LossValue kl_regularized_loss_on(const DenoiserModel& model, const DenoiserModel& reference,
                                 const TrainingSets& sets, const DbDraws& draws,
                                 const NoiseSchedule& schedule, double kl_weight,
                                 bool with_gradient) {
  require_batch(sets.ref_set, "reference set");
  require_batch(sets.prior_set, "prior set");
  require(kl_weight >= 0.0, ErrorCode::parameter, "kl_weight must be nonnegative");
  require(reference.dim() == model.dim(), ErrorCode::contract,
          "reference model dimension differs from model");
  LossValue v = start(model, with_gradient);
  const double total = static_cast<double>(sets.ref_set.size() + sets.prior_set.size());
  const KlTerm kl{&reference, 1.0 / total, kl_weight};
  accumulate(model, sets.ref_set, draws.ref, schedule, 1.0, kl, with_gradient, v);
  accumulate(model, sets.prior_set, draws.prior, schedule, sets.lambda, kl, with_gradient, v);
  v.value += kl_weight * v.penalty;
  return v;
}

double kl_regularized_loss(const DenoiserModel& model, const DenoiserModel& reference,
                           const TrainingSets& sets, const NoiseSchedule& schedule,
                           double kl_weight, RandomSource& rng) {
  const auto draws = draw_db_terms(sets, schedule, rng);
  return kl_regularized_loss_on(model, reference, sets, draws, schedule, kl_weight).value;
}

double grad_check(DenoiserModel& model, const FrozenLoss& loss, double epsilon) {
  require(epsilon > 0.0, ErrorCode::parameter, "grad_check step must be positive");
  const std::vector<double> base(model.parameters().begin(), model.parameters().end());
  const LossValue analytic = loss(model, true);
  const LossValue replay = loss(model, false);
  require(analytic.value == replay.value, ErrorCode::determinism,
          "loss changed between evaluations at identical parameters; randomness is not frozen");
  require(analytic.gradient.size() == base.size(), ErrorCode::contract,
          "loss returned a gradient of the wrong length");

  std::vector<double> probe = base;
  double worst = 0.0;
  for (std::size_t p = 0; p < base.size(); ++p) {
    probe[p] = base[p] + epsilon;
    model.set_parameters(probe);
    const double up = loss(model, false).value;
    probe[p] = base[p] - epsilon;
    model.set_parameters(probe);
    const double down = loss(model, false).value;
    probe[p] = base[p];
    const double cd = (up - down) / (2.0 * epsilon);
    const double g = analytic.gradient[p];
    worst = std::max(worst, std::abs(g - cd) / (std::abs(g) + std::abs(cd) + 1e-12));
  }
  model.set_parameters(base);
  return worst;
}

double grad_check(DenoiserModel& model, LossKind kind, const TrainingSets& sets,
                  const NoiseSchedule& schedule, std::uint64_t seed, double epsilon,
                  const DenoiserModel* reference, double kl_weight) {
  RandomSource rng(seed);
  switch (kind) {
    case LossKind::dm: {
      const auto draws = draw_loss_terms(sets.ref_set, schedule, rng);
      return grad_check(
          model,
          [&](const DenoiserModel& m, bool g) { return dm_loss_on(m, sets.ref_set, draws, schedule, g); },
          epsilon);
    }
    case LossKind::db: {
      const auto draws = draw_db_terms(sets, schedule, rng);
      return grad_check(
          model, [&](const DenoiserModel& m, bool g) { return db_loss_on(m, sets, draws, schedule, g); },
          epsilon);
    }
    case LossKind::kl: {
      require(reference != nullptr, ErrorCode::parameter, "kl grad_check needs a reference model");
      const auto draws = draw_db_terms(sets, schedule, rng);
      return grad_check(
          model,
          [&](const DenoiserModel& m, bool g) {
            return kl_regularized_loss_on(m, *reference, sets, draws, schedule, kl_weight, g);
          },
          epsilon);
    }
  }
  return 0.0;
}

}  // namespace mudikit
