#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mudikit/denoiser.hpp"
#include "mudikit/random.hpp"
#include "mudikit/schedule.hpp"

namespace mudikit {

struct TrainingExample {
  std::vector<double> x0;
  int condition = 0;
};

/// D_ref, D_prior and the prior-preservation weight.
struct TrainingSets {
  std::vector<TrainingExample> ref_set;
  std::vector<TrainingExample> prior_set;
  double lambda = 1.0;
};

/// One Monte-Carlo term: t uniform in {1..T}, eps standard normal.
struct LossDraw {
  int t = 1;
  std::vector<double> eps;
};

struct LossValue {
  double value = 0.0;
  /// KL-style penalty term before weighting (0 for dm/db).
  double penalty = 0.0;
  /// Empty unless requested.
  std::vector<double> gradient;
};

/// Per example, in order: t, then eps (dim normals).
std::vector<LossDraw> draw_loss_terms(std::span<const TrainingExample> batch,
                                      const NoiseSchedule& schedule, RandomSource& rng);

/// Mean over the batch of mean-per-element ||eps_theta(x_t, c, t) - eps||^2.
LossValue dm_loss_on(const DenoiserModel& model, std::span<const TrainingExample> batch,
                     std::span<const LossDraw> draws, const NoiseSchedule& schedule,
                     bool with_gradient = false);
double dm_loss(const DenoiserModel& model, std::span<const TrainingExample> batch,
               const NoiseSchedule& schedule, RandomSource& rng);

struct DbDraws {
  std::vector<LossDraw> ref;
  std::vector<LossDraw> prior;
};

/// Reference-set draws first, then prior-set draws, from one stream.
DbDraws draw_db_terms(const TrainingSets& sets, const NoiseSchedule& schedule, RandomSource& rng);

/// L_DM(D_ref) + lambda * L_DM(D_prior)
LossValue db_loss_on(const DenoiserModel& model, const TrainingSets& sets, const DbDraws& draws,
                     const NoiseSchedule& schedule, bool with_gradient = false);
double db_loss(const DenoiserModel& model, const TrainingSets& sets,
               const NoiseSchedule& schedule, RandomSource& rng);

/// db_loss + kl_weight * mean over all draws of the mean-per-element squared
/// difference between model and frozen reference predictions.
LossValue kl_regularized_loss_on(const DenoiserModel& model, const DenoiserModel& reference,
                                 const TrainingSets& sets, const DbDraws& draws,
                                 const NoiseSchedule& schedule, double kl_weight,
                                 bool with_gradient = false);
double kl_regularized_loss(const DenoiserModel& model, const DenoiserModel& reference,
                           const TrainingSets& sets, const NoiseSchedule& schedule,
                           double kl_weight, RandomSource& rng);

inline constexpr double kDefaultKlWeight = 1.0;

/// Loss evaluated with frozen randomness; `with_gradient` requests the
/// analytic gradient.
using FrozenLoss = std::function<LossValue(const DenoiserModel& model, bool with_gradient)>;

/// max_p |g_p - cd_p| / (|g_p| + |cd_p| + 1e-12) with central differences of
/// step `epsilon`. Throws a determinism error when two evaluations at the
/// same parameters disagree. The model's parameters are restored on return.
double grad_check(DenoiserModel& model, const FrozenLoss& loss, double epsilon = 1e-5);

enum class LossKind { dm, db, kl };

/// Freezes draws from `seed` and checks the chosen loss. dm uses the ref set
/// only; kl needs `reference`.
double grad_check(DenoiserModel& model, LossKind kind, const TrainingSets& sets,
                  const NoiseSchedule& schedule, std::uint64_t seed, double epsilon = 1e-5,
                  const DenoiserModel* reference = nullptr, double kl_weight = kDefaultKlWeight);

}  // namespace mudikit
