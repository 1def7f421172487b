#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "seu/design.hpp"
#include "seu/matrix.hpp"
#include "seu/response.hpp"
#include "seu/rng.hpp"

namespace seu {

/// Urn composition, allocation counts, response sums, and the running
/// estimates theta_hat_k = (1 + S_k) / (1 + N_k).
struct UrnState {
  Vec Y;
  std::vector<std::int64_t> N;
  Vec S;
  std::int64_t n = 0;
  Vec theta_hat;

  int arms() const { return static_cast<int>(Y.size()); }
};

struct StepRecord {
  std::int64_t stage = 0;
  int drawn_arm = 0;  // zero-based
  double response = 0.0;
  Vec addition;
};

struct Snapshot {
  std::int64_t stage = 0;
  Vec Y;
  std::vector<std::int64_t> N;
  Vec theta_hat;
};

UrnState init_state(int K, double initial_mass);
UrnState init_state(Vec initial_composition);

/// Samples an arm index proportional to the urn masses; consumes exactly
/// one uniform variate.
int draw_arm(const UrnState& state, RngStream& rng);

/// Folds one observed response into the per-arm counters and refreshes
/// the estimate for that arm. Does not advance the stage.
void update_estimates(UrnState& state, int arm, double xi);

/// Adds particles and advances the stage counter.
void apply_addition(UrnState& state, const Vec& addition);

/// One stage of the process: draw, observe, compute the addition from the
/// pre-draw estimates, fold the response into the estimates, then add the
/// particles. Consumes exactly two uniform variates.
StepRecord step(UrnState& state, const Design& design, const ResponseModel& model,
                RngStream& rng);

/// Runs `horizon` stages, returning snapshots at the requested checkpoint
/// stages plus the terminal stage. Checkpoints outside [0, horizon] are
/// ignored. `final_state`, when non-null, receives the terminal state.
std::vector<Snapshot> run_trial(const Design& design, const ResponseModel& model,
                                std::int64_t horizon, RngStream& rng,
                                const std::vector<std::int64_t>& checkpoints,
                                UrnState* final_state = nullptr,
                                const Vec* initial_composition = nullptr);

/// CSV with header "stage,arm,Y,N,theta_hat", one row per arm per
/// snapshot, 12 significant digits, LF line endings.
void write_trajectory_csv(std::ostream& os, const std::vector<Snapshot>& snapshots);

}  // namespace seu
