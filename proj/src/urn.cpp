#include "seu/urn.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "seu/errors.hpp"

namespace seu {

UrnState init_state(int K, double initial_mass) {
  if (K < 2) throw InvalidArgument("init_state: need at least two arms");
  if (!(initial_mass > 0.0)) throw InvalidArgument("init_state: initial mass must be positive");
  return init_state(Vec(K, initial_mass));
}

UrnState init_state(Vec initial_composition) {
  if (initial_composition.size() < 2)
    throw InvalidArgument("init_state: need at least two arms");
  for (double y : initial_composition)
    if (!(y > 0.0)) throw InvalidArgument("init_state: initial composition must be positive");
  UrnState st;
  const int K = static_cast<int>(initial_composition.size());
  st.Y = std::move(initial_composition);
  st.N.assign(K, 0);
  st.S.assign(K, 0.0);
  st.n = 0;
  st.theta_hat.assign(K, 1.0);  // (1 + 0) / (1 + 0)
  return st;
}

int draw_arm(const UrnState& state, RngStream& rng) {
  double total = 0.0;
  for (double y : state.Y) {
    if (!(y > 0.0)) throw CorruptedState("draw_arm: non-positive urn mass");
    total += y;
  }
  const double target = rng.next_uniform() * total;
  double cum = 0.0;
  const int K = state.arms();
  for (int k = 0; k < K; ++k) {
    cum += state.Y[k];
    if (target < cum) return k;
  }
  return K - 1;
}

void update_estimates(UrnState& state, int arm, double xi) {
  if (arm < 0 || arm >= state.arms()) throw InvalidArgument("update_estimates: bad arm index");
  state.N[arm] += 1;
  state.S[arm] += xi;
  state.theta_hat[arm] =
      (1.0 + state.S[arm]) / (1.0 + static_cast<double>(state.N[arm]));
}

void apply_addition(UrnState& state, const Vec& addition) {
  if (addition.size() != state.Y.size())
    throw InvalidArgument("apply_addition: size mismatch");
  for (double a : addition)
    if (a < 0.0) throw InvalidArgument("apply_addition: negative addition entry");
  for (std::size_t k = 0; k < addition.size(); ++k) state.Y[k] += addition[k];
  state.n += 1;
}

StepRecord step(UrnState& state, const Design& design, const ResponseModel& model,
                RngStream& rng) {
  if (design.K != state.arms() || model.arms() != state.arms())
    throw InvalidArgument("step: design/model arm count mismatch");
  const int arm = draw_arm(state, rng);
  const double xi = model.sample(arm, rng);
  // The rule sees the estimates as of the previous stage.
  Vec addition = design.addition_rule(state.theta_hat, arm, xi);
  update_estimates(state, arm, xi);
  apply_addition(state, addition);
  return StepRecord{state.n, arm, xi, std::move(addition)};
}

std::vector<Snapshot> run_trial(const Design& design, const ResponseModel& model,
                                std::int64_t horizon, RngStream& rng,
                                const std::vector<std::int64_t>& checkpoints,
                                UrnState* final_state, const Vec* initial_composition) {
  if (horizon < 0) throw InvalidArgument("run_trial: negative horizon");
  UrnState st = initial_composition ? init_state(*initial_composition)
                                    : init_state(design.K, 1.0);

  std::vector<std::int64_t> marks;
  for (std::int64_t c : checkpoints)
    if (c >= 0 && c <= horizon) marks.push_back(c);
  marks.push_back(horizon);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  std::vector<Snapshot> out;
  out.reserve(marks.size());
  std::size_t next = 0;
  auto emit = [&](const UrnState& s) { out.push_back({s.n, s.Y, s.N, s.theta_hat}); };
  if (next < marks.size() && marks[next] == 0) {
    emit(st);
    ++next;
  }
  for (std::int64_t i = 0; i < horizon; ++i) {
    step(st, design, model, rng);
    if (next < marks.size() && marks[next] == st.n) {
      emit(st);
      ++next;
    }
  }
  if (final_state) *final_state = st;
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<Snapshot>& snapshots) {
  os << "stage,arm,Y,N,theta_hat\n";
  char buf[64];
  for (const auto& s : snapshots) {
    for (std::size_t k = 0; k < s.Y.size(); ++k) {
      os << s.stage << ',' << (k + 1) << ',';
      std::snprintf(buf, sizeof buf, "%.12g", s.Y[k]);
      os << buf << ',' << s.N[k] << ',';
      std::snprintf(buf, sizeof buf, "%.12g", s.theta_hat[k]);
      os << buf << '\n';
    }
  }
}

}  // namespace seu
