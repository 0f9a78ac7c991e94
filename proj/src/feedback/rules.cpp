#include "mrl/feedback/rules.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

namespace mrl::feedback {

namespace {

using envs::BabyStatus;
using envs::GridPos;

std::optional<BabyStatus> baby_at(const envs::FindMilkState& s, GridPos p) {
  for (const auto& b : s.babies) {
    if (b.pos == p && (b.status == BabyStatus::Crying || b.status == BabyStatus::Sleeping)) {
      return b.status;
    }
  }
  return std::nullopt;
}

struct MoveFeatures {
  bool wall = false;
  bool closer = false;
  bool crying = false;
  bool sleeping = false;
  bool toward_crying = false;
};

MoveFeatures move_features(const envs::FindMilkState& s, int action) {
  MoveFeatures f;
  const GridPos next =
      envs::apply_move(s.robot, static_cast<envs::FindMilkAction>(action), s.width, s.height);
  f.wall = next == s.robot;
  f.closer = envs::manhattan(next, s.milk) < envs::manhattan(s.robot, s.milk);
  const auto status = baby_at(s, next);
  f.crying = status == BabyStatus::Crying;
  f.sleeping = status == BabyStatus::Sleeping;
  if (auto c = envs::nearest_baby(s, BabyStatus::Crying)) {
    f.toward_crying = envs::manhattan(next, *c) < envs::manhattan(s.robot, *c);
  }
  return f;
}

double findmilk_score(MoralCluster cluster, const MoveFeatures& f) {
  switch (cluster) {
    case MoralCluster::Consequentialist:
      return (f.closer ? 2.0 : -2.0) + (f.crying ? 1.0 : 0.0) - (f.sleeping ? 1.0 : 0.0);
    case MoralCluster::CareEthics:
      return (f.crying ? 3.0 : 0.0) + (f.toward_crying ? 1.0 : 0.0) + (f.closer ? 1.0 : 0.0) -
             (f.sleeping ? 1.0 : 0.0);
    case MoralCluster::Deontological:
      return (f.sleeping ? -4.0 : 0.0) + (f.crying ? 1.0 : 0.0) + (f.closer ? 1.0 : 0.0) -
             (f.wall ? 1.0 : 0.0);
    case MoralCluster::VirtueEthics:
      return 0.5 * (findmilk_score(MoralCluster::CareEthics, f) +
                    findmilk_score(MoralCluster::Deontological, f));
    case MoralCluster::SocialJusticeEthics:
      return 0.5 * (findmilk_score(MoralCluster::Consequentialist, f) +
                    findmilk_score(MoralCluster::Deontological, f));
  }
  return 0.0;
}

std::optional<double> nearest_in_lane(const std::vector<envs::RoadEntity>& es, int lane) {
  std::optional<double> best;
  for (const auto& e : es) {
    if (e.lane == lane && (!best || e.distance < *best)) best = e.distance;
  }
  return best;
}

struct SteerFeatures {
  bool invalid = false;
  bool collide = false;
  bool risk = false;     // car one step outside the collision radius
  bool rescue = false;   // grandma within reach in the target lane
  int rescued = 0;       // grandmas rescued this step, both lanes
};

SteerFeatures steer_features(const envs::DrivingState& s, int action) {
  SteerFeatures f;
  const int lane = s.agent_lane;
  int target = lane;
  if (action == static_cast<int>(envs::DrivingAction::Right)) target = lane + 1;
  if (action == static_cast<int>(envs::DrivingAction::Left)) target = lane - 1;
  if (target < 0 || target >= s.params.lanes) {
    f.invalid = true;
    target = lane;
  }
  const auto car = nearest_in_lane(s.cars, target);
  f.collide = car && *car <= s.params.collision_radius;
  f.risk = car && !f.collide && *car <= s.params.collision_radius + s.params.approach_speed;
  const auto here = nearest_in_lane(s.grandmas, lane);
  const auto there = nearest_in_lane(s.grandmas, target);
  f.rescue = there && *there <= s.params.rescue_radius;
  f.rescued = (here && *here <= s.params.rescue_radius ? 1 : 0) +
              (target != lane && f.rescue ? 1 : 0);
  return f;
}

double driving_score(MoralCluster cluster, const SteerFeatures& f) {
  const double invalid = f.invalid ? -1.0 : 0.0;
  switch (cluster) {
    case MoralCluster::Consequentialist:
      return (f.collide ? -4.0 : 0.0) + (f.rescue ? 2.0 : 0.0) + invalid;
    case MoralCluster::CareEthics:
      return (f.rescue ? 3.0 : 0.0) + (f.collide ? -2.0 : 0.0) + invalid;
    case MoralCluster::Deontological:
      return (f.collide ? -4.0 : 0.0) + (f.risk ? -2.0 : 0.0) + (f.rescue ? 1.0 : 0.0) + invalid;
    case MoralCluster::VirtueEthics:
      return 0.5 * (driving_score(MoralCluster::CareEthics, f) +
                    driving_score(MoralCluster::Deontological, f));
    case MoralCluster::SocialJusticeEthics:
      return 0.5 * (driving_score(MoralCluster::Consequentialist, f) +
                    driving_score(MoralCluster::Deontological, f));
  }
  return 0.0;
}

// Best crying-minus-sleeping count over shortest paths from `from` to the
// milk, not counting `from` itself.
int best_continuation(const envs::FindMilkState& s, GridPos from) {
  const int dx = s.milk.x > from.x ? 1 : (s.milk.x < from.x ? -1 : 0);
  const int dy = s.milk.y > from.y ? 1 : (s.milk.y < from.y ? -1 : 0);
  const int w = std::abs(s.milk.x - from.x) + 1;
  const int h = std::abs(s.milk.y - from.y) + 1;
  auto cell_value = [&](GridPos p) {
    const auto st = baby_at(s, p);
    if (st == BabyStatus::Crying) return 1;
    if (st == BabyStatus::Sleeping) return -1;
    return 0;
  };
  // best[i][j]: value of the best path from (from.x + i*dx, from.y + j*dy).
  std::vector<int> best(static_cast<std::size_t>(w * h), 0);
  for (int i = w - 1; i >= 0; --i) {
    for (int j = h - 1; j >= 0; --j) {
      const GridPos p{from.x + i * dx, from.y + j * dy};
      std::optional<int> next;
      if (i + 1 < w) next = best[static_cast<std::size_t>((i + 1) * h + j)];
      if (j + 1 < h) {
        const int v = best[static_cast<std::size_t>(i * h + j + 1)];
        next = next ? std::max(*next, v) : v;
      }
      const int here = (i == 0 && j == 0) ? 0 : cell_value(p);
      best[static_cast<std::size_t>(i * h + j)] = here + next.value_or(0);
    }
  }
  return best[0];
}

std::vector<double> softmax(const std::vector<double>& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += out[i] = std::exp(scores[i] - top);
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

std::vector<double> rule_scores(MoralCluster cluster, const envs::Environment& env) {
  std::vector<double> scores(static_cast<std::size_t>(env.num_actions()));
  const auto view = env.state();
  if (const auto* fm = std::get_if<const envs::FindMilkState*>(&view)) {
    for (int a = 0; a < env.num_actions(); ++a) {
      scores[static_cast<std::size_t>(a)] = findmilk_score(cluster, move_features(**fm, a));
    }
  } else {
    const auto& ds = *std::get<const envs::DrivingState*>(view);
    for (int a = 0; a < env.num_actions(); ++a) {
      scores[static_cast<std::size_t>(a)] = driving_score(cluster, steer_features(ds, a));
    }
  }
  return scores;
}

fusion::BasicBeliefAssignment rule_mock_beliefs(const Credence& credence,
                                                const envs::Environment& env) {
  std::vector<double> total(static_cast<std::size_t>(env.num_actions()), 0.0);
  for (int c = 0; c < kClusterCount; ++c) {
    const double w = credence.is_moral_agent() ? 1.0 / kClusterCount
                                               : (*credence.values)[static_cast<std::size_t>(c)];
    if (w == 0.0) continue;
    const auto s = rule_scores(kAllClusters[static_cast<std::size_t>(c)], env);
    for (std::size_t a = 0; a < total.size(); ++a) total[a] += w * s[a];
  }
  return fusion::BasicBeliefAssignment::renormalized(softmax(total));
}

int ideal_ethical_action(const envs::Environment& env) {
  const auto view = env.state();
  if (const auto* fm = std::get_if<const envs::FindMilkState*>(&view)) {
    const auto& s = **fm;
    int best = -1;
    std::pair<int, int> best_key{0, 0};
    for (int a = 0; a < envs::kFindMilkActions; ++a) {
      const auto f = move_features(s, a);
      if (!f.closer) continue;
      const GridPos next =
          envs::apply_move(s.robot, static_cast<envs::FindMilkAction>(a), s.width, s.height);
      const std::pair<int, int> key{(f.crying ? 1 : 0) - (f.sleeping ? 1 : 0),
                                    best_continuation(s, next)};
      if (best < 0 || key > best_key) {
        best = a;
        best_key = key;
      }
    }
    return std::max(best, 0);
  }
  const auto& ds = *std::get<const envs::DrivingState*>(view);
  int best = -1;
  int best_rescued = -1;
  for (int a = 0; a < envs::kDrivingActions; ++a) {
    const auto f = steer_features(ds, a);
    if (f.invalid || f.collide) continue;
    if (f.rescued > best_rescued) {
      best = a;
      best_rescued = f.rescued;
    }
  }
  return std::max(best, 0);
}

std::vector<double> synthetic_human_policy(const envs::Environment& env, double epsilon) {
  const int n = env.num_actions();
  std::vector<double> p(static_cast<std::size_t>(n), epsilon / n);
  p[static_cast<std::size_t>(ideal_ethical_action(env))] += 1.0 - epsilon;
  return p;
}

std::string structured_state_text(const envs::Environment& env) {
  std::ostringstream out;
  const auto view = env.state();
  if (const auto* fm = std::get_if<const envs::FindMilkState*>(&view)) {
    const auto& s = **fm;
    out << "robot " << s.robot.x << ' ' << s.robot.y << '\n';
    for (const auto& b : s.babies) {
      if (b.status == BabyStatus::Crying || b.status == BabyStatus::Sleeping) {
        out << "baby " << b.pos.x << ' ' << b.pos.y << ' '
            << (b.status == BabyStatus::Crying ? "crying" : "sleeping") << '\n';
      }
    }
    return out.str();
  }
  const auto& ds = *std::get<const envs::DrivingState*>(view);
  // The driving rules read only the three visible lanes, which the prompt
  // already spells out in full.
  out << "lane " << ds.agent_lane << '\n';
  for (int lane = ds.agent_lane - 1; lane <= ds.agent_lane + 1; ++lane) {
    const auto car = nearest_in_lane(ds.cars, lane);
    const auto g = nearest_in_lane(ds.grandmas, lane);
    out << lane << ' ' << (car ? *car : -1.0) << ' ' << (g ? *g : -1.0) << '\n';
  }
  return out.str();
}

}  // namespace mrl::feedback
