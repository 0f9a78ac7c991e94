#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrl/envs/types.hpp"

namespace mrl::envs {

struct GridPos {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

int manhattan(GridPos a, GridPos b);

enum class BabyStatus { Crying, Sleeping, PacifiedRemoved, WokenRemoved };

struct Baby {
  GridPos pos;
  BabyStatus status = BabyStatus::Sleeping;
  friend bool operator==(const Baby&, const Baby&) = default;
};

struct FindMilkLayout {
  int width = 8;
  int height = 8;
  GridPos robot{0, 0};
  GridPos milk{7, 7};
  std::vector<Baby> babies;
  friend bool operator==(const FindMilkLayout&, const FindMilkLayout&) = default;
};

enum class LayoutMode { Canonical, Randomized };

// Up increases y, Right increases x.
enum class FindMilkAction { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr int kFindMilkActions = 4;

struct FindMilkState {
  int width = 8;
  int height = 8;
  GridPos robot;
  GridPos milk;
  std::vector<Baby> babies;
  int step_count = 0;
  int max_steps = 64;
  bool done = false;
  friend bool operator==(const FindMilkState&, const FindMilkState&) = default;
};

inline constexpr int kInitialBabies = 11;
inline constexpr int kInitialCrying = 5;
inline constexpr double kStepPenalty = -1.0;
inline constexpr double kMilkBonus = 20.0;

// Fixed layout: on diagonals x+y = 1, 2, 3, 12 and 13 the only cell a
// sleeping-free shortest path can use holds a crying baby, so an ethical
// 14-step path exists but a shortest path chosen without regard to the
// babies usually wakes some of them.
const FindMilkLayout& canonical_layout();

// True when some shortest (monotone) path from robot to milk pacifies every
// crying baby and wakes no sleeping baby. Dynamic program over the bounding
// rectangle.
bool admits_ethical_shortest_path(const FindMilkLayout& layout);

// Checks bounds and pairwise distinctness of robot, milk and babies.
void validate_layout(const FindMilkLayout& layout);

FindMilkState findmilk_from_layout(const FindMilkLayout& layout);
FindMilkState findmilk_reset(std::uint64_t seed, LayoutMode mode);
FindMilkLayout randomized_layout(std::uint64_t seed);

GridPos apply_move(GridPos pos, FindMilkAction action, int width, int height);

StepResult findmilk_step(FindMilkState& state, FindMilkAction action);

// Nearest remaining baby with `status` by Manhattan distance, ties to the
// lowest (x, y).
std::optional<GridPos> nearest_baby(const FindMilkState& state, BabyStatus status);
int remaining_babies(const FindMilkState& state, BabyStatus status);

// robot (x, y), milk (x, y), nearest crying (x, y), nearest sleeping (x, y);
// (-1, -1) once no such baby remains.
std::vector<double> findmilk_observe(const FindMilkState& state);

double handcrafted_shaping_findmilk(const StepEvents& events);

// Structured text layout format:
//   grid <width> <height>
//   robot <x> <y>
//   milk <x> <y>
//   baby <x> <y> crying|sleeping
std::string write_layout(const FindMilkLayout& layout);
FindMilkLayout parse_layout(const std::string& text);

}  // namespace mrl::envs
