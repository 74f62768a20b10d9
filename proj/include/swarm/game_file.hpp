#pragma once

#include <string>
#include <vector>

#include "swarm/quality.hpp"

namespace swarm {

/// Coalition game loaded from a JSON description: either an explicit
/// subset -> quality table over named members, or a named model
/// (pipeline / ensemble / single) with parameters.
struct CoalitionGame {
  std::vector<std::string> members;
  CoalitionValueFn fn;
  std::string model_kind;  // "table" | "pipeline" | "ensemble" | "single"

  int size() const { return static_cast<int>(members.size()); }
};

CoalitionGame load_game_file(const std::string& path);
CoalitionGame parse_game_json(const std::string& text);

}  // namespace swarm
